#include <iostream>
#include <string>
#include <vector>

#include "vo/cli.hpp"

int main(int argc, char** argv) {
  const char* data = std::getenv("VO_DATA");
  return vo::cli_dispatch(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr,
                          data ? data : VO_DEFAULT_DATA_DIR);
}
