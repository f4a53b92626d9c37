#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace vo {

/// Logical time. Nothing in the kernel reads the wall clock.
using Tick = std::uint64_t;

struct LogRecord {
  Tick tick = 0;
  std::string module;
  std::string kind;
  std::string digest;   // FNV-1a of the summary
  std::string summary;  // single line, space separated key=value pairs

  bool operator==(const LogRecord&) const = default;
};

/// Append-only, tick-ordered record of everything observable the kernel does.
class EventLog {
 public:
  const LogRecord& append(Tick tick, std::string module, std::string kind, std::string summary);

  const std::vector<LogRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  std::size_t count(std::string_view kind) const;
  std::size_t count(std::string_view module, std::string_view kind) const;

  /// One record per line: "<tick>\t<module>\t<kind>\t<digest>\t<summary>".
  std::string serialize() const;
  static EventLog parse(std::string_view content);

  bool operator==(const EventLog&) const = default;

 private:
  std::vector<LogRecord> records_;
};

}  // namespace vo
