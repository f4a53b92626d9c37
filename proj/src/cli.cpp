#include "vo/cli.hpp"

#include <algorithm>
#include <filesystem>

#include <CLI11.hpp>

#include "vo/harness.hpp"
#include "vo/text.hpp"

namespace vo {

std::string cli_usage() {
  return "usage: vo [--state <archive>] [--data <dir>] <verb> ...\n"
         "  load <file>...\n"
         "  discover --capability <concept> [--where <metric><cmp><value>]... [--freshness <ticks>]\n"
         "  authorize --user <id> --service <concept>\n"
         "  agent invoke --user <id> --op <op> [--param k=v]...\n"
         "  agent prefs --user <id> [--interests]\n"
         "  agent tick --ticks <n>\n"
         "  run-scenario <file> [--log] [--snapshot <archive>]\n"
         "  snapshot <archive>\n"
         "  restore <archive>\n";
}

namespace {

VirtualOrganization open_state(const std::string& state, const std::string& data_dir) {
  if (!state.empty() && std::filesystem::exists(state)) return VirtualOrganization::restore(text::read_file(state));
  VirtualOrganization vo;
  vo.load_file((std::filesystem::path(data_dir) / "fixture.bundle").string());
  return vo;
}

std::map<std::string, std::size_t> inbox_sizes(const VirtualOrganization& vo) {
  std::map<std::string, std::size_t> sizes;
  for (const auto& [user, a] : vo.agents()) sizes[user] = a.inbox().size();
  return sizes;
}

void print_new_deliveries(const VirtualOrganization& vo, const std::map<std::string, std::size_t>& before,
                          std::ostream& out) {
  for (const auto& [user, a] : vo.agents()) {
    const auto it = before.find(user);
    for (std::size_t i = it == before.end() ? 0 : it->second; i < a.inbox().size(); ++i) {
      const auto& d = a.inbox()[i];
      out << d.due << " " << d.user << " " << d.source << " " << d.kind << " " << d.payload << "\n";
    }
  }
}

}  // namespace

int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
                 const std::string& default_data_dir) {
  CLI::App app{"virtual organization kernel", "vo"};
  app.require_subcommand(1);
  std::string state;
  std::string data_dir = default_data_dir;
  app.add_option("--state", state, "archive holding the VO state between runs");
  app.add_option("--data", data_dir, "directory with fixture.bundle");

  std::vector<std::string> load_files;
  auto* load = app.add_subcommand("load", "load fixture files into the state");
  load->add_option("files", load_files)->required();

  std::string capability;
  std::vector<std::string> where;
  std::optional<Tick> freshness;
  auto* discover = app.add_subcommand("discover", "capability match plus resource filter");
  discover->add_option("--capability", capability)->required();
  discover->add_option("--where", where);
  discover->add_option("--freshness", freshness);

  std::string user;
  std::string service;
  auto* authorize = app.add_subcommand("authorize", "role inference and ACL decision");
  authorize->add_option("--user", user)->required();
  authorize->add_option("--service", service)->required();

  auto* agent = app.add_subcommand("agent", "personal agent operations");
  agent->require_subcommand(1);
  std::string op;
  std::vector<std::string> params;
  auto* invoke = agent->add_subcommand("invoke", "issue a request through the user's agent");
  invoke->add_option("--user", user)->required();
  invoke->add_option("--op", op)->required();
  invoke->add_option("--param", params);
  bool show_interests = false;
  auto* prefs = agent->add_subcommand("prefs", "show the preference list");
  prefs->add_option("--user", user)->required();
  prefs->add_flag("--interests", show_interests, "also show the interest values");
  Tick ticks = 0;
  auto* tick_cmd = agent->add_subcommand("tick", "advance the logical clock");
  tick_cmd->add_option("--ticks", ticks)->required();

  std::string scenario;
  bool print_log = false;
  std::string snapshot_out;
  auto* run = app.add_subcommand("run-scenario", "replay a scenario script");
  run->add_option("file", scenario)->required();
  run->add_flag("--log", print_log);
  run->add_option("--snapshot", snapshot_out);

  std::string archive;
  auto* snapshot = app.add_subcommand("snapshot", "write the state to an archive");
  snapshot->add_option("archive", archive)->required();
  auto* restore = app.add_subcommand("restore", "replace the state with an archive");
  restore->add_option("archive", archive)->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << cli_usage();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "vo: " << e.what() << "\n" << cli_usage();
    return 2;
  }

  try {
    if (*run) {
      const auto script = load_scenario(scenario);
      const auto result = run_scenario(script);
      for (const auto& r : result.report) {
        out << (r.passed ? "PASS" : "FAIL") << " line " << script.events[r.event].line << ": " << r.text;
        if (!r.passed) out << " (actual " << r.actual << ")";
        out << "\n";
      }
      if (print_log) out << result.log.serialize();
      if (!snapshot_out.empty()) text::write_file(snapshot_out, result.final_snapshot);
      return result.passed() ? 0 : 1;
    }
    if (*restore) {
      auto vo = VirtualOrganization::restore(text::read_file(archive));
      if (!state.empty()) text::write_file(state, vo.snapshot());
      out << "restored now=" << vo.now() << " records=" << vo.log().size() << "\n";
      return 0;
    }

    auto vo = open_state(state, data_dir);
    const auto before = inbox_sizes(vo);
    if (*load) {
      for (const auto& f : load_files) {
        vo.load_file(f);
        out << "loaded " << f << "\n";
      }
    } else if (*discover) {
      for (const auto& stub : vo.discover(make_query(capability, where, freshness)).stubs) out << stub << "\n";
    } else if (*authorize) {
      const auto r = vo.authorize(user, ConceptId::parse(service));
      out << to_string(r.decision) << "\n" << r.trace.render();
    } else if (*invoke) {
      RequestKey key{op, {}};
      for (const auto& p : params) {
        const auto kv = text::split_kv(p);
        if (!kv || kv->first.empty()) {
          err << "vo: --param expects k=v, got '" << p << "'\n" << cli_usage();
          return 2;
        }
        key.params[kv->first] = Literal::infer(kv->second);
      }
      vo.user_request(user, CanonicalMessage{service_for(key, vo.config().agent), "", key.params});
      print_new_deliveries(vo, before, out);
      if (!vo.queue().empty()) out << "pending " << vo.queue().size() << "\n";
    } else if (*prefs) {
      const auto& a = vo.agent(user);
      for (const auto& k : a.preferences().entries) out << k.str() << "\n";
      if (show_interests) {
        for (const auto& [k, e] : a.interests().entries()) {
          out << "interest " << k.str() << " value=" << e.value << " invokes=" << e.invoke_times.size() << "\n";
        }
      }
    } else if (*tick_cmd) {
      vo.advance(ticks);
      print_new_deliveries(vo, before, out);
      out << "now " << vo.now() << "\n";
    } else if (*snapshot) {
      text::write_file(archive, vo.snapshot());
      out << "wrote " << archive << "\n";
    }
    if (!state.empty()) text::write_file(state, vo.snapshot());
    return 0;
  } catch (const Error& e) {
    err << "vo: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace vo
