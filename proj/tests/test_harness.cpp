#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "support.hpp"
#include "vo/cli.hpp"
#include "vo/error.hpp"
#include "vo/text.hpp"

using namespace vo;

namespace {

ConceptId C(const char* s) { return ConceptId::parse(s); }

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::ParseError;
}

const std::vector<std::string> kScenarios = {"use-case-1", "use-case-2", "route-denied"};

ScenarioScript shipped(const std::string& name) {
  return load_scenario(vo::testing::data_path("scenarios/" + name + ".scn"));
}

struct CliRun {
  int status;
  std::string out;
  std::string err;
};

CliRun cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int status = cli_dispatch(args, out, err, VO_TEST_DATA_DIR);
  return {status, out.str(), err.str()};
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("vo-test-" + name)).string();
}

}  // namespace

TEST_CASE("event log") {
  EventLog log;
  log.append(1, "m", "k", "a=1\nb=2");
  log.append(1, "m", "k2", "c=3");
  CHECK(log.records()[0].summary == "a=1 b=2");
  CHECK(log.records()[0].digest == text::digest("a=1 b=2"));
  CHECK(code_of([&] { log.append(0, "m", "k", "late"); }) == ErrorCode::InvalidRecord);
  CHECK(EventLog::parse(log.serialize()) == log);
  auto tampered = log.serialize();
  tampered[tampered.size() - 2] = '9';
  CHECK(code_of([&] { EventLog::parse(tampered); }) == ErrorCode::ParseError);
}

TEST_CASE("simulated providers") {
  auto providers = parse_providers(text::read_file(vo::testing::data_path("providers.providers")));
  CHECK(parse_providers(serialize_providers(providers)) == providers);
  auto& amadeus = providers.at("amadeus");
  const ProviderMessage exact{"amadeus", "Fare_MasterPricer", "x",
                              {{"OriginCity", Literal::text("BJS")},
                               {"DestCity", Literal::text("NYC")},
                               {"DepartureDate", Literal::text("2026-05-01")}}};
  CHECK(amadeus.call(exact).fields.at("TotalFare") == Literal::decimal("1180.00"));
  CHECK(amadeus.call(exact).correlation == "x");
  auto other = exact;
  other.fields["DestCity"] = Literal::text("PAR");
  CHECK(amadeus.call(other).fields.at("TotalFare") == Literal::decimal("1320.00"));
  CHECK(code_of([&] { amadeus.call(ProviderMessage{"amadeus", "Unknown_Op", "", {}}); }) == ErrorCode::ProviderFault);
  CHECK(code_of([&] { amadeus.call(ProviderMessage{"sabre", "Tour_Search", "", {}}); }) == ErrorCode::ProviderFault);
  auto& echo = providers.at("echo");
  auto to_echo = exact;
  to_echo.dialect = "echo";
  CHECK(echo.call(to_echo) == to_echo);

  const auto faulty = parse_providers(R"({"providers":[{"id":"f","responses":[{"operation":"op","fault":"E42"}]}]})");
  auto f = faulty.at("f");
  CHECK(code_of([&] { f.call(ProviderMessage{"f", "op", "", {}}); }) == ErrorCode::ProviderFault);
  CHECK(code_of([] { parse_providers("[]"); }) == ErrorCode::ParseError);
}

TEST_CASE("config files") {
  const auto c = parse_config(text::read_file(vo::testing::data_path("vo.conf")));
  CHECK(c.agent.window == 720);
  CHECK(c.agent.threshold == 3);
  CHECK(c.agent.period == 24);
  CHECK_FALSE(c.default_freshness);
  CHECK(c.agent.op_services.at("airFare") == C("ota:AirFareQueryService"));
  CHECK(parse_config(serialize_config(c)) == c);
  CHECK(parse_config("freshness=12\n").default_freshness == Tick{12});
  CHECK(code_of([] { parse_config("threshold=9\n"); }) == ErrorCode::ParseError);
  CHECK(code_of([] { parse_config("colour=blue\n"); }) == ErrorCode::ParseError);
}

TEST_CASE("a down provider turns into a fault delivery") {
  auto vo = vo::testing::fixture_vo();
  vo.load_content("providers", R"({"providers":[{"id":"routedesign","up":false}]})", "outage");
  vo.user_request("v1", CanonicalMessage{C("ota:RouteDesignService"), "r", {{"origin", Literal::text("cpt:Beijing")},
                                                                          {"destination", Literal::text("cpt:Rome")}}});
  const auto& inbox = vo.agents().at("v1").inbox();
  REQUIRE(inbox.size() == 1);
  CHECK(inbox[0].kind == "fault");
  CHECK(inbox[0].payload.find("ProviderUnavailable") != std::string::npos);
  CHECK(vo.log().count("reconciliation", "unavailable") == 1);
}

TEST_CASE("user requests are delayed by provider latency") {
  auto vo = vo::testing::fixture_vo();
  vo.user_request("t1", CanonicalMessage{C("ota:TourSearchRQService"), "q",
                                         {{"destination", Literal::text("cpt:Paris")}, {"date", Literal::text("d")}}});
  CHECK(vo.agents().at("t1").inbox().empty());
  vo.advance(1);
  CHECK(vo.agents().at("t1").inbox().empty());
  vo.advance(1);
  REQUIRE(vo.agents().at("t1").inbox().size() == 1);
  const auto resp = canonical_from_json(vo.agents().at("t1").inbox()[0].payload);
  CHECK(resp.correlation == "q");
  CHECK(resp.fields.at("tour") == Literal::text("Forbidden City day tour"));
  CHECK(code_of([&] { vo.user_request("ghost", CanonicalMessage{C("ota:TourService"), "", {}}); }) ==
        ErrorCode::DanglingReference);
}

TEST_CASE("shipped scenarios pass and are deterministic") {
  for (const auto& name : kScenarios) {
    CAPTURE(name);
    const auto script = shipped(name);
    const auto first = run_scenario(script);
    const auto second = run_scenario(script);
    for (const auto& r : first.report) {
      CAPTURE(r.text);
      CAPTURE(r.actual);
      CHECK(r.passed);
    }
    CHECK(first.log.serialize() == second.log.serialize());
    CHECK(first.final_snapshot == second.final_snapshot);
  }
}

TEST_CASE("scenario errors") {
  CHECK(run_scenario(parse_scenario("")).log.size() == 0);
  CHECK(run_scenario(parse_scenario("# nothing\n")).passed());
  try {
    parse_scenario("advance 1\nteleport now\n");
    FAIL("expected ScriptError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ScriptError);
    CHECK(std::string(e.what()).find("event 1") != std::string::npos);
  }
  try {
    run_scenario(parse_scenario("advance 1\nuser-request nobody {\"service\":\"ota:X\"}\n"));
    FAIL("expected ScriptError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ScriptError);
    CHECK(std::string(e.what()).find("event 1") != std::string::npos);
  }
  const auto failing = run_scenario(parse_scenario("advance 2\nexpect now = 3\n"));
  CHECK_FALSE(failing.passed());
  CHECK(failing.report.at(0).actual == "2");
}

TEST_CASE("snapshots") {
  SUBCASE("empty state") {
    const VirtualOrganization empty;
    const auto restored = VirtualOrganization::restore(empty.snapshot());
    CHECK(restored.snapshot() == empty.snapshot());
    CHECK(restored.log().size() == 0);
  }
  SUBCASE("fixture state round trips") {
    auto vo = vo::testing::fixture_vo();
    vo.user_request("v1", CanonicalMessage{C("ota:TravelPlanRQService"), "p",
                                           {{"origin", Literal::text("cpt:Beijing")},
                                            {"destination", Literal::text("cpt:Rome")},
                                            {"departDate", Literal::text("a")},
                                            {"returnDate", Literal::text("b")}}});
    const auto archive = vo.snapshot();
    auto restored = VirtualOrganization::restore(archive);
    CHECK(restored.snapshot() == archive);
    CHECK(restored.plans() == vo.plans());
    CHECK(restored.queue() == vo.queue());
    CHECK(restored.catalog() == vo.catalog());
    vo.advance(30);
    restored.advance(30);
    CHECK(restored.log() == vo.log());
  }
  SUBCASE("damaged archives") {
    const auto archive = vo::testing::fixture_vo().snapshot();
    CHECK(code_of([&] { VirtualOrganization::restore(archive.substr(0, archive.size() / 2)); }) ==
          ErrorCode::CorruptArchive);
    CHECK(code_of([&] { VirtualOrganization::restore(""); }) == ErrorCode::CorruptArchive);
    auto flipped = archive;
    flipped[archive.size() / 2] ^= 1;
    CHECK(code_of([&] { VirtualOrganization::restore(flipped); }) == ErrorCode::CorruptArchive);
    auto future = archive;
    future.replace(0, 12, "vo-archive 2");
    CHECK(code_of([&] { VirtualOrganization::restore(future); }) == ErrorCode::VersionMismatch);
  }
}

TEST_CASE("restoring mid-scenario converges with the uninterrupted run") {
  for (const auto& name : kScenarios) {
    CAPTURE(name);
    const auto script = shipped(name);
    const auto full = run_scenario(script);
    for (std::size_t cut = 0; cut <= script.events.size(); cut += 3) {
      CAPTURE(cut);
      VirtualOrganization first;
      run_scenario(script, first, 0, cut);
      auto resumed = VirtualOrganization::restore(first.snapshot());
      const auto rest = run_scenario(script, resumed, cut, script.events.size());
      CHECK(rest.log.serialize() == full.log.serialize());
    }
  }
}

TEST_CASE("cli verbs") {
  SUBCASE("discover prints stub ids") {
    const auto r = cli({"discover", "--capability", "ota:TourService", "--where", "cpu_utilization<10"});
    CHECK(r.status == 0);
    CHECK(r.out == "amadeus-tour\n");
  }
  SUBCASE("authorize prints the decision and trace") {
    const auto r = cli({"authorize", "--user", "t1", "--service", "ota:RouteDesignService"});
    CHECK(r.status == 0);
    CHECK(r.out.rfind("DENY\n1. [agent]", 0) == 0);
    CHECK(r.out.find("\n9. [authorization]") != std::string::npos);
  }
  SUBCASE("usage errors exit 2 with the grammar") {
    for (const auto& args : std::vector<std::vector<std::string>>{{"teleport"}, {}, {"discover"}, {"agent"}}) {
      const auto r = cli(args);
      CHECK(r.status == 2);
      CHECK(r.err.find("usage: vo") != std::string::npos);
    }
  }
  SUBCASE("domain errors exit 1") {
    const auto r = cli({"discover", "--capability", "ota:Nothing"});
    CHECK(r.status == 1);
    CHECK(r.err.find("UnknownConcept") != std::string::npos);
  }
  SUBCASE("state persists between invocations") {
    const auto state = temp_path("state");
    std::filesystem::remove(state);
    for (int i = 0; i < 5; ++i) {
      CHECK(cli({"--state", state, "agent", "invoke", "--user", "t2", "--op", "lastMinute", "--param",
                 "destination=cpt:Paris"})
                .status == 0);
    }
    const auto prefs = cli({"--state", state, "agent", "prefs", "--user", "t2", "--interests"});
    CHECK(prefs.out.find("value=2 invokes=5") != std::string::npos);
    const auto ticked = cli({"--state", state, "agent", "tick", "--ticks", "3"});
    CHECK(ticked.out.find("t2 user response") != std::string::npos);
    CHECK(ticked.out.find("now 3") != std::string::npos);

    const auto archive = temp_path("archive");
    CHECK(cli({"--state", state, "snapshot", archive}).status == 0);
    const auto other = temp_path("state2");
    std::filesystem::remove(other);
    const auto restored = cli({"--state", other, "restore", archive});
    CHECK(restored.status == 0);
    CHECK(restored.out.find("now=3") != std::string::npos);
    CHECK(text::read_file(other) == text::read_file(archive));
    std::filesystem::remove(state);
    std::filesystem::remove(other);
    std::filesystem::remove(archive);
  }
  SUBCASE("run-scenario reports assertions") {
    const auto r = cli({"run-scenario", vo::testing::data_path("scenarios/use-case-1.scn")});
    CHECK(r.status == 0);
    CHECK(r.out.find("FAIL") == std::string::npos);
  }
}
