#include <doctest.h>

#include "support.hpp"
#include "vo/error.hpp"
#include "vo/text.hpp"

using namespace vo;
using vo::testing::Rng;

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

int bucket_oracle(std::size_t n) {
  const std::size_t lower[] = {1, 5, 10, 15, 20};
  int v = 0;
  for (const auto b : lower) v += n >= b ? 1 : 0;
  return v;
}

std::size_t window_count_oracle(const std::vector<Tick>& times, Tick now, Tick window) {
  std::size_t n = 0;
  for (const auto t : times) n += (t <= now && t + window > now) ? 1 : 0;
  return n;
}

RequestKey key(const std::string& op, int param = 0) { return RequestKey{op, {{"p", Literal::integer(param)}}}; }

}  // namespace

TEST_CASE("quantize buckets") {
  const std::vector<std::pair<std::size_t, int>> table = {{1, 1},  {4, 1},  {5, 2},  {9, 2},  {10, 3},
                                                          {14, 3}, {15, 4}, {19, 4}, {20, 5}, {100, 5}};
  for (const auto& [n, v] : table) CHECK(quantize(n) == v);
  CHECK(code_of([] { quantize(0); }) == ErrorCode::EmptyWindow);
}

TEST_CASE("property: quantize is monotone, surjective and steps at 5, 10, 15, 20") {
  std::set<int> seen;
  for (std::size_t n = 1; n <= 100; ++n) {
    CHECK(quantize(n) == bucket_oracle(n));
    seen.insert(quantize(n));
    if (n > 1) {
      const auto step = quantize(n) - quantize(n - 1);
      CHECK((step == 0 || step == 1));
      CHECK((step == 1) == (n == 5 || n == 10 || n == 15 || n == 20));
    }
  }
  CHECK(seen == std::set<int>{1, 2, 3, 4, 5});
}

TEST_CASE("interest values follow the invoke count") {
  InterestStore store(100);
  CHECK(store.record_invoke(key("a"), 0).value == 1);
  for (Tick t = 1; t < 4; ++t) store.record_invoke(key("a"), t);
  CHECK(store.find(key("a"))->value == 1);
  CHECK(store.record_invoke(key("a"), 4).value == 2);
  CHECK(store.record_invoke(key("a"), 200).value == 1);
  CHECK(store.find(key("a"))->invoke_times == std::vector<Tick>{200});
  store.prune(400);
  CHECK(store.entries().empty());
  CHECK(code_of([] { InterestStore bad(0); }) == ErrorCode::InvalidRecord);
}

TEST_CASE("preference lists") {
  InterestStore store(1000);
  for (int i = 0; i < 12; ++i) store.record_invoke(key("twelve"), 10 + i);
  for (int i = 0; i < 16; ++i) store.record_invoke(key("sixteen"), 20 + i);
  for (int i = 0; i < 6; ++i) store.record_invoke(key("six"), 5 + i);
  store.record_invoke(key("one"), 0);

  CHECK(refresh_preferences(store, 5, 24, 100).entries.empty());
  CHECK(refresh_preferences(store, 2, 24, 100).entries == std::vector<RequestKey>{key("sixteen"), key("twelve")});
  CHECK(refresh_preferences(store, 3, 24, 100).entries == std::vector<RequestKey>{key("sixteen")});
  CHECK(refresh_preferences(store, 1, 24, 100).entries ==
        std::vector<RequestKey>{key("sixteen"), key("twelve"), key("six")});
  CHECK(code_of([&] { refresh_preferences(store, 0, 24, 100); }) == ErrorCode::InvalidRecord);
  CHECK(code_of([&] { refresh_preferences(store, 6, 24, 100); }) == ErrorCode::InvalidRecord);

  // Equal values fall back to the earliest first invoke.
  InterestStore tie(1000);
  for (int i = 0; i < 5; ++i) tie.record_invoke(key("late"), 50 + i);
  for (int i = 0; i < 5; ++i) tie.record_invoke(key("early"), 10 + i);
  CHECK(refresh_preferences(tie, 1, 24, 100).entries == std::vector<RequestKey>{key("early"), key("late")});
}

TEST_CASE("property: window counts equal a brute force count") {
  Rng rng(5);
  for (int round = 0; round < 200; ++round) {
    const Tick window = 1 + rng.below(50);
    InterestStore store(window);
    std::map<RequestKey, std::vector<Tick>> all;
    Tick now = 0;
    for (int e = 0; e < 80; ++e) {
      now += rng.below(6);
      const auto k = key("op", static_cast<int>(rng.below(3)));
      all[k].push_back(now);
      store.record_invoke(k, now);
      const auto* entry = store.find(k);
      REQUIRE(entry != nullptr);
      const auto n = window_count_oracle(all[k], now, window);
      REQUIRE(entry->invoke_times.size() == n);
      REQUIRE(entry->value == quantize(n));
    }
    store.prune(now);
    for (const auto& [k, times] : all) {
      const auto n = window_count_oracle(times, now, window);
      const auto* entry = store.find(k);
      REQUIRE((entry == nullptr) == (n == 0));
      if (entry) REQUIRE(entry->invoke_times.size() == n);
    }
  }
}

TEST_CASE("property: every listed preference exceeds the threshold") {
  Rng rng(6);
  for (int round = 0; round < 200; ++round) {
    InterestStore store(1 + rng.below(200));
    const int threshold = static_cast<int>(1 + rng.below(5));
    Tick now = 0;
    for (int e = 0; e < 150; ++e) {
      now += rng.below(4);
      if (rng.chance(0.9)) {
        store.record_invoke(key("op", static_cast<int>(rng.below(4))), now);
      } else {
        const auto list = refresh_preferences(store, threshold, 24, now);
        for (const auto& k : list.entries) {
          const auto* entry = store.find(k);
          REQUIRE(entry != nullptr);
          REQUIRE(quantize(entry->invoke_times.size()) > threshold);
        }
        for (std::size_t i = 1; i < list.entries.size(); ++i) {
          REQUIRE(store.find(list.entries[i - 1])->value >= store.find(list.entries[i])->value);
        }
      }
    }
  }
}

TEST_CASE("agent ticks") {
  const auto policy = parse_policy(text::read_file(vo::testing::data_path("vo.policy")));
  const auto rules = parse_role_rules(text::read_file(vo::testing::data_path("tourist.roles")));
  AgentConfig config;
  config.threshold = 1;
  config.op_services["airFare"] = C("ota:AirFareQueryService");
  int calls = 0;
  EventLog log;
  const AuthzContext ctx{policy, rules,
                         [&](const CanonicalMessage& m) {
                           ++calls;
                           return Invocation{CanonicalMessage{m.service, m.correlation,
                                                              {{"fare", Literal::decimal("980.00")}}},
                                             2};
                         },
                         nullptr, &log, 0};
  UserProfile vip{"v", {{consuming_points_property(), Literal::integer(7000)}}, {}};
  Agent agent("v", config);

  SUBCASE("empty preference list dispatches nothing") {
    CHECK(tick(agent, 24, config, vip, ctx).empty());
    CHECK(calls == 0);
  }
  SUBCASE("off-period ticks do nothing") {
    for (int i = 0; i < 6; ++i) agent.interests().record_invoke(RequestKey{"airFare", {}}, static_cast<Tick>(i));
    CHECK(tick(agent, 25, config, vip, ctx).empty());
    CHECK(calls == 0);
  }
  SUBCASE("a preferred air fare comes back as one delivery") {
    for (int i = 0; i < 6; ++i) agent.interests().record_invoke(RequestKey{"airFare", {}}, static_cast<Tick>(i));
    const auto out = tick(agent, 24, config, vip, ctx);
    REQUIRE(out.size() == 1);
    CHECK(calls == 1);
    CHECK(out[0].kind == "response");
    CHECK(out[0].source == "auto");
    CHECK(out[0].due == 26);
    CHECK(canonical_from_json(out[0].payload).fields.at("fare") == Literal::decimal("980.00"));
    CHECK(log.count("agent", "tick") == 1);
    CHECK(log.count("authz", "decision") == 1);
  }
  SUBCASE("a preference the owner may no longer use is denied without a dispatch") {
    for (int i = 0; i < 6; ++i) {
      agent.interests().record_invoke(RequestKey{"ota:RouteDesignService", {}}, static_cast<Tick>(i));
    }
    CHECK(tick(agent, 24, config, vip, ctx).front().kind == "response");
    UserProfile demoted = vip;
    demoted.properties[consuming_points_property()] = Literal::integer(100);
    const auto out = tick(agent, 48, config, demoted, ctx);
    REQUIRE(out.size() == 1);
    CHECK(out[0].kind == "deny");
    CHECK(calls == 1);
  }
  SUBCASE("unknown operations become faults without aborting the tick") {
    for (int i = 0; i < 6; ++i) {
      agent.interests().record_invoke(RequestKey{"mystery", {}}, static_cast<Tick>(i));
      agent.interests().record_invoke(RequestKey{"airFare", {}}, static_cast<Tick>(i));
    }
    const auto out = tick(agent, 24, config, vip, ctx);
    REQUIRE(out.size() == 2);
    std::multiset<std::string> kinds{out[0].kind, out[1].kind};
    CHECK(kinds == std::multiset<std::string>{"fault", "response"});
  }
}

TEST_CASE("travel plan decomposition") {
  const auto table = parse_decomposition(text::read_file(vo::testing::data_path("plan.decomp")));
  CHECK(parse_decomposition(serialize_decomposition(table)) == table);
  const CanonicalMessage plan{C("ota:TravelPlanRQService"),
                              "p1",
                              {{"origin", Literal::text("cpt:Beijing")},
                               {"destination", Literal::text("cpt:NewYork")},
                               {"departDate", Literal::text("2026-05-01")},
                               {"returnDate", Literal::text("2026-05-09")}}};
  auto task = decompose_plan(plan, table);
  REQUIRE(task.children.size() == 3);
  CHECK(task.children[0].spec.service == C("ota:RouteDesignService"));
  CHECK(task.children[1].spec.service == C("ota:AirFareQueryService"));
  CHECK(task.children[2].spec.service == C("ota:RoomRateQueryService"));
  CHECK(task.children[1].spec.fields.at("date") == Literal::text("2026-05-01"));
  CHECK(task.children[2].spec.fields.at("city") == Literal::text("cpt:NewYork"));
  CHECK(task.children[2].spec.correlation == "p1/3");

  CHECK(code_of([&] { aggregate(task); }) == ErrorCode::IncompleteChildren);
  for (auto& c : task.children) {
    c.status = TaskStatus::Done;
    c.result = CanonicalMessage{c.spec.service, c.spec.correlation, {{"ok", Literal::boolean(true)}}};
  }
  const auto merged = aggregate(task);
  CHECK(merged.fields.at("RouteDesign.ok") == Literal::boolean(true));
  CHECK(merged.fields.at("AirFareQuery.task") == Literal::text(task.children[1].task_id));
  CHECK(merged.fields.size() == 6);

  task.children[0].status = TaskStatus::Failed;
  task.children[0].error = "denied";
  try {
    aggregate(task);
    FAIL("expected BranchFailed");
  } catch (const BranchFailedError& e) {
    CHECK(e.code() == ErrorCode::BranchFailed);
    CHECK(e.partial().fields.contains("AirFareQuery.ok"));
    CHECK_FALSE(e.partial().fields.contains("RouteDesign.ok"));
  }

  CHECK(code_of([&] { decompose_plan(CanonicalMessage{C("ota:AirFareQueryService"), "", {}}, table); }) ==
        ErrorCode::UnknownComposite);
  CHECK(code_of([&] {
          decompose_plan(CanonicalMessage{C("ota:TravelPlanRQService"), "", {{"origin", Literal::text("x")}}}, table);
        }) == ErrorCode::MissingField);
}

TEST_CASE("single child aggregation and duplicate branch prefixes") {
  DecompositionTable table;
  table[C("ota:Solo")] = {BranchSpec{C("ota:RouteDesignService"), {}}};
  table[C("ota:Twice")] = {BranchSpec{C("ota:AirFareQueryService"), {}}, BranchSpec{C("ota:AirFareQueryService"), {}}};
  auto solo = decompose_plan(CanonicalMessage{C("ota:Solo"), "s", {}}, table);
  solo.children[0].status = TaskStatus::Done;
  solo.children[0].result = CanonicalMessage{C("ota:RouteDesignService"), "s/1", {{"route", Literal::text("r")}}};
  const auto merged = aggregate(solo);
  CHECK(merged.fields == Fields{{"RouteDesign.route", Literal::text("r")}, {"RouteDesign.task", Literal::text("plan-s/1")}});

  const auto twice = decompose_plan(CanonicalMessage{C("ota:Twice"), "t", {}}, table);
  CHECK(branch_prefix(twice, 0) == "AirFareQuery_1");
  CHECK(branch_prefix(twice, 1) == "AirFareQuery_2");
}

TEST_CASE("property: aggregate of echoing branches carries every prefix once") {
  Rng rng(8);
  const std::vector<ConceptId> pool = {C("ota:RouteDesignService"), C("ota:AirFareQueryService"),
                                       C("ota:RoomRateQueryService"), C("ota:TourSearchRQService")};
  for (int round = 0; round < 100; ++round) {
    DecompositionTable table;
    std::vector<BranchSpec> branches;
    const auto n = 1 + rng.below(6);
    for (std::size_t i = 0; i < n; ++i) branches.push_back(BranchSpec{rng.pick(pool), {{"x", "x"}}});
    table[C("ota:Composite")] = branches;
    auto task = decompose_plan(CanonicalMessage{C("ota:Composite"), "c", {{"x", Literal::integer(1)}}}, table);
    for (auto& c : task.children) {
      c.status = TaskStatus::Done;
      c.result = c.spec;
    }
    const auto merged = aggregate(task);
    std::set<std::string> prefixes;
    for (std::size_t i = 0; i < n; ++i) {
      const auto p = branch_prefix(task, i);
      CHECK(prefixes.insert(p).second);
      CHECK(merged.fields.contains(p + ".x"));
      CHECK(merged.fields.contains(p + ".task"));
    }
    CHECK(merged.fields.size() == 2 * n);
  }
}
