#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "vo/discovery.hpp"
#include "vo/harness.hpp"
#include "vo/ontology.hpp"
#include "vo/reconciliation.hpp"

namespace vo::testing {

inline std::string data_path(const std::string& rel) { return std::string(VO_TEST_DATA_DIR) + "/" + rel; }

inline VirtualOrganization fixture_vo() {
  VirtualOrganization vo;
  vo.load_file(data_path("fixture.bundle"));
  return vo;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  long long between(long long lo, long long hi) { return std::uniform_int_distribution<long long>(lo, hi)(gen_); }
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(between(0, static_cast<long long>(n) - 1)); }
  bool chance(double p) { return std::bernoulli_distribution(p)(gen_); }
  template <typename T>
  const T& pick(const std::vector<T>& v) {
    return v[below(v.size())];
  }
  std::mt19937_64& engine() { return gen_; }

 private:
  std::mt19937_64 gen_;
};

// --- random ontologies ------------------------------------------------------

struct RandomDag {
  std::vector<ConceptId> ids;                  // in insertion (topological) order
  std::map<ConceptId, std::vector<ConceptId>> parents;
  OntologyGraph graph{"custom:random"};
};

/// Concepts only take parents from earlier positions, so the result is acyclic.
inline RandomDag random_dag(Rng& rng, std::size_t n) {
  RandomDag d;
  std::vector<std::size_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = i;
  std::shuffle(labels.begin(), labels.end(), rng.engine());
  for (std::size_t i = 0; i < n; ++i) {
    const ConceptId id("t", "c" + std::to_string(labels[i]));
    std::vector<ConceptId> ps;
    if (i > 0) {
      const auto k = rng.below(std::min<std::size_t>(i, 3) + 1);
      for (std::size_t j = 0; j < k; ++j) {
        const auto& p = d.ids[rng.below(i)];
        if (std::find(ps.begin(), ps.end(), p) == ps.end()) ps.push_back(p);
      }
    }
    d.graph.declare_concept(id, ps);
    d.parents[id] = ps;
    d.ids.push_back(id);
  }
  return d;
}

/// Walks parent edges upward from `specific` looking for `general`.
inline bool oracle_subsumes(const std::map<ConceptId, std::vector<ConceptId>>& parents, const ConceptId& general,
                            const ConceptId& specific) {
  std::vector<ConceptId> stack{specific};
  std::set<ConceptId> seen;
  while (!stack.empty()) {
    const auto c = stack.back();
    stack.pop_back();
    if (c == general) return true;
    if (!seen.insert(c).second) continue;
    const auto it = parents.find(c);
    if (it == parents.end()) continue;
    for (const auto& p : it->second) stack.push_back(p);
  }
  return false;
}

// --- query oracle -----------------------------------------------------------

/// Nested loop over every triple for every partial row; rows hold pointers into a private copy of the triples.
inline std::vector<Binding> oracle_query(const OntologyGraph& g, const std::vector<TriplePattern>& patterns) {
  std::vector<std::array<Node, 3>> triples;
  for (const auto& t : g.triples()) triples.push_back({Node{t.subject}, Node{t.predicate}, t.object});
  std::vector<std::string> names;
  const auto var_index = [&](const PatternTerm& term) -> std::optional<std::size_t> {
    const auto* v = std::get_if<Variable>(&term);
    if (!v) return std::nullopt;
    const auto it = std::find(names.begin(), names.end(), v->name);
    if (it != names.end()) return static_cast<std::size_t>(it - names.begin());
    names.push_back(v->name);
    return names.size() - 1;
  };

  using Row = std::vector<const Node*>;
  std::vector<Row> rows{Row{}};
  for (const auto& p : patterns) {
    const PatternTerm* terms[3] = {&p.subject, &p.predicate, &p.object};
    std::optional<std::size_t> vars[3];
    for (int k = 0; k < 3; ++k) vars[k] = var_index(*terms[k]);
    std::vector<Row> next;
    Row r;
    for (const auto& row : rows) {
      for (const auto& t : triples) {
        r = row;
        r.resize(names.size(), nullptr);
        bool ok = true;
        for (int k = 0; k < 3 && ok; ++k) {
          if (!vars[k]) {
            ok = std::get<Node>(*terms[k]) == t[k];
          } else if (r[*vars[k]] == nullptr) {
            r[*vars[k]] = &t[k];
          } else {
            ok = *r[*vars[k]] == t[k];
          }
        }
        if (ok) next.push_back(r);
      }
    }
    rows = std::move(next);
  }

  std::vector<Binding> out;
  for (const auto& row : rows) {
    Binding b;
    for (std::size_t i = 0; i < names.size(); ++i) b.emplace(names[i], *row[i]);
    out.push_back(std::move(b));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// --- discovery oracle -------------------------------------------------------

inline std::map<ConceptId, std::vector<ConceptId>> parents_of(const OntologyGraph& g) {
  std::map<ConceptId, std::vector<ConceptId>> out;
  for (const auto& [c, ps] : g.concepts()) out[c] = std::vector<ConceptId>(ps.begin(), ps.end());
  return out;
}

/// Full scan of the registry and directory with a per-record predicate.
inline std::vector<std::string> oracle_discover(const Catalog& catalog, const OntologyGraph& services,
                                                const DiscoveryQuery& q, Tick now) {
  const auto parents = parents_of(services);
  std::vector<ServiceRecord> all;
  for (const auto& [_, s] : catalog.services()) all.push_back(s);
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.registry_index < b.registry_index; });
  std::vector<std::string> stubs;
  for (const auto& s : all) {
    bool capable = false;
    for (const auto& c : s.capabilities) capable = capable || oracle_subsumes(parents, q.capability, c);
    if (!capable) continue;
    bool ok = q.constraints.empty() && !q.freshness;
    for (const auto& [_, r] : catalog.resources()) {
      if (ok) break;
      if (r.registry_index != s.registry_index || r.service_name != s.service_id) continue;
      if (q.freshness && now > r.observed_at + *q.freshness) continue;
      bool all_hold = true;
      for (const auto& c : q.constraints) {
        const auto m = r.metrics.find(c.name);
        if (m == r.metrics.end()) {
          all_hold = false;
          break;
        }
        const double lhs = m->second.as_number();
        const double rhs = c.threshold.as_number();
        bool holds = false;
        switch (c.cmp) {
          case Comparator::Less: holds = lhs < rhs; break;
          case Comparator::LessEq: holds = lhs <= rhs; break;
          case Comparator::Greater: holds = lhs > rhs; break;
          case Comparator::GreaterEq: holds = lhs >= rhs; break;
          case Comparator::Equal: holds = lhs == rhs; break;
        }
        all_hold = all_hold && holds;
      }
      ok = all_hold;
    }
    if (ok && std::find(stubs.begin(), stubs.end(), s.stub_id) == stubs.end()) stubs.push_back(s.stub_id);
  }
  return stubs;
}

struct RandomRegistry {
  OntologyGraph services{"services"};
  std::map<std::string, StubBinding> stubs;
  Catalog catalog;
  std::vector<ConceptId> capabilities;
};

/// Up to `max_services` services over a random capability DAG, each with zero
/// to two resource records carrying random builtin metrics.
inline RandomRegistry random_registry(Rng& rng, std::size_t max_services, std::size_t max_caps) {
  RandomRegistry r;
  auto dag = random_dag(rng, 4 + rng.below(12));
  r.services = dag.graph;
  r.capabilities = dag.ids;
  const auto n = 1 + rng.below(max_services);
  for (std::size_t i = 0; i < n; ++i) {
    ServiceRecord s;
    s.service_id = "svc" + std::to_string(i);
    const auto k = 1 + rng.below(max_caps);
    for (std::size_t j = 0; j < k; ++j) s.capabilities.insert(rng.pick(r.capabilities));
    s.registry_index = static_cast<std::int64_t>(i * 3 + rng.below(3));
    s.stub_id = "stub" + std::to_string(rng.below(n));
    if (!r.stubs.contains(s.stub_id)) {
      StubBinding b;
      b.stub_id = s.stub_id;
      b.canonical_service = *s.capabilities.begin();
      b.dialect = "d";
      b.endpoint = "d";
      r.stubs[s.stub_id] = b;
    } else {
      // Keep the stub related to this service by giving it the stub's service too.
      s.capabilities.insert(r.stubs[s.stub_id].canonical_service);
    }
    r.catalog.register_service(s, r.services, r.stubs);
    const auto records = rng.below(3);
    for (std::size_t j = 0; j < records; ++j) {
      ResourceRecord res;
      res.resource_id = s.service_id + "-r" + std::to_string(j);
      res.service_name = s.service_id;
      res.registry_index = s.registry_index;
      res.observed_at = static_cast<Tick>(rng.below(50));
      if (rng.chance(0.8)) res.metrics["cpu_utilization"] = Literal::integer(rng.between(0, 100));
      if (rng.chance(0.6)) res.metrics["memory_free"] = Literal::decimal(std::to_string(rng.between(0, 8192)) + ".5");
      if (rng.chance(0.4)) res.metrics["bandwidth"] = Literal::integer(rng.between(1, 1000));
      r.catalog.register_resource(res);
    }
  }
  return r;
}

inline DiscoveryQuery random_query(Rng& rng, const RandomRegistry& r, std::size_t max_constraints) {
  DiscoveryQuery q;
  q.capability = rng.pick(r.capabilities);
  static const std::vector<std::string> metrics = {"cpu_utilization", "memory_free", "bandwidth"};
  static const std::vector<Comparator> cmps = {Comparator::Less, Comparator::LessEq, Comparator::Greater,
                                               Comparator::GreaterEq, Comparator::Equal};
  const auto k = rng.below(max_constraints + 1);
  for (std::size_t i = 0; i < k; ++i) {
    const auto& m = rng.pick(metrics);
    const auto hi = m == "cpu_utilization" ? 100 : m == "memory_free" ? 8192 : 1000;
    q.constraints.push_back(Condition{m, rng.pick(cmps), Literal::integer(rng.between(0, hi))});
  }
  if (rng.chance(0.3)) q.freshness = static_cast<Tick>(rng.below(40));
  return q;
}

// --- random literals and rules ----------------------------------------------

inline Literal random_literal(Rng& rng) {
  switch (rng.below(5)) {
    case 0: return Literal::integer(rng.between(-1000000, 1000000));
    case 1: return Literal::decimal(std::to_string(rng.between(-999, 999)) + "." + std::to_string(rng.between(0, 99)),
                                    rng.chance(0.5) ? std::optional<std::string>("EUR") : std::nullopt);
    case 2: return Literal::boolean(rng.chance(0.5));
    case 3: {
      static const std::string alphabet = "abcXYZ 019@\\\n\t:-_,=";
      std::string s;
      const auto len = rng.below(12);
      for (std::size_t i = 0; i < len; ++i) s += alphabet[rng.below(alphabet.size())];
      return Literal::text(s);
    }
    default: return Literal::integer(rng.between(0, 50), std::string("MB"));
  }
}

struct BijectiveCase {
  OntologyGraph mapping{"mapping"};
  MappingRule rule;
  Fields message;
};

/// A bijective rule together with a message it covers completely. Some fields
/// hold concept ids translated through a one-to-one code table.
inline BijectiveCase random_bijective_case(Rng& rng, std::size_t max_fields) {
  BijectiveCase c;
  const ConceptId pred("map", "code");
  c.mapping.declare_concept(pred);
  const auto domain = 8 + rng.below(8);
  for (std::size_t i = 0; i < domain; ++i) {
    const ConceptId subject("cpt", "k" + std::to_string(i));
    if (rng.chance(0.5)) {
      c.mapping.add_triple(Triple{subject, pred, Node{Literal::text("CODE" + std::to_string(i))}});
    } else {
      c.mapping.add_triple(Triple{subject, pred, Node{ConceptId("ext", "e" + std::to_string(i))}});
    }
  }
  c.rule.stub_id = "gen";
  c.rule.canonical_service = ConceptId("ota", "GenService");
  c.rule.dialect = "gen";
  c.rule.operation = "op";
  c.rule.bijective = true;
  const auto n = rng.below(max_fields + 1);
  std::vector<std::size_t> targets(n);
  for (std::size_t i = 0; i < n; ++i) targets[i] = i;
  std::shuffle(targets.begin(), targets.end(), rng.engine());
  for (std::size_t i = 0; i < n; ++i) {
    const auto src = "f" + std::to_string(i);
    const auto dst = "P" + std::to_string(targets[i]);
    if (rng.chance(0.35)) {
      c.message[src] = Literal::text("cpt:k" + std::to_string(rng.below(domain)));
      c.rule.directives.push_back(directive::ConceptMap{src, dst, pred, false});
    } else {
      c.message[src] = random_literal(rng);
      c.rule.directives.push_back(directive::Rename{src, dst});
    }
  }
  return c;
}

}  // namespace vo::testing
