#include "vo/authz.hpp"

#include <algorithm>

#include "vo/text.hpp"

namespace vo {

ConceptId consuming_points_property() { return ConceptId("role", "consumingPoints12mo"); }

void validate_profile(const UserProfile& profile) {
  if (!text::is_token(profile.user_id)) fail(ErrorCode::InvalidRecord, "invalid user id '" + profile.user_id + "'");
  const auto it = profile.properties.find(consuming_points_property());
  if (it == profile.properties.end()) return;
  if (it->second.kind() != LiteralKind::Integer || it->second.as_integer() < 0) {
    fail(ErrorCode::InvalidRecord, profile.user_id + ": consuming points must be a non-negative integer");
  }
}

void validate_rules(const std::vector<RoleRule>& rules) {
  std::map<std::string, std::set<int>> seen;
  for (const auto& r : rules) {
    if (!r.exclusion_group) continue;
    if (!seen[*r.exclusion_group].insert(r.priority).second) {
      fail(ErrorCode::InvalidRule, "priority " + std::to_string(r.priority) + " repeated in group " +
                                       *r.exclusion_group);
    }
  }
}

std::string_view to_string(Decision d) { return d == Decision::Permit ? "PERMIT" : "DENY"; }

void validate_policy(const AccessPolicy& policy, const OntologyGraph& roles) {
  for (const auto& [service, permitted] : policy.entries) {
    for (const auto& r : permitted) {
      if (!roles.declared(r)) fail(ErrorCode::UnknownConcept, "ACL role " + r.str() + " is not in the roles graph");
    }
  }
}

void AuthzTrace::add(int step, std::string actor, std::string action) {
  auto digest = text::digest(action);
  steps.push_back(TraceStep{step, std::move(actor), std::move(action), std::move(digest)});
}

std::string AuthzTrace::render() const {
  std::string out;
  for (const auto& s : steps) {
    out += std::to_string(s.step) + ". [" + s.actor + "] " + s.action + " #" + s.digest.substr(0, 8) + "\n";
  }
  return out;
}

namespace {

std::string render_roles(const std::set<ConceptId>& roles) {
  std::vector<std::string> names;
  for (const auto& r : roles) names.push_back(r.str());
  return "{" + text::join(names, ",") + "}";
}

std::string render_properties(const UserProfile& profile) {
  std::vector<std::string> props;
  for (const auto& [k, v] : profile.properties) props.push_back(k.str() + "=" + v.lexical());
  return props.empty() ? "(none)" : text::join(props, " ");
}

}  // namespace

std::set<ConceptId> infer_roles(const UserProfile& profile, const std::vector<RoleRule>& rules) {
  std::set<ConceptId> roles = profile.static_roles;
  std::map<std::string, const RoleRule*> group_winner;
  for (const auto& rule : rules) {
    const bool holds = std::all_of(rule.conditions.begin(), rule.conditions.end(), [&](const RoleCondition& c) {
      const auto it = profile.properties.find(c.property);
      return it != profile.properties.end() && compare(it->second, c.cmp, c.threshold);
    });
    if (!holds) continue;
    if (!rule.exclusion_group) {
      roles.insert(rule.role);
      continue;
    }
    auto& winner = group_winner[*rule.exclusion_group];
    if (!winner || rule.priority > winner->priority) winner = &rule;
  }
  for (const auto& [_, rule] : group_winner) roles.insert(rule->role);
  return roles;
}

AuthzResult authorize(const UserProfile& profile, const ConceptId& service, const AccessPolicy& policy,
                      const std::vector<RoleRule>& rules, const OntologyGraph* roles_graph, EventLog* log, Tick now) {
  AuthzResult result;
  auto& trace = result.trace;
  const auto svc = service.local();
  trace.add(1, "agent", "request " + service.str() + " for " + profile.user_id);
  trace.add(2, svc, "collect properties of " + profile.user_id + " from metadata service");
  trace.add(3, "metadata", "properties " + render_properties(profile));
  trace.add(4, svc, "authorization request carrying " + render_properties(profile));
  trace.add(5, "authorization", "fetch VO ontology with role definitions");
  trace.add(6, "ontology", roles_graph ? "roles graph " + std::to_string(roles_graph->concepts().size()) +
                                             " concepts, version " + text::digest(serialize_graph(*roles_graph)).substr(0, 8)
                                       : std::string("roles graph not loaded"));
  trace.add(7, "authorization", "invoke reasoning with " + std::to_string(rules.size()) + " role rules");
  result.roles = infer_roles(profile, rules);
  trace.add(8, "reasoning", "inferred roles " + render_roles(result.roles));

  const auto acl = policy.entries.find(service);
  if (acl == policy.entries.end()) {
    result.decision = policy.default_decision;
    trace.add(9, "authorization", "no ACL entry for " + service.str() + ", default " +
                                      std::string(to_string(result.decision)));
  } else {
    const bool hit = std::any_of(result.roles.begin(), result.roles.end(),
                                 [&](const ConceptId& r) { return acl->second.contains(r); });
    result.decision = hit ? Decision::Permit : Decision::Deny;
    trace.add(9, "authorization", "ACL " + render_roles(acl->second) + " vs " + render_roles(result.roles) + " -> " +
                                      std::string(to_string(result.decision)));
  }
  trace.decision = result.decision;
  if (log) {
    log->append(now, "authz", "decision",
                "user=" + profile.user_id + " service=" + service.str() + " roles=" + render_roles(result.roles) +
                    " decision=" + std::string(to_string(result.decision)));
  }
  return result;
}

RequestOutcome evaluate_request(const UserProfile& profile, const CanonicalMessage& msg, const AuthzContext& ctx) {
  auto auth = authorize(profile, msg.service, ctx.policy, ctx.rules, ctx.roles_graph, ctx.log, ctx.now);
  RequestOutcome outcome{std::move(auth.trace), Fault{}, 0};
  const auto svc = msg.service.local();
  if (!outcome.permitted()) {
    outcome.trace.add(11, "authorization", "deny notice returned to " + profile.user_id + "'s agent");
    outcome.result = DenyNotice{profile.user_id, msg.service, msg.correlation,
                                "none of " + render_roles(auth.roles) + " may invoke " + msg.service.str()};
    return outcome;
  }
  outcome.trace.add(10, svc, "invoke " + msg.service.str() + " corr=" + msg.correlation);
  try {
    auto inv = ctx.invoke ? ctx.invoke(msg) : throw Error(ErrorCode::ProviderUnavailable, "no invoker configured");
    outcome.trace.add(11, svc, "result returned to " + profile.user_id + "'s agent #" +
                                   text::digest(to_json(inv.response)).substr(0, 8));
    outcome.latency = inv.latency;
    outcome.result = std::move(inv.response);
  } catch (const Error& e) {
    outcome.trace.add(11, svc, std::string(to_string(e.code())) + " returned to " + profile.user_id + "'s agent");
    outcome.result = Fault{e.code(), e.detail()};
  }
  return outcome;
}

// --- files ------------------------------------------------------------------

AccessPolicy parse_policy(std::string_view content) {
  AccessPolicy policy;
  const auto lines = text::lines(content);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto s = text::trim(lines[i]);
    if (s.empty() || s.front() == '#') continue;
    const auto parts = text::split_ws(s);
    if (parts.size() != 4 || parts[0] != "allow" || parts[2] != ":") {
      throw ParseError(i + 1, "expected 'allow <service> : <role>[,<role>...]'");
    }
    try {
      auto& roles = policy.entries[ConceptId::parse(parts[1])];
      for (const auto& r : text::split(parts[3], ',')) roles.insert(ConceptId::parse(r));
    } catch (const Error& e) {
      throw ParseError(i + 1, e.detail());
    }
  }
  return policy;
}

std::string serialize_policy(const AccessPolicy& policy) {
  std::string out;
  for (const auto& [service, roles] : policy.entries) {
    std::vector<std::string> names;
    for (const auto& r : roles) names.push_back(r.str());
    out += "allow " + service.str() + " : " + text::join(names, ",") + "\n";
  }
  return out;
}

std::vector<RoleRule> parse_role_rules(std::string_view content) {
  std::vector<RoleRule> rules;
  const auto lines = text::lines(content);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto s = text::trim(lines[i]);
    if (s.empty() || s.front() == '#') continue;
    try {
      const auto parts = text::split_ws(s);
      if (parts.size() < 4 || parts[0] != "role" || parts[2] != "when") {
        fail(ErrorCode::ParseError, "expected 'role <role> when <condition> [and ...]'");
      }
      RoleRule rule;
      rule.role = ConceptId::parse(parts[1]);
      std::size_t k = 3;
      while (k < parts.size()) {
        const auto c = parse_condition(parts[k]);
        rule.conditions.push_back(RoleCondition{ConceptId::parse(c.name), c.cmp, c.threshold});
        ++k;
        if (k < parts.size() && parts[k] == "and") {
          ++k;
          continue;
        }
        break;
      }
      if (k < parts.size()) {
        if (k + 4 != parts.size() || parts[k] != "group" || parts[k + 2] != "prio") {
          fail(ErrorCode::ParseError, "expected 'group <token> prio <n>'");
        }
        const auto prio = text::parse_int(parts[k + 3]);
        if (!prio) fail(ErrorCode::ParseError, "priority must be an integer");
        rule.exclusion_group = parts[k + 1];
        rule.priority = static_cast<int>(*prio);
      }
      rules.push_back(std::move(rule));
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(i + 1, e.detail());
    }
  }
  validate_rules(rules);
  return rules;
}

std::string serialize_role_rules(const std::vector<RoleRule>& rules) {
  std::string out;
  for (const auto& r : rules) {
    std::vector<std::string> conds;
    for (const auto& c : r.conditions) {
      conds.push_back(c.property.str() + std::string(to_string(c.cmp)) + c.threshold.compact());
    }
    out += "role " + r.role.str() + " when " + text::join(conds, " and ");
    if (r.exclusion_group) out += " group " + *r.exclusion_group + " prio " + std::to_string(r.priority);
    out += "\n";
  }
  return out;
}

std::map<std::string, UserProfile> parse_profiles(std::string_view content) {
  std::map<std::string, UserProfile> out;
  const auto lines = text::lines(content);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto s = text::trim(lines[i]);
    if (s.empty() || s.front() == '#') continue;
    try {
      const auto parts = text::split_ws(s);
      if (parts.size() < 2 || parts[0] != "user") fail(ErrorCode::ParseError, "expected 'user <id> ...'");
      UserProfile p;
      p.user_id = parts[1];
      for (std::size_t k = 2; k < parts.size(); ++k) {
        const auto kv = text::split_kv(parts[k]);
        if (!kv) fail(ErrorCode::ParseError, "expected key=value, got '" + parts[k] + "'");
        if (kv->first == "static") {
          for (const auto& r : text::split(kv->second, ',')) p.static_roles.insert(ConceptId::parse(r));
        } else {
          p.properties[ConceptId::parse(kv->first)] = Literal::infer(kv->second);
        }
      }
      validate_profile(p);
      out[p.user_id] = std::move(p);
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(i + 1, e.detail());
    }
  }
  return out;
}

std::string serialize_profiles(const std::map<std::string, UserProfile>& profiles) {
  std::string out;
  for (const auto& [id, p] : profiles) {
    out += "user " + id;
    if (!p.static_roles.empty()) {
      std::vector<std::string> names;
      for (const auto& r : p.static_roles) names.push_back(r.str());
      out += " static=" + text::join(names, ",");
    }
    for (const auto& [k, v] : p.properties) out += " " + k.str() + "=" + v.encode();
    out += "\n";
  }
  return out;
}

}  // namespace vo
