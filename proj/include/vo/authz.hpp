#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "vo/error.hpp"
#include "vo/event_log.hpp"
#include "vo/ontology.hpp"
#include "vo/reconciliation.hpp"

namespace vo {

/// Property every tourist profile carries: consuming points over the past 12 months.
ConceptId consuming_points_property();

struct UserProfile {
  std::string user_id;
  std::map<ConceptId, Literal> properties;
  std::set<ConceptId> static_roles;

  bool operator==(const UserProfile&) const = default;
};

/// Throws InvalidRecord when consuming points are present but not a
/// non-negative integer.
void validate_profile(const UserProfile& profile);

struct RoleCondition {
  ConceptId property;
  Comparator cmp = Comparator::Equal;
  Literal threshold;
  bool operator==(const RoleCondition&) const = default;
};

struct RoleRule {
  ConceptId role;
  std::vector<RoleCondition> conditions;  // conjunction
  int priority = 0;
  std::optional<std::string> exclusion_group;
  bool operator==(const RoleRule&) const = default;
};

/// Priorities must be distinct inside an exclusion group. Throws InvalidRule.
void validate_rules(const std::vector<RoleRule>& rules);

enum class Decision { Permit, Deny };
std::string_view to_string(Decision d);

struct AccessPolicy {
  std::map<ConceptId, std::set<ConceptId>> entries;  // service -> permitted roles
  Decision default_decision = Decision::Deny;
  bool operator==(const AccessPolicy&) const = default;
};

/// Every permitted role must be declared in the roles graph. Throws UnknownConcept.
void validate_policy(const AccessPolicy& policy, const OntologyGraph& roles);

struct TraceStep {
  int step = 0;
  std::string actor;
  std::string action;
  std::string digest;
  bool operator==(const TraceStep&) const = default;
};

/// Numbered protocol trace: steps 1-9 cover property collection through the
/// ACL comparison, 10 is the service invocation and 11 the reply.
struct AuthzTrace {
  std::vector<TraceStep> steps;
  Decision decision = Decision::Deny;

  void add(int step, std::string actor, std::string action);
  std::string render() const;
  bool operator==(const AuthzTrace&) const = default;
};

/// static roles plus every role whose conditions all hold; inside an
/// exclusion group only the highest-priority satisfied role survives.
/// Missing properties make a condition false. Throws KindMismatch.
std::set<ConceptId> infer_roles(const UserProfile& profile, const std::vector<RoleRule>& rules);

struct AuthzResult {
  Decision decision = Decision::Deny;
  std::set<ConceptId> roles;
  AuthzTrace trace;
};

/// Roles are inferred afresh on every call. Services without an ACL entry
/// fall back to the policy default. Logs one "decision" record when `log` is set.
AuthzResult authorize(const UserProfile& profile, const ConceptId& service, const AccessPolicy& policy,
                      const std::vector<RoleRule>& rules, const OntologyGraph* roles_graph = nullptr,
                      EventLog* log = nullptr, Tick now = 0);

struct DenyNotice {
  std::string user_id;
  ConceptId service;
  std::string correlation;
  std::string reason;
  bool operator==(const DenyNotice&) const = default;
};

struct Fault {
  ErrorCode code = ErrorCode::ProviderFault;
  std::string message;
  bool operator==(const Fault&) const = default;
};

/// A provider response plus the logical delay before it reaches the caller.
struct Invocation {
  CanonicalMessage response;
  Tick latency = 0;
};

/// Runs the permitted request (discovery + stub dispatch). Throws vo::Error.
using ServiceInvoker = std::function<Invocation(const CanonicalMessage&)>;

struct RequestOutcome {
  AuthzTrace trace;
  std::variant<CanonicalMessage, DenyNotice, Fault> result;
  Tick latency = 0;

  bool permitted() const { return trace.decision == Decision::Permit; }
};

struct AuthzContext {
  const AccessPolicy& policy;
  const std::vector<RoleRule>& rules;
  ServiceInvoker invoke;
  const OntologyGraph* roles_graph = nullptr;
  EventLog* log = nullptr;
  Tick now = 0;
};

/// Authorizes, then on Permit invokes the service (step 10) and returns its
/// response (step 11). On Deny the invoker is never called. Invocation errors
/// come back as a Fault alongside the Permit trace.
RequestOutcome evaluate_request(const UserProfile& profile, const CanonicalMessage& msg, const AuthzContext& ctx);

// --- files ------------------------------------------------------------------

/// `allow <service> : <role>[,<role>...]`
AccessPolicy parse_policy(std::string_view content);
std::string serialize_policy(const AccessPolicy& policy);

/// `role <role> when <property><cmp><value> [and ...] [group <token> prio <n>]`
std::vector<RoleRule> parse_role_rules(std::string_view content);
std::string serialize_role_rules(const std::vector<RoleRule>& rules);

/// `user <id> [static=<role>[,<role>...]] [<property>=<value>]...`
std::map<std::string, UserProfile> parse_profiles(std::string_view content);
std::string serialize_profiles(const std::map<std::string, UserProfile>& profiles);

}  // namespace vo
