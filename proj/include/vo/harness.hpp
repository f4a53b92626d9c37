#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vo/agent.hpp"
#include "vo/authz.hpp"
#include "vo/discovery.hpp"
#include "vo/event_log.hpp"
#include "vo/ontology.hpp"
#include "vo/reconciliation.hpp"

namespace vo {

// --- simulated providers ----------------------------------------------------

struct CannedResponse {
  std::string operation;
  std::optional<Fields> when;  // exact request fields; unset matches any request
  std::optional<ProviderMessage> reply;
  std::string fault;  // dialect-level error record when no reply

  bool operator==(const CannedResponse&) const = default;
};

/// In-process provider answering from canned responses keyed by operation and
/// request-field digest. Echo providers return the request unchanged.
class ProviderSim : public ProviderEndpoint {
 public:
  std::string id;
  std::string dialect;
  Tick latency = 0;
  bool up = true;
  bool echo = false;
  std::vector<CannedResponse> responses;

  ProviderMessage call(const ProviderMessage& request) override;

  bool operator==(const ProviderSim& o) const {
    return id == o.id && dialect == o.dialect && latency == o.latency && up == o.up && echo == o.echo &&
           responses == o.responses;
  }
};

/// JSON document {"providers": [{"id", "dialect", "latency", "up", "echo",
/// "responses": [{"operation", "when", "reply" | "fault"}]}]}.
std::map<std::string, ProviderSim> parse_providers(std::string_view json);
std::string serialize_providers(const std::map<std::string, ProviderSim>& providers);

// --- configuration ----------------------------------------------------------

struct HarnessConfig {
  AgentConfig agent;
  std::optional<Tick> default_freshness;

  bool operator==(const HarnessConfig&) const = default;
};

/// key=value lines: window, threshold, period, freshness, op.<alias>=<service>.
HarnessConfig parse_config(std::string_view content);
std::string serialize_config(const HarnessConfig& config);

// --- the virtual organization -----------------------------------------------

/// A composite task in flight and the user it belongs to.
struct Plan {
  std::string user;
  Task task;
  bool operator==(const Plan&) const = default;
};

/// Something scheduled on the logical clock.
struct PendingEvent {
  enum class Type { Delivery, BranchResult };
  Type type = Type::Delivery;
  Delivery delivery;          // Delivery
  std::string task_id;        // BranchResult
  std::size_t branch = 0;     // BranchResult
  std::optional<CanonicalMessage> result;
  std::string error;

  bool operator==(const PendingEvent&) const = default;
};

/// Every store of the VO plus the logical clock and event log. All behavior
/// is driven by explicit calls; identical call sequences yield identical logs.
class VirtualOrganization {
 public:
  VirtualOrganization() = default;

  Tick now() const { return now_; }
  const EventLog& log() const { return log_; }
  const Ontology& ontology() const { return ontology_; }
  const Catalog& catalog() const { return catalog_; }
  const std::map<std::string, StubBinding>& stubs() const { return stubs_; }
  const std::map<std::string, ProviderSim>& providers() const { return providers_; }
  const std::map<std::string, UserProfile>& profiles() const { return profiles_; }
  const std::vector<RoleRule>& role_rules() const { return rules_; }
  const AccessPolicy& policy() const { return policy_; }
  const DecompositionTable& decomposition() const { return decomposition_; }
  const HarnessConfig& config() const { return config_; }
  const std::map<std::string, Agent>& agents() const { return agents_; }
  const std::map<std::string, Plan>& plans() const { return plans_; }
  const std::map<std::pair<Tick, std::uint64_t>, PendingEvent>& queue() const { return queue_; }

  /// Loads one fixture file, chosen by extension: .onto .rules .providers
  /// .registry .directory .roles .policy .profiles .decomp .conf, or a
  /// .bundle listing other files relative to itself.
  void load_file(const std::string& path);
  void load_content(std::string_view extension, std::string_view content, const std::string& name);

  void register_service(const ServiceRecord& record);
  void register_resource(const ResourceRecord& record);
  void telemetry(const std::string& resource, const std::string& metric, const Literal& value);

  DiscoveryResult discover(const DiscoveryQuery& q);
  AuthzResult authorize(const std::string& user, const ConceptId& service);

  /// A user's request entering the VO through their agent. Composite
  /// services are decomposed into branch tasks; everything else goes
  /// through authorization and, if permitted, discovery and a stub.
  void user_request(const std::string& user, const CanonicalMessage& msg);
  /// Moves the clock forward one tick at a time, delivering due events and
  /// running agent ticks on period boundaries.
  void advance(Tick ticks);

  const UserProfile& profile(const std::string& user) const;
  Agent& agent(const std::string& user);

  /// Versioned archive holding the canonical form of every store.
  std::string snapshot() const;
  static VirtualOrganization restore(std::string_view archive);

 private:
  AuthzContext authz_context();
  Invocation invoke_service(const CanonicalMessage& msg);
  void schedule(Tick due, PendingEvent event);
  void drain();
  void handle(const PendingEvent& event);
  void start_plan(const std::string& user, const CanonicalMessage& msg);
  void finish_branch(const PendingEvent& event);

  Tick now_ = 0;
  std::uint64_t seq_ = 0;
  Ontology ontology_;
  std::map<std::string, StubBinding> stubs_;
  std::map<std::string, ProviderSim> providers_;
  Catalog catalog_;
  std::vector<RoleRule> rules_;
  AccessPolicy policy_;
  std::map<std::string, UserProfile> profiles_;
  DecompositionTable decomposition_;
  HarnessConfig config_;
  std::map<std::string, Agent> agents_;
  std::map<std::string, Plan> plans_;
  std::map<std::pair<Tick, std::uint64_t>, PendingEvent> queue_;
  EventLog log_;
};

inline constexpr int kArchiveVersion = 1;

// --- scenarios --------------------------------------------------------------

struct ScenarioEvent {
  std::size_t line = 0;
  std::string verb;
  std::string rest;  // everything after the verb
};

struct ScenarioScript {
  std::string base_dir;  // relative `load` paths resolve against this
  std::vector<ScenarioEvent> events;
};

/// Line-oriented, `#` comments. Verbs: load, register-service,
/// register-resource, telemetry, user-request, advance, expect.
ScenarioScript parse_scenario(std::string_view content, std::string base_dir = ".");
ScenarioScript load_scenario(const std::string& path);

struct AssertionResult {
  std::size_t event = 0;
  std::string text;
  bool passed = false;
  std::string actual;
};

/// Applies one event. Malformed or failing events throw ScriptError naming
/// the event index; `expect` lines append to `report` instead of throwing.
void apply_event(VirtualOrganization& vo, const ScenarioScript& script, std::size_t index,
                 std::vector<AssertionResult>& report);

struct ScenarioResult {
  std::string final_snapshot;
  EventLog log;
  std::vector<AssertionResult> report;

  bool passed() const;
};

/// Runs events [from, to) of the script against `vo` (a fresh VO by default).
ScenarioResult run_scenario(const ScenarioScript& script);
ScenarioResult run_scenario(const ScenarioScript& script, VirtualOrganization& vo, std::size_t from,
                            std::size_t to);

}  // namespace vo
