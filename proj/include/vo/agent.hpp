#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vo/authz.hpp"
#include "vo/event_log.hpp"
#include "vo/reconciliation.hpp"

namespace vo {

/// A request as the agent sees it: operation plus exact parameter values.
struct RequestKey {
  std::string op;
  Fields params;

  auto operator<=>(const RequestKey&) const = default;
  std::string str() const;
};

/// Interest value for `invokes` requests seen inside the window:
/// 1 (<5), 2 (5-9), 3 (10-14), 4 (15-19), 5 (>=20). Throws EmptyWindow on 0.
int quantize(std::size_t invokes);

struct InterestEntry {
  RequestKey key;
  std::vector<Tick> invoke_times;  // ascending, all inside the window
  int value = 1;

  bool operator==(const InterestEntry&) const = default;
};

inline constexpr Tick kDefaultWindow = 30 * 24;

/// Per-user interest values over a rolling window of (now - window, now].
class InterestStore {
 public:
  explicit InterestStore(Tick window = kDefaultWindow);

  const InterestEntry& record_invoke(const RequestKey& key, Tick now);
  /// Drops timestamps that left the window, evicts empty entries and
  /// recomputes every value.
  void prune(Tick now);

  Tick window() const { return window_; }
  const std::map<RequestKey, InterestEntry>& entries() const { return entries_; }
  const InterestEntry* find(const RequestKey& key) const;

  bool operator==(const InterestStore&) const = default;

 private:
  void prune_entry(InterestEntry& e, Tick now) const;

  Tick window_;
  std::map<RequestKey, InterestEntry> entries_;
};

struct PreferenceList {
  int threshold = 3;
  Tick period = 24;
  std::vector<RequestKey> entries;  // value desc, then earliest invoke

  bool operator==(const PreferenceList&) const = default;
};

/// Keys whose value is strictly greater than `threshold` (1..5).
PreferenceList refresh_preferences(InterestStore& store, int threshold, Tick period, Tick now);

struct AgentConfig {
  Tick window = kDefaultWindow;
  int threshold = 3;
  Tick period = 24;
  /// Operation aliases such as airFare -> ota:AirFareQueryService. Operations
  /// that already parse as a concept id need no alias.
  std::map<std::string, ConceptId> op_services;

  bool operator==(const AgentConfig&) const = default;
};

ConceptId service_for(const RequestKey& key, const AgentConfig& config);
RequestKey key_for(const CanonicalMessage& msg);

/// Something handed to a user: a provider response, a deny notice or a fault.
struct Delivery {
  Tick due = 0;
  std::string user;
  std::string source;  // "user", "auto" or "plan"
  std::string kind;    // "response", "deny" or "fault"
  std::string payload;

  bool operator==(const Delivery&) const = default;
};

Delivery make_delivery(const std::string& user, std::string source, const RequestOutcome& outcome, Tick now);

class Agent {
 public:
  Agent() = default;
  Agent(std::string user, const AgentConfig& config);

  const std::string& user() const { return user_; }
  InterestStore& interests() { return interests_; }
  const InterestStore& interests() const { return interests_; }
  const PreferenceList& preferences() const { return preferences_; }
  void set_preferences(PreferenceList p) { preferences_ = std::move(p); }
  const std::vector<Delivery>& inbox() const { return inbox_; }
  void deliver(Delivery d) { inbox_.push_back(std::move(d)); }

  bool operator==(const Agent&) const = default;

 private:
  std::string user_;
  InterestStore interests_;
  PreferenceList preferences_;
  std::vector<Delivery> inbox_;
};

/// On period boundaries, refreshes the preference list and sends every
/// preferred request through evaluate_request. Per-request errors become
/// fault deliveries; the tick itself never throws for them. The returned
/// deliveries are due at now + provider latency.
std::vector<Delivery> tick(Agent& agent, Tick now, const AgentConfig& config, const UserProfile& profile,
                           const AuthzContext& authz);

// --- travel-plan decomposition ----------------------------------------------

struct BranchSpec {
  ConceptId service;
  std::vector<std::pair<std::string, std::string>> projections;  // branch param <- parent param
  bool operator==(const BranchSpec&) const = default;
};

/// Composite service -> its branch services.
using DecompositionTable = std::map<ConceptId, std::vector<BranchSpec>>;

/// `composite <service> -> <branch>(<param>=<parent_param>,...) ...`
DecompositionTable parse_decomposition(std::string_view content);
std::string serialize_decomposition(const DecompositionTable& table);

enum class TaskKind { Composite, Branch };
enum class TaskStatus { Pending, Running, Done, Failed };
std::string_view to_string(TaskStatus s);

struct Task {
  std::string task_id;
  TaskKind kind = TaskKind::Branch;
  CanonicalMessage spec;
  std::vector<Task> children;
  std::string assigned_agent;
  TaskStatus status = TaskStatus::Pending;
  std::optional<CanonicalMessage> result;
  std::string error;

  bool operator==(const Task&) const = default;
};

/// One branch task per table entry, parameters projected from the request.
/// Throws UnknownComposite or MissingField.
Task decompose_plan(const CanonicalMessage& request, const DecompositionTable& table);

/// Field prefix a branch's results are merged under.
std::string branch_prefix(const Task& composite, std::size_t child);

class BranchFailedError : public Error {
 public:
  BranchFailedError(const std::string& message, CanonicalMessage partial);
  const CanonicalMessage& partial() const { return partial_; }

 private:
  CanonicalMessage partial_;
};

/// Merges every child result as "<prefix>.<field>", plus "<prefix>.task"
/// naming the branch task. Throws IncompleteChildren
/// while any child is pending or running, BranchFailedError when one failed.
CanonicalMessage aggregate(const Task& task);

}  // namespace vo
