#include "vo/agent.hpp"

#include <algorithm>

#include <json.hpp>

#include "vo/text.hpp"

namespace vo {

std::string RequestKey::str() const {
  std::string out = op + "(";
  bool first = true;
  for (const auto& [k, v] : params) {
    out += (first ? "" : ",") + k + "=" + v.compact();
    first = false;
  }
  return out + ")";
}

int quantize(std::size_t invokes) {
  if (invokes == 0) fail(ErrorCode::EmptyWindow, "no invokes inside the window");
  if (invokes < 5) return 1;
  if (invokes < 10) return 2;
  if (invokes < 15) return 3;
  if (invokes < 20) return 4;
  return 5;
}

// --- interests --------------------------------------------------------------

InterestStore::InterestStore(Tick window) : window_(window) {
  if (window_ == 0) fail(ErrorCode::InvalidRecord, "interest window must be positive");
}

void InterestStore::prune_entry(InterestEntry& e, Tick now) const {
  if (now >= window_) {
    const Tick cutoff = now - window_;  // keep t in (cutoff, now]
    std::erase_if(e.invoke_times, [&](Tick t) { return t <= cutoff; });
  }
  if (!e.invoke_times.empty()) e.value = quantize(e.invoke_times.size());
}

const InterestEntry& InterestStore::record_invoke(const RequestKey& key, Tick now) {
  auto& e = entries_[key];
  e.key = key;
  e.invoke_times.insert(std::upper_bound(e.invoke_times.begin(), e.invoke_times.end(), now), now);
  prune_entry(e, now);
  return e;
}

void InterestStore::prune(Tick now) {
  for (auto it = entries_.begin(); it != entries_.end();) {
    prune_entry(it->second, now);
    it = it->second.invoke_times.empty() ? entries_.erase(it) : std::next(it);
  }
}

const InterestEntry* InterestStore::find(const RequestKey& key) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : &it->second;
}

PreferenceList refresh_preferences(InterestStore& store, int threshold, Tick period, Tick now) {
  if (threshold < 1 || threshold > 5) fail(ErrorCode::InvalidRecord, "threshold must be within 1..5");
  store.prune(now);
  std::vector<const InterestEntry*> hits;
  for (const auto& [_, e] : store.entries()) {
    if (e.value > threshold) hits.push_back(&e);
  }
  std::sort(hits.begin(), hits.end(), [](const InterestEntry* a, const InterestEntry* b) {
    if (a->value != b->value) return a->value > b->value;
    if (a->invoke_times.front() != b->invoke_times.front()) return a->invoke_times.front() < b->invoke_times.front();
    return a->key < b->key;
  });
  PreferenceList list{threshold, period, {}};
  for (const auto* e : hits) list.entries.push_back(e->key);
  return list;
}

ConceptId service_for(const RequestKey& key, const AgentConfig& config) {
  if (const auto it = config.op_services.find(key.op); it != config.op_services.end()) return it->second;
  if (auto id = ConceptId::try_parse(key.op)) return *id;
  fail(ErrorCode::UnknownConcept, "operation '" + key.op + "' maps to no service");
}

RequestKey key_for(const CanonicalMessage& msg) { return RequestKey{msg.service.str(), msg.fields}; }

// --- agent ------------------------------------------------------------------

Agent::Agent(std::string user, const AgentConfig& config)
    : user_(std::move(user)), interests_(config.window), preferences_{config.threshold, config.period, {}} {}

Delivery make_delivery(const std::string& user, std::string source, const RequestOutcome& outcome, Tick now) {
  Delivery d;
  d.due = now + outcome.latency;
  d.user = user;
  d.source = std::move(source);
  if (const auto* msg = std::get_if<CanonicalMessage>(&outcome.result)) {
    d.kind = "response";
    d.payload = to_json(*msg);
  } else if (const auto* deny = std::get_if<DenyNotice>(&outcome.result)) {
    d.kind = "deny";
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& s : outcome.trace.steps) steps.push_back({{"step", s.step}, {"actor", s.actor}, {"action", s.action}});
    d.payload = nlohmann::json{{"service", deny->service.str()},
                               {"correlation", deny->correlation},
                               {"reason", deny->reason},
                               {"trace", steps}}
                    .dump();
  } else {
    const auto& fault = std::get<Fault>(outcome.result);
    d.kind = "fault";
    d.payload = nlohmann::json{{"code", std::string(to_string(fault.code))}, {"message", fault.message}}.dump();
  }
  return d;
}

std::vector<Delivery> tick(Agent& agent, Tick now, const AgentConfig& config, const UserProfile& profile,
                           const AuthzContext& authz) {
  if (config.period == 0 || now % config.period != 0) return {};
  agent.set_preferences(refresh_preferences(agent.interests(), config.threshold, config.period, now));
  const auto& prefs = agent.preferences().entries;
  if (authz.log) {
    authz.log->append(now, "agent", "tick", "user=" + agent.user() + " prefs=" + std::to_string(prefs.size()));
  }
  std::vector<Delivery> out;
  for (std::size_t i = 0; i < prefs.size(); ++i) {
    const auto& key = prefs[i];
    const auto correlation = "auto-" + agent.user() + "-" + std::to_string(now) + "-" + std::to_string(i);
    RequestOutcome outcome;
    try {
      const CanonicalMessage msg{service_for(key, config), correlation, key.params};
      AuthzContext ctx = authz;
      ctx.now = now;
      outcome = evaluate_request(profile, msg, ctx);
    } catch (const Error& e) {
      outcome.result = Fault{e.code(), e.detail()};
    }
    out.push_back(make_delivery(agent.user(), "auto", outcome, now));
  }
  return out;
}

// --- decomposition ----------------------------------------------------------

std::string_view to_string(TaskStatus s) {
  switch (s) {
    case TaskStatus::Pending: return "pending";
    case TaskStatus::Running: return "running";
    case TaskStatus::Done: return "done";
    case TaskStatus::Failed: return "failed";
  }
  return "pending";
}

DecompositionTable parse_decomposition(std::string_view content) {
  DecompositionTable table;
  const auto lines = text::lines(content);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto s = text::trim(lines[i]);
    if (s.empty() || s.front() == '#') continue;
    try {
      const auto parts = text::split_ws(s);
      if (parts.size() < 4 || parts[0] != "composite" || parts[2] != "->") {
        fail(ErrorCode::ParseError, "expected 'composite <service> -> <branch>(...) ...'");
      }
      std::vector<BranchSpec> branches;
      for (std::size_t k = 3; k < parts.size(); ++k) {
        const auto& tok = parts[k];
        const auto open = tok.find('(');
        if (open == std::string::npos || tok.back() != ')') fail(ErrorCode::ParseError, "bad branch '" + tok + "'");
        BranchSpec b{ConceptId::parse(tok.substr(0, open)), {}};
        const auto inner = tok.substr(open + 1, tok.size() - open - 2);
        if (!inner.empty()) {
          for (const auto& p : text::split(inner, ',')) {
            const auto kv = text::split_kv(p);
            if (!kv || kv->first.empty() || kv->second.empty()) fail(ErrorCode::ParseError, "bad projection '" + p + "'");
            b.projections.push_back(*kv);
          }
        }
        branches.push_back(std::move(b));
      }
      table[ConceptId::parse(parts[1])] = std::move(branches);
    } catch (const Error& e) {
      throw ParseError(i + 1, e.detail());
    }
  }
  return table;
}

std::string serialize_decomposition(const DecompositionTable& table) {
  std::string out;
  for (const auto& [composite, branches] : table) {
    out += "composite " + composite.str() + " ->";
    for (const auto& b : branches) {
      std::vector<std::string> ps;
      for (const auto& [k, v] : b.projections) ps.push_back(k + "=" + v);
      out += " " + b.service.str() + "(" + text::join(ps, ",") + ")";
    }
    out += "\n";
  }
  return out;
}

Task decompose_plan(const CanonicalMessage& request, const DecompositionTable& table) {
  const auto entry = table.find(request.service);
  if (entry == table.end() || entry->second.empty()) {
    fail(ErrorCode::UnknownComposite, request.service.str() + " is not a composite service");
  }
  Task root;
  root.task_id = "plan-" + (request.correlation.empty() ? request.service.local() : request.correlation);
  root.kind = TaskKind::Composite;
  root.spec = request;
  for (std::size_t i = 0; i < entry->second.size(); ++i) {
    const auto& b = entry->second[i];
    Task child;
    child.task_id = root.task_id + "/" + std::to_string(i + 1);
    child.kind = TaskKind::Branch;
    child.assigned_agent = "agent-" + std::to_string(i + 1);
    child.spec.service = b.service;
    child.spec.correlation = request.correlation + "/" + std::to_string(i + 1);
    for (const auto& [param, parent] : b.projections) {
      const auto it = request.fields.find(parent);
      if (it == request.fields.end()) {
        fail(ErrorCode::MissingField, b.service.str() + " needs '" + parent + "' from " + request.service.str());
      }
      child.spec.fields[param] = it->second;
    }
    root.children.push_back(std::move(child));
  }
  return root;
}

std::string branch_prefix(const Task& composite, std::size_t child) {
  auto name = composite.children.at(child).spec.service.local();
  if (name.size() > 7 && name.ends_with("Service")) name.resize(name.size() - 7);
  std::size_t same = 0;
  for (std::size_t i = 0; i < composite.children.size(); ++i) {
    if (composite.children[i].spec.service == composite.children[child].spec.service) ++same;
  }
  return same > 1 ? name + "_" + std::to_string(child + 1) : name;
}

BranchFailedError::BranchFailedError(const std::string& message, CanonicalMessage partial)
    : Error(ErrorCode::BranchFailed, message), partial_(std::move(partial)) {}

CanonicalMessage aggregate(const Task& task) {
  if (task.kind != TaskKind::Composite || task.children.empty()) {
    fail(ErrorCode::UnknownComposite, task.task_id + " is not a composite task");
  }
  CanonicalMessage merged{task.spec.service, task.spec.correlation, {}};
  std::vector<std::string> failed;
  for (std::size_t i = 0; i < task.children.size(); ++i) {
    const auto& c = task.children[i];
    if (c.status == TaskStatus::Pending || c.status == TaskStatus::Running) {
      fail(ErrorCode::IncompleteChildren, c.task_id + " is still " + std::string(to_string(c.status)));
    }
    if (c.status == TaskStatus::Failed) {
      failed.push_back(c.task_id + (c.error.empty() ? "" : " (" + c.error + ")"));
      continue;
    }
    const auto prefix = branch_prefix(task, i);
    merged.fields[prefix + ".task"] = Literal::text(c.task_id);
    if (c.result) {
      for (const auto& [k, v] : c.result->fields) merged.fields[prefix + "." + k] = v;
    }
  }
  if (!failed.empty()) throw BranchFailedError("failed branches: " + text::join(failed, ", "), merged);
  return merged;
}

}  // namespace vo
