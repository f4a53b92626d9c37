#include "vo/harness.hpp"

#include <algorithm>
#include <filesystem>

#include <json.hpp>

#include "vo/error.hpp"
#include "vo/text.hpp"

namespace vo {

using nlohmann::json;
namespace fs = std::filesystem;

// --- providers --------------------------------------------------------------

ProviderMessage ProviderSim::call(const ProviderMessage& request) {
  if (request.dialect != dialect) {
    fail(ErrorCode::ProviderFault, id + " speaks " + dialect + ", not " + request.dialect);
  }
  if (echo) return ProviderMessage{dialect, request.operation, request.correlation, request.fields};

  const auto digest = text::digest(fields_to_json_object(request.fields));
  const CannedResponse* hit = nullptr;
  for (const auto& r : responses) {
    if (r.operation != request.operation) continue;
    if (r.when && text::digest(fields_to_json_object(*r.when)) == digest) {
      hit = &r;
      break;
    }
    if (!r.when && !hit) hit = &r;
  }
  if (!hit) fail(ErrorCode::ProviderFault, id + ": no canned response for " + request.operation);
  if (!hit->reply) fail(ErrorCode::ProviderFault, id + ": " + hit->fault);
  auto reply = *hit->reply;
  reply.dialect = dialect;
  reply.correlation = request.correlation;
  return reply;
}

std::map<std::string, ProviderSim> parse_providers(std::string_view content) {
  std::map<std::string, ProviderSim> out;
  try {
    const auto doc = json::parse(content);
    for (const auto& p : doc.at("providers")) {
      ProviderSim sim;
      sim.id = p.at("id").get<std::string>();
      sim.dialect = p.value("dialect", sim.id);
      sim.latency = p.value("latency", Tick{0});
      sim.up = p.value("up", true);
      sim.echo = p.value("echo", false);
      if (!text::is_token(sim.id) || !text::is_token(sim.dialect)) {
        fail(ErrorCode::ParseError, "provider id and dialect must be tokens");
      }
      for (const auto& r : p.value("responses", json::array())) {
        CannedResponse c;
        c.operation = r.at("operation").get<std::string>();
        if (r.contains("when")) c.when = fields_from_json_object(r["when"].dump());
        if (r.contains("reply")) {
          const auto& rep = r["reply"];
          c.reply = ProviderMessage{sim.dialect, rep.value("operation", c.operation), "",
                                    fields_from_json_object(rep.value("fields", json::object()).dump())};
        } else {
          c.fault = r.value("fault", std::string("fault"));
        }
        sim.responses.push_back(std::move(c));
      }
      out[sim.id] = std::move(sim);
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, std::string("providers file: ") + e.what());
  }
  return out;
}

std::string serialize_providers(const std::map<std::string, ProviderSim>& providers) {
  json list = json::array();
  for (const auto& [id, p] : providers) {
    json responses = json::array();
    for (const auto& r : p.responses) {
      json j{{"operation", r.operation}};
      if (r.when) j["when"] = json::parse(fields_to_json_object(*r.when));
      if (r.reply) {
        j["reply"] = {{"operation", r.reply->operation}, {"fields", json::parse(fields_to_json_object(r.reply->fields))}};
      } else {
        j["fault"] = r.fault;
      }
      responses.push_back(std::move(j));
    }
    list.push_back({{"id", id},
                    {"dialect", p.dialect},
                    {"latency", p.latency},
                    {"up", p.up},
                    {"echo", p.echo},
                    {"responses", responses}});
  }
  return json{{"providers", list}}.dump(1) + "\n";
}

// --- config -----------------------------------------------------------------

HarnessConfig parse_config(std::string_view content) {
  HarnessConfig c;
  const auto lines = text::lines(content);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto s = text::trim(lines[i]);
    if (s.empty() || s.front() == '#') continue;
    const auto kv = text::split_kv(s);
    if (!kv) throw ParseError(i + 1, "expected key=value");
    const auto key = std::string(text::trim(kv->first));
    const auto value = std::string(text::trim(kv->second));
    try {
      const auto number = [&] {
        const auto v = text::parse_int(value);
        if (!v || *v < 0) fail(ErrorCode::ParseError, key + " must be a non-negative integer");
        return *v;
      };
      if (key == "window") {
        c.agent.window = static_cast<Tick>(number());
        if (c.agent.window == 0) fail(ErrorCode::ParseError, "window must be positive");
      } else if (key == "threshold") {
        c.agent.threshold = static_cast<int>(number());
        if (c.agent.threshold < 1 || c.agent.threshold > 5) fail(ErrorCode::ParseError, "threshold must be 1..5");
      } else if (key == "period") {
        c.agent.period = static_cast<Tick>(number());
      } else if (key == "freshness") {
        if (value == "none") {
          c.default_freshness.reset();
        } else {
          c.default_freshness = static_cast<Tick>(number());
        }
      } else if (text::starts_with(key, "op.")) {
        c.agent.op_services[key.substr(3)] = ConceptId::parse(value);
      } else {
        fail(ErrorCode::ParseError, "unknown config key '" + key + "'");
      }
    } catch (const Error& e) {
      throw ParseError(i + 1, e.detail());
    }
  }
  return c;
}

std::string serialize_config(const HarnessConfig& c) {
  std::string out = "window=" + std::to_string(c.agent.window) + "\nthreshold=" + std::to_string(c.agent.threshold) +
                    "\nperiod=" + std::to_string(c.agent.period) + "\nfreshness=" +
                    (c.default_freshness ? std::to_string(*c.default_freshness) : "none") + "\n";
  for (const auto& [alias, svc] : c.agent.op_services) out += "op." + alias + "=" + svc.str() + "\n";
  return out;
}

// --- VirtualOrganization ----------------------------------------------------

namespace {

std::string graph_name_for(const std::string& stem) {
  if (valid_graph_name(stem)) return stem;
  if (!text::is_token(stem)) fail(ErrorCode::ParseError, "cannot derive a graph name from '" + stem + "'");
  return "custom:" + stem;
}

}  // namespace

void VirtualOrganization::load_file(const std::string& path) {
  const fs::path p(path);
  const auto ext = p.extension().string();
  const auto content = text::read_file(path);
  if (ext == ".bundle") {
    log_.append(now_, "harness", "load", "file=" + p.filename().string() + " #" + text::digest(content));
    const auto lines = text::lines(content);
    for (std::size_t i = 0; i < lines.size(); ++i) {
      const auto s = text::trim(lines[i]);
      if (s.empty() || s.front() == '#') continue;
      const fs::path child(s);
      load_file((child.is_absolute() ? child : p.parent_path() / child).string());
    }
    return;
  }
  load_content(ext.empty() ? ext : ext.substr(1), content, p.stem().string());
}

void VirtualOrganization::load_content(std::string_view ext, std::string_view content, const std::string& name) {
  if (ext == "onto") {
    auto graph = parse_graph(content, graph_name_for(name));
    const auto concepts = graph.concepts().size();
    ontology_.publish(std::move(graph));
    log_.append(now_, "harness", "load", "graph=" + graph_name_for(name) + " concepts=" + std::to_string(concepts));
    return;
  }
  if (ext == "rules") {
    const auto mapping = ontology_.graph_or_empty("mapping");
    for (auto& [id, b] : parse_stubs(content)) {
      validate_rule(b.request_rule, mapping.get());
      validate_rule(b.response_rule, mapping.get());
      stubs_[id] = std::move(b);
    }
  } else if (ext == "providers") {
    for (auto& [id, p] : parse_providers(content)) providers_[id] = std::move(p);
  } else if (ext == "registry") {
    for (const auto& r : parse_registry(content)) register_service(r);
  } else if (ext == "directory") {
    auto dir = parse_directory(content);
    for (const auto& [m, spec] : dir.metrics) catalog_.register_metric(m, spec);
    for (const auto& r : dir.resources) register_resource(r);
  } else if (ext == "roles") {
    rules_ = parse_role_rules(content);
  } else if (ext == "policy") {
    auto policy = parse_policy(content);
    if (const auto roles = ontology_.graph("roles")) validate_policy(policy, *roles);
    policy_ = std::move(policy);
  } else if (ext == "profiles") {
    for (auto& [id, p] : parse_profiles(content)) profiles_[id] = std::move(p);
  } else if (ext == "decomp") {
    for (auto& [k, v] : parse_decomposition(content)) decomposition_[k] = std::move(v);
  } else if (ext == "conf") {
    config_ = parse_config(content);
  } else {
    fail(ErrorCode::ParseError, "don't know how to load a '." + std::string(ext) + "' file");
  }
  log_.append(now_, "harness", "load", "file=" + name + "." + std::string(ext) + " #" + text::digest(content));
}

void VirtualOrganization::register_service(const ServiceRecord& record) {
  catalog_.register_service(record, *ontology_.graph_or_empty("services"), stubs_);
  log_.append(now_, "discovery", "register", "service=" + record.service_id + " index=" +
                                                 std::to_string(record.registry_index) + " stub=" + record.stub_id);
}

void VirtualOrganization::register_resource(const ResourceRecord& record) {
  catalog_.register_resource(record);
  log_.append(now_, "discovery", "register", "resource=" + record.resource_id + " index=" +
                                                 std::to_string(record.registry_index));
}

void VirtualOrganization::telemetry(const std::string& resource, const std::string& metric, const Literal& value) {
  catalog_.record_telemetry(resource, metric, value, now_);
  log_.append(now_, "discovery", "telemetry", "resource=" + resource + " " + metric + "=" + value.lexical());
}

DiscoveryResult VirtualOrganization::discover(const DiscoveryQuery& q) {
  DiscoveryQuery query = q;
  if (!query.freshness) query.freshness = config_.default_freshness;
  return vo::discover(catalog_, *ontology_.graph_or_empty("services"), query, now_, &log_);
}

AuthzResult VirtualOrganization::authorize(const std::string& user, const ConceptId& service) {
  const auto roles = ontology_.graph("roles");
  return vo::authorize(profile(user), service, policy_, rules_, roles.get(), &log_, now_);
}

const UserProfile& VirtualOrganization::profile(const std::string& user) const {
  const auto it = profiles_.find(user);
  if (it == profiles_.end()) fail(ErrorCode::DanglingReference, "unknown user '" + user + "'");
  return it->second;
}

Agent& VirtualOrganization::agent(const std::string& user) {
  profile(user);
  auto it = agents_.find(user);
  if (it == agents_.end()) it = agents_.emplace(user, Agent(user, config_.agent)).first;
  return it->second;
}

Invocation VirtualOrganization::invoke_service(const CanonicalMessage& msg) {
  const auto services = ontology_.graph_or_empty("services");
  const auto found = discover(DiscoveryQuery{msg.service, {}, std::nullopt});
  if (found.stubs.empty()) fail(ErrorCode::ProviderUnavailable, "no stub serves " + msg.service.str());
  const auto& binding = stubs_.at(found.stubs.front());
  CanonicalMessage routed = msg;
  routed.service = binding.canonical_service;
  const auto mapping = ontology_.graph_or_empty("mapping");
  const DispatchContext ctx{*mapping,
                            [this](const std::string& endpoint) -> ProviderEndpoint* {
                              const auto it = providers_.find(endpoint);
                              return it != providers_.end() && it->second.up ? &it->second : nullptr;
                            },
                            &log_, now_};
  auto response = dispatch(routed, binding, ctx);
  response.service = msg.service;
  return Invocation{std::move(response), providers_.at(binding.endpoint).latency};
}

AuthzContext VirtualOrganization::authz_context() {
  return AuthzContext{policy_, rules_, [this](const CanonicalMessage& m) { return invoke_service(m); }, nullptr,
                      &log_, now_};
}

void VirtualOrganization::schedule(Tick due, PendingEvent event) {
  queue_.emplace(std::pair{due, seq_++}, std::move(event));
}

void VirtualOrganization::drain() {
  while (!queue_.empty() && queue_.begin()->first.first <= now_) {
    const auto event = std::move(queue_.begin()->second);
    queue_.erase(queue_.begin());
    handle(event);
  }
}

void VirtualOrganization::handle(const PendingEvent& event) {
  if (event.type == PendingEvent::Type::BranchResult) {
    finish_branch(event);
    return;
  }
  const auto& d = event.delivery;
  log_.append(now_, "agent", "deliver",
              "user=" + d.user + " source=" + d.source + " kind=" + d.kind + " payload=#" + text::digest(d.payload));
  agent(d.user).deliver(d);
}

void VirtualOrganization::user_request(const std::string& user, const CanonicalMessage& request) {
  const auto& prof = profile(user);
  CanonicalMessage msg = request;
  if (msg.correlation.empty()) msg.correlation = "req-" + std::to_string(seq_);
  log_.append(now_, "harness", "request", "user=" + user + " service=" + msg.service.str() + " corr=" + msg.correlation);

  const auto& entry = agent(user).interests().record_invoke(key_for(msg), now_);
  log_.append(now_, "agent", "record", "user=" + user + " key=" + entry.key.op + " invokes=" +
                                           std::to_string(entry.invoke_times.size()) + " value=" +
                                           std::to_string(entry.value));

  if (decomposition_.contains(msg.service)) {
    start_plan(user, msg);
  } else {
    auto ctx = authz_context();
    const auto roles = ontology_.graph("roles");
    ctx.roles_graph = roles.get();
    const auto outcome = evaluate_request(prof, msg, ctx);
    const auto d = make_delivery(user, "user", outcome, now_);
    schedule(d.due, PendingEvent{PendingEvent::Type::Delivery, d, {}, 0, std::nullopt, {}});
  }
  drain();
}

void VirtualOrganization::start_plan(const std::string& user, const CanonicalMessage& msg) {
  Task task = decompose_plan(msg, decomposition_);
  log_.append(now_, "agent", "decompose",
              "task=" + task.task_id + " service=" + msg.service.str() + " branches=" +
                  std::to_string(task.children.size()));
  const auto& prof = profile(user);
  auto ctx = authz_context();
  const auto roles = ontology_.graph("roles");
  ctx.roles_graph = roles.get();
  std::vector<PendingEvent> results;
  for (std::size_t i = 0; i < task.children.size(); ++i) {
    auto& child = task.children[i];
    child.status = TaskStatus::Running;
    log_.append(now_, "agent", "assign",
                "task=" + child.task_id + " agent=" + child.assigned_agent + " service=" + child.spec.service.str());
    const auto outcome = evaluate_request(prof, child.spec, ctx);
    PendingEvent ev{PendingEvent::Type::BranchResult, {}, task.task_id, i, std::nullopt, {}};
    if (const auto* resp = std::get_if<CanonicalMessage>(&outcome.result)) {
      ev.result = *resp;
    } else if (const auto* deny = std::get_if<DenyNotice>(&outcome.result)) {
      ev.error = "denied: " + deny->reason;
    } else {
      const auto& f = std::get<Fault>(outcome.result);
      ev.error = std::string(to_string(f.code)) + ": " + f.message;
    }
    schedule(now_ + outcome.latency, std::move(ev));
  }
  const auto id = task.task_id;
  plans_[id] = Plan{user, std::move(task)};
}

void VirtualOrganization::finish_branch(const PendingEvent& event) {
  const auto it = plans_.find(event.task_id);
  if (it == plans_.end()) return;
  auto& plan = it->second;
  auto& child = plan.task.children.at(event.branch);
  child.status = event.result ? TaskStatus::Done : TaskStatus::Failed;
  child.result = event.result;
  child.error = event.error;
  log_.append(now_, "agent", "branch-done",
              "task=" + child.task_id + " status=" + std::string(to_string(child.status)));

  const bool complete = std::all_of(plan.task.children.begin(), plan.task.children.end(), [](const Task& c) {
    return c.status == TaskStatus::Done || c.status == TaskStatus::Failed;
  });
  if (!complete) return;

  RequestOutcome outcome;
  outcome.trace.decision = Decision::Permit;
  try {
    auto merged = aggregate(plan.task);
    log_.append(now_, "agent", "aggregate",
                "task=" + plan.task.task_id + " fields=" + std::to_string(merged.fields.size()));
    outcome.result = std::move(merged);
  } catch (const BranchFailedError& e) {
    log_.append(now_, "agent", "aggregate-failed", "task=" + plan.task.task_id + " " + e.detail());
    outcome.result = Fault{e.code(), e.detail() + " partial=" + to_json(e.partial())};
  }
  const auto d = make_delivery(plan.user, "plan", outcome, now_);
  plans_.erase(it);
  schedule(d.due, PendingEvent{PendingEvent::Type::Delivery, d, {}, 0, std::nullopt, {}});
}

void VirtualOrganization::advance(Tick ticks) {
  for (Tick i = 0; i < ticks; ++i) {
    ++now_;
    drain();
    std::vector<std::string> users;
    for (const auto& [u, _] : agents_) users.push_back(u);
    for (const auto& u : users) {
      auto ctx = authz_context();
      const auto roles = ontology_.graph("roles");
      ctx.roles_graph = roles.get();
      for (auto& d : tick(agents_.at(u), now_, config_.agent, profile(u), ctx)) {
        schedule(d.due, PendingEvent{PendingEvent::Type::Delivery, std::move(d), {}, 0, std::nullopt, {}});
      }
    }
    drain();
  }
}

// --- snapshot ---------------------------------------------------------------

namespace {

json fields_j(const Fields& f) { return json::parse(fields_to_json_object(f)); }
Fields fields_from_j(const json& j) { return fields_from_json_object(j.dump()); }

json key_j(const RequestKey& k) { return {{"op", k.op}, {"params", fields_j(k.params)}}; }
RequestKey key_from_j(const json& j) { return {j.at("op").get<std::string>(), fields_from_j(j.at("params"))}; }

json delivery_j(const Delivery& d) {
  return {{"due", d.due}, {"user", d.user}, {"source", d.source}, {"kind", d.kind}, {"payload", d.payload}};
}
Delivery delivery_from_j(const json& j) {
  return {j.at("due").get<Tick>(), j.at("user").get<std::string>(), j.at("source").get<std::string>(),
          j.at("kind").get<std::string>(), j.at("payload").get<std::string>()};
}

json task_j(const Task& t) {
  json children = json::array();
  for (const auto& c : t.children) children.push_back(task_j(c));
  return {{"id", t.task_id},
          {"composite", t.kind == TaskKind::Composite},
          {"spec", to_json(t.spec)},
          {"children", children},
          {"agent", t.assigned_agent},
          {"status", static_cast<int>(t.status)},
          {"result", t.result ? json(to_json(*t.result)) : json(nullptr)},
          {"error", t.error}};
}

Task task_from_j(const json& j) {
  Task t;
  t.task_id = j.at("id").get<std::string>();
  t.kind = j.at("composite").get<bool>() ? TaskKind::Composite : TaskKind::Branch;
  t.spec = canonical_from_json(j.at("spec").get<std::string>());
  for (const auto& c : j.at("children")) t.children.push_back(task_from_j(c));
  t.assigned_agent = j.at("agent").get<std::string>();
  const auto status = j.at("status").get<int>();
  if (status < 0 || status > 3) fail(ErrorCode::CorruptArchive, "bad task status");
  t.status = static_cast<TaskStatus>(status);
  if (!j.at("result").is_null()) t.result = canonical_from_json(j.at("result").get<std::string>());
  t.error = j.at("error").get<std::string>();
  return t;
}

class ArchiveWriter {
 public:
  void add(const std::string& name, const std::string& content) {
    body_ += "section " + name + " " + std::to_string(content.size()) + "\n" + content + "\n";
  }
  std::string finish() const {
    const auto head = "vo-archive " + std::to_string(kArchiveVersion) + "\n" + body_;
    return head + "end " + text::digest(head) + "\n";
  }

 private:
  std::string body_;
};

std::vector<std::pair<std::string, std::string>> read_archive(std::string_view archive) {
  const auto corrupt = [](const std::string& why) { fail(ErrorCode::CorruptArchive, why); };
  const auto nl = archive.find('\n');
  if (nl == std::string_view::npos) corrupt("missing header");
  const auto header = text::split_ws(archive.substr(0, nl));
  if (header.size() != 2 || header[0] != "vo-archive") corrupt("not a VO archive");
  const auto version = text::parse_int(header[1]);
  if (!version) corrupt("bad version field");
  if (*version != kArchiveVersion) {
    fail(ErrorCode::VersionMismatch, "archive version " + header[1] + ", expected " + std::to_string(kArchiveVersion));
  }
  std::vector<std::pair<std::string, std::string>> sections;
  std::size_t pos = nl + 1;
  while (true) {
    const auto end = archive.find('\n', pos);
    if (end == std::string_view::npos) corrupt("truncated archive");
    const auto parts = text::split_ws(archive.substr(pos, end - pos));
    if (parts.size() == 2 && parts[0] == "end") {
      if (parts[1] != text::digest(archive.substr(0, pos))) corrupt("checksum mismatch");
      if (end + 1 != archive.size()) corrupt("trailing bytes after end marker");
      return sections;
    }
    const auto len = parts.size() == 3 && parts[0] == "section" ? text::parse_int(parts[2]) : std::nullopt;
    if (!len || *len < 0) corrupt("bad section header");
    const auto start = end + 1;
    const auto size = static_cast<std::size_t>(*len);
    if (start + size + 1 > archive.size() || archive[start + size] != '\n') corrupt("truncated section " + parts[1]);
    sections.emplace_back(parts[1], std::string(archive.substr(start, size)));
    pos = start + size + 1;
  }
}

}  // namespace

std::string VirtualOrganization::snapshot() const {
  ArchiveWriter w;
  w.add("clock", "now=" + std::to_string(now_) + "\nseq=" + std::to_string(seq_) + "\n");
  w.add("config", serialize_config(config_));
  for (const auto& [name, g] : ontology_.snapshot()) w.add("graph:" + name, serialize_graph(*g));
  w.add("stubs", serialize_stubs(stubs_));
  w.add("providers", serialize_providers(providers_));
  w.add("registry", serialize_registry(catalog_));
  w.add("directory", serialize_directory(catalog_));
  w.add("roles", serialize_role_rules(rules_));
  w.add("policy", serialize_policy(policy_));
  w.add("profiles", serialize_profiles(profiles_));
  w.add("decomposition", serialize_decomposition(decomposition_));

  json agents = json::array();
  for (const auto& [user, a] : agents_) {
    json interests = json::array();
    for (const auto& [k, e] : a.interests().entries()) interests.push_back({{"key", key_j(k)}, {"times", e.invoke_times}});
    json prefs = json::array();
    for (const auto& k : a.preferences().entries) prefs.push_back(key_j(k));
    json inbox = json::array();
    for (const auto& d : a.inbox()) inbox.push_back(delivery_j(d));
    agents.push_back({{"user", user},
                      {"window", a.interests().window()},
                      {"interests", interests},
                      {"threshold", a.preferences().threshold},
                      {"period", a.preferences().period},
                      {"prefs", prefs},
                      {"inbox", inbox}});
  }
  w.add("agents", agents.dump());

  json plans = json::array();
  for (const auto& [id, p] : plans_) plans.push_back({{"user", p.user}, {"task", task_j(p.task)}});
  w.add("plans", plans.dump());

  json queue = json::array();
  for (const auto& [key, ev] : queue_) {
    queue.push_back({{"due", key.first},
                     {"seq", key.second},
                     {"branch_result", ev.type == PendingEvent::Type::BranchResult},
                     {"delivery", delivery_j(ev.delivery)},
                     {"task", ev.task_id},
                     {"branch", ev.branch},
                     {"result", ev.result ? json(to_json(*ev.result)) : json(nullptr)},
                     {"error", ev.error}});
  }
  w.add("queue", queue.dump());
  w.add("log", log_.serialize());
  return w.finish();
}

VirtualOrganization VirtualOrganization::restore(std::string_view archive) {
  const auto sections = read_archive(archive);
  VirtualOrganization vo;
  try {
    std::map<std::string, std::string> by_name;
    std::vector<OntologyGraph> graphs;
    for (const auto& [name, content] : sections) {
      if (text::starts_with(name, "graph:")) {
        graphs.push_back(parse_graph(content, name.substr(6)));
      } else {
        by_name[name] = content;
      }
    }
    for (const auto* required : {"clock", "config", "stubs", "providers", "registry", "directory", "roles", "policy",
                                 "profiles", "decomposition", "agents", "plans", "queue", "log"}) {
      if (!by_name.contains(required)) fail(ErrorCode::CorruptArchive, std::string("missing section ") + required);
    }

    for (const auto& line : text::lines(by_name["clock"])) {
      const auto kv = text::split_kv(line);
      const auto v = kv ? text::parse_int(kv->second) : std::nullopt;
      if (!v || *v < 0) fail(ErrorCode::CorruptArchive, "bad clock entry");
      if (kv->first == "now") vo.now_ = static_cast<Tick>(*v);
      if (kv->first == "seq") vo.seq_ = static_cast<std::uint64_t>(*v);
    }
    vo.config_ = parse_config(by_name["config"]);
    vo.ontology_.publish_all(std::move(graphs));
    vo.stubs_ = parse_stubs(by_name["stubs"]);
    vo.providers_ = parse_providers(by_name["providers"]);
    const auto services = vo.ontology_.graph_or_empty("services");
    for (const auto& r : parse_registry(by_name["registry"])) vo.catalog_.register_service(r, *services, vo.stubs_);
    auto dir = parse_directory(by_name["directory"]);
    for (const auto& [m, spec] : dir.metrics) vo.catalog_.register_metric(m, spec);
    for (const auto& r : dir.resources) vo.catalog_.register_resource(r);
    vo.rules_ = parse_role_rules(by_name["roles"]);
    vo.policy_ = parse_policy(by_name["policy"]);
    vo.profiles_ = parse_profiles(by_name["profiles"]);
    vo.decomposition_ = parse_decomposition(by_name["decomposition"]);

    for (const auto& a : json::parse(by_name["agents"])) {
      const auto user = a.at("user").get<std::string>();
      AgentConfig cfg = vo.config_.agent;
      cfg.window = a.at("window").get<Tick>();
      Agent agent(user, cfg);
      for (const auto& e : a.at("interests")) {
        const auto key = key_from_j(e.at("key"));
        for (const auto t : e.at("times").get<std::vector<Tick>>()) agent.interests().record_invoke(key, t);
      }
      PreferenceList prefs{a.at("threshold").get<int>(), a.at("period").get<Tick>(), {}};
      for (const auto& k : a.at("prefs")) prefs.entries.push_back(key_from_j(k));
      agent.set_preferences(std::move(prefs));
      for (const auto& d : a.at("inbox")) agent.deliver(delivery_from_j(d));
      vo.agents_.emplace(user, std::move(agent));
    }
    for (const auto& p : json::parse(by_name["plans"])) {
      auto task = task_from_j(p.at("task"));
      const auto id = task.task_id;
      vo.plans_[id] = Plan{p.at("user").get<std::string>(), std::move(task)};
    }
    for (const auto& q : json::parse(by_name["queue"])) {
      PendingEvent ev;
      ev.type = q.at("branch_result").get<bool>() ? PendingEvent::Type::BranchResult : PendingEvent::Type::Delivery;
      ev.delivery = delivery_from_j(q.at("delivery"));
      ev.task_id = q.at("task").get<std::string>();
      ev.branch = q.at("branch").get<std::size_t>();
      if (!q.at("result").is_null()) ev.result = canonical_from_json(q.at("result").get<std::string>());
      ev.error = q.at("error").get<std::string>();
      vo.queue_.emplace(std::pair{q.at("due").get<Tick>(), q.at("seq").get<std::uint64_t>()}, std::move(ev));
    }
    vo.log_ = EventLog::parse(by_name["log"]);
  } catch (const json::exception& e) {
    fail(ErrorCode::CorruptArchive, e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::CorruptArchive) throw;
    fail(ErrorCode::CorruptArchive, e.what());
  }
  return vo;
}

// --- scenarios --------------------------------------------------------------

namespace {

const std::set<std::string>& scenario_verbs() {
  static const std::set<std::string> v = {"load",         "register-service", "register-resource", "telemetry",
                                          "user-request", "advance",          "expect"};
  return v;
}

[[noreturn]] void script_error(std::size_t index, const ScenarioEvent& ev, const std::string& why) {
  fail(ErrorCode::ScriptError,
       "event " + std::to_string(index) + " (line " + std::to_string(ev.line) + ", " + ev.verb + "): " + why);
}

Tick parse_ticks(const std::string& s) {
  const auto v = text::parse_int(s);
  if (!v || *v < 0) fail(ErrorCode::ParseError, "expected a tick count, got '" + s + "'");
  return static_cast<Tick>(*v);
}

bool check(std::size_t actual, Comparator cmp, std::size_t expected) {
  return compare(Literal::integer(static_cast<long long>(actual)), cmp,
                 Literal::integer(static_cast<long long>(expected)));
}

AssertionResult evaluate_expect(const VirtualOrganization& vo, const std::string& body) {
  auto parts = text::split_ws(body);
  if (parts.size() < 3) fail(ErrorCode::ParseError, "expect needs a subject, comparator and value");
  const auto cmp = parse_comparator(parts[parts.size() - 2]);
  const auto expected = text::parse_int(parts.back());
  if (!cmp || !expected || *expected < 0) fail(ErrorCode::ParseError, "expect must end with <cmp> <count>");
  const std::vector<std::string> args(parts.begin() + 1, parts.end() - 2);
  std::map<std::string, std::string> opts;
  std::vector<std::string> positional;
  for (const auto& a : args) {
    if (const auto kv = text::split_kv(a)) {
      opts[kv->first] = kv->second;
    } else {
      positional.push_back(a);
    }
  }

  std::size_t actual = 0;
  const auto& what = parts[0];
  if (what == "count") {
    if (positional.size() != 1) fail(ErrorCode::ParseError, "expect count <kind> [module=..] [match=..] <cmp> <n>");
    for (const auto& r : vo.log().records()) {
      if (r.kind != positional[0]) continue;
      if (opts.contains("module") && r.module != opts["module"]) continue;
      if (opts.contains("match") && r.summary.find(opts["match"]) == std::string::npos) continue;
      ++actual;
    }
  } else if (what == "inbox") {
    if (positional.size() != 1) fail(ErrorCode::ParseError, "expect inbox <user> [source=..] [kind=..] <cmp> <n>");
    const auto it = vo.agents().find(positional[0]);
    if (it != vo.agents().end()) {
      for (const auto& d : it->second.inbox()) {
        if (opts.contains("source") && d.source != opts["source"]) continue;
        if (opts.contains("kind") && d.kind != opts["kind"]) continue;
        ++actual;
      }
    }
  } else if (what == "prefs") {
    if (positional.size() != 1) fail(ErrorCode::ParseError, "expect prefs <user> <cmp> <n>");
    const auto it = vo.agents().find(positional[0]);
    actual = it == vo.agents().end() ? 0 : it->second.preferences().entries.size();
  } else if (what == "now") {
    actual = vo.now();
  } else if (what == "pending") {
    actual = vo.queue().size();
  } else {
    fail(ErrorCode::ParseError, "unknown expectation '" + what + "'");
  }
  AssertionResult r;
  r.text = body;
  r.actual = std::to_string(actual);
  r.passed = check(actual, *cmp, static_cast<std::size_t>(*expected));
  return r;
}

}  // namespace

ScenarioScript parse_scenario(std::string_view content, std::string base_dir) {
  ScenarioScript script;
  script.base_dir = std::move(base_dir);
  const auto lines = text::lines(content);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto s = text::trim(lines[i]);
    if (s.empty() || s.front() == '#') continue;
    const auto sp = s.find_first_of(" \t");
    ScenarioEvent ev{i + 1, std::string(s.substr(0, sp)),
                     sp == std::string_view::npos ? std::string() : std::string(text::trim(s.substr(sp)))};
    if (!scenario_verbs().contains(ev.verb)) script_error(script.events.size(), ev, "unknown verb");
    script.events.push_back(std::move(ev));
  }
  return script;
}

ScenarioScript load_scenario(const std::string& path) {
  return parse_scenario(text::read_file(path), fs::path(path).parent_path().string());
}

void apply_event(VirtualOrganization& vo, const ScenarioScript& script, std::size_t index,
                 std::vector<AssertionResult>& report) {
  const auto& ev = script.events.at(index);
  try {
    if (ev.verb == "load") {
      const fs::path p(ev.rest);
      vo.load_file((p.is_absolute() || script.base_dir.empty() ? p : fs::path(script.base_dir) / p).string());
    } else if (ev.verb == "register-service") {
      vo.register_service(parse_service_line("service " + ev.rest));
    } else if (ev.verb == "register-resource") {
      vo.register_resource(parse_resource_line("resource " + ev.rest));
    } else if (ev.verb == "telemetry") {
      const auto parts = text::split_ws(ev.rest);
      const auto kv = parts.size() == 2 ? text::split_kv(parts[1]) : std::nullopt;
      if (!kv) fail(ErrorCode::ParseError, "expected 'telemetry <resource> <metric>=<value>'");
      vo.telemetry(parts[0], kv->first, Literal::infer(kv->second));
    } else if (ev.verb == "user-request") {
      const auto sp = ev.rest.find_first_of(" \t");
      if (sp == std::string::npos) fail(ErrorCode::ParseError, "expected 'user-request <user> <message json>'");
      vo.user_request(ev.rest.substr(0, sp), canonical_from_json(text::trim(std::string_view(ev.rest).substr(sp))));
    } else if (ev.verb == "advance") {
      vo.advance(parse_ticks(ev.rest));
    } else if (ev.verb == "expect") {
      auto r = evaluate_expect(vo, ev.rest);
      r.event = index;
      report.push_back(std::move(r));
    } else {
      fail(ErrorCode::ParseError, "unknown verb");
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ScriptError) throw;
    script_error(index, ev, e.what());
  }
}

bool ScenarioResult::passed() const {
  return std::all_of(report.begin(), report.end(), [](const AssertionResult& r) { return r.passed; });
}

ScenarioResult run_scenario(const ScenarioScript& script, VirtualOrganization& vo, std::size_t from, std::size_t to) {
  ScenarioResult result;
  to = std::min(to, script.events.size());
  for (std::size_t i = from; i < to; ++i) apply_event(vo, script, i, result.report);
  result.final_snapshot = vo.snapshot();
  result.log = vo.log();
  return result;
}

ScenarioResult run_scenario(const ScenarioScript& script) {
  VirtualOrganization vo;
  return run_scenario(script, vo, 0, script.events.size());
}

}  // namespace vo
