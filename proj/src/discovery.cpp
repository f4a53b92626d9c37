#include "vo/discovery.hpp"

#include <algorithm>

#include "vo/error.hpp"
#include "vo/text.hpp"

namespace vo {

namespace {

const std::map<std::string, MetricSpec>& builtin_metrics() {
  static const std::map<std::string, MetricSpec> m = {
      {std::string(kCpuUtilization), {LiteralKind::Decimal, "percent"}},
      {std::string(kMemoryFree), {LiteralKind::Decimal, "MB"}},
      {std::string(kBandwidth), {LiteralKind::Decimal, "Mbps"}},
  };
  return m;
}

bool numeric(LiteralKind k) { return k == LiteralKind::Integer || k == LiteralKind::Decimal; }

bool same_family(LiteralKind a, LiteralKind b) { return a == b || (numeric(a) && numeric(b)); }

// Stores readings under the metric's declared kind and unit.
Literal normalize(const Literal& value, const MetricSpec& spec) {
  if (numeric(spec.kind) && numeric(value.kind())) return Literal(spec.kind, value.lexical(), spec.unit);
  return Literal(value.kind(), value.lexical(), spec.unit);
}

}  // namespace

Catalog::Catalog() : metrics_(builtin_metrics()) {}

void Catalog::register_metric(const std::string& name, const MetricSpec& spec) {
  if (!text::is_token(name)) fail(ErrorCode::InvalidRecord, "invalid metric name '" + name + "'");
  const auto [it, fresh] = metrics_.emplace(name, spec);
  if (!fresh && it->second != spec) fail(ErrorCode::KindMismatch, "metric " + name + " already registered differently");
}

void Catalog::check_metric(const std::string& name, const Literal& value) {
  auto it = metrics_.find(name);
  if (it == metrics_.end()) {
    register_metric(name, MetricSpec{value.kind(), value.unit()});
    it = metrics_.find(name);
  }
  const auto& spec = it->second;
  if (!same_family(spec.kind, value.kind())) {
    fail(ErrorCode::KindMismatch, "metric " + name + " expects " + std::string(to_string(spec.kind)));
  }
  if (value.unit() && value.unit() != spec.unit) {
    fail(ErrorCode::KindMismatch, "metric " + name + " has unit " + spec.unit.value_or("(none)"));
  }
  if (name == kCpuUtilization && (value.as_number() < 0.0 || value.as_number() > 100.0)) {
    fail(ErrorCode::InvalidRecord, "cpu_utilization " + value.lexical() + " outside [0,100]");
  }
}

void Catalog::register_service(const ServiceRecord& record, const OntologyGraph& services,
                               const std::map<std::string, StubBinding>& stubs) {
  if (!text::is_token(record.service_id)) fail(ErrorCode::InvalidRecord, "invalid service id '" + record.service_id + "'");
  if (record.capabilities.empty()) fail(ErrorCode::InvalidRecord, record.service_id + " has no capabilities");
  if (record.registry_index < 0) fail(ErrorCode::InvalidRecord, record.service_id + " has a negative index");
  for (const auto& c : record.capabilities) {
    if (!services.declared(c)) fail(ErrorCode::UnknownConcept, c.str() + " is not a declared service concept");
  }
  const auto stub = stubs.find(record.stub_id);
  if (stub == stubs.end()) fail(ErrorCode::DanglingReference, record.service_id + ": unknown stub " + record.stub_id);
  const auto& served = stub->second.canonical_service;
  const bool related = services.declared(served) &&
                       std::any_of(record.capabilities.begin(), record.capabilities.end(), [&](const ConceptId& c) {
                         return services.subsumes(c, served) || services.subsumes(served, c);
                       });
  if (!related) {
    fail(ErrorCode::DanglingReference,
         record.service_id + ": stub " + record.stub_id + " serves " + served.str() + ", unrelated to its capabilities");
  }
  for (const auto& [id, other] : services_) {
    if (id != record.service_id && other.registry_index == record.registry_index) {
      fail(ErrorCode::DuplicateIndex, "index " + std::to_string(record.registry_index) + " already held by " + id);
    }
  }

  std::erase_if(associations_, [&](const CapabilityAssociation& a) { return a.service_id == record.service_id; });
  for (const auto& c : record.capabilities) associations_.insert({c, record.service_id, record.stub_id});
  services_[record.service_id] = record;
}

void Catalog::register_resource(const ResourceRecord& record) {
  if (!text::is_token(record.resource_id)) {
    fail(ErrorCode::InvalidRecord, "invalid resource id '" + record.resource_id + "'");
  }
  const auto svc = std::find_if(services_.begin(), services_.end(),
                                [&](const auto& kv) { return kv.second.registry_index == record.registry_index; });
  if (svc == services_.end()) {
    fail(ErrorCode::DanglingReference,
         record.resource_id + ": no service at registry index " + std::to_string(record.registry_index));
  }
  if (svc->first != record.service_name) {
    fail(ErrorCode::DanglingReference, record.resource_id + ": index " + std::to_string(record.registry_index) +
                                           " belongs to " + svc->first + ", not " + record.service_name);
  }
  ResourceRecord stored = record;
  for (auto& [name, value] : stored.metrics) {
    check_metric(name, value);
    value = normalize(value, metrics_.at(name));
  }
  resources_[record.resource_id] = std::move(stored);
}

void Catalog::record_telemetry(const std::string& resource_id, const std::string& metric, const Literal& value,
                               Tick now) {
  const auto it = resources_.find(resource_id);
  if (it == resources_.end()) fail(ErrorCode::DanglingReference, "unknown resource " + resource_id);
  check_metric(metric, value);
  it->second.metrics[metric] = normalize(value, metrics_.at(metric));
  it->second.observed_at = now;
}

std::vector<ServiceRecord> Catalog::services_by_index() const {
  std::vector<ServiceRecord> out;
  for (const auto& [_, r] : services_) out.push_back(r);
  std::sort(out.begin(), out.end(),
            [](const ServiceRecord& a, const ServiceRecord& b) { return a.registry_index < b.registry_index; });
  return out;
}

std::vector<ServiceRecord> match_capability(const Catalog& catalog, const OntologyGraph& services,
                                            const DiscoveryQuery& q) {
  if (!services.declared(q.capability)) fail(ErrorCode::UnknownConcept, q.capability.str() + " is not declared");
  const auto wanted = services.descendants(q.capability);
  std::vector<ServiceRecord> out;
  for (const auto& r : catalog.services_by_index()) {
    const bool hit = std::any_of(r.capabilities.begin(), r.capabilities.end(),
                                 [&](const ConceptId& c) { return c == q.capability || wanted.contains(c); });
    if (hit) out.push_back(r);
  }
  return out;
}

std::vector<ServiceRecord> filter_by_resources(const Catalog& catalog, const std::vector<ServiceRecord>& services,
                                               const DiscoveryQuery& q, Tick now) {
  for (const auto& c : q.constraints) {
    const auto spec = catalog.metrics().find(c.name);
    if (spec == catalog.metrics().end()) fail(ErrorCode::UnknownMetric, "metric '" + c.name + "' was never registered");
    if (!kinds_compatible(spec->second.kind, c.threshold.kind(), c.cmp)) {
      fail(ErrorCode::KindMismatch, "threshold " + c.threshold.encode() + " does not fit metric " + c.name);
    }
  }
  if (q.constraints.empty() && !q.freshness) return services;

  const auto satisfied = [&](const ResourceRecord& r) {
    if (q.freshness && now > r.observed_at && now - r.observed_at > *q.freshness) return false;
    return std::all_of(q.constraints.begin(), q.constraints.end(), [&](const Condition& c) {
      const auto m = r.metrics.find(c.name);
      return m != r.metrics.end() && compare(m->second, c.cmp, c.threshold);
    });
  };
  std::vector<ServiceRecord> out;
  for (const auto& s : services) {
    const bool keep = std::any_of(catalog.resources().begin(), catalog.resources().end(), [&](const auto& kv) {
      const auto& r = kv.second;
      return r.registry_index == s.registry_index && r.service_name == s.service_id && satisfied(r);
    });
    if (keep) out.push_back(s);
  }
  return out;
}

DiscoveryResult discover(const Catalog& catalog, const OntologyGraph& services, const DiscoveryQuery& q, Tick now,
                         EventLog* log) {
  const auto matched = match_capability(catalog, services, q);
  const auto kept = filter_by_resources(catalog, matched, q, now);
  DiscoveryResult result;
  result.matched = matched.size();
  result.filtered = kept.size();
  for (const auto& s : kept) {
    if (std::find(result.stubs.begin(), result.stubs.end(), s.stub_id) == result.stubs.end()) {
      result.stubs.push_back(s.stub_id);
    }
  }
  if (log) {
    std::string where;
    for (const auto& c : q.constraints) {
      where += (where.empty() ? "" : ",") + c.name + std::string(to_string(c.cmp)) + c.threshold.lexical();
    }
    log->append(now, "discovery", "discover",
                "cap=" + q.capability.str() + " where=" + (where.empty() ? "-" : where) +
                    " matched=" + std::to_string(result.matched) + " filtered=" + std::to_string(result.filtered) +
                    " stubs=" + (result.stubs.empty() ? "-" : text::join(result.stubs, ",")));
  }
  return result;
}

DiscoveryQuery make_query(std::string_view capability, const std::vector<std::string>& where,
                          std::optional<Tick> freshness) {
  DiscoveryQuery q;
  q.capability = ConceptId::parse(capability);
  for (const auto& w : where) q.constraints.push_back(parse_condition(w));
  q.freshness = freshness;
  return q;
}

// --- files ------------------------------------------------------------------

namespace {

std::int64_t require_int(const std::string& key, const std::string& value) {
  const auto v = text::parse_int(value);
  if (!v) fail(ErrorCode::ParseError, key + " must be an integer, got '" + value + "'");
  return *v;
}

const std::map<std::string, std::string>& short_metric_names() {
  static const std::map<std::string, std::string> m = {
      {"cpu", std::string(kCpuUtilization)}, {"mem", std::string(kMemoryFree)}, {"bw", std::string(kBandwidth)}};
  return m;
}

}  // namespace

ServiceRecord parse_service_line(std::string_view line) {
  std::string_view body = text::trim(line);
  std::string desc;
  if (const auto d = body.find(" desc="); d != std::string_view::npos) {
    desc = std::string(body.substr(d + 6));
    body = body.substr(0, d);
  }
  const auto parts = text::split_ws(body);
  if (parts.size() < 2 || parts[0] != "service") fail(ErrorCode::ParseError, "expected 'service <id> ...'");
  ServiceRecord r;
  r.service_id = parts[1];
  r.description = desc;
  bool have_index = false;
  for (std::size_t i = 2; i < parts.size(); ++i) {
    const auto kv = text::split_kv(parts[i]);
    if (!kv) fail(ErrorCode::ParseError, "expected key=value, got '" + parts[i] + "'");
    const auto& [k, v] = *kv;
    if (k == "caps") {
      for (const auto& c : text::split(v, ',')) r.capabilities.insert(ConceptId::parse(c));
    } else if (k == "stub") {
      r.stub_id = v;
    } else if (k == "provider") {
      r.provider = v;
    } else if (k == "index") {
      r.registry_index = require_int(k, v);
      have_index = true;
    } else {
      fail(ErrorCode::ParseError, "unknown service attribute '" + k + "'");
    }
  }
  if (!have_index || r.stub_id.empty() || r.capabilities.empty()) {
    fail(ErrorCode::ParseError, "service line needs caps=, stub= and index=");
  }
  return r;
}

std::string render_service_line(const ServiceRecord& r) {
  std::vector<std::string> caps;
  for (const auto& c : r.capabilities) caps.push_back(c.str());
  std::string out = "service " + r.service_id + " caps=" + text::join(caps, ",") + " stub=" + r.stub_id +
                    " provider=" + r.provider + " index=" + std::to_string(r.registry_index);
  if (!r.description.empty()) out += " desc=" + r.description;
  return out;
}

ResourceRecord parse_resource_line(std::string_view line) {
  const auto parts = text::split_ws(line);
  if (parts.size() < 2 || parts[0] != "resource") fail(ErrorCode::ParseError, "expected 'resource <id> ...'");
  ResourceRecord r;
  r.resource_id = parts[1];
  bool have_index = false;
  for (std::size_t i = 2; i < parts.size(); ++i) {
    const auto kv = text::split_kv(parts[i]);
    if (!kv) fail(ErrorCode::ParseError, "expected key=value, got '" + parts[i] + "'");
    const auto& [k, v] = *kv;
    if (k == "service") {
      r.service_name = v;
    } else if (k == "index") {
      r.registry_index = require_int(k, v);
      have_index = true;
    } else if (k == "at") {
      const auto t = require_int(k, v);
      if (t < 0) fail(ErrorCode::ParseError, "at= must be non-negative");
      r.observed_at = static_cast<Tick>(t);
    } else if (const auto m = short_metric_names().find(k); m != short_metric_names().end()) {
      r.metrics[m->second] = Literal::infer(v);
    } else if (text::starts_with(k, "m.")) {
      r.metrics[k.substr(2)] = Literal::infer(v);
    } else {
      fail(ErrorCode::ParseError, "unknown resource attribute '" + k + "'");
    }
  }
  if (!have_index || r.service_name.empty()) fail(ErrorCode::ParseError, "resource line needs service= and index=");
  return r;
}

std::string render_resource_line(const ResourceRecord& r) {
  std::string out = "resource " + r.resource_id + " service=" + r.service_name + " index=" +
                    std::to_string(r.registry_index);
  for (const auto& [short_name, full] : short_metric_names()) {
    if (const auto it = r.metrics.find(full); it != r.metrics.end()) out += " " + short_name + "=" + it->second.lexical();
  }
  for (const auto& [name, value] : r.metrics) {
    const bool builtin = std::any_of(short_metric_names().begin(), short_metric_names().end(),
                                     [&](const auto& kv) { return kv.second == name; });
    if (!builtin) out += " m." + name + "=" + value.encode();
  }
  out += " at=" + std::to_string(r.observed_at);
  return out;
}

std::vector<ServiceRecord> parse_registry(std::string_view content) {
  std::vector<ServiceRecord> out;
  const auto lines = text::lines(content);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto s = text::trim(lines[i]);
    if (s.empty() || s.front() == '#') continue;
    try {
      out.push_back(parse_service_line(s));
    } catch (const Error& e) {
      throw ParseError(i + 1, e.detail());
    }
  }
  return out;
}

DirectoryFile parse_directory(std::string_view content) {
  DirectoryFile out;
  const auto lines = text::lines(content);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto s = text::trim(lines[i]);
    if (s.empty() || s.front() == '#') continue;
    try {
      const auto parts = text::split_ws(s);
      if (parts[0] == "metric") {
        if (parts.size() != 3) fail(ErrorCode::ParseError, "expected 'metric <name> <kind>[@<unit>]'");
        const auto at = parts[2].find('@');
        const auto kind = parse_literal_kind(parts[2].substr(0, at));
        if (!kind) fail(ErrorCode::ParseError, "unknown metric kind in '" + parts[2] + "'");
        std::optional<std::string> unit;
        if (at != std::string::npos) unit = parts[2].substr(at + 1);
        out.metrics[parts[1]] = MetricSpec{*kind, unit};
      } else {
        out.resources.push_back(parse_resource_line(s));
      }
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(i + 1, e.detail());
    }
  }
  return out;
}

std::string serialize_registry(const Catalog& catalog) {
  std::string out;
  for (const auto& r : catalog.services_by_index()) out += render_service_line(r) + "\n";
  return out;
}

std::string serialize_directory(const Catalog& catalog) {
  std::string out;
  for (const auto& [name, spec] : catalog.metrics()) {
    if (builtin_metrics().contains(name)) continue;
    out += "metric " + name + " " + std::string(to_string(spec.kind)) + (spec.unit ? "@" + *spec.unit : "") + "\n";
  }
  for (const auto& [_, r] : catalog.resources()) out += render_resource_line(r) + "\n";
  return out;
}

}  // namespace vo
