#include "vo/reconciliation.hpp"

#include <set>

#include <json.hpp>

#include "vo/error.hpp"
#include "vo/text.hpp"

namespace vo {

using nlohmann::json;

// --- JSON -------------------------------------------------------------------

namespace {

Literal literal_from_json(const json& v) {
  if (v.is_string()) return Literal::infer(v.get<std::string>());
  if (v.is_boolean()) return Literal::boolean(v.get<bool>());
  if (v.is_number_integer()) return Literal::integer(v.get<long long>());
  if (v.is_number()) return Literal::infer(v.dump());
  fail(ErrorCode::InvalidLiteral, "unsupported field value " + v.dump());
}

json fields_json(const Fields& fields) {
  json obj = json::object();
  for (const auto& [k, v] : fields) obj[k] = v.encode();
  return obj;
}

Fields fields_from(const json& obj) {
  if (!obj.is_object()) fail(ErrorCode::ParseError, "fields must be a JSON object");
  Fields out;
  for (const auto& [k, v] : obj.items()) out.emplace(k, literal_from_json(v));
  return out;
}

json parse_json(std::string_view s) {
  try {
    return json::parse(s);
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, std::string("bad JSON: ") + e.what());
  }
}

std::string str_or(const json& obj, const char* key, std::string def = {}) {
  const auto it = obj.find(key);
  if (it == obj.end()) return def;
  if (!it->is_string()) fail(ErrorCode::ParseError, std::string("'") + key + "' must be a string");
  return it->get<std::string>();
}

}  // namespace

std::string to_json(const CanonicalMessage& msg) {
  json j{{"service", msg.service.str()}, {"correlation", msg.correlation}, {"fields", fields_json(msg.fields)}};
  return j.dump();
}

std::string to_json(const ProviderMessage& msg) {
  json j{{"dialect", msg.dialect},
         {"operation", msg.operation},
         {"correlation", msg.correlation},
         {"fields", fields_json(msg.fields)}};
  return j.dump();
}

CanonicalMessage canonical_from_json(std::string_view s) {
  const auto j = parse_json(s);
  if (!j.is_object() || !j.contains("service")) fail(ErrorCode::ParseError, "message needs a 'service' key");
  return CanonicalMessage{ConceptId::parse(str_or(j, "service")), str_or(j, "correlation"),
                          j.contains("fields") ? fields_from(j["fields"]) : Fields{}};
}

ProviderMessage provider_from_json(std::string_view s) {
  const auto j = parse_json(s);
  if (!j.is_object() || !j.contains("dialect")) fail(ErrorCode::ParseError, "message needs a 'dialect' key");
  return ProviderMessage{str_or(j, "dialect"), str_or(j, "operation"), str_or(j, "correlation"),
                         j.contains("fields") ? fields_from(j["fields"]) : Fields{}};
}

Fields fields_from_json_object(std::string_view s) { return fields_from(parse_json(s)); }

std::string fields_to_json_object(const Fields& fields) { return fields_json(fields).dump(); }

// --- rules ------------------------------------------------------------------

std::string render(const Directive& d) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, directive::Rename>) {
          return "rename " + v.src + " -> " + v.dst;
        } else if constexpr (std::is_same_v<T, directive::Const>) {
          return "const " + v.dst + " = " + v.value.encode();
        } else if constexpr (std::is_same_v<T, directive::ConceptMap>) {
          return "map " + v.src + " -> " + v.dst + " via " + (v.inverse ? "^" : "") + v.predicate.str();
        } else {
          return "drop " + v.src;
        }
      },
      d);
}

namespace {

std::optional<std::string> source_of(const Directive& d) {
  if (const auto* r = std::get_if<directive::Rename>(&d)) return r->src;
  if (const auto* m = std::get_if<directive::ConceptMap>(&d)) return m->src;
  if (const auto* x = std::get_if<directive::Drop>(&d)) return x->src;
  return std::nullopt;
}

std::optional<std::string> destination_of(const Directive& d) {
  if (const auto* r = std::get_if<directive::Rename>(&d)) return r->dst;
  if (const auto* m = std::get_if<directive::ConceptMap>(&d)) return m->dst;
  if (const auto* c = std::get_if<directive::Const>(&d)) return c->dst;
  return std::nullopt;
}

bool one_to_one(const OntologyGraph& mapping, const ConceptId& predicate) {
  std::set<ConceptId> subjects;
  std::set<Node> objects;
  for (const auto& t : mapping.triples()) {
    if (t.predicate != predicate) continue;
    if (!subjects.insert(t.subject).second || !objects.insert(t.object).second) return false;
  }
  return true;
}

Literal map_value(const Literal& value, const directive::ConceptMap& m, const OntologyGraph& mapping) {
  if (!m.inverse) {
    const auto subject = value.kind() == LiteralKind::Text ? ConceptId::try_parse(value.lexical()) : std::nullopt;
    const auto objects = subject ? mapping.objects(*subject, m.predicate) : std::vector<Node>{};
    if (objects.empty()) {
      fail(ErrorCode::UnmappedTerm, "no " + m.predicate.str() + " entry for " + value.encode());
    }
    if (const auto* id = std::get_if<ConceptId>(&objects.front())) return Literal::text(id->str());
    return std::get<Literal>(objects.front());
  }
  auto subjects = mapping.subjects(m.predicate, Node{value});
  if (subjects.empty() && value.kind() == LiteralKind::Text) {
    if (auto id = ConceptId::try_parse(value.lexical())) subjects = mapping.subjects(m.predicate, Node{*id});
  }
  if (subjects.empty()) fail(ErrorCode::UnmappedTerm, "no " + m.predicate.str() + " entry maps to " + value.encode());
  return Literal::text(subjects.front().str());
}

}  // namespace

void validate_rule(const MappingRule& rule, const OntologyGraph* mapping) {
  std::set<std::string> written;
  std::set<std::string> read;
  for (const auto& d : rule.directives) {
    if (auto dst = destination_of(d)) {
      if (!written.insert(*dst).second) {
        fail(ErrorCode::InvalidRule, rule.stub_id + ": field '" + *dst + "' written twice");
      }
    }
    if (!rule.bijective) continue;
    if (std::holds_alternative<directive::Drop>(d) || std::holds_alternative<directive::Const>(d)) {
      fail(ErrorCode::InvalidRule, rule.stub_id + ": bijective rule cannot use '" + render(d) + "'");
    }
    if (!read.insert(*source_of(d)).second) {
      fail(ErrorCode::InvalidRule, rule.stub_id + ": bijective rule reads '" + *source_of(d) + "' twice");
    }
    if (const auto* m = std::get_if<directive::ConceptMap>(&d); m && mapping && !one_to_one(*mapping, m->predicate)) {
      fail(ErrorCode::InvalidRule, rule.stub_id + ": " + m->predicate.str() + " is not invertible");
    }
  }
  if (rule.bijective && rule.passthrough) {
    fail(ErrorCode::InvalidRule, rule.stub_id + ": bijective rules cannot pass fields through");
  }
}

MappingRule invert(const MappingRule& rule) {
  if (!rule.bijective) fail(ErrorCode::InvalidRule, rule.stub_id + ": only bijective rules can be inverted");
  MappingRule out = rule;
  out.directives.clear();
  for (const auto& d : rule.directives) {
    if (const auto* r = std::get_if<directive::Rename>(&d)) {
      out.directives.emplace_back(directive::Rename{r->dst, r->src});
    } else if (const auto* m = std::get_if<directive::ConceptMap>(&d)) {
      out.directives.emplace_back(directive::ConceptMap{m->dst, m->src, m->predicate, !m->inverse});
    } else {
      fail(ErrorCode::InvalidRule, rule.stub_id + ": cannot invert '" + render(d) + "'");
    }
  }
  return out;
}

Fields apply_rule(const Fields& in, const MappingRule& rule, const OntologyGraph& mapping, Provenance* provenance) {
  Fields out;
  std::set<std::string> consumed;
  const auto need = [&](const std::string& src) -> const Literal& {
    const auto it = in.find(src);
    if (it == in.end()) fail(ErrorCode::MissingField, rule.stub_id + ": source field '" + src + "' is absent");
    consumed.insert(src);
    return it->second;
  };
  const auto emit = [&](const std::string& dst, Literal value, const Directive& d) {
    if (!out.emplace(dst, std::move(value)).second) {
      fail(ErrorCode::InvalidRule, rule.stub_id + ": field '" + dst + "' written twice");
    }
    if (provenance) (*provenance)[dst] = render(d);
  };

  for (const auto& d : rule.directives) {
    if (const auto* r = std::get_if<directive::Rename>(&d)) {
      emit(r->dst, need(r->src), d);
    } else if (const auto* c = std::get_if<directive::Const>(&d)) {
      emit(c->dst, c->value, d);
    } else if (const auto* m = std::get_if<directive::ConceptMap>(&d)) {
      emit(m->dst, map_value(need(m->src), *m, mapping), d);
    } else {
      need(std::get<directive::Drop>(d).src);
    }
  }
  if (rule.passthrough) {
    for (const auto& [k, v] : in) {
      if (consumed.contains(k) || out.contains(k)) continue;
      out.emplace(k, v);
      if (provenance) (*provenance)[k] = "passthrough";
    }
  }
  return out;
}

ProviderMessage translate_request(const CanonicalMessage& msg, const StubBinding& binding,
                                  const OntologyGraph& mapping) {
  if (msg.service != binding.canonical_service) {
    fail(ErrorCode::ServiceMismatch, "stub " + binding.stub_id + " serves " + binding.canonical_service.str() +
                                         ", not " + msg.service.str());
  }
  return ProviderMessage{binding.dialect, binding.request_rule.operation, msg.correlation,
                         apply_rule(msg.fields, binding.request_rule, mapping)};
}

CanonicalMessage translate_response(const ProviderMessage& msg, const StubBinding& binding,
                                    const OntologyGraph& mapping) {
  if (msg.dialect != binding.dialect) {
    fail(ErrorCode::DialectMismatch, "stub " + binding.stub_id + " speaks " + binding.dialect + ", got " +
                                         msg.dialect);
  }
  return CanonicalMessage{binding.canonical_service, msg.correlation,
                          apply_rule(msg.fields, binding.response_rule, mapping)};
}

CanonicalMessage dispatch(const CanonicalMessage& msg, const StubBinding& binding, const DispatchContext& ctx) {
  auto request = translate_request(msg, binding, ctx.mapping);
  ProviderEndpoint* endpoint = ctx.resolve ? ctx.resolve(binding.endpoint) : nullptr;
  if (!endpoint) {
    if (ctx.log) {
      ctx.log->append(ctx.now, "reconciliation", "unavailable",
                      "stub=" + binding.stub_id + " endpoint=" + binding.endpoint + " corr=" + msg.correlation);
    }
    fail(ErrorCode::ProviderUnavailable, "endpoint '" + binding.endpoint + "' is not reachable");
  }
  if (ctx.log) {
    ctx.log->append(ctx.now, "reconciliation", "dispatch",
                    "stub=" + binding.stub_id + " endpoint=" + binding.endpoint + " op=" + request.operation +
                        " corr=" + msg.correlation + " req=" + text::digest(to_json(request)));
  }
  auto reply = endpoint->call(request);
  reply.correlation = msg.correlation;
  auto response = translate_response(reply, binding, ctx.mapping);
  response.correlation = msg.correlation;
  return response;
}

// --- rules file -------------------------------------------------------------

namespace {

struct ParsedRule {
  MappingRule rule;
  bool response = false;
  std::string endpoint;
};

Directive parse_directive(const std::string& line, std::size_t lineno) {
  const auto parts = text::split_ws(line);
  const auto bad = [&]() -> Directive { throw ParseError(lineno, "bad directive '" + line + "'"); };
  if (parts.empty()) return bad();
  if (parts[0] == "rename") {
    if (parts.size() != 4 || parts[2] != "->") return bad();
    return directive::Rename{parts[1], parts[3]};
  }
  if (parts[0] == "drop") {
    if (parts.size() != 2) return bad();
    return directive::Drop{parts[1]};
  }
  if (parts[0] == "map") {
    if (parts.size() != 6 || parts[2] != "->" || parts[4] != "via") return bad();
    const bool inverse = text::starts_with(parts[5], "^");
    return directive::ConceptMap{parts[1], parts[3], ConceptId::parse(inverse ? parts[5].substr(1) : parts[5]),
                                 inverse};
  }
  if (parts[0] == "const") {
    if (parts.size() < 4 || parts[2] != "=") return bad();
    const auto eq = line.find('=');
    return directive::Const{parts[1], Literal::parse(text::trim(std::string_view(line).substr(eq + 1)))};
  }
  return bad();
}

}  // namespace

std::map<std::string, StubBinding> parse_stubs(std::string_view content) {
  std::vector<ParsedRule> rules;
  const auto lines = text::lines(content);
  for (std::size_t n = 0; n < lines.size(); ++n) {
    const std::size_t lineno = n + 1;
    const auto stripped = std::string(text::trim(lines[n]));
    if (stripped.empty() || stripped.front() == '#') continue;
    try {
      const bool indented = lines[n].front() == ' ' || lines[n].front() == '\t';
      if (!indented) {
        const auto parts = text::split_ws(stripped);
        if (parts[0] != "rule" || parts.size() < 5) {
          throw ParseError(lineno, "expected 'rule <stub> <service> <dialect> <operation> [flags]'");
        }
        ParsedRule pr;
        pr.rule.stub_id = parts[1];
        pr.rule.canonical_service = ConceptId::parse(parts[2]);
        pr.rule.dialect = parts[3];
        pr.rule.operation = parts[4];
        if (!text::is_token(pr.rule.stub_id) || !text::is_token(pr.rule.dialect)) {
          throw ParseError(lineno, "stub id and dialect must be tokens");
        }
        for (std::size_t i = 5; i < parts.size(); ++i) {
          if (parts[i] == "bijective") {
            pr.rule.bijective = true;
          } else if (parts[i] == "passthrough") {
            pr.rule.passthrough = true;
          } else if (parts[i] == "response") {
            pr.response = true;
          } else if (text::starts_with(parts[i], "endpoint=")) {
            pr.endpoint = parts[i].substr(9);
          } else {
            throw ParseError(lineno, "unknown rule flag '" + parts[i] + "'");
          }
        }
        rules.push_back(std::move(pr));
      } else {
        if (rules.empty()) throw ParseError(lineno, "directive before any rule header");
        rules.back().rule.directives.push_back(parse_directive(stripped, lineno));
      }
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(lineno, e.detail());
    }
  }

  std::map<std::string, StubBinding> stubs;
  std::map<std::string, bool> has_response;
  for (auto& pr : rules) {
    validate_rule(pr.rule);
    auto [it, fresh] = stubs.try_emplace(pr.rule.stub_id);
    auto& b = it->second;
    if (fresh) {
      b.stub_id = pr.rule.stub_id;
      b.canonical_service = pr.rule.canonical_service;
      b.dialect = pr.rule.dialect;
    } else if (b.canonical_service != pr.rule.canonical_service || b.dialect != pr.rule.dialect) {
      fail(ErrorCode::InvalidRule, pr.rule.stub_id + ": request and response rules disagree on service/dialect");
    }
    if (pr.response) {
      if (has_response[b.stub_id]) fail(ErrorCode::InvalidRule, b.stub_id + ": duplicate response rule");
      has_response[b.stub_id] = true;
      b.response_rule = std::move(pr.rule);
    } else {
      if (!b.request_rule.stub_id.empty()) fail(ErrorCode::InvalidRule, b.stub_id + ": duplicate request rule");
      b.endpoint = pr.endpoint.empty() ? pr.rule.dialect : pr.endpoint;
      b.request_rule = std::move(pr.rule);
    }
  }
  for (auto& [id, b] : stubs) {
    if (b.request_rule.stub_id.empty()) fail(ErrorCode::InvalidRule, id + ": response rule without request rule");
    if (!has_response[id]) {
      b.response_rule = MappingRule{id, b.canonical_service, b.dialect, b.request_rule.operation, {}, false, true};
    }
  }
  return stubs;
}

std::string serialize_stubs(const std::map<std::string, StubBinding>& stubs) {
  std::string out;
  const auto write = [&](const MappingRule& r, bool response, const std::string& endpoint) {
    out += "rule " + r.stub_id + " " + r.canonical_service.str() + " " + r.dialect + " " + r.operation;
    if (r.bijective) out += " bijective";
    if (r.passthrough) out += " passthrough";
    if (response) out += " response";
    if (!response && endpoint != r.dialect) out += " endpoint=" + endpoint;
    out += "\n";
    for (const auto& d : r.directives) out += "  " + render(d) + "\n";
  };
  for (const auto& [_, b] : stubs) {
    write(b.request_rule, false, b.endpoint);
    write(b.response_rule, true, b.endpoint);
  }
  return out;
}

}  // namespace vo
