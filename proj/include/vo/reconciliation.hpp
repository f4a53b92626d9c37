#pragma once

#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "vo/event_log.hpp"
#include "vo/ontology.hpp"

namespace vo {

using Fields = std::map<std::string, Literal>;

/// OTA-style message addressed to a service concept.
struct CanonicalMessage {
  ConceptId service;
  std::string correlation;
  Fields fields;

  bool operator==(const CanonicalMessage&) const = default;
};

/// Message in a provider's own vocabulary.
struct ProviderMessage {
  std::string dialect;
  std::string operation;
  std::string correlation;
  Fields fields;

  bool operator==(const ProviderMessage&) const = default;
};

// Messages travel as single-line JSON. Field values use the literal
// encoding "<kind>:<lexical>[@<unit>]"; bare JSON numbers, booleans and
// unprefixed strings are accepted on input.
std::string to_json(const CanonicalMessage& msg);
std::string to_json(const ProviderMessage& msg);
CanonicalMessage canonical_from_json(std::string_view json);
ProviderMessage provider_from_json(std::string_view json);
Fields fields_from_json_object(std::string_view json);
std::string fields_to_json_object(const Fields& fields);

namespace directive {
struct Rename {
  std::string src, dst;
  bool operator==(const Rename&) const = default;
};
struct Const {
  std::string dst;
  Literal value;
  bool operator==(const Const&) const = default;
};
/// Looks the source value up in the mapping graph under `predicate`.
/// Forward maps subject -> object; `inverse` maps object -> subject.
struct ConceptMap {
  std::string src, dst;
  ConceptId predicate;
  bool inverse = false;
  bool operator==(const ConceptMap&) const = default;
};
struct Drop {
  std::string src;
  bool operator==(const Drop&) const = default;
};
}  // namespace directive

using Directive = std::variant<directive::Rename, directive::Const, directive::ConceptMap, directive::Drop>;

std::string render(const Directive& d);

struct MappingRule {
  std::string stub_id;
  ConceptId canonical_service;
  std::string dialect;
  std::string operation;
  std::vector<Directive> directives;
  bool bijective = false;
  /// Copy source fields no directive touches instead of dropping them.
  bool passthrough = false;

  bool operator==(const MappingRule&) const = default;
};

/// Throws InvalidRule. With a mapping graph, bijective concept_map
/// predicates are also checked to be one-to-one.
void validate_rule(const MappingRule& rule, const OntologyGraph* mapping = nullptr);

/// The reverse rule of a bijective rule.
MappingRule invert(const MappingRule& rule);

/// Output field -> the directive (or "passthrough") that produced it.
using Provenance = std::map<std::string, std::string>;

/// Applies every directive to `in`. Sources are always read from `in`, so
/// directives with disjoint footprints commute.
Fields apply_rule(const Fields& in, const MappingRule& rule, const OntologyGraph& mapping,
                  Provenance* provenance = nullptr);

struct StubBinding {
  std::string stub_id;
  ConceptId canonical_service;
  std::string dialect;
  MappingRule request_rule;
  MappingRule response_rule;
  std::string endpoint;

  bool operator==(const StubBinding&) const = default;
};

ProviderMessage translate_request(const CanonicalMessage& msg, const StubBinding& binding,
                                  const OntologyGraph& mapping);
CanonicalMessage translate_response(const ProviderMessage& msg, const StubBinding& binding,
                                    const OntologyGraph& mapping);

/// Something that answers provider messages. Dialect-level error records are
/// reported by throwing ProviderFault.
class ProviderEndpoint {
 public:
  virtual ~ProviderEndpoint() = default;
  virtual ProviderMessage call(const ProviderMessage& request) = 0;
};

/// Returns nullptr when the endpoint is unknown or down.
using EndpointResolver = std::function<ProviderEndpoint*(const std::string& endpoint)>;

struct DispatchContext {
  const OntologyGraph& mapping;
  EndpointResolver resolve;
  EventLog* log = nullptr;
  Tick now = 0;
};

/// translate_request -> provider -> translate_response. The provider call is
/// logged as one "dispatch" record; the correlation token is carried across.
CanonicalMessage dispatch(const CanonicalMessage& msg, const StubBinding& binding, const DispatchContext& ctx);

// --- rules file -------------------------------------------------------------

/// Stub bindings keyed by stub id, read from the mapping-rules format:
///
///   rule <stub> <service> <dialect> <operation> [bijective] [passthrough] [response] [endpoint=<id>]
///     rename a -> b | const b = <kind>:<lexical> | map a -> b via [^]<predicate> | drop a
///
/// A header without `response` is the request rule. A stub with no response
/// rule gets an empty passthrough one.
std::map<std::string, StubBinding> parse_stubs(std::string_view content);
std::string serialize_stubs(const std::map<std::string, StubBinding>& stubs);

}  // namespace vo
