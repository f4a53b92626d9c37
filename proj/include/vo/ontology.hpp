#pragma once

#include <compare>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace vo {

/// "namespace:local", both parts drawn from [A-Za-z0-9_-].
class ConceptId {
 public:
  ConceptId() = default;
  ConceptId(std::string ns, std::string local);

  static ConceptId parse(std::string_view text);
  static std::optional<ConceptId> try_parse(std::string_view text);

  const std::string& ns() const { return ns_; }
  const std::string& local() const { return local_; }
  std::string str() const { return ns_ + ":" + local_; }
  bool empty() const { return ns_.empty(); }

  auto operator<=>(const ConceptId&) const = default;

 private:
  std::string ns_;
  std::string local_;
};

enum class LiteralKind { Text, Integer, Decimal, Boolean };

std::string_view to_string(LiteralKind kind);
std::optional<LiteralKind> parse_literal_kind(std::string_view s);

/// Typed property value. The lexical form always parses under its kind.
class Literal {
 public:
  Literal() = default;
  Literal(LiteralKind kind, std::string lexical, std::optional<std::string> unit = {});

  static Literal text(std::string value);
  static Literal integer(long long value, std::optional<std::string> unit = {});
  static Literal decimal(std::string lexical, std::optional<std::string> unit = {});
  static Literal boolean(bool value);

  /// Parses "<kind>:<lexical>[@<unit>]" (the file and wire form).
  static Literal parse(std::string_view encoded);
  /// Guesses the kind of a bare value: integer, decimal, boolean, else text.
  static Literal infer(std::string_view bare);

  LiteralKind kind() const { return kind_; }
  const std::string& lexical() const { return lexical_; }
  const std::optional<std::string>& unit() const { return unit_; }

  bool is_numeric() const { return kind_ == LiteralKind::Integer || kind_ == LiteralKind::Decimal; }
  double as_number() const;
  long long as_integer() const;

  /// Inverse of parse(); text lexical forms escape '\', '@' and newlines.
  std::string encode() const;
  /// Bare lexical form when infer() would read it back unchanged, else encode().
  std::string compact() const;

  auto operator<=>(const Literal&) const = default;

 private:
  LiteralKind kind_ = LiteralKind::Text;
  std::string lexical_;
  std::optional<std::string> unit_;
};

enum class Comparator { Less, LessEq, Greater, GreaterEq, Equal };

std::string_view to_string(Comparator cmp);
std::optional<Comparator> parse_comparator(std::string_view s);

/// Numeric kinds compare with each other; otherwise kinds must match, and
/// booleans only support '='. Throws KindMismatch.
bool compare(const Literal& lhs, Comparator cmp, const Literal& rhs);
bool kinds_compatible(LiteralKind a, LiteralKind b, Comparator cmp);

/// Splits "<name><cmp><value>" such as "cpu_utilization<10".
struct Condition {
  std::string name;
  Comparator cmp = Comparator::Equal;
  Literal threshold;
};
Condition parse_condition(std::string_view text);

/// Object position of a triple: a concept/entity reference or a literal.
using Node = std::variant<ConceptId, Literal>;
std::string render(const Node& node);

struct Triple {
  ConceptId subject;  // concept or entity id
  ConceptId predicate;
  Node object;

  auto operator<=>(const Triple&) const = default;
};

/// One named concept graph: declared concepts, their is-a edges, and triples.
/// The is-a edges always form a DAG.
class OntologyGraph {
 public:
  OntologyGraph() = default;
  explicit OntologyGraph(std::string name);

  const std::string& name() const { return name_; }

  void declare_concept(const ConceptId& id, const std::vector<ConceptId>& parents = {});
  void add_triple(Triple triple);

  bool declared(const ConceptId& id) const { return parents_.contains(id); }
  const std::map<ConceptId, std::set<ConceptId>>& concepts() const { return parents_; }
  const std::set<Triple>& triples() const { return triples_; }
  std::size_t edge_count() const;

  /// Reflexive-transitive is-a closure; UnknownConcept if either is undeclared.
  bool subsumes(const ConceptId& general, const ConceptId& specific) const;
  /// All strict ancestors of `id`.
  std::set<ConceptId> ancestors(const ConceptId& id) const;
  std::set<ConceptId> descendants(const ConceptId& id) const;

  /// Objects of (subject, predicate, ?o), sorted.
  std::vector<Node> objects(const ConceptId& subject, const ConceptId& predicate) const;
  /// Subjects of (?s, predicate, object), sorted.
  std::vector<ConceptId> subjects(const ConceptId& predicate, const Node& object) const;

  bool operator==(const OntologyGraph&) const = default;

 private:
  std::string name_;
  std::map<ConceptId, std::set<ConceptId>> parents_;
  std::map<ConceptId, std::set<ConceptId>> closure_;  // strict ancestors
  std::set<Triple> triples_;
};

/// Graph names are concepts, roles, resources, services, mapping or custom:<token>.
bool valid_graph_name(std::string_view name);

// --- conjunctive queries ----------------------------------------------------

struct Variable {
  std::string name;  // without the leading '?'
  auto operator<=>(const Variable&) const = default;
};

using PatternTerm = std::variant<Variable, Node>;

struct TriplePattern {
  PatternTerm subject;
  PatternTerm predicate;
  PatternTerm object;
};

/// Parses "?u role:hasPoints ?p"; the object may be a literal "integer:5".
TriplePattern parse_pattern(std::string_view text);

using Binding = std::map<std::string, Node>;

/// Every binding under which all patterns match stored triples, sorted
/// lexicographically by bound values (variables visited in name order).
std::vector<Binding> query(const OntologyGraph& graph, const std::vector<TriplePattern>& patterns);

// --- persistence ------------------------------------------------------------

OntologyGraph parse_graph(std::string_view content, std::string name);
OntologyGraph load_graph(const std::string& path, std::string name);
/// Canonical form: sorted concept lines, then sorted triple/lit lines.
std::string serialize_graph(const OntologyGraph& graph);
void save_graph(const OntologyGraph& graph, const std::string& path);

/// The set of published graphs. Published graphs are immutable; readers take
/// a snapshot and keep using it while writers publish replacements.
class Ontology {
 public:
  using GraphPtr = std::shared_ptr<const OntologyGraph>;
  using Snapshot = std::map<std::string, GraphPtr>;

  Ontology() = default;
  Ontology(const Ontology& other);
  Ontology& operator=(const Ontology& other);

  /// Checks that every predicate is declared in some graph (including the
  /// new one) before replacing any graph of the same name.
  GraphPtr publish(OntologyGraph graph);
  /// Publishes several graphs at once; predicates may be declared in any of them.
  void publish_all(std::vector<OntologyGraph> graphs);
  Snapshot snapshot() const;
  GraphPtr graph(const std::string& name) const;
  /// Graph by name, or an empty graph of that name.
  GraphPtr graph_or_empty(const std::string& name) const;
  bool concept_declared(const ConceptId& id) const;

 private:
  mutable std::mutex mu_;
  Snapshot graphs_;
};

}  // namespace vo
