#include "vo/ontology.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdlib>
#include <functional>
#include <span>

#include "vo/error.hpp"
#include "vo/text.hpp"

namespace vo {

// --- ConceptId --------------------------------------------------------------

ConceptId::ConceptId(std::string ns, std::string local) : ns_(std::move(ns)), local_(std::move(local)) {
  if (!text::is_token(ns_) || !text::is_token(local_)) {
    fail(ErrorCode::InvalidId, "invalid concept id '" + ns_ + ":" + local_ + "'");
  }
}

std::optional<ConceptId> ConceptId::try_parse(std::string_view s) {
  const auto colon = s.find(':');
  if (colon == std::string_view::npos) return std::nullopt;
  const auto ns = s.substr(0, colon);
  const auto local = s.substr(colon + 1);
  if (!text::is_token(ns) || !text::is_token(local)) return std::nullopt;
  return ConceptId(std::string(ns), std::string(local));
}

ConceptId ConceptId::parse(std::string_view s) {
  auto id = try_parse(s);
  if (!id) fail(ErrorCode::InvalidId, "invalid concept id '" + std::string(s) + "'");
  return *id;
}

// --- Literal ----------------------------------------------------------------

std::string_view to_string(LiteralKind kind) {
  switch (kind) {
    case LiteralKind::Text: return "text";
    case LiteralKind::Integer: return "integer";
    case LiteralKind::Decimal: return "decimal";
    case LiteralKind::Boolean: return "boolean";
  }
  return "text";
}

std::optional<LiteralKind> parse_literal_kind(std::string_view s) {
  if (s == "text") return LiteralKind::Text;
  if (s == "integer") return LiteralKind::Integer;
  if (s == "decimal") return LiteralKind::Decimal;
  if (s == "boolean") return LiteralKind::Boolean;
  return std::nullopt;
}

namespace {

std::optional<LiteralKind> parse_kind(std::string_view s) { return parse_literal_kind(s); }

bool is_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

bool valid_integer(std::string_view s) {
  if (!s.empty() && s.front() == '-') s.remove_prefix(1);
  return is_digits(s);
}

bool valid_decimal(std::string_view s) {
  if (!s.empty() && s.front() == '-') s.remove_prefix(1);
  const auto dot = s.find('.');
  if (dot == std::string_view::npos) return is_digits(s);
  return is_digits(s.substr(0, dot)) && is_digits(s.substr(dot + 1));
}

bool valid_lexical(LiteralKind kind, std::string_view s) {
  switch (kind) {
    case LiteralKind::Text: return true;
    case LiteralKind::Integer: return valid_integer(s) && text::parse_int(s).has_value();
    case LiteralKind::Decimal: return valid_decimal(s);
    case LiteralKind::Boolean: return s == "true" || s == "false";
  }
  return false;
}

std::string escape_text(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '@': out += "\\@"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

Literal::Literal(LiteralKind kind, std::string lexical, std::optional<std::string> unit)
    : kind_(kind), lexical_(std::move(lexical)), unit_(std::move(unit)) {
  if (!valid_lexical(kind_, lexical_)) {
    fail(ErrorCode::InvalidLiteral,
         "'" + lexical_ + "' is not a valid " + std::string(to_string(kind_)));
  }
  if (unit_ && !text::is_token(*unit_)) fail(ErrorCode::InvalidLiteral, "invalid unit '" + *unit_ + "'");
}

Literal Literal::text(std::string value) { return Literal(LiteralKind::Text, std::move(value)); }

Literal Literal::integer(long long value, std::optional<std::string> unit) {
  return Literal(LiteralKind::Integer, std::to_string(value), std::move(unit));
}

Literal Literal::decimal(std::string lexical, std::optional<std::string> unit) {
  return Literal(LiteralKind::Decimal, std::move(lexical), std::move(unit));
}

Literal Literal::boolean(bool value) { return Literal(LiteralKind::Boolean, value ? "true" : "false"); }

Literal Literal::parse(std::string_view encoded) {
  const auto colon = encoded.find(':');
  const auto kind = colon == std::string_view::npos ? std::nullopt : parse_kind(encoded.substr(0, colon));
  if (!kind) fail(ErrorCode::InvalidLiteral, "missing literal kind in '" + std::string(encoded) + "'");
  const auto body = encoded.substr(colon + 1);

  std::string lexical;
  std::optional<std::string> unit;
  for (std::size_t i = 0; i < body.size(); ++i) {
    const char c = body[i];
    if (c == '\\') {
      if (i + 1 >= body.size()) fail(ErrorCode::InvalidLiteral, "dangling escape");
      const char n = body[++i];
      switch (n) {
        case 'n': lexical += '\n'; break;
        case 'r': lexical += '\r'; break;
        case 't': lexical += '\t'; break;
        case '\\':
        case '@': lexical += n; break;
        default: fail(ErrorCode::InvalidLiteral, std::string("unknown escape \\") + n);
      }
    } else if (c == '@') {
      unit = std::string(body.substr(i + 1));
      break;
    } else {
      lexical += c;
    }
  }
  return Literal(*kind, std::move(lexical), std::move(unit));
}

Literal Literal::infer(std::string_view bare) {
  const auto colon = bare.find(':');
  if (colon != std::string_view::npos && parse_kind(bare.substr(0, colon))) return parse(bare);
  if (valid_integer(bare) && text::parse_int(bare)) return Literal(LiteralKind::Integer, std::string(bare));
  if (valid_decimal(bare)) return Literal(LiteralKind::Decimal, std::string(bare));
  if (bare == "true" || bare == "false") return Literal(LiteralKind::Boolean, std::string(bare));
  return Literal::text(std::string(bare));
}

double Literal::as_number() const {
  if (!is_numeric()) fail(ErrorCode::KindMismatch, "'" + lexical_ + "' is not numeric");
  return std::strtod(lexical_.c_str(), nullptr);
}

long long Literal::as_integer() const {
  if (kind_ != LiteralKind::Integer) fail(ErrorCode::KindMismatch, "'" + lexical_ + "' is not an integer");
  return *text::parse_int(lexical_);
}

std::string Literal::encode() const {
  std::string out(to_string(kind_));
  out += ':';
  out += kind_ == LiteralKind::Text ? escape_text(lexical_) : lexical_;
  if (unit_) out += "@" + *unit_;
  return out;
}

std::string Literal::compact() const {
  if (!unit_ && lexical_.find_first_of(" \t\r\n@\\") == std::string::npos && infer(lexical_) == *this) return lexical_;
  return encode();
}

// --- comparison -------------------------------------------------------------

std::string_view to_string(Comparator cmp) {
  switch (cmp) {
    case Comparator::Less: return "<";
    case Comparator::LessEq: return "<=";
    case Comparator::Greater: return ">";
    case Comparator::GreaterEq: return ">=";
    case Comparator::Equal: return "=";
  }
  return "=";
}

std::optional<Comparator> parse_comparator(std::string_view s) {
  if (s == "<") return Comparator::Less;
  if (s == "<=") return Comparator::LessEq;
  if (s == ">") return Comparator::Greater;
  if (s == ">=") return Comparator::GreaterEq;
  if (s == "=") return Comparator::Equal;
  return std::nullopt;
}

bool kinds_compatible(LiteralKind a, LiteralKind b, Comparator cmp) {
  const auto numeric = [](LiteralKind k) { return k == LiteralKind::Integer || k == LiteralKind::Decimal; };
  if (numeric(a) && numeric(b)) return true;
  if (a != b) return false;
  return a != LiteralKind::Boolean || cmp == Comparator::Equal;
}

namespace {

template <typename T>
bool apply(const T& l, Comparator cmp, const T& r) {
  switch (cmp) {
    case Comparator::Less: return l < r;
    case Comparator::LessEq: return l <= r;
    case Comparator::Greater: return l > r;
    case Comparator::GreaterEq: return l >= r;
    case Comparator::Equal: return l == r;
  }
  return false;
}

}  // namespace

bool compare(const Literal& lhs, Comparator cmp, const Literal& rhs) {
  if (!kinds_compatible(lhs.kind(), rhs.kind(), cmp) ||
      (lhs.unit() && rhs.unit() && lhs.unit() != rhs.unit())) {
    fail(ErrorCode::KindMismatch, "cannot compare " + lhs.encode() + " " + std::string(to_string(cmp)) +
                                      " " + rhs.encode());
  }
  if (lhs.kind() == LiteralKind::Integer && rhs.kind() == LiteralKind::Integer) {
    return apply(lhs.as_integer(), cmp, rhs.as_integer());
  }
  if (lhs.is_numeric()) return apply(lhs.as_number(), cmp, rhs.as_number());
  return apply(lhs.lexical(), cmp, rhs.lexical());
}

Condition parse_condition(std::string_view s) {
  const auto pos = s.find_first_of("<>=");
  if (pos == std::string_view::npos || pos == 0) {
    fail(ErrorCode::ParseError, "expected <name><cmp><value> in '" + std::string(s) + "'");
  }
  std::size_t len = 1;
  if (pos + 1 < s.size() && s[pos + 1] == '=' && s[pos] != '=') len = 2;
  const auto cmp = parse_comparator(s.substr(pos, len));
  const auto value = text::trim(s.substr(pos + len));
  if (!cmp || value.empty()) fail(ErrorCode::ParseError, "bad condition '" + std::string(s) + "'");
  return Condition{std::string(text::trim(s.substr(0, pos))), *cmp, Literal::infer(value)};
}

std::string render(const Node& node) {
  if (const auto* id = std::get_if<ConceptId>(&node)) return id->str();
  return std::get<Literal>(node).encode();
}

// --- OntologyGraph ----------------------------------------------------------

bool valid_graph_name(std::string_view name) {
  static const std::set<std::string_view> fixed = {"concepts", "roles", "resources", "services", "mapping"};
  if (fixed.contains(name)) return true;
  return text::starts_with(name, "custom:") && text::is_token(name.substr(7));
}

OntologyGraph::OntologyGraph(std::string name) : name_(std::move(name)) {
  if (!valid_graph_name(name_)) fail(ErrorCode::InvalidId, "invalid graph name '" + name_ + "'");
}

void OntologyGraph::declare_concept(const ConceptId& id, const std::vector<ConceptId>& parents) {
  for (const auto& p : parents) {
    if (p == id) fail(ErrorCode::CycleError, id.str() + " cannot be its own parent");
    if (!declared(p)) fail(ErrorCode::UnknownConcept, "parent " + p.str() + " is not declared");
    if (declared(id) && subsumes(id, p)) {
      fail(ErrorCode::CycleError, p.str() + " is already a descendant of " + id.str());
    }
  }
  auto& edges = parents_[id];
  edges.insert(parents.begin(), parents.end());

  auto& up = closure_[id];
  for (const auto& p : parents) {
    up.insert(p);
    const auto& above = closure_.at(p);
    up.insert(above.begin(), above.end());
  }
  for (auto& [c, anc] : closure_) {
    if (anc.contains(id)) anc.insert(up.begin(), up.end());
  }
}

void OntologyGraph::add_triple(Triple triple) { triples_.insert(std::move(triple)); }

std::size_t OntologyGraph::edge_count() const {
  std::size_t n = 0;
  for (const auto& [_, ps] : parents_) n += ps.size();
  return n;
}

bool OntologyGraph::subsumes(const ConceptId& general, const ConceptId& specific) const {
  if (!declared(general)) fail(ErrorCode::UnknownConcept, general.str() + " is not declared");
  const auto it = closure_.find(specific);
  if (it == closure_.end()) fail(ErrorCode::UnknownConcept, specific.str() + " is not declared");
  return general == specific || it->second.contains(general);
}

std::set<ConceptId> OntologyGraph::ancestors(const ConceptId& id) const {
  const auto it = closure_.find(id);
  return it == closure_.end() ? std::set<ConceptId>{} : it->second;
}

std::set<ConceptId> OntologyGraph::descendants(const ConceptId& id) const {
  std::set<ConceptId> out;
  for (const auto& [c, anc] : closure_) {
    if (anc.contains(id)) out.insert(c);
  }
  return out;
}

std::vector<Node> OntologyGraph::objects(const ConceptId& subject, const ConceptId& predicate) const {
  std::vector<Node> out;
  for (auto it = triples_.lower_bound(Triple{subject, predicate, Node{ConceptId{}}});
       it != triples_.end() && it->subject == subject && it->predicate == predicate; ++it) {
    out.push_back(it->object);
  }
  return out;
}

std::vector<ConceptId> OntologyGraph::subjects(const ConceptId& predicate, const Node& object) const {
  std::vector<ConceptId> out;
  for (const auto& t : triples_) {
    if (t.predicate == predicate && t.object == object) out.push_back(t.subject);
  }
  return out;
}

// --- query ------------------------------------------------------------------

namespace {

bool is_literal_prefix(std::string_view token) {
  const auto colon = token.find(':');
  return colon != std::string_view::npos && parse_kind(token.substr(0, colon)).has_value();
}

PatternTerm parse_term(std::string_view token, bool allow_literal) {
  if (!token.empty() && token.front() == '?') {
    if (!text::is_token(token.substr(1))) fail(ErrorCode::ParseError, "bad variable '" + std::string(token) + "'");
    return Variable{std::string(token.substr(1))};
  }
  if (allow_literal && is_literal_prefix(token)) return Node{Literal::parse(token)};
  return Node{ConceptId::parse(token)};
}


}  // namespace

TriplePattern parse_pattern(std::string_view s) {
  const auto parts = text::split_ws(s);
  if (parts.size() != 3) fail(ErrorCode::ParseError, "pattern needs 3 terms: '" + std::string(s) + "'");
  return TriplePattern{parse_term(parts[0], false), parse_term(parts[1], false), parse_term(parts[2], true)};
}

std::vector<Binding> query(const OntologyGraph& graph, const std::vector<TriplePattern>& patterns) {
  if (patterns.empty()) return {};
  // Nodes are interned as ranks in value order, so rank tuples sort the same way bindings do.
  std::map<Node, int> rank;
  for (const auto& t : graph.triples()) {
    rank.emplace(Node{t.subject}, 0);
    rank.emplace(Node{t.predicate}, 0);
    rank.emplace(t.object, 0);
  }
  std::vector<const Node*> node_at;
  for (auto& [node, r] : rank) {
    r = static_cast<int>(node_at.size());
    node_at.push_back(&node);
  }
  using Row = std::array<int, 3>;
  std::vector<Row> rows;
  std::vector<std::vector<const Row*>> by_predicate(node_at.size()), by_subject(node_at.size());
  rows.reserve(graph.triples().size());
  for (const auto& t : graph.triples()) {
    rows.push_back(Row{rank.at(Node{t.subject}), rank.at(Node{t.predicate}), rank.at(t.object)});
  }
  std::vector<const Row*> all;
  for (const auto& r : rows) {
    by_subject[r[0]].push_back(&r);
    by_predicate[r[1]].push_back(&r);
    all.push_back(&r);
  }
  static const std::vector<const Row*> none;

  // Variables become slots; constants absent from the graph get rank -1 and never match.
  std::map<std::string, std::size_t> slot_of;
  struct Term {
    bool constant = false;
    int rank = -1;
    std::size_t slot = 0;
  };
  std::vector<std::array<Term, 3>> compiled;
  for (const auto& p : patterns) {
    std::array<Term, 3> c;
    const PatternTerm* terms[3] = {&p.subject, &p.predicate, &p.object};
    for (int k = 0; k < 3; ++k) {
      if (const auto* n = std::get_if<Node>(terms[k])) {
        c[k].constant = true;
        if (auto it = rank.find(*n); it != rank.end()) c[k].rank = it->second;
      } else {
        c[k].slot = slot_of.emplace(std::get<Variable>(*terms[k]).name, slot_of.size()).first->second;
      }
    }
    compiled.push_back(c);
  }
  std::vector<int> slots(slot_of.size(), -1);
  const auto value = [&](const Term& t) { return t.constant ? t.rank : slots[t.slot]; };
  const auto bound_value = [&](const Term& t) { return t.constant || slots[t.slot] >= 0; };
  const auto lookup = [&](const std::vector<std::vector<const Row*>>& index, int key) {
    return key < 0 ? &none : &index[key];
  };

  // Matches are stored flat, one tuple per match with slots in variable-name order.
  std::vector<std::size_t> order;
  for (const auto& [name, slot] : slot_of) order.push_back(slot);
  const std::size_t width = order.size();
  std::vector<int> found;
  std::size_t count = 0;
  std::function<void(std::size_t)> solve = [&](std::size_t i) {
    if (i == compiled.size()) {
      ++count;
      for (const auto slot : order) found.push_back(slots[slot]);
      return;
    }
    const auto& c = compiled[i];
    const std::vector<const Row*>* candidates = &all;
    if (bound_value(c[1])) candidates = lookup(by_predicate, value(c[1]));
    if (bound_value(c[0])) {
      const auto* narrower = lookup(by_subject, value(c[0]));
      if (narrower->size() < candidates->size()) candidates = narrower;
    }
    std::size_t bound[3];
    for (const auto* row : *candidates) {
      std::size_t n = 0;
      bool ok = true;
      for (int k = 0; k < 3 && ok; ++k) {
        if (bound_value(c[k])) {
          ok = value(c[k]) == (*row)[k];
        } else {
          slots[c[k].slot] = (*row)[k];
          bound[n++] = c[k].slot;
        }
      }
      if (ok) solve(i + 1);
      for (std::size_t j = 0; j < n; ++j) slots[bound[j]] = -1;
    }
  };
  solve(0);

  if (width == 0) return count ? std::vector<Binding>{Binding{}} : std::vector<Binding>{};
  std::vector<std::size_t> idx(count);
  for (std::size_t i = 0; i < count; ++i) idx[i] = i;
  const auto tuple = [&](std::size_t i) { return std::span<const int>(found.data() + i * width, width); };
  const auto less = [&](std::size_t x, std::size_t y) {
    const auto a = tuple(x), b = tuple(y);
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
  };
  std::sort(idx.begin(), idx.end(), less);
  std::vector<Binding> results;
  const std::vector<std::string> names = [&] {
    std::vector<std::string> out;
    for (const auto& [name, slot] : slot_of) out.push_back(name);
    return out;
  }();
  for (std::size_t n = 0; n < idx.size(); ++n) {
    if (n > 0 && !less(idx[n - 1], idx[n])) continue;
    const auto t = tuple(idx[n]);
    Binding b;
    for (std::size_t k = 0; k < width; ++k) b.emplace_hint(b.end(), names[k], *node_at[t[k]]);
    results.push_back(std::move(b));
  }
  return results;
}

// --- persistence ------------------------------------------------------------

OntologyGraph parse_graph(std::string_view content, std::string name) {
  OntologyGraph graph(std::move(name));
  struct Decl {
    std::vector<ConceptId> parents;
    std::size_t line = 0;
  };
  std::map<ConceptId, Decl> decls;
  std::vector<ConceptId> order;

  const auto lines = text::lines(content);
  for (std::size_t n = 0; n < lines.size(); ++n) {
    const std::size_t lineno = n + 1;
    const std::string_view line = lines[n];
    const auto stripped = text::trim(line);
    if (stripped.empty() || stripped.front() == '#') continue;
    const auto parts = text::split_ws(stripped);
    try {
      if (parts[0] == "concept") {
        if (parts.size() != 2 && !(parts.size() == 4 && parts[2] == "isa")) {
          throw ParseError(lineno, "expected 'concept <id> [isa <id>[,<id>...]]'");
        }
        const auto id = ConceptId::parse(parts[1]);
        auto& decl = decls[id];
        if (decl.line == 0) {
          decl.line = lineno;
          order.push_back(id);
        }
        if (parts.size() == 4) {
          for (const auto& p : text::split(parts[3], ',')) decl.parents.push_back(ConceptId::parse(p));
        }
      } else if (parts[0] == "triple") {
        if (parts.size() != 4) throw ParseError(lineno, "expected 'triple <subj> <pred> <obj>'");
        graph.add_triple(Triple{ConceptId::parse(parts[1]), ConceptId::parse(parts[2]),
                                Node{ConceptId::parse(parts[3])}});
      } else if (parts[0] == "lit") {
        if (parts.size() < 4) throw ParseError(lineno, "expected 'lit <subj> <pred> <kind>:<lexical>'");
        // The literal runs verbatim to end of line so text values may hold spaces.
        auto rest = line.substr(line.find_first_not_of(" \t"));
        for (int k = 0; k < 3; ++k) {
          rest = rest.substr(rest.find_first_of(" \t"));
          rest = rest.substr(rest.find_first_not_of(" \t"));
        }
        graph.add_triple(Triple{ConceptId::parse(parts[1]), ConceptId::parse(parts[2]), Node{Literal::parse(rest)}});
      } else {
        throw ParseError(lineno, "unknown line kind '" + parts[0] + "'");
      }
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(lineno, e.detail());
    }
  }

  enum class Mark { None, Active, Done };
  std::map<ConceptId, Mark> marks;
  std::function<void(const ConceptId&)> visit = [&](const ConceptId& id) {
    auto& mark = marks[id];
    if (mark == Mark::Done) return;
    const auto& decl = decls.at(id);
    if (mark == Mark::Active) fail(ErrorCode::CycleError, "is-a cycle through " + id.str() + " (line " +
                                                              std::to_string(decl.line) + ")");
    mark = Mark::Active;
    for (const auto& p : decl.parents) {
      if (!decls.contains(p)) throw ParseError(decl.line, "parent " + p.str() + " is not declared");
      visit(p);
    }
    graph.declare_concept(id, decl.parents);
    marks[id] = Mark::Done;
  };
  for (const auto& id : order) visit(id);
  return graph;
}

OntologyGraph load_graph(const std::string& path, std::string name) {
  return parse_graph(text::read_file(path), std::move(name));
}

std::string serialize_graph(const OntologyGraph& graph) {
  std::vector<std::string> concepts;
  for (const auto& [id, parents] : graph.concepts()) {
    std::string line = "concept " + id.str();
    if (!parents.empty()) {
      std::vector<std::string> ps;
      for (const auto& p : parents) ps.push_back(p.str());
      line += " isa " + text::join(ps, ",");
    }
    concepts.push_back(std::move(line));
  }
  std::vector<std::string> triples;
  for (const auto& t : graph.triples()) {
    const bool lit = std::holds_alternative<Literal>(t.object);
    triples.push_back(std::string(lit ? "lit " : "triple ") + t.subject.str() + " " + t.predicate.str() + " " +
                      render(t.object));
  }
  std::sort(concepts.begin(), concepts.end());
  std::sort(triples.begin(), triples.end());
  std::string out;
  for (const auto& l : concepts) out += l + "\n";
  for (const auto& l : triples) out += l + "\n";
  return out;
}

void save_graph(const OntologyGraph& graph, const std::string& path) {
  text::write_file(path, serialize_graph(graph));
}

// --- Ontology ---------------------------------------------------------------

Ontology::Ontology(const Ontology& other) : graphs_(other.snapshot()) {}

Ontology& Ontology::operator=(const Ontology& other) {
  if (this != &other) {
    auto snap = other.snapshot();
    std::lock_guard lock(mu_);
    graphs_ = std::move(snap);
  }
  return *this;
}

Ontology::GraphPtr Ontology::publish(OntologyGraph graph) {
  const auto name = graph.name();
  std::vector<OntologyGraph> one;
  one.push_back(std::move(graph));
  publish_all(std::move(one));
  return this->graph(name);
}

void Ontology::publish_all(std::vector<OntologyGraph> graphs) {
  std::lock_guard lock(mu_);
  std::set<std::string> incoming;
  for (const auto& g : graphs) incoming.insert(g.name());
  const auto declared = [&](const ConceptId& id) {
    for (const auto& g : graphs) {
      if (g.declared(id)) return true;
    }
    for (const auto& [name, g] : graphs_) {
      if (!incoming.contains(name) && g->declared(id)) return true;
    }
    return false;
  };
  for (const auto& g : graphs) {
    for (const auto& t : g.triples()) {
      if (!declared(t.predicate)) {
        fail(ErrorCode::UnknownConcept, "predicate " + t.predicate.str() + " in graph " + g.name() + " is not declared");
      }
    }
  }
  for (auto& g : graphs) {
    auto ptr = std::make_shared<const OntologyGraph>(std::move(g));
    graphs_[ptr->name()] = std::move(ptr);
  }
}

Ontology::Snapshot Ontology::snapshot() const {
  std::lock_guard lock(mu_);
  return graphs_;
}

Ontology::GraphPtr Ontology::graph(const std::string& name) const {
  std::lock_guard lock(mu_);
  const auto it = graphs_.find(name);
  return it == graphs_.end() ? nullptr : it->second;
}

Ontology::GraphPtr Ontology::graph_or_empty(const std::string& name) const {
  if (auto g = graph(name)) return g;
  return std::make_shared<const OntologyGraph>(name);
}

bool Ontology::concept_declared(const ConceptId& id) const {
  std::lock_guard lock(mu_);
  return std::any_of(graphs_.begin(), graphs_.end(), [&](const auto& kv) { return kv.second->declared(id); });
}

}  // namespace vo
