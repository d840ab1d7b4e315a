#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "abq/relstore.hpp"
#include "abq/schema.hpp"
#include "abq/value.hpp"

namespace abq {

// One key-foreign-key traversal step. `forward` walks from the foreign-key
// side to the key side (fact -> dimension); reverse walks key -> foreign-key
// (entity -> referencing relation).
struct JoinHop {
  FkEdge edge;
  bool forward = true;

  const std::string& source() const { return forward ? edge.from_relation : edge.to_relation; }
  const std::string& target() const { return forward ? edge.to_relation : edge.from_relation; }
  const std::string& source_attr() const { return forward ? edge.from_attr : edge.to_attr; }
  const std::string& target_attr() const { return forward ? edge.to_attr : edge.from_attr; }

  friend bool operator==(const JoinHop&, const JoinHop&) = default;
};

// A join path from a root relation to a target relation.
struct JoinPath {
  std::vector<JoinHop> hops;

  bool empty() const { return hops.empty(); }
  const std::string& target(const std::string& root) const {
    return hops.empty() ? root : hops.back().target();
  }
  std::string signature() const {
    std::string sig;
    for (const auto& h : hops) {
      sig += h.forward ? '>' : '<';
      sig += h.edge.from_relation + "." + h.edge.from_attr + "=" + h.edge.to_relation +
             "." + h.edge.to_attr;
    }
    return sig;
  }
  friend bool operator==(const JoinPath&, const JoinPath&) = default;
  friend bool operator<(const JoinPath& a, const JoinPath& b) {
    return a.signature() < b.signature();
  }
};

// Semantic property <A, V, theta>. V is either a categorical value set
// (a singleton everywhere in this engine; the set form exists for
// completeness) or a closed numeric range [lo, hi]. theta is the
// association strength threshold; empty means a basic property.
struct SemanticProperty {
  QualifiedAttr attribute;
  std::vector<Value> values;
  Value range_lo;
  Value range_hi;
  bool is_range = false;
  std::optional<std::int64_t> theta;

  friend bool operator==(const SemanticProperty&, const SemanticProperty&) = default;
};

enum class FilterKind { BasicCategorical, BasicNumeric, Derived };

inline const char* to_string(FilterKind k) {
  switch (k) {
    case FilterKind::BasicCategorical: return "basic-categorical";
    case FilterKind::BasicNumeric: return "basic-numeric";
    case FilterKind::Derived: return "derived";
  }
  return "?";
}

struct Filter {
  FilterKind kind = FilterKind::BasicCategorical;
  SemanticProperty property;
  // For basic filters: path from the root entity relation to the relation
  // holding property.attribute (empty when the attribute is on the root).
  JoinPath provenance;
  // For derived filters: name of the derived relation in the adb.
  std::string derived_relation;
  // Route identifier (entity:attr[:via...]) used for selectivity lookups.
  std::string route;

  bool is_derived() const { return kind == FilterKind::Derived; }

  // Canonical sort key; fixes ledger, alias, and SQL predicate order.
  std::string sort_key() const {
    std::string k = property.attribute.str() + "|";
    if (property.is_range)
      k += property.range_lo.to_text() + ".." + property.range_hi.to_text();
    else
      for (const auto& v : property.values) k += v.to_text();
    if (property.theta) k += "|" + std::to_string(*property.theta);
    k += "|" + route;
    return k;
  }

  friend bool operator==(const Filter&, const Filter&) = default;
};

struct BaseQuery {
  std::string root;          // entity relation
  QualifiedAttr projection;  // attribute on the root relation
  // Join paths required by the discovered contexts (deduplicated). Kept on
  // the base query so eval(base) reflects its join structure; assembly
  // prunes paths that serve no chosen filter.
  std::vector<JoinPath> join_paths;
};

struct CandidateQuery {
  BaseQuery base;
  std::vector<Filter> filters;
};

namespace detail {

// True when some row reachable from `frontier` along hops[i..] satisfies
// the predicate at the path end (or mere reachability when no predicate).
template <typename Pred>
bool path_exists(const RelStore& store, const std::string& rel,
                 const std::vector<RowId>& frontier, const std::vector<JoinHop>& hops,
                 std::size_t i, Pred&& pred) {
  if (i == hops.size()) {
    for (RowId r : frontier)
      if (pred(rel, r)) return true;
    return false;
  }
  const auto& hop = hops[i];
  const Table& src = store.table(rel);
  std::size_t col = src.attr_index(hop.source_attr());
  const std::string& next_rel = hop.target();
  for (RowId r : frontier) {
    const Value& v = src.cell(r, col);
    if (v.is_null()) continue;
    const auto& matches = store.rows_with_value(next_rel, hop.target_attr(), v);
    if (matches.empty()) continue;
    if (path_exists(store, next_rel, matches, hops, i + 1, pred)) return true;
  }
  return false;
}

}  // namespace detail

// Derived relation contents needed by the evaluator; defined here so that
// eval_query does not depend on the full adb header.
struct DerivedRow {
  Value entity_key;
  Value value;
  std::int64_t count = 0;

  friend bool operator==(const DerivedRow&, const DerivedRow&) = default;
  friend bool operator<(const DerivedRow& a, const DerivedRow& b) {
    if (a.entity_key == b.entity_key) {
      if (a.value == b.value) return a.count < b.count;
      return a.value < b.value;
    }
    return a.entity_key < b.entity_key;
  }
};

class DerivedIndex {
public:
  virtual ~DerivedIndex() = default;
  // Rows of the named derived relation for one entity key.
  virtual std::vector<const DerivedRow*> derived_rows(const std::string& relation,
                                                      const Value& entity_key) const = 0;
};

inline bool filter_satisfied_by_row(const RelStore& store, const DerivedIndex* adb,
                                    const std::string& root, RowId root_row,
                                    const Filter& f) {
  const Table& root_table = store.table(root);
  if (f.kind == FilterKind::Derived) {
    if (!adb) throw Error("derived filter requires a loaded adb");
    auto key_attr = store.schema().key_attr(root);
    if (!key_attr) throw Error("derived filter on relation without key: " + root);
    const Value& key = root_table.cell(root_row, root_table.attr_index(*key_attr));
    for (const DerivedRow* row : adb->derived_rows(f.derived_relation, key)) {
      if (!f.property.values.empty() && !(row->value == f.property.values.front())) continue;
      if (f.property.theta && row->count < *f.property.theta) continue;
      return true;
    }
    return false;
  }

  const QualifiedAttr& attr = f.property.attribute;
  auto pred = [&](const std::string& rel, RowId r) {
    const Table& t = store.table(rel);
    const Value& cell = t.cell(r, t.attr_index(attr.attr));
    if (cell.is_null()) return false;  // null = property absent
    if (f.kind == FilterKind::BasicNumeric) {
      double x = cell.numeric();
      return x >= f.property.range_lo.numeric() && x <= f.property.range_hi.numeric();
    }
    for (const auto& v : f.property.values)
      if (cell == v) return true;
    return false;
  };
  std::vector<RowId> frontier{root_row};
  return detail::path_exists(store, root, frontier, f.provenance.hops, 0, pred);
}

// Evaluates a candidate query to the duplicate-free set of projected
// values. Joins are key-foreign-key equalities; each filter constrains its
// own copy of its join path, so conjunctions of filters over the same
// multi-valued attribute behave as intersections (Lemma-1 semantics).
inline std::set<Value> eval_query(const RelStore& store, const CandidateQuery& q,
                                  const DerivedIndex* adb = nullptr) {
  const auto& schema = store.schema();
  if (!schema.find_relation(q.base.root)) throw ConfigError("unknown relation: " + q.base.root);
  if (q.base.projection.relation != q.base.root)
    throw ConfigError("projection must be on the root relation: " + q.base.projection.str());
  const Table& root_table = store.table(q.base.root);
  std::size_t proj_col = root_table.attr_index(q.base.projection.attr);

  for (const auto& f : q.filters)
    if (!f.property.is_range && f.property.values.size() > 1)
      throw ConfigError("disjunctive value sets are not supported");

  std::set<Value> out;
  auto always = [](const std::string&, RowId) { return true; };
  for (RowId r = 0; r < static_cast<RowId>(root_table.row_count()); ++r) {
    bool ok = true;
    for (const auto& path : q.base.join_paths) {
      std::vector<RowId> frontier{r};
      if (!detail::path_exists(store, q.base.root, frontier, path.hops, 0, always)) {
        ok = false;
        break;
      }
    }
    if (!ok) continue;
    for (const auto& f : q.filters) {
      if (!filter_satisfied_by_row(store, adb, q.base.root, r, f)) {
        ok = false;
        break;
      }
    }
    if (!ok) continue;
    const Value& v = root_table.cell(r, proj_col);
    if (!v.is_null()) out.insert(v);
  }
  return out;
}

// Shortest join path between two relations over the schema's fk edges,
// traversed in either direction; ties broken by edge declaration order.
inline std::optional<JoinPath> find_join_path(const SchemaConfig& schema,
                                              const std::string& from,
                                              const std::string& to) {
  if (from == to) return JoinPath{};
  std::map<std::string, std::pair<std::string, JoinHop>> parent;
  std::vector<std::string> frontier{from};
  std::set<std::string> seen{from};
  while (!frontier.empty()) {
    std::vector<std::string> next;
    for (const auto& rel : frontier) {
      std::vector<JoinHop> hops;
      for (const auto& e : schema.fk_edges) {
        if (e.from_relation == rel) hops.push_back({e, true});
        if (e.to_relation == rel) hops.push_back({e, false});
      }
      for (const auto& hop : hops) {
        const std::string& tgt = hop.target();
        if (seen.count(tgt)) continue;
        seen.insert(tgt);
        parent.emplace(tgt, std::make_pair(rel, hop));
        if (tgt == to) {
          JoinPath path;
          std::string cur = to;
          while (cur != from) {
            auto& [prev, h] = parent.at(cur);
            path.hops.push_back(h);
            cur = prev;
          }
          std::reverse(path.hops.begin(), path.hops.end());
          return path;
        }
        next.push_back(tgt);
      }
    }
    frontier = std::move(next);
  }
  return std::nullopt;
}

}  // namespace abq
