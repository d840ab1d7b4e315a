#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "abq/query.hpp"
#include "abq/relstore.hpp"

namespace abq {

// A basic property route: an attribute whose values characterize an entity
// directly, either on the entity relation itself or through joins that do
// not cross another entity relation.
struct BasicPropertyRoute {
  std::string entity;
  QualifiedAttr attr;
  JoinPath path;  // empty when attr is on the entity relation
  bool numeric = false;
  std::string name;  // stable route id

  friend bool operator==(const BasicPropertyRoute&, const BasicPropertyRoute&) = default;
};

// A derived property: count of association paths from an entity to a
// property value, materialized as (entity_key, value, count).
struct DerivedRelationSpec {
  std::string name;
  std::string entity;
  QualifiedAttr property;
  std::vector<std::string> fact_path;  // 1 or 2 fact tables
  JoinPath path;                       // full traversal entity -> property relation
  // True when this spec produces derived semantic contexts. Paths that are
  // also basic routes (one fact table to a plain property relation) keep
  // their basic reading and do not generate derived contexts.
  bool context_eligible = true;

  friend bool operator==(const DerivedRelationSpec&, const DerivedRelationSpec&) = default;
};

struct DerivedRelation {
  DerivedRelationSpec spec;
  std::vector<DerivedRow> rows;  // sorted by (entity_key, value); count >= 1

  friend bool operator==(const DerivedRelation& a, const DerivedRelation& b) {
    return a.spec == b.spec && a.rows == b.rows;
  }
};

struct Posting {
  std::string relation;
  std::string attr;
  RowId row = 0;

  friend bool operator==(const Posting&, const Posting&) = default;
  friend bool operator<(const Posting& a, const Posting& b) {
    return std::tie(a.relation, a.attr, a.row) < std::tie(b.relation, b.attr, b.row);
  }
};

struct InvertedColumnIndex {
  // normalized text value -> postings, sorted
  std::map<std::string, std::vector<Posting>> entries;

  const std::vector<Posting>& lookup(const std::string& raw) const {
    static const std::vector<Posting> kEmpty;
    auto it = entries.find(normalize_text(raw));
    return it == entries.end() ? kEmpty : it->second;
  }

  friend bool operator==(const InvertedColumnIndex&, const InvertedColumnIndex&) = default;
};

// Precomputed selectivity inputs. Categorical tables count distinct
// entities per value; numeric prefix tables hold cumulative distinct-entity
// counts at every observed value; derived tables hold, per value, the
// number of entities with association strength >= theta for every observed
// theta.
struct SelectivityStats {
  struct Prefix {
    std::vector<Value> values;        // sorted ascending (numeric order)
    std::vector<std::int64_t> cum;    // entities with value <= values[i]

    friend bool operator==(const Prefix&, const Prefix&) = default;
  };
  struct StrengthTable {
    std::vector<std::int64_t> thetas;    // sorted ascending, distinct
    std::vector<std::int64_t> count_ge;  // entities with strength >= thetas[i]

    friend bool operator==(const StrengthTable&, const StrengthTable&) = default;
  };

  std::map<std::string, std::int64_t> base_cardinality;              // entity -> rows
  std::map<std::string, std::map<Value, std::int64_t>> categorical;  // route -> value -> n
  std::map<std::string, Prefix> prefix;                              // route ->
  std::map<std::string, std::map<Value, StrengthTable>> derived;     // relation -> value ->

  std::int64_t base(const std::string& entity) const {
    auto it = base_cardinality.find(entity);
    if (it == base_cardinality.end()) throw Error("no base cardinality for " + entity);
    return it->second;
  }

  std::int64_t categorical_count(const std::string& route, const Value& v) const {
    auto it = categorical.find(route);
    if (it == categorical.end()) throw Error("no categorical stats for route " + route);
    auto jt = it->second.find(v);
    if (jt == it->second.end()) throw Error("unknown value for route " + route + ": " + v.to_text());
    return jt->second;
  }

  // Entities whose value along the route is <= x.
  std::int64_t prefix_count_le(const std::string& route, double x) const {
    auto it = prefix.find(route);
    if (it == prefix.end()) throw Error("no prefix stats for route " + route);
    const auto& p = it->second;
    auto ub = std::upper_bound(p.values.begin(), p.values.end(), x,
                               [](double lhs, const Value& rhs) { return lhs < rhs.numeric(); });
    if (ub == p.values.begin()) return 0;
    return p.cum[static_cast<std::size_t>(ub - p.values.begin()) - 1];
  }

  std::int64_t derived_count_ge(const std::string& relation, const Value& v,
                                std::int64_t theta) const {
    auto it = derived.find(relation);
    if (it == derived.end()) throw Error("no derived stats for relation " + relation);
    auto jt = it->second.find(v);
    if (jt == it->second.end())
      throw Error("unknown value for derived relation " + relation + ": " + v.to_text());
    const auto& t = jt->second;
    auto lb = std::lower_bound(t.thetas.begin(), t.thetas.end(), theta);
    if (lb == t.thetas.end()) return 0;
    return t.count_ge[static_cast<std::size_t>(lb - t.thetas.begin())];
  }

  friend bool operator==(const SelectivityStats&, const SelectivityStats&) = default;
};

// ---------------------------------------------------------------------------
// Discovery

inline std::vector<BasicPropertyRoute> enumerate_basic_routes(const SchemaConfig& schema) {
  std::vector<BasicPropertyRoute> routes;
  auto add = [&](const std::string& entity, const QualifiedAttr& attr, JoinPath path) {
    const auto* rel = schema.find_relation(attr.relation);
    const auto* spec = rel ? rel->find(attr.attr) : nullptr;
    if (!spec) return;
    if (spec->kind != AttrKind::Categorical && !is_numeric_kind(spec->kind))
      return;  // keys and free text never produce contexts
    BasicPropertyRoute r;
    r.entity = entity;
    r.attr = attr;
    r.path = std::move(path);
    r.numeric = is_numeric_kind(spec->kind);
    r.name = entity + ":" + attr.str();
    if (!r.path.empty()) {
      // The joining attribute disambiguates parallel edges to one relation.
      r.name += ":via";
      for (const auto& h : r.path.hops) r.name += ":" + h.source() + "." + h.source_attr();
    }
    routes.push_back(std::move(r));
  };

  for (const auto& entity : schema.entity_relations) {
    // Attributes on the entity relation itself.
    for (const auto& pa : schema.property_attributes)
      if (pa.relation == entity) add(entity, pa, {});

    // One forward hop: entity.fk -> R.key (functional lookup).
    for (const auto& e : schema.fk_edges_from(entity)) {
      if (e.to_relation == entity) continue;
      for (const auto& pa : schema.property_attributes)
        if (pa.relation == e.to_relation) add(entity, pa, JoinPath{{JoinHop{e, true}}});
    }

    // One reverse hop: R.fk -> entity.key, R neither fact nor entity
    // (a satellite property relation).
    for (const auto& e : schema.fk_edges_into(entity)) {
      const std::string& r1 = e.from_relation;
      if (schema.is_fact(r1) || schema.is_entity(r1)) continue;
      for (const auto& pa : schema.property_attributes)
        if (pa.relation == r1) add(entity, pa, JoinPath{{JoinHop{e, false}}});
    }

    // Through one fact table to a plain property relation, e.g.
    // movie <- movietogenre -> genre.
    for (const auto& e : schema.fk_edges_into(entity)) {
      const std::string& fact = e.from_relation;
      if (!schema.is_fact(fact)) continue;
      for (const auto& e2 : schema.fk_edges_from(fact)) {
        if (e2 == e) continue;
        const std::string& r1 = e2.to_relation;
        if (r1 == entity || schema.is_entity(r1) || schema.is_fact(r1)) continue;
        for (const auto& pa : schema.property_attributes)
          if (pa.relation == r1)
            add(entity, pa, JoinPath{{JoinHop{e, false}, JoinHop{e2, true}}});
      }
    }
  }
  std::sort(routes.begin(), routes.end(),
            [](const BasicPropertyRoute& a, const BasicPropertyRoute& b) { return a.name < b.name; });
  return routes;
}

// Every simple path entity -> fact (-> fact) -> property attribute, up to
// `max_fact_depth` fact tables, yields exactly one derived-relation spec.
// Depth is a global setting; associations deeper than two fact tables are
// out of scope.
inline std::vector<DerivedRelationSpec> discover_derived_relations(const SchemaConfig& schema,
                                                                   int max_fact_depth = 2) {
  if (max_fact_depth < 1 || max_fact_depth > 2)
    throw ConfigError("association depth must be 1 or 2");
  std::vector<DerivedRelationSpec> specs;
  auto props_on = [&](const std::string& rel) {
    std::vector<QualifiedAttr> out;
    for (const auto& pa : schema.property_attributes)
      if (pa.relation == rel) out.push_back(pa);
    return out;
  };
  auto add = [&](const std::string& entity, const QualifiedAttr& prop,
                 std::vector<std::string> facts, JoinPath path) {
    DerivedRelationSpec s;
    s.entity = entity;
    s.property = prop;
    s.fact_path = std::move(facts);
    s.path = std::move(path);
    specs.push_back(std::move(s));
  };

  for (const auto& entity : schema.entity_relations) {
    for (const auto& fk_e : schema.fk_edges_into(entity)) {
      const std::string& f1 = fk_e.from_relation;
      if (!schema.is_fact(f1)) continue;
      JoinHop hop0{fk_e, false};

      for (const auto& pa : props_on(f1))
        add(entity, pa, {f1}, JoinPath{{hop0}});

      for (const auto& e2 : schema.fk_edges_from(f1)) {
        if (e2 == fk_e) continue;
        const std::string& r1 = e2.to_relation;
        if (r1 == entity || r1 == f1) continue;
        JoinHop hop1{e2, true};

        for (const auto& pa : props_on(r1))
          add(entity, pa, {f1}, JoinPath{{hop0, hop1}});

        if (max_fact_depth < 2) continue;
        for (const auto& fk3 : schema.fk_edges_into(r1)) {
          const std::string& f2 = fk3.from_relation;
          if (!schema.is_fact(f2) || f2 == f1 || f2 == entity || f2 == r1) continue;
          JoinHop hop2{fk3, false};

          for (const auto& pa : props_on(f2))
            add(entity, pa, {f1, f2}, JoinPath{{hop0, hop1, hop2}});

          for (const auto& fk4 : schema.fk_edges_from(f2)) {
            if (fk4 == fk3) continue;
            const std::string& r2 = fk4.to_relation;
            if (r2 == entity || r2 == r1 || r2 == f1 || r2 == f2) continue;
            JoinHop hop3{fk4, true};
            for (const auto& pa : props_on(r2))
              add(entity, pa, {f1, f2}, JoinPath{{hop0, hop1, hop2, hop3}});
          }
        }
      }
    }
  }

  std::sort(specs.begin(), specs.end(), [](const DerivedRelationSpec& a, const DerivedRelationSpec& b) {
    return std::tie(a.entity, a.fact_path, a.property) < std::tie(b.entity, b.fact_path, b.property) ||
           (std::tie(a.entity, a.fact_path, a.property) == std::tie(b.entity, b.fact_path, b.property) &&
            a.path.signature() < b.path.signature());
  });

  // Paths that double as basic routes keep the basic reading.
  auto basic = enumerate_basic_routes(schema);
  for (auto& s : specs) {
    s.context_eligible = true;
    for (const auto& r : basic) {
      if (r.entity == s.entity && r.attr == s.property && r.path == s.path) {
        s.context_eligible = false;
        break;
      }
    }
  }

  // Stable unique names.
  std::map<std::string, int> used;
  for (auto& s : specs) {
    std::string base = s.entity + "_to_" + s.property.relation + "_" + s.property.attr;
    int n = ++used[base];
    s.name = n == 1 ? base : base + "_" + std::to_string(n);
  }
  return specs;
}

// ---------------------------------------------------------------------------
// Materialization

namespace detail {

template <typename Fn>
void walk_path(const RelStore& store, const std::string& rel, RowId row,
               const std::vector<JoinHop>& hops, std::size_t i, Fn&& fn) {
  if (i == hops.size()) {
    fn(rel, row);
    return;
  }
  const auto& hop = hops[i];
  const Table& src = store.table(rel);
  const Value& v = src.cell(row, src.attr_index(hop.source_attr()));
  if (v.is_null()) return;
  for (RowId next : store.rows_with_value(hop.target(), hop.target_attr(), v))
    walk_path(store, hop.target(), next, hops, i + 1, fn);
}

}  // namespace detail

inline DerivedRelation materialize_derived(const DerivedRelationSpec& spec, const RelStore& store) {
  const Table& entity_table = store.table(spec.entity);
  auto key_attr = store.schema().key_attr(spec.entity);
  if (!key_attr) throw ConfigError("entity relation has no key: " + spec.entity);
  std::size_t key_col = entity_table.attr_index(*key_attr);

  std::map<std::pair<Value, Value>, std::int64_t> counts;
  for (RowId r = 0; r < static_cast<RowId>(entity_table.row_count()); ++r) {
    const Value& ek = entity_table.cell(r, key_col);
    detail::walk_path(store, spec.entity, r, spec.path.hops, 0,
                      [&](const std::string& rel, RowId row) {
                        const Table& t = store.table(rel);
                        const Value& v = t.cell(row, t.attr_index(spec.property.attr));
                        if (v.is_null()) return;  // property absent
                        ++counts[{ek, v}];
                      });
  }

  DerivedRelation out;
  out.spec = spec;
  out.rows.reserve(counts.size());
  constexpr std::int64_t kMaxCount = std::int64_t(1) << 31;
  for (const auto& [kv, n] : counts) {
    if (n > kMaxCount) throw Error("association count overflow in " + spec.name);
    out.rows.push_back({kv.first, kv.second, n});
  }
  return out;
}

inline InvertedColumnIndex build_inverted_index(const RelStore& store) {
  InvertedColumnIndex index;
  for (const auto& rel : store.schema().relations) {
    if (!store.has_table(rel.name)) continue;
    const Table& t = store.table(rel.name);
    for (std::size_t c = 0; c < t.attributes.size(); ++c) {
      if (t.attributes[c].kind != AttrKind::Text) continue;
      for (RowId r = 0; r < static_cast<RowId>(t.row_count()); ++r) {
        const Value& v = t.cell(r, c);
        if (v.is_null()) continue;
        std::string norm = normalize_text(v.as_string());
        if (norm.empty()) continue;
        index.entries[norm].push_back({rel.name, t.attributes[c].name, r});
      }
    }
  }
  for (auto& [k, postings] : index.entries) std::sort(postings.begin(), postings.end());
  return index;
}

// Distinct values an entity row exhibits along a basic route.
inline std::vector<Value> route_values(const RelStore& store, const BasicPropertyRoute& route,
                                       RowId entity_row) {
  std::set<Value> vals;
  detail::walk_path(store, route.entity, entity_row, route.path.hops, 0,
                    [&](const std::string& rel, RowId row) {
                      const Table& t = store.table(rel);
                      const Value& v = t.cell(row, t.attr_index(route.attr.attr));
                      if (!v.is_null()) vals.insert(v);
                    });
  return {vals.begin(), vals.end()};
}

inline SelectivityStats compute_selectivity_stats(const RelStore& store,
                                                  const std::vector<BasicPropertyRoute>& routes,
                                                  const std::vector<DerivedRelation>& derived) {
  SelectivityStats stats;
  for (const auto& entity : store.schema().entity_relations)
    stats.base_cardinality[entity] =
        static_cast<std::int64_t>(store.table(entity).row_count());

  for (const auto& route : routes) {
    const Table& t = store.table(route.entity);
    if (route.numeric) {
      std::vector<double> entity_min;
      std::set<Value> observed;
      for (RowId r = 0; r < static_cast<RowId>(t.row_count()); ++r) {
        auto vals = route_values(store, route, r);
        if (vals.empty()) continue;
        double mn = vals.front().numeric();
        for (const auto& v : vals) {
          observed.insert(v);
          mn = std::min(mn, v.numeric());
        }
        entity_min.push_back(mn);
      }
      std::sort(entity_min.begin(), entity_min.end());
      SelectivityStats::Prefix p;
      for (const auto& v : observed) {
        auto ub = std::upper_bound(entity_min.begin(), entity_min.end(), v.numeric());
        p.values.push_back(v);
        p.cum.push_back(static_cast<std::int64_t>(ub - entity_min.begin()));
      }
      std::sort(p.values.begin(), p.values.end(),
                [](const Value& a, const Value& b) { return a.numeric() < b.numeric(); });
      stats.prefix[route.name] = std::move(p);
    } else {
      auto& table = stats.categorical[route.name];
      for (RowId r = 0; r < static_cast<RowId>(t.row_count()); ++r)
        for (const auto& v : route_values(store, route, r)) ++table[v];
    }
  }

  for (const auto& d : derived) {
    auto& per_value = stats.derived[d.spec.name];
    std::map<Value, std::vector<std::int64_t>> strengths;
    for (const auto& row : d.rows) strengths[row.value].push_back(row.count);
    for (auto& [v, counts] : strengths) {
      std::sort(counts.begin(), counts.end());
      SelectivityStats::StrengthTable tbl;
      for (std::size_t i = 0; i < counts.size(); ++i) {
        if (i == 0 || counts[i] != counts[i - 1]) {
          tbl.thetas.push_back(counts[i]);
          tbl.count_ge.push_back(static_cast<std::int64_t>(counts.size() - i));
        }
      }
      per_value[v] = std::move(tbl);
    }
  }
  return stats;
}

// ---------------------------------------------------------------------------
// The assembled abduction database.

class Adb : public DerivedIndex {
public:
  static constexpr int kFormatVersion = 1;

  std::vector<BasicPropertyRoute> routes;
  std::vector<DerivedRelationSpec> specs;
  std::vector<DerivedRelation> relations;  // same order as specs
  InvertedColumnIndex index;
  SelectivityStats stats;
  std::string source_checksum;

  const DerivedRelation* find_relation(const std::string& name) const {
    for (const auto& d : relations)
      if (d.spec.name == name) return &d;
    return nullptr;
  }

  const BasicPropertyRoute* find_route(const std::string& name) const {
    for (const auto& r : routes)
      if (r.name == name) return &r;
    return nullptr;
  }

  std::vector<const DerivedRow*> derived_rows(const std::string& relation,
                                              const Value& entity_key) const override {
    std::vector<const DerivedRow*> out;
    auto it = by_entity_.find(relation);
    if (it == by_entity_.end()) {
      if (!find_relation(relation)) throw Error("unknown derived relation: " + relation);
      return out;
    }
    auto jt = it->second.find(entity_key);
    if (jt == it->second.end()) return out;
    const auto& rel = *find_relation(relation);
    out.reserve(jt->second.size());
    for (auto idx : jt->second) out.push_back(&rel.rows[idx]);
    return out;
  }

  void rebuild_lookup() {
    by_entity_.clear();
    for (const auto& d : relations) {
      auto& m = by_entity_[d.spec.name];
      for (std::size_t i = 0; i < d.rows.size(); ++i)
        m[d.rows[i].entity_key].push_back(i);
    }
  }

  friend bool operator==(const Adb& a, const Adb& b) {
    return a.routes == b.routes && a.specs == b.specs && a.relations == b.relations &&
           a.index == b.index && a.stats == b.stats && a.source_checksum == b.source_checksum;
  }

private:
  std::unordered_map<std::string,
                     std::unordered_map<Value, std::vector<std::size_t>, ValueHash>>
      by_entity_;
};

inline std::string store_fingerprint(const RelStore& store) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ull;
    }
    h ^= 0xff;
    h *= 1099511628211ull;
  };
  for (const auto& rel : store.schema().relations) {
    mix(rel.name);
    if (!store.has_table(rel.name)) continue;
    const Table& t = store.table(rel.name);
    for (const auto& col : t.columns)
      for (const auto& v : col) mix(v.to_text());
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline Adb build_adb(const RelStore& store, int max_fact_depth = 2) {
  Adb adb;
  adb.routes = enumerate_basic_routes(store.schema());
  adb.specs = discover_derived_relations(store.schema(), max_fact_depth);
  adb.relations.reserve(adb.specs.size());
  for (const auto& spec : adb.specs) adb.relations.push_back(materialize_derived(spec, store));
  adb.index = build_inverted_index(store);
  adb.stats = compute_selectivity_stats(store, adb.routes, adb.relations);
  adb.source_checksum = store_fingerprint(store);
  adb.rebuild_lookup();
  return adb;
}

}  // namespace abq
