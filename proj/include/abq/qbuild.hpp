#pragma once

#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "abq/adb.hpp"
#include "abq/query.hpp"

namespace abq {

enum class SqlMode { Adb, Original };

struct EmittedQuery {
  std::string sql_text;
  SqlMode mode = SqlMode::Adb;
  std::size_t predicate_count = 0;
  std::size_t join_count = 0;
};

// The minimal project-join query for a match, with join paths for the
// discovered contexts; joins stay key-foreign-key only.
inline BaseQuery build_base_query(const std::string& relation, const std::string& attribute,
                                  const std::vector<Filter>& context_filters) {
  BaseQuery base;
  base.root = relation;
  base.projection = {relation, attribute};
  std::vector<JoinPath> paths;
  for (const auto& f : context_filters) {
    if (f.provenance.empty()) continue;
    if (std::find(paths.begin(), paths.end(), f.provenance) == paths.end())
      paths.push_back(f.provenance);
  }
  std::sort(paths.begin(), paths.end());
  base.join_paths = std::move(paths);
  return base;
}

// Attaches the chosen filters and prunes joins that serve none of them;
// every filter keeps its own copy of its join path, so conjunctions over
// the same multi-valued attribute intersect.
inline CandidateQuery assemble_query(const BaseQuery& base, std::vector<Filter> chosen) {
  CandidateQuery q;
  q.base = base;
  q.base.join_paths.clear();  // joins come from the chosen filters only
  std::sort(chosen.begin(), chosen.end(),
            [](const Filter& a, const Filter& b) { return a.sort_key() < b.sort_key(); });
  q.filters = std::move(chosen);
  return q;
}

namespace sqlgen {

inline bool plain_identifier(const std::string& s) {
  if (s.empty()) return false;
  if (!std::isalpha(static_cast<unsigned char>(s[0])) && s[0] != '_') return false;
  for (char c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
  return true;
}

inline std::string ident(const std::string& s) {
  if (plain_identifier(s)) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  return out + "\"";
}

inline std::string literal(const Value& v) {
  if (v.is_int() || v.is_double()) return v.to_text();
  std::string out = "'";
  for (char c : v.to_text()) {
    if (c == '\'') out += "''";
    else out += c;
  }
  return out + "'";
}

// Deterministic alias assignment: first use of a relation keeps its name,
// later uses get _2, _3, ...
class AliasTable {
public:
  explicit AliasTable(const std::string& root) { counts_[root] = 1; }
  std::string fresh(const std::string& relation) {
    int n = ++counts_[relation];
    return n == 1 ? relation : relation + "_" + std::to_string(n);
  }

private:
  std::map<std::string, int> counts_;
};

struct FromItem {
  std::string relation;
  std::string alias;

  std::string sql() const {
    return alias == relation ? ident(relation) : ident(relation) + " AS " + ident(alias);
  }
};

// Emits the chain of join equalities for a filter's provenance path,
// returning the alias of the final relation. A forward hop into a key
// followed by a reverse hop out of the same key skips the intermediate
// relation, joining the two referencing relations directly (the key's
// existence is guaranteed by foreign-key integrity at load).
inline std::string emit_chain(const JoinPath& path, const std::string& root_alias,
                              AliasTable& aliases, std::vector<FromItem>& from,
                              std::vector<std::string>& joins) {
  std::string cur = root_alias;
  for (std::size_t i = 0; i < path.hops.size(); ++i) {
    const auto& hop = path.hops[i];
    if (i + 1 < path.hops.size()) {
      const auto& next_hop = path.hops[i + 1];
      if (hop.forward && !next_hop.forward &&
          hop.edge.to_relation == next_hop.edge.to_relation &&
          hop.edge.to_attr == next_hop.edge.to_attr) {
        std::string next = aliases.fresh(next_hop.edge.from_relation);
        from.push_back({next_hop.edge.from_relation, next});
        joins.push_back(ident(cur) + "." + ident(hop.edge.from_attr) + " = " + ident(next) +
                        "." + ident(next_hop.edge.from_attr));
        cur = next;
        ++i;
        continue;
      }
    }
    std::string next = aliases.fresh(hop.target());
    from.push_back({hop.target(), next});
    joins.push_back(ident(cur) + "." + ident(hop.source_attr()) + " = " + ident(next) + "." +
                    ident(hop.target_attr()));
    cur = next;
  }
  return cur;
}

inline void append_predicates(const Filter& f, const std::string& alias,
                              std::vector<std::string>& preds, std::size_t& count) {
  const std::string attr = ident(alias) + "." + ident(f.property.attribute.attr);
  if (f.kind == FilterKind::BasicNumeric) {
    preds.push_back(attr + " >= " + literal(f.property.range_lo));
    preds.push_back(attr + " <= " + literal(f.property.range_hi));
    count += 2;
  } else {
    preds.push_back(attr + " = " + literal(f.property.values.front()));
    count += 1;
  }
}

}  // namespace sqlgen

// Renders the assembled query as SQL. In adb mode each derived filter is a
// predicate over its derived relation; in original mode it expands to its
// fact-table joins with GROUP BY / HAVING count(*), one block per derived
// filter combined with INTERSECT. Output is byte-stable for equal inputs.
inline EmittedQuery emit_sql(const CandidateQuery& q, SqlMode mode, const SchemaConfig& schema,
                             const Adb& adb) {
  EmittedQuery out;
  out.mode = mode;

  auto key_attr = schema.key_attr(q.base.root);
  const std::string root = q.base.root;
  const std::string proj =
      sqlgen::ident(root) + "." + sqlgen::ident(q.base.projection.attr);

  std::vector<Filter> filters = q.filters;
  std::sort(filters.begin(), filters.end(),
            [](const Filter& a, const Filter& b) { return a.sort_key() < b.sort_key(); });

  std::vector<const Filter*> basics;
  std::vector<const Filter*> derived;
  for (const auto& f : filters)
    (f.is_derived() ? derived : basics).push_back(&f);

  auto render_block = [&](const Filter* derived_filter, bool basics_as_exists) {
    sqlgen::AliasTable aliases(root);
    std::vector<sqlgen::FromItem> from{{root, root}};
    std::vector<std::string> joins;
    std::vector<std::string> preds;
    std::vector<std::string> exists;
    bool group_by = false;
    std::string having;

    for (const Filter* f : basics) {
      if (f->provenance.empty() || !basics_as_exists) {
        std::string alias =
            sqlgen::emit_chain(f->provenance, root, aliases, from, joins);
        sqlgen::append_predicates(*f, alias, preds, out.predicate_count);
        out.join_count += f->provenance.hops.size();
      } else {
        // Correlated existence check keeps the block's count(*) clean.
        std::vector<sqlgen::FromItem> sub_from;
        std::vector<std::string> sub_joins;
        std::vector<std::string> sub_preds;
        std::string cur = sqlgen::emit_chain(f->provenance, root, aliases, sub_from, sub_joins);
        sqlgen::append_predicates(*f, cur, sub_preds, out.predicate_count);
        out.join_count += f->provenance.hops.size();
        std::string sub = "EXISTS (SELECT 1 FROM ";
        for (std::size_t i = 0; i < sub_from.size(); ++i)
          sub += (i ? ", " : "") + sub_from[i].sql();
        sub += " WHERE ";
        std::vector<std::string> conds = sub_joins;
        conds.insert(conds.end(), sub_preds.begin(), sub_preds.end());
        for (std::size_t i = 0; i < conds.size(); ++i) sub += (i ? " AND " : "") + conds[i];
        sub += ")";
        exists.push_back(std::move(sub));
      }
    }

    if (derived_filter) {
      // Original-schema expansion: fact-table joins + GROUP BY/HAVING.
      const Filter& f = *derived_filter;
      std::string alias = sqlgen::emit_chain(f.provenance, root, aliases, from, joins);
      preds.push_back(sqlgen::ident(alias) + "." + sqlgen::ident(f.property.attribute.attr) +
                      " = " + sqlgen::literal(f.property.values.front()));
      out.predicate_count += 2;  // value predicate + HAVING threshold
      out.join_count += f.provenance.hops.size();
      group_by = true;
      having = "count(*) >= " + std::to_string(f.property.theta.value_or(1));
    }

    std::sort(from.begin() + 1, from.end(),
              [](const sqlgen::FromItem& a, const sqlgen::FromItem& b) { return a.alias < b.alias; });
    std::sort(joins.begin(), joins.end());

    std::ostringstream sql;
    sql << "SELECT DISTINCT " << proj << " FROM ";
    for (std::size_t i = 0; i < from.size(); ++i) sql << (i ? ", " : "") << from[i].sql();
    std::vector<std::string> conds = joins;
    conds.insert(conds.end(), preds.begin(), preds.end());
    conds.insert(conds.end(), exists.begin(), exists.end());
    if (!conds.empty()) {
      sql << " WHERE ";
      for (std::size_t i = 0; i < conds.size(); ++i) sql << (i ? " AND " : "") << conds[i];
    }
    if (group_by) {
      sql << " GROUP BY " << sqlgen::ident(root) + "." + sqlgen::ident(*key_attr);
      if (q.base.projection.attr != *key_attr) sql << ", " << proj;
      sql << " HAVING " << having;
    }
    return sql.str();
  };

  std::string text;
  if (mode == SqlMode::Adb || derived.empty()) {
    if (mode == SqlMode::Adb && !derived.empty()) {
      // All derived filters live in one block as plain predicates.
      sqlgen::AliasTable aliases(root);
      std::vector<sqlgen::FromItem> from{{root, root}};
      std::vector<std::string> joins;
      std::vector<std::string> preds;
      for (const Filter* f : basics) {
        std::string alias = sqlgen::emit_chain(f->provenance, root, aliases, from, joins);
        sqlgen::append_predicates(*f, alias, preds, out.predicate_count);
        out.join_count += f->provenance.hops.size();
      }
      for (const Filter* f : derived) {
        if (!adb.find_relation(f->derived_relation))
          throw Error("unknown derived relation: " + f->derived_relation);
        std::string alias = aliases.fresh(f->derived_relation);
        from.push_back({f->derived_relation, alias});
        if (!key_attr) throw Error("derived filter on relation without key: " + root);
        joins.push_back(sqlgen::ident(alias) + ".entity_key = " + sqlgen::ident(root) + "." +
                        sqlgen::ident(*key_attr));
        preds.push_back(sqlgen::ident(alias) + ".value = " +
                        sqlgen::literal(f->property.values.front()));
        preds.push_back(sqlgen::ident(alias) + ".count >= " +
                        std::to_string(f->property.theta.value_or(1)));
        out.predicate_count += 2;
        out.join_count += 1;
      }
      std::sort(from.begin() + 1, from.end(),
                [](const sqlgen::FromItem& a, const sqlgen::FromItem& b) { return a.alias < b.alias; });
      std::sort(joins.begin(), joins.end());
      std::ostringstream sql;
      sql << "SELECT DISTINCT " << proj << " FROM ";
      for (std::size_t i = 0; i < from.size(); ++i) sql << (i ? ", " : "") << from[i].sql();
      std::vector<std::string> conds = joins;
      conds.insert(conds.end(), preds.begin(), preds.end());
      if (!conds.empty()) {
        sql << " WHERE ";
        for (std::size_t i = 0; i < conds.size(); ++i) sql << (i ? " AND " : "") << conds[i];
      }
      text = sql.str();
    } else {
      text = render_block(nullptr, false);
    }
  } else {
    std::vector<std::string> blocks;
    for (const Filter* f : derived) blocks.push_back(render_block(f, true));
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      if (i) text += " INTERSECT ";
      text += blocks[i];
    }
  }
  out.sql_text = text;
  return out;
}

// ---------------------------------------------------------------------------
// Structured query documents: the grammar ground-truth queries arrive in
// and the `ast` emission format.

inline nlohmann::json query_to_json(const CandidateQuery& q) {
  nlohmann::json doc;
  doc["root"] = q.base.root;
  doc["projection"] = q.base.projection.str();
  nlohmann::json filters = nlohmann::json::array();
  std::vector<Filter> sorted = q.filters;
  std::sort(sorted.begin(), sorted.end(),
            [](const Filter& a, const Filter& b) { return a.sort_key() < b.sort_key(); });
  for (const auto& f : sorted) {
    nlohmann::json fj;
    fj["kind"] = to_string(f.kind);
    fj["attribute"] = f.property.attribute.str();
    if (f.kind == FilterKind::BasicNumeric) {
      fj["lo"] = f.property.range_lo.is_double() ? nlohmann::json(f.property.range_lo.as_double())
                                                 : nlohmann::json(f.property.range_lo.as_int());
      fj["hi"] = f.property.range_hi.is_double() ? nlohmann::json(f.property.range_hi.as_double())
                                                 : nlohmann::json(f.property.range_hi.as_int());
    } else {
      const Value& v = f.property.values.front();
      if (v.is_int()) fj["value"] = v.as_int();
      else if (v.is_double()) fj["value"] = v.as_double();
      else fj["value"] = v.as_string();
    }
    if (f.is_derived()) {
      fj["theta"] = f.property.theta.value_or(1);
      fj["relation"] = f.derived_relation;
    }
    filters.push_back(std::move(fj));
  }
  doc["filters"] = std::move(filters);
  return doc;
}

namespace detail {

inline Value value_from_doc(const nlohmann::json& j, AttrKind kind) {
  if (j.is_number_integer()) {
    if (kind == AttrKind::Decimal) return Value(static_cast<double>(j.get<std::int64_t>()));
    if (kind == AttrKind::Categorical || kind == AttrKind::Text)
      return Value(std::to_string(j.get<std::int64_t>()));
    return Value(j.get<std::int64_t>());
  }
  if (j.is_number_float()) return Value(j.get<double>());
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (kind == AttrKind::Numeric) {
      auto v = parse_int64(s);
      if (!v) throw ConfigError("expected integer value, got: " + s);
      return Value(*v);
    }
    if (kind == AttrKind::Decimal) {
      auto v = parse_double(s);
      if (!v) throw ConfigError("expected decimal value, got: " + s);
      return Value(*v);
    }
    return Value(s);
  }
  throw ConfigError("unsupported value in query document");
}

}  // namespace detail

// Parses a structured query document, resolving provenance paths over the
// schema graph and derived-relation references against the adb.
inline CandidateQuery query_from_json(const nlohmann::json& doc, const SchemaConfig& schema,
                                      const Adb& adb) {
  CandidateQuery q;
  q.base.root = doc.at("root").get<std::string>();
  q.base.projection = parse_qualified(doc.at("projection").get<std::string>());
  if (!schema.find_relation(q.base.root)) throw ConfigError("unknown relation: " + q.base.root);

  for (const auto& fj : doc.value("filters", nlohmann::json::array())) {
    const std::string kind = fj.at("kind").get<std::string>();
    QualifiedAttr attr = parse_qualified(fj.at("attribute").get<std::string>());
    const auto* rel = schema.find_relation(attr.relation);
    if (!rel) throw ConfigError("unknown relation in filter: " + attr.relation);
    const auto* aspec = rel->find(attr.attr);
    if (!aspec) throw ConfigError("unknown attribute in filter: " + attr.str());

    Filter f;
    f.property.attribute = attr;
    if (kind == "derived") {
      f.kind = FilterKind::Derived;
      f.property.theta = fj.at("theta").get<std::int64_t>();
      f.property.values = {detail::value_from_doc(fj.at("value"), aspec->kind)};
      if (fj.contains("relation")) {
        f.derived_relation = fj.at("relation").get<std::string>();
        const auto* d = adb.find_relation(f.derived_relation);
        if (!d) throw ConfigError("unknown derived relation: " + f.derived_relation);
        f.provenance = d->spec.path;
      } else {
        const DerivedRelationSpec* match = nullptr;
        for (const auto& s : adb.specs) {
          if (s.entity == q.base.root && s.property == attr) {
            if (match)
              throw ConfigError("ambiguous derived filter on " + attr.str() +
                                "; name the relation explicitly");
            match = &s;
          }
        }
        if (!match) throw ConfigError("no derived relation for " + attr.str());
        f.derived_relation = match->name;
        f.provenance = match->path;
      }
      f.route = f.derived_relation;
    } else if (kind == "basic-numeric") {
      f.kind = FilterKind::BasicNumeric;
      f.property.is_range = true;
      f.property.range_lo = detail::value_from_doc(fj.at("lo"), aspec->kind);
      f.property.range_hi = detail::value_from_doc(fj.at("hi"), aspec->kind);
      if (f.property.range_lo.numeric() > f.property.range_hi.numeric())
        throw ConfigError("numeric range with lo > hi on " + attr.str());
    } else if (kind == "basic-categorical") {
      f.kind = FilterKind::BasicCategorical;
      f.property.values = {detail::value_from_doc(fj.at("value"), aspec->kind)};
    } else {
      throw ConfigError("unknown filter kind: " + kind);
    }

    if (!f.is_derived()) {
      auto path = find_join_path(schema, q.base.root, attr.relation);
      if (!path)
        throw ConfigError("no join path from " + q.base.root + " to " + attr.relation);
      f.provenance = *path;
      // Match a known route id when one exists so selectivity lookups work.
      for (const auto& r : adb.routes)
        if (r.entity == q.base.root && r.attr == attr && r.path == f.provenance) {
          f.route = r.name;
          break;
        }
    }
    q.filters.push_back(std::move(f));
  }
  return q;
}

}  // namespace abq
