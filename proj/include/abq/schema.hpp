#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "abq/value.hpp"

namespace abq {

enum class AttrKind { Key, ForeignKey, Categorical, Numeric, Decimal, Text };

inline const char* to_string(AttrKind k) {
  switch (k) {
    case AttrKind::Key: return "key";
    case AttrKind::ForeignKey: return "foreign-key";
    case AttrKind::Categorical: return "categorical";
    case AttrKind::Numeric: return "numeric";
    case AttrKind::Decimal: return "decimal";
    case AttrKind::Text: return "text";
  }
  return "?";
}

inline AttrKind attr_kind_from(const std::string& s) {
  if (s == "key") return AttrKind::Key;
  if (s == "foreign-key" || s == "foreign_key") return AttrKind::ForeignKey;
  if (s == "categorical") return AttrKind::Categorical;
  if (s == "numeric") return AttrKind::Numeric;
  if (s == "decimal") return AttrKind::Decimal;
  if (s == "text") return AttrKind::Text;
  throw ConfigError("unknown attribute kind: " + s);
}

inline bool is_numeric_kind(AttrKind k) {
  return k == AttrKind::Numeric || k == AttrKind::Decimal;
}

struct AttrSpec {
  std::string name;
  AttrKind kind = AttrKind::Text;
};

struct RelationSpec {
  std::string name;
  std::vector<AttrSpec> attributes;

  const AttrSpec* find(const std::string& attr) const {
    for (const auto& a : attributes)
      if (a.name == attr) return &a;
    return nullptr;
  }
  std::optional<std::size_t> index_of(const std::string& attr) const {
    for (std::size_t i = 0; i < attributes.size(); ++i)
      if (attributes[i].name == attr) return i;
    return std::nullopt;
  }
};

// A key-foreign-key edge: from_relation.from_attr references to_relation's key.
struct FkEdge {
  std::string from_relation;
  std::string from_attr;
  std::string to_relation;
  std::string to_attr;

  friend bool operator==(const FkEdge&, const FkEdge&) = default;
};

// Qualified attribute name "relation.attr".
struct QualifiedAttr {
  std::string relation;
  std::string attr;

  std::string str() const { return relation + "." + attr; }
  friend bool operator==(const QualifiedAttr&, const QualifiedAttr&) = default;
  friend bool operator<(const QualifiedAttr& a, const QualifiedAttr& b) {
    return std::tie(a.relation, a.attr) < std::tie(b.relation, b.attr);
  }
};

inline QualifiedAttr parse_qualified(const std::string& s) {
  auto dot = s.find('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 == s.size())
    throw ConfigError("expected relation.attribute, got: " + s);
  return {s.substr(0, dot), s.substr(dot + 1)};
}

struct SchemaConfig {
  std::vector<RelationSpec> relations;
  std::vector<std::string> entity_relations;
  std::vector<QualifiedAttr> property_attributes;
  std::vector<std::string> fact_tables;
  std::vector<FkEdge> fk_edges;

  const RelationSpec* find_relation(const std::string& name) const {
    for (const auto& r : relations)
      if (r.name == name) return &r;
    return nullptr;
  }
  const RelationSpec& relation(const std::string& name) const {
    const auto* r = find_relation(name);
    if (!r) throw ConfigError("unknown relation: " + name);
    return *r;
  }

  bool is_entity(const std::string& name) const {
    return std::find(entity_relations.begin(), entity_relations.end(), name) !=
           entity_relations.end();
  }
  bool is_fact(const std::string& name) const {
    return std::find(fact_tables.begin(), fact_tables.end(), name) != fact_tables.end();
  }
  bool is_property_attr(const QualifiedAttr& qa) const {
    return std::find(property_attributes.begin(), property_attributes.end(), qa) !=
           property_attributes.end();
  }

  // The single key attribute of a relation (entity relations always have
  // exactly one; others may have none).
  std::optional<std::string> key_attr(const std::string& rel) const {
    const auto* r = find_relation(rel);
    if (!r) return std::nullopt;
    for (const auto& a : r->attributes)
      if (a.kind == AttrKind::Key) return a.name;
    return std::nullopt;
  }

  std::vector<FkEdge> fk_edges_from(const std::string& rel) const {
    std::vector<FkEdge> out;
    for (const auto& e : fk_edges)
      if (e.from_relation == rel) out.push_back(e);
    return out;
  }
  std::vector<FkEdge> fk_edges_into(const std::string& rel) const {
    std::vector<FkEdge> out;
    for (const auto& e : fk_edges)
      if (e.to_relation == rel) out.push_back(e);
    return out;
  }

  void validate() const {
    std::set<std::string> names;
    for (const auto& r : relations) {
      if (!names.insert(r.name).second)
        throw ConfigError("duplicate relation name: " + r.name);
      std::set<std::string> attrs;
      for (const auto& a : r.attributes)
        if (!attrs.insert(a.name).second)
          throw ConfigError("duplicate attribute " + r.name + "." + a.name);
    }
    for (const auto& e : fk_edges) {
      const auto* from = find_relation(e.from_relation);
      const auto* to = find_relation(e.to_relation);
      if (!from)
        throw ConfigError("fk_edge references unknown relation: " + e.from_relation);
      if (!to)
        throw ConfigError("fk_edge references unknown relation: " + e.to_relation);
      const auto* fa = from->find(e.from_attr);
      const auto* ta = to->find(e.to_attr);
      if (!fa)
        throw ConfigError("fk_edge references unknown attribute: " +
                          QualifiedAttr{e.from_relation, e.from_attr}.str());
      if (!ta)
        throw ConfigError("fk_edge references unknown attribute: " +
                          QualifiedAttr{e.to_relation, e.to_attr}.str());
      if (ta->kind != AttrKind::Key)
        throw ConfigError("fk_edge target is not a key attribute: " +
                          QualifiedAttr{e.to_relation, e.to_attr}.str());
      if (fa->kind != AttrKind::ForeignKey)
        throw ConfigError("fk_edge source is not a foreign-key attribute: " +
                          QualifiedAttr{e.from_relation, e.from_attr}.str());
    }
    for (const auto& en : entity_relations) {
      const auto* r = find_relation(en);
      if (!r) throw ConfigError("entity relation not declared: " + en);
      int keys = 0;
      for (const auto& a : r->attributes)
        if (a.kind == AttrKind::Key) ++keys;
      if (keys != 1)
        throw ConfigError("entity relation " + en + " must have exactly one key attribute");
    }
    for (const auto& ft : fact_tables) {
      const auto* r = find_relation(ft);
      if (!r) throw ConfigError("fact table not declared: " + ft);
      int fks = 0;
      for (const auto& a : r->attributes)
        if (a.kind == AttrKind::ForeignKey) ++fks;
      if (fks < 2)
        throw ConfigError("fact table " + ft + " must have at least two foreign keys");
    }
    for (const auto& pa : property_attributes) {
      const auto* r = find_relation(pa.relation);
      if (!r) throw ConfigError("property attribute on unknown relation: " + pa.str());
      if (!r->find(pa.attr))
        throw ConfigError("property attribute not declared: " + pa.str());
    }
  }
};

inline SchemaConfig load_schema(const nlohmann::json& doc) {
  SchemaConfig cfg;
  if (!doc.is_object()) throw ConfigError("schema document must be an object");
  for (const auto& rj : doc.value("relations", nlohmann::json::array())) {
    RelationSpec rel;
    rel.name = rj.at("name").get<std::string>();
    for (const auto& aj : rj.at("attributes")) {
      AttrSpec a;
      a.name = aj.at("name").get<std::string>();
      a.kind = attr_kind_from(aj.at("kind").get<std::string>());
      rel.attributes.push_back(std::move(a));
    }
    cfg.relations.push_back(std::move(rel));
  }
  for (const auto& s : doc.value("entity_relations", nlohmann::json::array()))
    cfg.entity_relations.push_back(s.get<std::string>());
  for (const auto& s : doc.value("property_attributes", nlohmann::json::array()))
    cfg.property_attributes.push_back(parse_qualified(s.get<std::string>()));
  for (const auto& s : doc.value("fact_tables", nlohmann::json::array()))
    cfg.fact_tables.push_back(s.get<std::string>());
  for (const auto& ej : doc.value("fk_edges", nlohmann::json::array())) {
    auto from = parse_qualified(ej.at("from").get<std::string>());
    auto to = parse_qualified(ej.at("to").get<std::string>());
    cfg.fk_edges.push_back({from.relation, from.attr, to.relation, to.attr});
  }
  cfg.validate();
  return cfg;
}

inline SchemaConfig load_schema_text(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("schema parse error: ") + e.what());
  }
  return load_schema(doc);
}

}  // namespace abq
