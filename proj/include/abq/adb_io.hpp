#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "abq/adb.hpp"
#include "abq/csv.hpp"

namespace abq {
namespace adb_io {

using nlohmann::json;

inline json value_to_json(const Value& v) {
  if (v.is_null()) return json{{"t", "n"}};
  if (v.is_int()) return json{{"t", "i"}, {"v", v.as_int()}};
  if (v.is_double()) return json{{"t", "d"}, {"v", v.as_double()}};
  return json{{"t", "s"}, {"v", v.as_string()}};
}

inline Value value_from_json(const json& j) {
  const std::string t = j.at("t").get<std::string>();
  if (t == "n") return Value();
  if (t == "i") return Value(j.at("v").get<std::int64_t>());
  if (t == "d") return Value(j.at("v").get<double>());
  if (t == "s") return Value(j.at("v").get<std::string>());
  throw ConfigError("bad value tag: " + t);
}

inline json path_to_json(const JoinPath& p) {
  json arr = json::array();
  for (const auto& h : p.hops)
    arr.push_back(json{{"from", h.edge.from_relation + "." + h.edge.from_attr},
                       {"to", h.edge.to_relation + "." + h.edge.to_attr},
                       {"forward", h.forward}});
  return arr;
}

inline JoinPath path_from_json(const json& j) {
  JoinPath p;
  for (const auto& hj : j) {
    auto from = parse_qualified(hj.at("from").get<std::string>());
    auto to = parse_qualified(hj.at("to").get<std::string>());
    p.hops.push_back({FkEdge{from.relation, from.attr, to.relation, to.attr},
                      hj.at("forward").get<bool>()});
  }
  return p;
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write file: " + path.string());
  out << content;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("missing adb component file: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace adb_io

inline void persist_adb(const Adb& adb, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  using nlohmann::json;
  fs::create_directories(dir / "derived");

  json manifest{{"format_version", Adb::kFormatVersion},
                {"source_checksum", adb.source_checksum}};
  adb_io::write_file(dir / "manifest", manifest.dump(2) + "\n");

  json stats;
  stats["routes"] = json::array();
  for (const auto& r : adb.routes)
    stats["routes"].push_back(json{{"entity", r.entity},
                                   {"attr", r.attr.str()},
                                   {"path", adb_io::path_to_json(r.path)},
                                   {"numeric", r.numeric},
                                   {"name", r.name}});
  stats["specs"] = json::array();
  for (const auto& s : adb.specs)
    stats["specs"].push_back(json{{"name", s.name},
                                  {"entity", s.entity},
                                  {"property", s.property.str()},
                                  {"fact_path", s.fact_path},
                                  {"path", adb_io::path_to_json(s.path)},
                                  {"context_eligible", s.context_eligible}});
  stats["base_cardinality"] = adb.stats.base_cardinality;
  json cat = json::object();
  for (const auto& [route, table] : adb.stats.categorical) {
    json rows = json::array();
    for (const auto& [v, n] : table)
      rows.push_back(json{{"value", adb_io::value_to_json(v)}, {"n", n}});
    cat[route] = rows;
  }
  stats["categorical"] = cat;
  json pre = json::object();
  for (const auto& [route, p] : adb.stats.prefix) {
    json values = json::array();
    for (const auto& v : p.values) values.push_back(adb_io::value_to_json(v));
    pre[route] = json{{"values", values}, {"cum", p.cum}};
  }
  stats["prefix"] = pre;
  json der = json::object();
  for (const auto& [rel, per_value] : adb.stats.derived) {
    json rows = json::array();
    for (const auto& [v, tbl] : per_value)
      rows.push_back(json{{"value", adb_io::value_to_json(v)},
                          {"thetas", tbl.thetas},
                          {"count_ge", tbl.count_ge}});
    der[rel] = rows;
  }
  stats["derived"] = der;
  adb_io::write_file(dir / "stats.json", stats.dump(2) + "\n");

  json index = json::object();
  for (const auto& [key, postings] : adb.index.entries) {
    json arr = json::array();
    for (const auto& p : postings)
      arr.push_back(json{{"rel", p.relation}, {"attr", p.attr}, {"row", p.row}});
    index[key] = arr;
  }
  adb_io::write_file(dir / "index.json", json{{"entries", index}}.dump(2) + "\n");

  for (const auto& d : adb.relations) {
    std::ostringstream out;
    csv::write_row(out, {"entity_key", "value", "count"});
    for (const auto& row : d.rows)
      csv::write_row(out, {row.entity_key.to_text(), row.value.to_text(),
                           std::to_string(row.count)});
    adb_io::write_file(dir / "derived" / (d.spec.name + ".csv"), out.str());
  }
}

inline Adb load_adb(const std::filesystem::path& dir, const SchemaConfig& schema) {
  namespace fs = std::filesystem;
  using nlohmann::json;

  json manifest = json::parse(adb_io::read_file(dir / "manifest"));
  int version = manifest.at("format_version").get<int>();
  if (version != Adb::kFormatVersion)
    throw ConfigError("unsupported adb format version " + std::to_string(version) +
                      " (expected " + std::to_string(Adb::kFormatVersion) + ")");

  Adb adb;
  adb.source_checksum = manifest.at("source_checksum").get<std::string>();

  json stats = json::parse(adb_io::read_file(dir / "stats.json"));
  for (const auto& rj : stats.at("routes")) {
    BasicPropertyRoute r;
    r.entity = rj.at("entity").get<std::string>();
    r.attr = parse_qualified(rj.at("attr").get<std::string>());
    r.path = adb_io::path_from_json(rj.at("path"));
    r.numeric = rj.at("numeric").get<bool>();
    r.name = rj.at("name").get<std::string>();
    adb.routes.push_back(std::move(r));
  }
  for (const auto& sj : stats.at("specs")) {
    DerivedRelationSpec s;
    s.name = sj.at("name").get<std::string>();
    s.entity = sj.at("entity").get<std::string>();
    s.property = parse_qualified(sj.at("property").get<std::string>());
    s.fact_path = sj.at("fact_path").get<std::vector<std::string>>();
    s.path = adb_io::path_from_json(sj.at("path"));
    s.context_eligible = sj.at("context_eligible").get<bool>();
    adb.specs.push_back(std::move(s));
  }
  adb.stats.base_cardinality =
      stats.at("base_cardinality").get<std::map<std::string, std::int64_t>>();
  for (const auto& [route, rows] : stats.at("categorical").items()) {
    auto& table = adb.stats.categorical[route];
    for (const auto& rj : rows)
      table[adb_io::value_from_json(rj.at("value"))] = rj.at("n").get<std::int64_t>();
  }
  for (const auto& [route, pj] : stats.at("prefix").items()) {
    SelectivityStats::Prefix p;
    for (const auto& vj : pj.at("values")) p.values.push_back(adb_io::value_from_json(vj));
    p.cum = pj.at("cum").get<std::vector<std::int64_t>>();
    adb.stats.prefix[route] = std::move(p);
  }
  for (const auto& [rel, rows] : stats.at("derived").items()) {
    auto& per_value = adb.stats.derived[rel];
    for (const auto& rj : rows) {
      SelectivityStats::StrengthTable tbl;
      tbl.thetas = rj.at("thetas").get<std::vector<std::int64_t>>();
      tbl.count_ge = rj.at("count_ge").get<std::vector<std::int64_t>>();
      per_value[adb_io::value_from_json(rj.at("value"))] = std::move(tbl);
    }
  }

  json index = json::parse(adb_io::read_file(dir / "index.json"));
  for (const auto& [key, arr] : index.at("entries").items()) {
    auto& postings = adb.index.entries[key];
    for (const auto& pj : arr)
      postings.push_back({pj.at("rel").get<std::string>(), pj.at("attr").get<std::string>(),
                          pj.at("row").get<RowId>()});
  }

  for (const auto& spec : adb.specs) {
    const auto* prop_rel = schema.find_relation(spec.property.relation);
    if (!prop_rel) throw ConfigError("adb references unknown relation: " + spec.property.relation);
    const auto* prop_attr = prop_rel->find(spec.property.attr);
    if (!prop_attr) throw ConfigError("adb references unknown attribute: " + spec.property.str());
    auto key_attr = schema.key_attr(spec.entity);
    if (!key_attr) throw ConfigError("adb entity has no key: " + spec.entity);
    AttrKind key_kind = schema.relation(spec.entity).find(*key_attr)->kind;

    auto parse_cell = [](const std::string& raw, AttrKind kind) -> Value {
      switch (kind) {
        case AttrKind::Numeric: {
          auto v = parse_int64(raw);
          if (!v) throw ConfigError("bad integer in derived csv: " + raw);
          return Value(*v);
        }
        case AttrKind::Decimal: {
          auto v = parse_double(raw);
          if (!v) throw ConfigError("bad decimal in derived csv: " + raw);
          return Value(*v);
        }
        case AttrKind::Key:
        case AttrKind::ForeignKey: {
          if (auto v = parse_int64(raw)) return Value(*v);
          return Value(raw);
        }
        default:
          return Value(raw);
      }
    };

    DerivedRelation d;
    d.spec = spec;
    std::istringstream in(adb_io::read_file(dir / "derived" / (spec.name + ".csv")));
    csv::Reader reader(in);
    csv::Row row;
    if (!reader.next(row) || row.cells.size() != 3)
      throw ConfigError("bad derived csv header in " + spec.name);
    while (reader.next(row)) {
      if (row.cells.size() != 3)
        throw ConfigError("truncated derived csv row in " + spec.name + " line " +
                          std::to_string(row.line_no));
      DerivedRow dr;
      dr.entity_key = parse_cell(row.cells[0], key_kind);
      dr.value = parse_cell(row.cells[1], prop_attr->kind);
      auto n = parse_int64(row.cells[2]);
      if (!n) throw ConfigError("bad count in derived csv " + spec.name);
      dr.count = *n;
      d.rows.push_back(std::move(dr));
    }
    adb.relations.push_back(std::move(d));
  }

  adb.rebuild_lookup();
  return adb;
}

}  // namespace abq
