#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "abq/csv.hpp"
#include "abq/schema.hpp"
#include "abq/value.hpp"

namespace abq {

using RowId = std::uint32_t;

struct Table {
  std::string name;
  std::vector<AttrSpec> attributes;
  // Column-major cells: columns[attr_index][row].
  std::vector<std::vector<Value>> columns;

  std::size_t row_count() const { return columns.empty() ? 0 : columns[0].size(); }

  std::size_t attr_index(const std::string& attr) const {
    for (std::size_t i = 0; i < attributes.size(); ++i)
      if (attributes[i].name == attr) return i;
    throw ConfigError("unknown attribute " + name + "." + attr);
  }

  const Value& cell(RowId row, std::size_t col) const { return columns[col][row]; }
};

// Domain summary per attribute, collected after load; backs the domain
// coverage computation and whole-domain selectivity checks.
struct DomainSummary {
  std::size_t distinct_count = 0;   // categorical/text
  double num_min = 0;               // numeric kinds, over non-null cells
  double num_max = 0;
  bool has_numeric = false;
};

struct LoadReport {
  std::size_t rows_loaded = 0;
  std::size_t rows_rejected_null_key = 0;
  std::size_t rows_rejected_dangling_fk = 0;
  std::vector<std::string> warnings;
};

class RelStore;

// Single-writer loader; produces an immutable RelStore via finish().
class RelStoreBuilder {
public:
  explicit RelStoreBuilder(SchemaConfig schema) : schema_(std::move(schema)) {}

  // Parses one CSV stream into the named relation. Cells are typed by the
  // declared attribute kind; a row with null in a key or foreign-key column
  // is rejected (counted in the report). Unparseable numeric cells and
  // duplicate primary keys are hard errors naming the offending line.
  LoadReport load_table(const std::string& relation_name, std::istream& in) {
    const auto* spec = schema_.find_relation(relation_name);
    if (!spec) throw ConfigError("relation not declared in schema: " + relation_name);
    if (tables_.count(relation_name))
      throw ConfigError("relation loaded twice: " + relation_name);

    csv::Reader reader(in);
    csv::Row header;
    if (!reader.next(header))
      throw ConfigError(relation_name + ": empty file (missing header row)");

    // Map declared attributes onto header columns.
    std::vector<std::size_t> col_of_attr(spec->attributes.size());
    for (std::size_t i = 0; i < spec->attributes.size(); ++i) {
      auto it = std::find(header.cells.begin(), header.cells.end(), spec->attributes[i].name);
      if (it == header.cells.end())
        throw ConfigError(relation_name + ": missing column " + spec->attributes[i].name);
      col_of_attr[i] = static_cast<std::size_t>(it - header.cells.begin());
    }

    Table table;
    table.name = relation_name;
    table.attributes = spec->attributes;
    table.columns.resize(spec->attributes.size());

    std::optional<std::size_t> key_idx;
    for (std::size_t i = 0; i < spec->attributes.size(); ++i)
      if (spec->attributes[i].kind == AttrKind::Key) key_idx = i;

    std::unordered_set<std::string> seen_keys;
    LoadReport report;
    csv::Row row;
    while (reader.next(row)) {
      if (row.cells.size() == 1 && row.cells[0].empty()) continue;  // blank line
      if (row.cells.size() != header.cells.size())
        throw ConfigError(relation_name + ": line " + std::to_string(row.line_no) +
                          ": expected " + std::to_string(header.cells.size()) +
                          " cells, got " + std::to_string(row.cells.size()));
      std::vector<Value> typed(spec->attributes.size());
      bool reject = false;
      for (std::size_t i = 0; i < spec->attributes.size(); ++i) {
        const auto& a = spec->attributes[i];
        const std::string& raw = row.cells[col_of_attr[i]];
        if (raw.empty()) {
          if (a.kind == AttrKind::Key || a.kind == AttrKind::ForeignKey) {
            reject = true;
            break;
          }
          continue;  // null
        }
        switch (a.kind) {
          case AttrKind::Numeric: {
            auto v = parse_int64(raw);
            if (!v)
              throw ConfigError(relation_name + ": line " + std::to_string(row.line_no) +
                                ": cannot parse integer for " + a.name + ": '" + raw + "'");
            typed[i] = Value(*v);
            break;
          }
          case AttrKind::Decimal: {
            auto v = parse_double(raw);
            if (!v)
              throw ConfigError(relation_name + ": line " + std::to_string(row.line_no) +
                                ": cannot parse decimal for " + a.name + ": '" + raw + "'");
            typed[i] = Value(*v);
            break;
          }
          case AttrKind::Key:
          case AttrKind::ForeignKey: {
            // Keys are int64 when they parse as such, text otherwise.
            if (auto v = parse_int64(raw)) typed[i] = Value(*v);
            else typed[i] = Value(raw);
            break;
          }
          case AttrKind::Categorical:
          case AttrKind::Text:
            typed[i] = Value(raw);
            break;
        }
      }
      if (reject) {
        ++report.rows_rejected_null_key;
        continue;
      }
      if (key_idx) {
        const std::string k = typed[*key_idx].to_text();
        if (!seen_keys.insert(k).second)
          throw ConfigError(relation_name + ": line " + std::to_string(row.line_no) +
                            ": duplicate primary key " + k);
      }
      for (std::size_t i = 0; i < typed.size(); ++i)
        table.columns[i].push_back(std::move(typed[i]));
      ++report.rows_loaded;
    }
    if (report.rows_loaded == 0)
      report.warnings.push_back(relation_name + ": no data rows (header only)");
    if (report.rows_rejected_null_key)
      report.warnings.push_back(relation_name + ": rejected " +
                                std::to_string(report.rows_rejected_null_key) +
                                " rows with null key/foreign-key");
    reports_[relation_name] = report;
    tables_.emplace(relation_name, std::move(table));
    return reports_[relation_name];
  }

  LoadReport load_table_text(const std::string& relation_name, const std::string& text) {
    std::istringstream in(text);
    return load_table(relation_name, in);
  }

  RelStore finish();

private:
  SchemaConfig schema_;
  std::map<std::string, Table> tables_;
  std::map<std::string, LoadReport> reports_;
};

// Immutable after construction; concurrent readers need no locking.
class RelStore {
public:
  const SchemaConfig& schema() const { return schema_; }

  const Table& table(const std::string& name) const {
    auto it = tables_.find(name);
    if (it == tables_.end()) throw ConfigError("relation not loaded: " + name);
    return it->second;
  }
  bool has_table(const std::string& name) const { return tables_.count(name) > 0; }

  const DomainSummary& domain(const QualifiedAttr& qa) const {
    auto it = domains_.find(qa);
    if (it == domains_.end()) throw ConfigError("no domain summary for " + qa.str());
    return it->second;
  }

  // Rows of `relation` whose `attr` equals `v`.
  const std::vector<RowId>& rows_with_value(const std::string& relation,
                                            const std::string& attr,
                                            const Value& v) const {
    static const std::vector<RowId> kEmpty;
    auto it = value_index_.find(QualifiedAttr{relation, attr});
    if (it == value_index_.end()) return kEmpty;
    auto jt = it->second.find(v);
    return jt == it->second.end() ? kEmpty : jt->second;
  }

  // Row of an entity relation by key value; entities have unique keys.
  std::optional<RowId> row_by_key(const std::string& relation, const Value& key) const {
    auto ka = schema_.key_attr(relation);
    if (!ka) return std::nullopt;
    const auto& rows = rows_with_value(relation, *ka, key);
    if (rows.empty()) return std::nullopt;
    return rows.front();
  }

  const std::map<std::string, LoadReport>& load_reports() const { return reports_; }

private:
  friend class RelStoreBuilder;
  SchemaConfig schema_;
  std::map<std::string, Table> tables_;
  std::map<QualifiedAttr, DomainSummary> domains_;
  // (relation, attr) -> value -> row ids, for key/foreign-key/categorical/text.
  std::map<QualifiedAttr, std::unordered_map<Value, std::vector<RowId>, ValueHash>> value_index_;
  std::map<std::string, LoadReport> reports_;
};

inline RelStore RelStoreBuilder::finish() {
  RelStore store;
  store.schema_ = schema_;

  // Drop rows whose foreign keys do not resolve. Key sets come from the
  // loaded tables themselves, so load order does not matter.
  std::map<std::string, std::unordered_set<std::string>> key_sets;
  for (const auto& [name, table] : tables_) {
    auto ka = schema_.key_attr(name);
    if (!ka) continue;
    std::unordered_set<std::string> keys;
    std::size_t col = table.attr_index(*ka);
    for (const auto& v : table.columns[col]) keys.insert(v.to_text());
    key_sets[name] = std::move(keys);
  }

  for (auto& [name, table] : tables_) {
    std::vector<std::pair<std::size_t, const std::unordered_set<std::string>*>> fk_checks;
    for (const auto& e : schema_.fk_edges) {
      if (e.from_relation != name) continue;
      auto it = key_sets.find(e.to_relation);
      if (it == key_sets.end())
        throw ConfigError("relation " + e.to_relation + " must be loaded (referenced by " +
                          name + "." + e.from_attr + ")");
      fk_checks.emplace_back(table.attr_index(e.from_attr), &it->second);
    }
    if (fk_checks.empty()) continue;
    std::vector<bool> keep(table.row_count(), true);
    std::size_t dropped = 0;
    for (std::size_t r = 0; r < table.row_count(); ++r) {
      for (const auto& [col, keys] : fk_checks) {
        if (!keys->count(table.columns[col][r].to_text())) {
          keep[r] = false;
          ++dropped;
          break;
        }
      }
    }
    if (dropped) {
      for (auto& col : table.columns) {
        std::vector<Value> kept;
        kept.reserve(col.size() - dropped);
        for (std::size_t r = 0; r < col.size(); ++r)
          if (keep[r]) kept.push_back(std::move(col[r]));
        col = std::move(kept);
      }
      reports_[name].rows_rejected_dangling_fk = dropped;
      reports_[name].warnings.push_back(name + ": rejected " + std::to_string(dropped) +
                                        " rows with dangling foreign keys");
      reports_[name].rows_loaded -= dropped;
    }
  }

  // Domain summaries and value indexes over the final rows.
  for (const auto& [name, table] : tables_) {
    for (std::size_t i = 0; i < table.attributes.size(); ++i) {
      const auto& a = table.attributes[i];
      QualifiedAttr qa{name, a.name};
      DomainSummary dom;
      if (is_numeric_kind(a.kind)) {
        bool first = true;
        std::set<double> distinct;
        for (const auto& v : table.columns[i]) {
          if (v.is_null()) continue;
          double d = v.numeric();
          distinct.insert(d);
          if (first || d < dom.num_min) dom.num_min = d;
          if (first || d > dom.num_max) dom.num_max = d;
          first = false;
          dom.has_numeric = true;
        }
        dom.distinct_count = distinct.size();
      } else {
        std::unordered_set<std::string> distinct;
        for (const auto& v : table.columns[i])
          if (!v.is_null()) distinct.insert(v.to_text());
        dom.distinct_count = distinct.size();
      }
      store.domains_[qa] = dom;

      auto& idx = store.value_index_[qa];
      for (std::size_t r = 0; r < table.columns[i].size(); ++r) {
        const auto& v = table.columns[i][r];
        if (!v.is_null()) idx[v].push_back(static_cast<RowId>(r));
      }
    }
  }

  store.tables_ = std::move(tables_);
  store.reports_ = std::move(reports_);
  return store;
}

// Loads schema.json plus one <relation>.csv per declared relation from a
// directory. Missing files for declared relations are an error.
inline RelStore load_store_from_dir(const std::filesystem::path& schema_path,
                                    const std::filesystem::path& data_dir,
                                    std::vector<std::string>* warnings = nullptr) {
  std::ifstream sin(schema_path);
  if (!sin) throw ConfigError("cannot open schema file: " + schema_path.string());
  std::stringstream buf;
  buf << sin.rdbuf();
  SchemaConfig schema = load_schema_text(buf.str());
  RelStoreBuilder builder(schema);
  for (const auto& rel : schema.relations) {
    auto path = data_dir / (rel.name + ".csv");
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open data file: " + path.string());
    auto report = builder.load_table(rel.name, in);
    if (warnings)
      warnings->insert(warnings->end(), report.warnings.begin(), report.warnings.end());
  }
  return builder.finish();
}

}  // namespace abq
