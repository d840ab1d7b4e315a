#pragma once

#include <chrono>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "abq/pipeline.hpp"
#include "abq/qbuild.hpp"
#include "abq/synth.hpp"

namespace abq {

struct Metrics {
  double precision = 0;
  double recall = 0;
  double fscore = 0;
};

inline Metrics metrics(const std::set<Value>& predicted, const std::set<Value>& truth) {
  std::size_t overlap = 0;
  for (const auto& v : predicted)
    if (truth.count(v)) ++overlap;
  Metrics m;
  m.precision = predicted.empty() ? 0.0
                                  : static_cast<double>(overlap) /
                                        static_cast<double>(predicted.size());
  m.recall = truth.empty() ? 0.0
                           : static_cast<double>(overlap) / static_cast<double>(truth.size());
  m.fscore = (m.precision + m.recall) > 0
                 ? 2 * m.precision * m.recall / (m.precision + m.recall)
                 : 0.0;
  return m;
}

struct BenchmarkCase {
  std::string id;
  nlohmann::json truth_doc;
  std::vector<std::size_t> sizes;
  int trials = 1;
  std::uint64_t seed = 0;
  std::string preset;  // "", "qbe", or "qre"
};

struct MetricsRow {
  std::string case_id;
  std::size_t size = 0;
  double precision = 0;
  double recall = 0;
  double fscore = 0;
  double abduction_ms = 0;
  double predicate_count = 0;
};

struct BenchmarkReport {
  std::vector<MetricsRow> rows;
  std::vector<std::string> notices;
  std::size_t containment_violations = 0;  // abduced output must cover its examples
  std::size_t trials_run = 0;
};

inline std::vector<BenchmarkCase> parse_benchmark(const nlohmann::json& doc) {
  std::vector<BenchmarkCase> cases;
  for (const auto& cj : doc.at("cases")) {
    BenchmarkCase c;
    c.id = cj.at("id").get<std::string>();
    c.truth_doc = cj.at("truth");
    for (const auto& s : cj.at("sizes")) c.sizes.push_back(s.get<std::size_t>());
    c.trials = cj.value("trials", 1);
    c.seed = cj.value("seed", std::uint64_t(0));
    c.preset = cj.value("preset", std::string());
    if (c.trials < 1) throw ConfigError("benchmark case " + c.id + ": trials must be >= 1");
    cases.push_back(std::move(c));
  }
  return cases;
}

// Uniform sample of `n` values without replacement (partial Fisher-Yates).
inline std::vector<Value> sample_without_replacement(const std::set<Value>& pool,
                                                     std::size_t n, Rng& rng) {
  std::vector<Value> v(pool.begin(), pool.end());
  n = std::min(n, v.size());
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t j = i + static_cast<std::size_t>(rng.below(v.size() - i));
    std::swap(v[i], v[j]);
  }
  v.resize(n);
  return v;
}

inline AbductionParams params_for_preset(const std::string& preset,
                                         const AbductionParams& defaults) {
  if (preset.empty() || preset == "qbe") return defaults;
  if (preset == "qre") return AbductionParams::qre_optimistic();
  throw ConfigError("unknown preset: " + preset);
}

// Runs each case: samples example sets from the truth output at every
// requested size, abduces, evaluates, and averages metrics across trials.
inline BenchmarkReport run_benchmark(const std::vector<BenchmarkCase>& cases,
                                     const RelStore& store, const Adb& adb,
                                     const AbductionParams& defaults) {
  BenchmarkReport report;
  for (const auto& c : cases) {
    CandidateQuery truth_query = query_from_json(c.truth_doc, store.schema(), adb);
    std::set<Value> truth = eval_query(store, truth_query, &adb);
    if (truth.empty()) {
      report.notices.push_back("case " + c.id + ": empty ground-truth output, skipped");
      continue;
    }
    AbductionParams params = params_for_preset(c.preset, defaults);

    for (std::size_t size : c.sizes) {
      if (size > truth.size()) {
        report.notices.push_back("case " + c.id + ": sample size " + std::to_string(size) +
                                 " exceeds truth cardinality " + std::to_string(truth.size()) +
                                 ", skipped");
        continue;
      }
      MetricsRow row;
      row.case_id = c.id;
      row.size = size;
      for (int trial = 0; trial < c.trials; ++trial) {
        Rng rng(c.seed * 0x9e3779b97f4a7c15ull + size * 1315423911ull +
                static_cast<std::uint64_t>(trial) + 1);
        auto sample = sample_without_replacement(truth, size, rng);
        std::vector<std::string> examples;
        examples.reserve(sample.size());
        for (const auto& v : sample) examples.push_back(v.to_text());

        auto t0 = std::chrono::steady_clock::now();
        PipelineResult pr = run_abduction(examples, store, adb, params);
        auto t1 = std::chrono::steady_clock::now();
        const auto& best = pr.best();
        std::set<Value> predicted = eval_query(store, best.query, &adb);

        for (const auto& v : sample)
          if (!predicted.count(v)) {
            ++report.containment_violations;
            break;
          }

        Metrics m = metrics(predicted, truth);
        row.precision += m.precision;
        row.recall += m.recall;
        row.fscore += m.fscore;
        row.abduction_ms += std::chrono::duration<double, std::milli>(t1 - t0).count();
        EmittedQuery emitted = emit_sql(best.query, SqlMode::Adb, store.schema(), adb);
        row.predicate_count += static_cast<double>(emitted.predicate_count);
        ++report.trials_run;
      }
      double t = static_cast<double>(c.trials);
      row.precision /= t;
      row.recall /= t;
      row.fscore /= t;
      row.abduction_ms /= t;
      row.predicate_count /= t;
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

inline std::string report_to_csv(const BenchmarkReport& report) {
  std::ostringstream out;
  out << "case_id,size,precision,recall,fscore,abduction_ms,predicates\n";
  char buf[64];
  for (const auto& r : report.rows) {
    std::snprintf(buf, sizeof(buf), "%.6f,%.6f,%.6f", r.precision, r.recall, r.fscore);
    out << r.case_id << ',' << r.size << ',' << buf << ',';
    std::snprintf(buf, sizeof(buf), "%.3f", r.abduction_ms);
    out << buf << ',';
    std::snprintf(buf, sizeof(buf), "%.2f", r.predicate_count);
    out << buf << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Random queries within the supported family, for round-trip experiments.

struct RandomQueryConfig {
  int basic_min = 1;
  int basic_max = 3;
  int derived_max = 1;           // 0 or 1 derived predicate
  std::size_t result_min = 2;    // regenerate until satisfied
  std::size_t result_max = 400;
  int attempts = 200;
};

// Draws a person-rooted query with 1-3 basic predicates and at most one
// derived predicate over the synthetic schema, retrying until the result
// cardinality lands in range.
inline CandidateQuery random_synth_query(const RelStore& store, const Adb& adb, Rng& rng,
                                         const RandomQueryConfig& cfg = {}) {
  const Table& person = store.table("person");
  const Table& genre = store.table("genre");

  for (int attempt = 0; attempt < cfg.attempts; ++attempt) {
    CandidateQuery q;
    q.base.root = "person";
    q.base.projection = {"person", "name"};

    int n_basic = static_cast<int>(rng.range(cfg.basic_min, cfg.basic_max));
    std::vector<int> attrs{0, 1, 2};  // gender, country, age
    for (int i = 0; i < n_basic && !attrs.empty(); ++i) {
      std::size_t pick = static_cast<std::size_t>(rng.below(attrs.size()));
      int attr = attrs[pick];
      attrs.erase(attrs.begin() + static_cast<std::ptrdiff_t>(pick));
      Filter f;
      if (attr == 0 || attr == 1) {
        const char* name = attr == 0 ? "gender" : "country";
        RowId row = static_cast<RowId>(rng.below(person.row_count()));
        const Value& v = person.cell(row, person.attr_index(name));
        f.kind = FilterKind::BasicCategorical;
        f.property.attribute = {"person", name};
        f.property.values = {v};
      } else {
        std::size_t col = person.attr_index("age");
        RowId r1 = static_cast<RowId>(rng.below(person.row_count()));
        RowId r2 = static_cast<RowId>(rng.below(person.row_count()));
        double a = person.cell(r1, col).numeric();
        double b = person.cell(r2, col).numeric();
        f.kind = FilterKind::BasicNumeric;
        f.property.is_range = true;
        f.property.range_lo = Value(static_cast<std::int64_t>(std::min(a, b)));
        f.property.range_hi = Value(static_cast<std::int64_t>(std::max(a, b)));
        f.property.attribute = {"person", "age"};
      }
      f.route = "person:" + f.property.attribute.str();
      q.filters.push_back(std::move(f));
    }

    if (cfg.derived_max > 0 && rng.below(2) == 1) {
      const auto* spec = adb.find_relation("person_to_genre_name");
      if (spec && !spec->rows.empty()) {
        RowId g = static_cast<RowId>(rng.below(genre.row_count()));
        const Value& gname = genre.cell(g, genre.attr_index("name"));
        auto it = adb.stats.derived.find("person_to_genre_name");
        if (it != adb.stats.derived.end()) {
          auto jt = it->second.find(gname);
          if (jt != it->second.end() && !jt->second.thetas.empty()) {
            std::size_t pick = static_cast<std::size_t>(rng.below(jt->second.thetas.size()));
            Filter f;
            f.kind = FilterKind::Derived;
            f.property.attribute = {"genre", "name"};
            f.property.values = {gname};
            f.property.theta = jt->second.thetas[pick];
            f.derived_relation = "person_to_genre_name";
            f.route = f.derived_relation;
            f.provenance = spec->spec.path;
            q.filters.push_back(std::move(f));
          }
        }
      }
    }
    if (q.filters.empty()) continue;

    std::set<Value> result = eval_query(store, q, &adb);
    if (result.size() >= cfg.result_min && result.size() <= cfg.result_max) return q;
  }
  throw Error("could not generate a random query within the cardinality bounds");
}

}  // namespace abq
