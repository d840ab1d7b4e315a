#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "abq/adb_io.hpp"
#include "abq/evalharness.hpp"
#include "abq/pipeline.hpp"

namespace abq {

struct CliConfig {
  std::string data_dir;
  std::string schema_path;
  std::string adb_dir;
  std::string out;          // build-adb output dir / eval report path
  std::string params_file;
  std::string preset;       // "", "qbe", "qre"
  std::string examples_file;
  std::string benchmark_file;
  std::string emit = "adb-sql";  // adb-sql | original-sql | ast
  std::string ledger_path;
  bool force = false;
  bool interactive = false;
  bool show_ledger = false;
  int result_sample = 0;
  int verbosity = 0;

  // Individual parameter overrides; applied when set.
  std::optional<double> rho, gamma, eta, tau_s, outlier_k;
  std::optional<std::int64_t> tau_a;
};

inline AbductionParams resolve_params(const CliConfig& cfg) {
  AbductionParams p;
  if (!cfg.preset.empty()) p = params_for_preset(cfg.preset, p);
  if (!cfg.params_file.empty()) {
    std::ifstream in(cfg.params_file);
    if (!in) throw ConfigError("cannot open params file: " + cfg.params_file);
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("params parse error: ") + e.what());
    }
    if (doc.contains("preset")) p = params_for_preset(doc["preset"].get<std::string>(), p);
    if (doc.contains("rho")) p.rho = doc["rho"].get<double>();
    if (doc.contains("gamma")) p.gamma = doc["gamma"].get<double>();
    if (doc.contains("eta")) p.eta = doc["eta"].get<double>();
    if (doc.contains("tau_a")) p.tau_a = doc["tau_a"].get<std::int64_t>();
    if (doc.contains("tau_s")) p.tau_s = doc["tau_s"].get<double>();
    if (doc.contains("outlier_k")) p.outlier_k = doc["outlier_k"].get<double>();
    if (doc.contains("normalize_strength"))
      p.normalize_strength = doc["normalize_strength"].get<bool>();
  }
  if (cfg.rho) p.rho = *cfg.rho;
  if (cfg.gamma) p.gamma = *cfg.gamma;
  if (cfg.eta) p.eta = *cfg.eta;
  if (cfg.tau_a) p.tau_a = *cfg.tau_a;
  if (cfg.tau_s) p.tau_s = *cfg.tau_s;
  if (cfg.outlier_k) p.outlier_k = *cfg.outlier_k;
  p.validate();
  return p;
}

inline RelStore cli_load_store(const CliConfig& cfg, std::ostream& err) {
  if (cfg.schema_path.empty()) throw ConfigError("--schema is required");
  if (cfg.data_dir.empty()) throw ConfigError("--data-dir is required");
  std::vector<std::string> warnings;
  RelStore store = load_store_from_dir(cfg.schema_path, cfg.data_dir, &warnings);
  if (cfg.verbosity > 0)
    for (const auto& w : warnings) err << "warning: " << w << "\n";
  return store;
}

inline int cmd_build_adb(const CliConfig& cfg, std::ostream& out, std::ostream& err) {
  namespace fs = std::filesystem;
  if (cfg.out.empty()) {
    err << "error: --out is required\n";
    return 1;
  }
  fs::path dir(cfg.out);
  if (fs::exists(dir) && !fs::is_empty(dir) && !cfg.force) {
    err << "error: output directory " << dir.string()
        << " exists and is not empty (use --force to rebuild)\n";
    return 1;
  }
  auto t0 = std::chrono::steady_clock::now();
  RelStore store = cli_load_store(cfg, err);
  Adb adb = build_adb(store);
  persist_adb(adb, dir);
  auto t1 = std::chrono::steady_clock::now();

  out << "adb written to " << dir.string() << "\n";
  for (const auto& rel : store.schema().relations)
    out << "  " << rel.name << ": " << store.table(rel.name).row_count() << " rows\n";
  out << "  derived relations: " << adb.relations.size() << "\n";
  for (const auto& d : adb.relations)
    out << "    " << d.spec.name << ": " << d.rows.size() << " rows\n";
  out << "  index keys: " << adb.index.entries.size() << "\n";
  out << "  build time: "
      << std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count() << " ms\n";
  return 0;
}

inline std::vector<std::string> read_example_lines(std::istream& in) {
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    if (!normalize_text(line).empty()) out.push_back(line);
  }
  return out;
}

inline std::string ledger_csv(const std::vector<LedgerEntry>& ledger) {
  std::ostringstream out;
  out << "attribute,kind,value,theta,psi,delta,alpha,lambda,prior,include,exclude,decision\n";
  auto num = [](double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", x);
    return std::string(buf);
  };
  for (const auto& e : ledger) {
    std::string value = e.filter.property.is_range
                            ? e.filter.property.range_lo.to_text() + ".." +
                                  e.filter.property.range_hi.to_text()
                            : e.filter.property.values.front().to_text();
    csv::write_row(out, {e.filter.property.attribute.str(), to_string(e.filter.kind), value,
                         e.filter.property.theta ? std::to_string(*e.filter.property.theta) : "",
                         num(e.assessment.psi), num(e.assessment.delta),
                         num(e.assessment.alpha), num(e.assessment.lambda), num(e.prior),
                         num(e.include_score), num(e.exclude_score),
                         e.included ? "include" : "exclude"});
  }
  return out.str();
}

inline int run_one_abduction(const std::vector<std::string>& examples, const RelStore& store,
                             const Adb& adb, const AbductionParams& params,
                             const CliConfig& cfg, std::ostream& out, std::ostream& err) {
  PipelineResult pr = run_abduction(examples, store, adb, params);
  const auto& best = pr.best();
  if (pr.dropped_candidates)
    err << "notice: " << pr.dropped_candidates << " candidate base queries beyond cap dropped\n";

  if (cfg.emit == "ast") {
    out << query_to_json(best.query).dump(2) << "\n";
  } else {
    SqlMode mode = cfg.emit == "original-sql" ? SqlMode::Original : SqlMode::Adb;
    EmittedQuery q = emit_sql(best.query, mode, store.schema(), adb);
    out << q.sql_text << "\n";
  }
  if (cfg.show_ledger || cfg.verbosity > 0) {
    out << "-- ledger --\n";
    for (const auto& e : best.abduction.ledger) {
      std::string value = e.filter.property.is_range
                              ? e.filter.property.range_lo.to_text() + ".." +
                                    e.filter.property.range_hi.to_text()
                              : e.filter.property.values.front().to_text();
      std::string theta = e.filter.property.theta
                              ? " theta=" + std::to_string(*e.filter.property.theta)
                              : "";
      char buf[256];
      std::snprintf(buf, sizeof(buf),
                    "%s %s=%s%s psi=%.4g prior=%.4g include=%.4g exclude=%.4g -> %s",
                    to_string(e.filter.kind), e.filter.property.attribute.str().c_str(),
                    value.c_str(), theta.c_str(), e.assessment.psi, e.prior, e.include_score,
                    e.exclude_score, e.included ? "include" : "exclude");
      out << buf << "\n";
    }
  }
  if (!cfg.ledger_path.empty()) {
    std::ofstream lout(cfg.ledger_path, std::ios::binary);
    if (!lout) throw ConfigError("cannot write ledger file: " + cfg.ledger_path);
    lout << ledger_csv(best.abduction.ledger);
  }
  if (cfg.result_sample > 0) {
    std::set<Value> result = eval_query(store, best.query, &adb);
    out << "-- result (" << result.size() << " tuples) --\n";
    int shown = 0;
    for (const auto& v : result) {
      if (shown++ >= cfg.result_sample) break;
      out << v.to_text() << "\n";
    }
  }
  return 0;
}

inline int cmd_abduce(const CliConfig& cfg, std::istream& in, std::ostream& out,
                      std::ostream& err) {
  AbductionParams params = resolve_params(cfg);
  RelStore store = cli_load_store(cfg, err);
  if (cfg.adb_dir.empty()) throw ConfigError("--adb-dir is required");
  Adb adb = load_adb(cfg.adb_dir, store.schema());

  if (cfg.interactive) {
    std::vector<std::string> examples;
    std::string line;
    out << "enter one example per line (blank to re-run, 'quit' to exit)\n";
    while (std::getline(in, line)) {
      while (!line.empty() && (line.back() == '\r')) line.pop_back();
      if (line == "quit" || line == "exit") break;
      if (!normalize_text(line).empty()) examples.push_back(line);
      if (examples.empty()) {
        err << "no examples yet\n";
        continue;
      }
      try {
        run_one_abduction(examples, store, adb, params, cfg, out, err);
      } catch (const InputError& e) {
        err << "input error: " << e.what() << "\n";
      }
    }
    return 0;
  }

  std::vector<std::string> examples;
  if (!cfg.examples_file.empty()) {
    std::ifstream f(cfg.examples_file);
    if (!f) throw ConfigError("cannot open examples file: " + cfg.examples_file);
    examples = read_example_lines(f);
  } else {
    examples = read_example_lines(in);
  }
  if (examples.empty()) {
    err << "error: no examples given (use --examples FILE or pipe one per line)\n";
    return 2;
  }
  return run_one_abduction(examples, store, adb, params, cfg, out, err);
}

inline int cmd_eval(const CliConfig& cfg, std::ostream& out, std::ostream& err) {
  AbductionParams params = resolve_params(cfg);
  RelStore store = cli_load_store(cfg, err);
  if (cfg.adb_dir.empty()) throw ConfigError("--adb-dir is required");
  Adb adb = load_adb(cfg.adb_dir, store.schema());
  if (cfg.benchmark_file.empty()) throw ConfigError("--benchmark is required");
  if (cfg.out.empty()) throw ConfigError("--out is required");

  std::ifstream bin(cfg.benchmark_file);
  if (!bin) throw ConfigError("cannot open benchmark file: " + cfg.benchmark_file);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(bin);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("benchmark parse error: ") + e.what());
  }
  auto cases = parse_benchmark(doc);

  BenchmarkReport report = run_benchmark(cases, store, adb, params);
  for (const auto& n : report.notices) err << "notice: " << n << "\n";
  if (report.containment_violations)
    err << "warning: " << report.containment_violations << " containment violations\n";

  std::ofstream rout(cfg.out, std::ios::binary);
  if (!rout) throw ConfigError("cannot write report: " + cfg.out);
  rout << "# preset=" << (cfg.preset.empty() ? "qbe" : cfg.preset) << " rho=" << params.rho
       << " gamma=" << params.gamma << " eta=" << params.eta << " tau_a=" << params.tau_a
       << " tau_s=" << params.tau_s << " outlier_k=" << params.outlier_k << "\n";
  rout << report_to_csv(report);
  out << cfg.out << "\n";
  return 0;
}

}  // namespace abq
