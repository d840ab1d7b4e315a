#include <iostream>

#include <CLI11.hpp>

#include "abq/cli.hpp"

namespace {

void add_param_flags(CLI::App* cmd, abq::CliConfig& cfg) {
  cmd->add_option("--params", cfg.params_file, "JSON file with parameter overrides");
  cmd->add_option("--preset", cfg.preset, "parameter preset")
      ->check(CLI::IsMember({"qbe", "qre"}));
  cmd->add_option("--rho", [&cfg](auto& v) { cfg.rho = std::stod(v[0]); return true; },
                  "base filter prior (0,1)");
  cmd->add_option("--gamma", [&cfg](auto& v) { cfg.gamma = std::stod(v[0]); return true; },
                  "domain-coverage penalty exponent");
  cmd->add_option("--eta", [&cfg](auto& v) { cfg.eta = std::stod(v[0]); return true; },
                  "domain-coverage grace threshold");
  cmd->add_option("--tau-a", [&cfg](auto& v) { cfg.tau_a = std::stoll(v[0]); return true; },
                  "association-strength threshold");
  cmd->add_option("--tau-s", [&cfg](auto& v) { cfg.tau_s = std::stod(v[0]); return true; },
                  "skewness threshold");
  cmd->add_option("--outlier-k",
                  [&cfg](auto& v) { cfg.outlier_k = std::stod(v[0]); return true; },
                  "outlier multiplier (>= 2)");
}

void add_store_flags(CLI::App* cmd, abq::CliConfig& cfg) {
  cmd->add_option("--data-dir", cfg.data_dir, "directory with one <relation>.csv per relation")
      ->required();
  cmd->add_option("--schema", cfg.schema_path, "schema config (JSON)")->required();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"abq: abductive query-by-example over relational data"};
  app.require_subcommand(1);

  abq::CliConfig cfg;
  app.add_flag("-v,--verbose", cfg.verbosity, "verbose diagnostics");

  auto* build = app.add_subcommand("build-adb",
                                   "build the abduction database (derived relations, "
                                   "inverted index, selectivity statistics)");
  add_store_flags(build, cfg);
  build->add_option("--out", cfg.out, "output directory")->required();
  build->add_flag("--force", cfg.force, "rebuild over an existing directory");

  auto* abduce = app.add_subcommand("abduce", "abduce the most likely query for examples");
  add_store_flags(abduce, cfg);
  abduce->add_option("--adb-dir,--adb", cfg.adb_dir, "abduction database directory")
      ->required();
  abduce->add_option("--examples", cfg.examples_file,
                     "file with one example per line (default: stdin)");
  abduce->add_option("--emit", cfg.emit, "output form")
      ->check(CLI::IsMember({"adb-sql", "original-sql", "ast"}));
  abduce->add_option("--ledger", cfg.ledger_path, "write the decision ledger as CSV");
  abduce->add_flag("--show-ledger", cfg.show_ledger, "print the decision ledger");
  abduce->add_option("--result-sample", cfg.result_sample,
                     "print up to N tuples of the abduced query's result");
  abduce->add_flag("--interactive", cfg.interactive,
                   "re-abduce after every example line on stdin");
  add_param_flags(abduce, cfg);

  auto* eval = app.add_subcommand("eval", "run a benchmark and write a metrics report");
  add_store_flags(eval, cfg);
  eval->add_option("--adb-dir,--adb", cfg.adb_dir, "abduction database directory")->required();
  eval->add_option("--benchmark", cfg.benchmark_file, "benchmark case file (JSON)")->required();
  eval->add_option("--out", cfg.out, "report CSV path")->required();
  add_param_flags(eval, cfg);

  CLI11_PARSE(app, argc, argv);

  try {
    if (build->parsed()) return abq::cmd_build_adb(cfg, std::cout, std::cerr);
    if (abduce->parsed()) return abq::cmd_abduce(cfg, std::cin, std::cout, std::cerr);
    if (eval->parsed()) return abq::cmd_eval(cfg, std::cout, std::cerr);
  } catch (const abq::InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const abq::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
