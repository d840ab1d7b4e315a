#include <catch2/catch_amalgamated.hpp>

#include "abq/evalharness.hpp"
#include "testutil.hpp"

using namespace abq;
using Catch::Approx;

TEST_CASE("metrics: identical, disjoint, and partial overlaps") {
  std::set<Value> a{Value("x"), Value("y")};
  auto m1 = metrics(a, a);
  CHECK(m1.precision == 1.0);
  CHECK(m1.recall == 1.0);
  CHECK(m1.fscore == 1.0);

  std::set<Value> b{Value("z")};
  auto m2 = metrics(a, b);
  CHECK(m2.precision == 0.0);
  CHECK(m2.recall == 0.0);
  CHECK(m2.fscore == 0.0);

  std::set<Value> pred, truth;
  for (int i = 0; i < 4; ++i) pred.insert(Value(std::int64_t{i}));
  for (int i = 2; i < 10; ++i) truth.insert(Value(std::int64_t{i}));
  auto m3 = metrics(pred, truth);  // overlap {2,3}
  CHECK(m3.precision == Approx(0.5));
  CHECK(m3.recall == Approx(0.25));
  CHECK(m3.fscore == Approx(1.0 / 3.0));

  auto m4 = metrics({}, truth);
  CHECK(m4.precision == 0.0);
  CHECK(m4.fscore == 0.0);
}

namespace {

struct Fixture {
  testutil::TempDir dir;
  RelStore store;
  Adb adb;

  explicit Fixture(std::uint64_t seed, int persons = 150, int movies = 100)
      : store(make(seed, persons, movies)), adb(build_adb(store)) {}

  RelStore make(std::uint64_t seed, int persons, int movies) {
    SynthConfig cfg;
    cfg.seed = seed;
    cfg.persons = persons;
    cfg.movies = movies;
    return load_synth_dataset(cfg, dir.path);
  }
};

nlohmann::json gender_case(const char* id, std::vector<std::size_t> sizes, int trials,
                           std::uint64_t seed) {
  nlohmann::json truth{{"root", "person"},
                       {"projection", "person.name"},
                       {"filters", nlohmann::json::array({nlohmann::json{
                                       {"kind", "basic-categorical"},
                                       {"attribute", "person.gender"},
                                       {"value", "Male"}}})}};
  return nlohmann::json{{"id", id}, {"truth", truth}, {"sizes", sizes},
                        {"trials", trials}, {"seed", seed}};
}

}  // namespace

TEST_CASE("benchmark: fixed seeds reproduce identical reports") {
  Fixture fx(101);
  nlohmann::json doc{{"cases", nlohmann::json::array({gender_case("g", {5, 10}, 2, 7)})}};
  auto cases = parse_benchmark(doc);
  AbductionParams params;

  auto r1 = run_benchmark(cases, fx.store, fx.adb, params);
  auto r2 = run_benchmark(cases, fx.store, fx.adb, params);
  REQUIRE(r1.rows.size() == r2.rows.size());
  CHECK(testutil::mask_time_column(report_to_csv(r1)) ==
        testutil::mask_time_column(report_to_csv(r2)));
  CHECK(r1.containment_violations == 0);
}

TEST_CASE("benchmark: oversized sample requests are skipped with a notice") {
  Fixture fx(102, 60, 40);
  nlohmann::json doc{{"cases", nlohmann::json::array({gender_case("g", {100000}, 1, 7)})}};
  auto report = run_benchmark(parse_benchmark(doc), fx.store, fx.adb, AbductionParams{});
  CHECK(report.rows.empty());
  REQUIRE_FALSE(report.notices.empty());
  CHECK_THAT(report.notices.front(), Catch::Matchers::ContainsSubstring("exceeds"));
}

TEST_CASE("benchmark: qre preset on the full output reverse-engineers the query") {
  Fixture fx(103, 200, 120);
  Rng rng(55);
  int perfect = 0, total = 0;
  for (int i = 0; i < 10; ++i) {
    CandidateQuery truth_q = random_synth_query(fx.store, fx.adb, rng);
    std::set<Value> truth = eval_query(fx.store, truth_q, &fx.adb);
    nlohmann::json cj{{"id", "q" + std::to_string(i)},
                      {"truth", query_to_json(truth_q)},
                      {"sizes", {truth.size()}},
                      {"trials", 1},
                      {"seed", 1000 + i},
                      {"preset", "qre"}};
    nlohmann::json doc{{"cases", nlohmann::json::array({cj})}};
    auto report = run_benchmark(parse_benchmark(doc), fx.store, fx.adb, AbductionParams{});
    REQUIRE(report.rows.size() == 1);
    ++total;
    if (report.rows[0].fscore == 1.0) ++perfect;
    CHECK(report.containment_violations == 0);
  }
  CHECK(perfect == total);
}

TEST_CASE("benchmark: accuracy does not degrade with more examples") {
  Fixture fx(104, 700, 150);
  // a selective query: one gender + one country
  nlohmann::json truth{{"root", "person"},
                       {"projection", "person.name"},
                       {"filters",
                        nlohmann::json::array(
                            {nlohmann::json{{"kind", "basic-categorical"},
                                            {"attribute", "person.gender"},
                                            {"value", "Male"}},
                             nlohmann::json{{"kind", "basic-categorical"},
                                            {"attribute", "person.country"},
                                            {"value", "USA"}}})}};
  int wins = 0, trials = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    nlohmann::json cj{{"id", "sel"}, {"truth", truth}, {"sizes", {5, 25}},
                      {"trials", 3}, {"seed", seed}};
    nlohmann::json doc{{"cases", nlohmann::json::array({cj})}};
    auto report = run_benchmark(parse_benchmark(doc), fx.store, fx.adb, AbductionParams{});
    if (report.rows.size() != 2) continue;
    ++trials;
    if (report.rows[1].fscore >= report.rows[0].fscore - 1e-9) ++wins;
  }
  REQUIRE(trials > 0);
  CHECK(static_cast<double>(wins) / static_cast<double>(trials) >= 0.9);
}

TEST_CASE("benchmark: twenty cases yield one row per case and size") {
  Fixture fx(105);
  Rng rng(12);
  nlohmann::json cases = nlohmann::json::array();
  for (int i = 0; i < 20; ++i) {
    CandidateQuery q = random_synth_query(fx.store, fx.adb, rng);
    std::set<Value> truth = eval_query(fx.store, q, &fx.adb);
    cases.push_back(nlohmann::json{{"id", "c" + std::to_string(i)},
                                   {"truth", query_to_json(q)},
                                   {"sizes", {1, 2}},
                                   {"trials", 1},
                                   {"seed", 50 + i}});
  }
  nlohmann::json doc{{"cases", cases}};
  auto report = run_benchmark(parse_benchmark(doc), fx.store, fx.adb, AbductionParams{});
  CHECK(report.rows.size() == 40);  // 20 cases x 2 sizes
  CHECK(report.trials_run == 40);
}

TEST_CASE("synthetic generator: deterministic for a fixed seed") {
  testutil::TempDir d1, d2;
  SynthConfig cfg;
  cfg.seed = 42;
  cfg.persons = 30;
  cfg.movies = 20;
  write_synth_dataset(cfg, d1.path);
  write_synth_dataset(cfg, d2.path);
  for (const char* name : {"person.csv", "movie.csv", "castinfo.csv", "movietogenre.csv"}) {
    std::ifstream a(d1.path / name), b(d2.path / name);
    std::stringstream sa, sb;
    sa << a.rdbuf();
    sb << b.rdbuf();
    CHECK(sa.str() == sb.str());
  }
}
