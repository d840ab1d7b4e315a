#pragma once

#include <cstdlib>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "abq/adb.hpp"
#include "abq/relstore.hpp"

namespace testutil {

inline abq::RelStore make_store(const std::string& schema_json,
                                const std::vector<std::pair<std::string, std::string>>& tables) {
  abq::RelStoreBuilder builder(abq::load_schema_text(schema_json));
  for (const auto& [name, csv] : tables) builder.load_table_text(name, csv);
  return builder.finish();
}

struct TempDir {
  std::filesystem::path path;

  TempDir() {
    auto base = std::filesystem::temp_directory_path() / "abq_test_XXXXXX";
    std::string tmpl = base.string();
    char* p = ::mkdtemp(tmpl.data());
    if (!p) throw std::runtime_error("mkdtemp failed");
    path = p;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string str() const { return path.string(); }
};

// --- CS-academics excerpt: six researchers and their interests -------------

inline const char* academics_schema() {
  return R"({
    "relations": [
      {"name": "academics", "attributes": [
        {"name": "id", "kind": "key"}, {"name": "name", "kind": "text"}]},
      {"name": "research", "attributes": [
        {"name": "aid", "kind": "foreign-key"}, {"name": "interest", "kind": "categorical"}]}
    ],
    "entity_relations": ["academics"],
    "property_attributes": ["research.interest"],
    "fact_tables": [],
    "fk_edges": [{"from": "research.aid", "to": "academics.id"}]
  })";
}

inline const char* academics_csv() {
  return "id,name\n"
         "100,Thomas Cormen\n"
         "101,Dan Suciu\n"
         "102,Jiawei Han\n"
         "103,Sam Madden\n"
         "104,James Kurose\n"
         "105,Joseph Hellerstein\n";
}

inline const char* research_csv() {
  return "aid,interest\n"
         "100,algorithms\n"
         "101,data management\n"
         "102,data mining\n"
         "103,data management\n"
         "103,distributed systems\n"
         "104,computer networks\n"
         "105,data management\n"
         "105,distributed systems\n";
}

inline abq::RelStore academics_store() {
  return make_store(academics_schema(),
                    {{"academics", academics_csv()}, {"research", research_csv()}});
}

// --- six-person sample with gender and age ----------------------------------

inline const char* people_schema() {
  return R"({
    "relations": [
      {"name": "person", "attributes": [
        {"name": "id", "kind": "key"}, {"name": "name", "kind": "text"},
        {"name": "gender", "kind": "categorical"}, {"name": "age", "kind": "numeric"}]}
    ],
    "entity_relations": ["person"],
    "property_attributes": ["person.gender", "person.age"],
    "fact_tables": [],
    "fk_edges": []
  })";
}

inline abq::RelStore people_store() {
  return make_store(people_schema(), {{"person",
                                       "id,name,gender,age\n"
                                       "1,Tom Cruise,Male,50\n"
                                       "2,Clint Eastwood,Male,90\n"
                                       "3,Tom Hanks,Male,60\n"
                                       "4,Julia Roberts,Female,50\n"
                                       "5,Emma Stone,Female,29\n"
                                       "6,Julianne Moore,Female,60\n"}});
}

// --- movie/person toy with fact tables --------------------------------------

inline const char* imdb_schema() {
  return R"({
    "relations": [
      {"name": "person", "attributes": [
        {"name": "id", "kind": "key"}, {"name": "name", "kind": "text"},
        {"name": "gender", "kind": "categorical"}, {"name": "country", "kind": "categorical"}]},
      {"name": "movie", "attributes": [
        {"name": "id", "kind": "key"}, {"name": "title", "kind": "text"},
        {"name": "year", "kind": "numeric"}]},
      {"name": "genre", "attributes": [
        {"name": "id", "kind": "key"}, {"name": "name", "kind": "categorical"}]},
      {"name": "castinfo", "attributes": [
        {"name": "person_id", "kind": "foreign-key"}, {"name": "movie_id", "kind": "foreign-key"}]},
      {"name": "movietogenre", "attributes": [
        {"name": "movie_id", "kind": "foreign-key"}, {"name": "genre_id", "kind": "foreign-key"}]}
    ],
    "entity_relations": ["movie", "person"],
    "property_attributes": ["person.gender", "person.country", "movie.year", "genre.name"],
    "fact_tables": ["castinfo", "movietogenre"],
    "fk_edges": [
      {"from": "castinfo.person_id", "to": "person.id"},
      {"from": "castinfo.movie_id", "to": "movie.id"},
      {"from": "movietogenre.movie_id", "to": "movie.id"},
      {"from": "movietogenre.genre_id", "to": "genre.id"}
    ]
  })";
}

// Two persons, two movies: p1 in m1+m2, p2 in m1; m1 is Comedy+Drama, m2 is
// Comedy. Association counts: p1-Comedy 2, p1-Drama 1, p2-Comedy 1, p2-Drama 1.
inline abq::RelStore imdb_micro_store() {
  return make_store(imdb_schema(),
                    {{"person",
                      "id,name,gender,country\n"
                      "1,Ann Onymous,Female,USA\n"
                      "2,Bob Roberts,Male,USA\n"},
                     {"movie",
                      "id,title,year\n"
                      "1,First Film,1990\n"
                      "2,Second Film,1995\n"},
                     {"genre", "id,name\n1,Comedy\n2,Drama\n"},
                     {"castinfo", "person_id,movie_id\n1,1\n1,2\n2,1\n"},
                     {"movietogenre", "movie_id,genre_id\n1,1\n2,1\n1,2\n"}});
}

// A larger toy: comedians appear in many comedies, others do not. Comedian
// ids 1..3 appear in 45, 42, and 41 comedies; the rest in a handful.
inline abq::RelStore imdb_toy_store() {
  std::string person = "id,name,gender,country\n";
  person += "1,Eddie Murray,Male,USA\n";
  person += "2,Jim Parrey,Male,USA\n";
  person += "3,Robin Billiams,Male,USA\n";
  person += "4,Gene Strongman,Male,USA\n";
  person += "5,Dana Drama,Female,UK\n";
  person += "6,Alex Action,Male,UK\n";

  // 60 movies: 1..50 Comedy, 51..60 Drama
  std::string movie = "id,title,year\n";
  for (int i = 1; i <= 60; ++i)
    movie += std::to_string(i) + ",Film " + std::to_string(i) + "," +
             std::to_string(1980 + i % 30) + "\n";
  std::string genre = "id,name\n1,Comedy\n2,Drama\n3,Action\n";
  std::string m2g = "movie_id,genre_id\n";
  for (int i = 1; i <= 60; ++i)
    m2g += std::to_string(i) + "," + (i <= 50 ? "1" : "2") + "\n";

  std::string cast = "person_id,movie_id\n";
  auto appear = [&](int person_id, int from, int to) {
    for (int m = from; m <= to; ++m)
      cast += std::to_string(person_id) + "," + std::to_string(m) + "\n";
  };
  appear(1, 1, 45);   // 45 comedies
  appear(2, 1, 42);   // 42 comedies
  appear(3, 5, 45);   // 41 comedies
  appear(4, 1, 3);    // 3 comedies
  appear(4, 51, 56);  // 6 dramas
  appear(5, 51, 60);  // 10 dramas
  appear(6, 1, 2);    // 2 comedies
  appear(6, 57, 60);  // 4 dramas

  return make_store(imdb_schema(), {{"person", person},
                                    {"movie", movie},
                                    {"genre", genre},
                                    {"castinfo", cast},
                                    {"movietogenre", m2g}});
}

// --- ambiguous-title fixture -------------------------------------------------

inline const char* films_schema() {
  return R"({
    "relations": [
      {"name": "movie", "attributes": [
        {"name": "id", "kind": "key"}, {"name": "title", "kind": "text"},
        {"name": "year", "kind": "numeric"}, {"name": "country", "kind": "categorical"},
        {"name": "decade", "kind": "categorical"}]}
    ],
    "entity_relations": ["movie"],
    "property_attributes": ["movie.year", "movie.country", "movie.decade"],
    "fact_tables": [],
    "fk_edges": []
  })";
}

inline abq::RelStore films_store() {
  return make_store(films_schema(), {{"movie",
                                      "id,title,year,country,decade\n"
                                      "1,Titanic,1915,Italy,1910s\n"
                                      "2,Titanic,1943,Germany,1940s\n"
                                      "3,Titanic,1953,UK,1950s\n"
                                      "4,Titanic,1997,USA,1990s\n"
                                      "5,Pulp Fiction,1994,USA,1990s\n"
                                      "6,The Matrix,1999,USA,1990s\n"}});
}

// --- shared-genre movies fixture ----------------------------------------------

inline abq::RelStore genre_movies_store() {
  return make_store(imdb_schema(),
                    {{"person", "id,name,gender,country\n1,Someone Here,Male,USA\n"},
                     {"movie",
                      "id,title,year\n"
                      "1,Dunkirk,2017\n"
                      "2,Logan,2017\n"
                      "3,Taken,2008\n"
                      "4,Amelie,2001\n"},
                     {"genre", "id,name\n1,Action\n2,Thriller\n3,Drama\n4,War\n5,Comedy\n"},
                     {"castinfo", "person_id,movie_id\n1,1\n"},
                     {"movietogenre",
                      "movie_id,genre_id\n"
                      "1,1\n1,2\n1,4\n"
                      "2,1\n2,2\n2,3\n"
                      "3,1\n3,2\n"
                      "4,5\n"}});
}

// --- independent oracles -------------------------------------------------------

// Nested-loop group-by count over the movie/person toy schema: number of
// (castinfo, movietogenre) pairs per (person, genre name). Written directly
// against the raw tables; shares nothing with the path-walking builder.
inline std::map<std::pair<std::int64_t, std::string>, std::int64_t> oracle_person_genre_counts(
    const abq::RelStore& store) {
  const auto& cast = store.table("castinfo");
  const auto& m2g = store.table("movietogenre");
  const auto& genre = store.table("genre");

  std::map<std::int64_t, std::string> genre_name;
  for (std::size_t r = 0; r < genre.row_count(); ++r)
    genre_name[genre.cell(r, genre.attr_index("id")).as_int()] =
        genre.cell(r, genre.attr_index("name")).as_string();

  std::map<std::pair<std::int64_t, std::string>, std::int64_t> counts;
  for (std::size_t i = 0; i < cast.row_count(); ++i) {
    std::int64_t pid = cast.cell(i, cast.attr_index("person_id")).as_int();
    std::int64_t mid = cast.cell(i, cast.attr_index("movie_id")).as_int();
    for (std::size_t j = 0; j < m2g.row_count(); ++j) {
      if (m2g.cell(j, m2g.attr_index("movie_id")).as_int() != mid) continue;
      std::int64_t gid = m2g.cell(j, m2g.attr_index("genre_id")).as_int();
      ++counts[{pid, genre_name.at(gid)}];
    }
  }
  return counts;
}

// Original-schema evaluation of an assembled person-rooted query over the
// movie/person toy schema, written directly against the raw tables: basic
// predicates on the person row, derived predicates by counting association
// paths (the GROUP BY/HAVING reading). Independent of the adb reduction.
inline std::set<abq::Value> original_form_oracle(const abq::RelStore& store,
                                                 const abq::CandidateQuery& q) {
  auto counts = oracle_person_genre_counts(store);
  const abq::Table& person = store.table("person");
  std::set<abq::Value> out;
  for (std::size_t r = 0; r < person.row_count(); ++r) {
    std::int64_t pid = person.cell(r, person.attr_index("id")).as_int();
    bool ok = true;
    for (const auto& f : q.filters) {
      if (f.is_derived()) {
        auto it = counts.find({pid, f.property.values.front().as_string()});
        std::int64_t n = it == counts.end() ? 0 : it->second;
        if (n < f.property.theta.value_or(1)) ok = false;
      } else if (f.kind == abq::FilterKind::BasicCategorical) {
        const abq::Value& cell = person.cell(r, person.attr_index(f.property.attribute.attr));
        if (!(cell == f.property.values.front())) ok = false;
      } else {
        double x = person.cell(r, person.attr_index(f.property.attribute.attr)).numeric();
        if (x < f.property.range_lo.numeric() || x > f.property.range_hi.numeric()) ok = false;
      }
      if (!ok) break;
    }
    if (ok) out.insert(person.cell(r, person.attr_index("name")));
  }
  return out;
}

// Report CSVs carry one wall-time column; equality checks mask it.
inline std::string mask_time_column(const std::string& csv) {
  std::string out;
  std::istringstream in(csv);
  std::string line;
  while (std::getline(in, line)) {
    // abduction_ms is the second-to-last column
    auto last = line.rfind(',');
    if (last != std::string::npos) {
      auto prev = line.rfind(',', last - 1);
      if (prev != std::string::npos) line = line.substr(0, prev) + ",_" + line.substr(last);
    }
    out += line + "\n";
  }
  return out;
}

// Appendix-style sample skewness, written independently of the library.
inline double reference_skewness(const std::vector<double>& a) {
  const double n = static_cast<double>(a.size());
  double mean = 0;
  for (double x : a) mean += x;
  mean /= n;
  double ss = 0, cubes = 0;
  for (double x : a) {
    ss += (x - mean) * (x - mean);
    cubes += (x - mean) * (x - mean) * (x - mean);
  }
  double s = std::sqrt(ss / (n - 1));
  if (s == 0) return 0;
  return n * cubes / (s * s * s * (n - 1) * (n - 2));
}

}  // namespace testutil
