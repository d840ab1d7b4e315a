#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "abq/csv.hpp"
#include "abq/relstore.hpp"

namespace abq {

// Deterministic splitmix64; keeps fixtures identical across platforms and
// standard-library versions.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, n)
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next()) * n) >> 64);
  }

  std::int64_t range(std::int64_t lo, std::int64_t hi) {  // inclusive
    return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo + 1)));
  }

  double real() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

private:
  std::uint64_t state_;
};

// Desk-scale movie/person fixture generator with seeded randomness:
// two entity relations, one property relation, two fact tables.
struct SynthConfig {
  std::uint64_t seed = 1;
  int persons = 500;
  int movies = 400;
  int genres = 12;
  int countries = 8;
  int appearances_min = 5;   // castinfo rows per person
  int appearances_max = 30;
  int genres_per_movie_min = 1;
  int genres_per_movie_max = 3;
  int year_min = 1960;
  int year_max = 2020;
  int age_min = 18;
  int age_max = 90;
};

inline nlohmann::json synth_schema_json() {
  return nlohmann::json::parse(R"({
    "relations": [
      {"name": "person", "attributes": [
        {"name": "id", "kind": "key"},
        {"name": "name", "kind": "text"},
        {"name": "gender", "kind": "categorical"},
        {"name": "country", "kind": "categorical"},
        {"name": "age", "kind": "numeric"}]},
      {"name": "movie", "attributes": [
        {"name": "id", "kind": "key"},
        {"name": "title", "kind": "text"},
        {"name": "year", "kind": "numeric"},
        {"name": "language", "kind": "categorical"}]},
      {"name": "genre", "attributes": [
        {"name": "id", "kind": "key"},
        {"name": "name", "kind": "categorical"}]},
      {"name": "castinfo", "attributes": [
        {"name": "person_id", "kind": "foreign-key"},
        {"name": "movie_id", "kind": "foreign-key"}]},
      {"name": "movietogenre", "attributes": [
        {"name": "movie_id", "kind": "foreign-key"},
        {"name": "genre_id", "kind": "foreign-key"}]}
    ],
    "entity_relations": ["person", "movie"],
    "property_attributes": ["person.gender", "person.country", "person.age",
                            "movie.year", "movie.language", "genre.name"],
    "fact_tables": ["castinfo", "movietogenre"],
    "fk_edges": [
      {"from": "castinfo.person_id", "to": "person.id"},
      {"from": "castinfo.movie_id", "to": "movie.id"},
      {"from": "movietogenre.movie_id", "to": "movie.id"},
      {"from": "movietogenre.genre_id", "to": "genre.id"}
    ]
  })");
}

inline void write_synth_dataset(const SynthConfig& cfg, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  Rng rng(cfg.seed);

  {
    std::ofstream out(dir / "schema.json");
    out << synth_schema_json().dump(2) << "\n";
  }

  static const char* kCountries[] = {"USA",    "UK",     "France", "Germany",
                                     "India",  "Japan",  "Canada", "Brazil",
                                     "Italy",  "Spain",  "Mexico", "Sweden"};
  static const char* kLanguages[] = {"English", "French", "German", "Hindi",
                                     "Japanese", "Spanish"};
  static const char* kGenres[] = {"Action",  "Comedy",   "Drama",    "SciFi",
                                  "Horror",  "Romance",  "Thriller", "Animation",
                                  "Mystery", "Western",  "Fantasy",  "Documentary",
                                  "War",     "Musical",  "Crime",    "Biography"};

  char buf[64];
  {
    std::ofstream out(dir / "person.csv", std::ios::binary);
    csv::write_row(out, {"id", "name", "gender", "country", "age"});
    for (int i = 1; i <= cfg.persons; ++i) {
      std::snprintf(buf, sizeof(buf), "Person %04d", i);
      csv::write_row(out, {std::to_string(i), buf, rng.below(2) ? "Male" : "Female",
                           kCountries[rng.below(static_cast<std::uint64_t>(cfg.countries))],
                           std::to_string(rng.range(cfg.age_min, cfg.age_max))});
    }
  }
  {
    std::ofstream out(dir / "movie.csv", std::ios::binary);
    csv::write_row(out, {"id", "title", "year", "language"});
    for (int i = 1; i <= cfg.movies; ++i) {
      std::snprintf(buf, sizeof(buf), "Movie %04d", i);
      csv::write_row(out, {std::to_string(i), buf,
                           std::to_string(rng.range(cfg.year_min, cfg.year_max)),
                           kLanguages[rng.below(6)]});
    }
  }
  {
    std::ofstream out(dir / "genre.csv", std::ios::binary);
    csv::write_row(out, {"id", "name"});
    for (int i = 1; i <= cfg.genres && i <= 16; ++i)
      csv::write_row(out, {std::to_string(i), kGenres[i - 1]});
  }
  {
    // Each person leans toward a favorite genre: movies are drawn with a
    // bias so that derived strengths form skewed families.
    std::ofstream out(dir / "castinfo.csv", std::ios::binary);
    csv::write_row(out, {"person_id", "movie_id"});
    for (int p = 1; p <= cfg.persons; ++p) {
      int n = static_cast<int>(rng.range(cfg.appearances_min, cfg.appearances_max));
      std::uint64_t favorite_bucket = rng.below(4);
      for (int j = 0; j < n; ++j) {
        std::uint64_t movie;
        if (rng.below(10) < 6) {
          // from the favorite quarter of the movie list
          std::uint64_t quarter = static_cast<std::uint64_t>(cfg.movies) / 4;
          movie = favorite_bucket * quarter + rng.below(std::max<std::uint64_t>(quarter, 1)) + 1;
        } else {
          movie = rng.below(static_cast<std::uint64_t>(cfg.movies)) + 1;
        }
        csv::write_row(out, {std::to_string(p), std::to_string(movie)});
      }
    }
  }
  {
    std::ofstream out(dir / "movietogenre.csv", std::ios::binary);
    csv::write_row(out, {"movie_id", "genre_id"});
    for (int m = 1; m <= cfg.movies; ++m) {
      int n = static_cast<int>(rng.range(cfg.genres_per_movie_min, cfg.genres_per_movie_max));
      std::set<std::uint64_t> chosen;
      // Genre correlates with the movie-list quarter to keep favorites real.
      std::uint64_t quarter_genre = (static_cast<std::uint64_t>(m - 1) * 4) /
                                        static_cast<std::uint64_t>(cfg.movies) + 1;
      chosen.insert(quarter_genre);
      while (static_cast<int>(chosen.size()) < n)
        chosen.insert(rng.below(static_cast<std::uint64_t>(cfg.genres)) + 1);
      for (auto g : chosen) csv::write_row(out, {std::to_string(m), std::to_string(g)});
    }
  }
}

inline RelStore load_synth_dataset(const SynthConfig& cfg, const std::filesystem::path& dir) {
  write_synth_dataset(cfg, dir);
  return load_store_from_dir(dir / "schema.json", dir);
}

}  // namespace abq
