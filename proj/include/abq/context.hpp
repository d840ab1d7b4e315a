#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "abq/adb.hpp"
#include "abq/query.hpp"
#include "abq/relstore.hpp"

namespace abq {

// Candidate rows per example for one (relation, attribute) match.
struct MatchCandidates {
  std::string relation;
  std::string attribute;
  std::vector<std::string> examples;        // deduplicated, input order
  std::vector<std::vector<RowId>> rows;     // per example
};

// Examples resolved to entities of a single relation.
struct ExampleSet {
  std::string relation;
  std::string attribute;
  std::vector<std::string> examples;
  std::vector<RowId> rows;       // one per example
  std::vector<Value> entity_keys;

  std::size_t size() const { return examples.size(); }
};

struct SemanticContext {
  SemanticProperty property;
  std::size_t support = 0;  // |E|
};

struct FilterFamily {
  std::string derived_relation;
  QualifiedAttr attribute;
  std::vector<std::int64_t> strengths;  // theta distribution, one per member
};

struct ContextSet {
  std::vector<SemanticContext> contexts;
  std::vector<Filter> filters;  // filters[i] realizes contexts[i]
  std::vector<FilterFamily> families;
};

// Consults the inverted column index; keeps only (relation, attribute)
// pairs on entity relations that contain every example. Duplicate example
// strings collapse first.
inline std::vector<MatchCandidates> resolve_examples(const std::vector<std::string>& raw,
                                                     const InvertedColumnIndex& index,
                                                     const SchemaConfig& schema) {
  if (raw.empty()) throw InputError("no examples given");
  std::vector<std::string> examples;
  std::set<std::string> seen;
  for (const auto& r : raw) {
    std::string norm = normalize_text(r);
    if (norm.empty()) continue;
    if (seen.insert(norm).second) examples.push_back(r);
  }
  if (examples.empty()) throw InputError("no non-empty examples given");

  // (relation, attr) -> per-example rows
  std::map<std::pair<std::string, std::string>, std::vector<std::vector<RowId>>> hits;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    for (const auto& p : index.lookup(examples[i])) {
      if (!schema.is_entity(p.relation)) continue;
      auto& slot = hits[{p.relation, p.attr}];
      slot.resize(examples.size());
      slot[i].push_back(p.row);
    }
  }

  std::vector<MatchCandidates> out;
  for (auto& [key, rows] : hits) {
    bool all = true;
    for (const auto& r : rows)
      if (r.empty()) {
        all = false;
        break;
      }
    if (!all) continue;
    MatchCandidates mc;
    mc.relation = key.first;
    mc.attribute = key.second;
    mc.examples = examples;
    mc.rows = std::move(rows);
    out.push_back(std::move(mc));
  }
  if (out.empty()) {
    std::string msg = "no attribute contains all examples:";
    for (const auto& e : examples) msg += " '" + e + "'";
    throw InputError(msg);
  }
  return out;
}

namespace detail {

// Per-entity property profile used by disambiguation scoring.
struct EntityProfile {
  std::map<std::string, std::set<Value>> categorical;  // route -> values
  std::set<std::string> has_numeric;                   // routes with >= 1 value
  std::map<std::string, std::map<Value, std::int64_t>> derived;  // relation -> value -> theta
};

inline EntityProfile entity_profile(const RelStore& store, const Adb& adb,
                                    const std::string& relation, RowId row,
                                    const Value& key) {
  EntityProfile prof;
  for (const auto& route : adb.routes) {
    if (route.entity != relation) continue;
    auto vals = route_values(store, route, row);
    if (vals.empty()) continue;
    if (route.numeric)
      prof.has_numeric.insert(route.name);  // a range context always forms
    else
      prof.categorical[route.name].insert(vals.begin(), vals.end());
  }
  for (const auto& spec : adb.specs) {
    if (spec.entity != relation || !spec.context_eligible) continue;
    for (const DerivedRow* dr : adb.derived_rows(spec.name, key))
      prof.derived[spec.name][dr->value] = dr->count;
  }
  return prof;
}

struct ComboScore {
  std::int64_t shared_contexts = 0;
  std::int64_t total_strength = 0;

  friend bool operator>(const ComboScore& a, const ComboScore& b) {
    return std::tie(a.shared_contexts, a.total_strength) >
           std::tie(b.shared_contexts, b.total_strength);
  }
};

inline ComboScore score_combination(const std::vector<const EntityProfile*>& profs) {
  ComboScore score;
  if (profs.empty()) return score;
  // Shared categorical values per route.
  std::map<std::string, std::set<Value>> shared = profs[0]->categorical;
  for (std::size_t i = 1; i < profs.size(); ++i) {
    for (auto it = shared.begin(); it != shared.end();) {
      auto jt = profs[i]->categorical.find(it->first);
      if (jt == profs[i]->categorical.end()) {
        it = shared.erase(it);
        continue;
      }
      std::set<Value> inter;
      std::set_intersection(it->second.begin(), it->second.end(), jt->second.begin(),
                            jt->second.end(), std::inserter(inter, inter.begin()));
      if (inter.empty()) it = shared.erase(it);
      else {
        it->second = std::move(inter);
        ++it;
      }
    }
  }
  for (const auto& [route, vals] : shared)
    score.shared_contexts += static_cast<std::int64_t>(vals.size());

  // Numeric routes contribute one range context when every entity has a value.
  std::set<std::string> numeric = profs[0]->has_numeric;
  for (std::size_t i = 1; i < profs.size() && !numeric.empty(); ++i) {
    std::set<std::string> inter;
    std::set_intersection(numeric.begin(), numeric.end(), profs[i]->has_numeric.begin(),
                          profs[i]->has_numeric.end(), std::inserter(inter, inter.begin()));
    numeric = std::move(inter);
  }
  score.shared_contexts += static_cast<std::int64_t>(numeric.size());

  // Shared derived (relation, value) pairs; strength is the family minimum.
  std::map<std::string, std::map<Value, std::int64_t>> shared_derived = profs[0]->derived;
  for (std::size_t i = 1; i < profs.size(); ++i) {
    for (auto it = shared_derived.begin(); it != shared_derived.end();) {
      auto jt = profs[i]->derived.find(it->first);
      if (jt == profs[i]->derived.end()) {
        it = shared_derived.erase(it);
        continue;
      }
      std::map<Value, std::int64_t> inter;
      for (const auto& [v, theta] : it->second) {
        auto kt = jt->second.find(v);
        if (kt != jt->second.end()) inter[v] = std::min(theta, kt->second);
      }
      if (inter.empty()) it = shared_derived.erase(it);
      else {
        it->second = std::move(inter);
        ++it;
      }
    }
  }
  for (const auto& [rel, vals] : shared_derived)
    for (const auto& [v, theta] : vals) {
      ++score.shared_contexts;
      score.total_strength += theta;
    }
  return score;
}

}  // namespace detail

// Picks one entity per example, maximizing the number of semantic contexts
// the chosen combination shares; ties break toward higher total derived
// strength, then the smallest entity-key tuple. Exhaustive while the
// combination count stays within 10^4, greedy beyond that (unambiguous
// examples first).
inline ExampleSet disambiguate(const MatchCandidates& mc, const RelStore& store,
                               const Adb& adb) {
  const Table& table = store.table(mc.relation);
  auto key_attr = store.schema().key_attr(mc.relation);
  if (!key_attr) throw ConfigError("entity relation has no key: " + mc.relation);
  std::size_t key_col = table.attr_index(*key_attr);
  auto key_of = [&](RowId r) { return table.cell(r, key_col); };

  // Profiles for every candidate row.
  std::map<RowId, detail::EntityProfile> profiles;
  for (const auto& rows : mc.rows)
    for (RowId r : rows)
      if (!profiles.count(r)) profiles[r] = detail::entity_profile(store, adb, mc.relation, r, key_of(r));

  // Candidates sorted by entity key for deterministic tie-breaks.
  std::vector<std::vector<RowId>> cand = mc.rows;
  for (auto& rows : cand)
    std::sort(rows.begin(), rows.end(),
              [&](RowId a, RowId b) { return key_of(a) < key_of(b); });

  double combos = 1;
  for (const auto& rows : cand) combos *= static_cast<double>(rows.size());

  std::vector<RowId> chosen(cand.size());
  if (combos <= 1e4) {
    std::vector<std::size_t> pick(cand.size(), 0);
    std::vector<RowId> best;
    detail::ComboScore best_score;
    bool first = true;
    while (true) {
      std::vector<const detail::EntityProfile*> profs;
      std::vector<RowId> combo(cand.size());
      for (std::size_t i = 0; i < cand.size(); ++i) {
        combo[i] = cand[i][pick[i]];
        profs.push_back(&profiles.at(combo[i]));
      }
      auto score = detail::score_combination(profs);
      // Candidate lists are key-sorted and enumeration is lexicographic, so
      // the first combination reaching a score has the smallest key tuple.
      if (first || score > best_score) {
        best = combo;
        best_score = score;
        first = false;
      }
      std::size_t i = cand.size();
      while (i > 0) {
        --i;
        if (++pick[i] < cand[i].size()) break;
        pick[i] = 0;
        if (i == 0) {
          i = SIZE_MAX;
          break;
        }
      }
      if (i == SIZE_MAX) break;
    }
    chosen = best;
  } else {
    // Greedy: anchor on unambiguous examples, then resolve the rest in
    // input order against the already-resolved set.
    std::vector<bool> done(cand.size(), false);
    std::vector<const detail::EntityProfile*> resolved;
    for (std::size_t i = 0; i < cand.size(); ++i) {
      if (cand[i].size() == 1) {
        chosen[i] = cand[i][0];
        done[i] = true;
        resolved.push_back(&profiles.at(chosen[i]));
      }
    }
    for (std::size_t i = 0; i < cand.size(); ++i) {
      if (done[i]) continue;
      RowId best_row = cand[i][0];
      detail::ComboScore best_score;
      bool first = true;
      for (RowId r : cand[i]) {
        auto probe = resolved;
        probe.push_back(&profiles.at(r));
        auto score = detail::score_combination(probe);
        if (first || score > best_score) {
          best_row = r;
          best_score = score;
          first = false;
        }
      }
      chosen[i] = best_row;
      done[i] = true;
      resolved.push_back(&profiles.at(best_row));
    }
  }

  ExampleSet out;
  out.relation = mc.relation;
  out.attribute = mc.attribute;
  out.examples = mc.examples;
  out.rows = chosen;
  for (RowId r : chosen) out.entity_keys.push_back(key_of(r));
  return out;
}

// Derives semantic contexts and their minimal valid filters from resolved
// examples:
//  - categorical routes: one context per value every example exhibits;
//  - numeric routes: the observed [vmin, vmax] range, when every example
//    has a value;
//  - derived relations: one context per value associated with every
//    example, at the minimum observed strength.
inline ContextSet derive_contexts(const ExampleSet& ex, const RelStore& store, const Adb& adb) {
  ContextSet out;
  const std::size_t n = ex.size();

  for (const auto& route : adb.routes) {
    if (route.entity != ex.relation) continue;
    if (route.numeric) {
      bool all = true;
      double lo = 0, hi = 0;
      Value lo_v, hi_v;
      bool first = true;
      for (RowId r : ex.rows) {
        auto vals = route_values(store, route, r);
        if (vals.empty()) {
          all = false;
          break;
        }
        for (const auto& v : vals) {
          double x = v.numeric();
          if (first || x < lo) {
            lo = x;
            lo_v = v;
          }
          if (first || x > hi) {
            hi = x;
            hi_v = v;
          }
          first = false;
        }
      }
      if (!all || first) continue;
      SemanticProperty p;
      p.attribute = route.attr;
      p.is_range = true;
      p.range_lo = lo_v;
      p.range_hi = hi_v;
      Filter f;
      f.kind = FilterKind::BasicNumeric;
      f.property = p;
      f.provenance = route.path;
      f.route = route.name;
      out.contexts.push_back({p, n});
      out.filters.push_back(std::move(f));
    } else {
      std::set<Value> shared;
      bool first = true;
      for (RowId r : ex.rows) {
        auto vals = route_values(store, route, r);
        std::set<Value> s(vals.begin(), vals.end());
        if (first) {
          shared = std::move(s);
          first = false;
        } else {
          std::set<Value> inter;
          std::set_intersection(shared.begin(), shared.end(), s.begin(), s.end(),
                                std::inserter(inter, inter.begin()));
          shared = std::move(inter);
        }
        if (shared.empty()) break;
      }
      for (const auto& v : shared) {
        SemanticProperty p;
        p.attribute = route.attr;
        p.values = {v};
        Filter f;
        f.kind = FilterKind::BasicCategorical;
        f.property = p;
        f.provenance = route.path;
        f.route = route.name;
        out.contexts.push_back({p, n});
        out.filters.push_back(std::move(f));
      }
    }
  }

  for (const auto& spec : adb.specs) {
    if (spec.entity != ex.relation || !spec.context_eligible) continue;
    std::map<Value, std::int64_t> shared;  // value -> min strength
    bool first = true;
    for (const auto& key : ex.entity_keys) {
      std::map<Value, std::int64_t> mine;
      for (const DerivedRow* dr : adb.derived_rows(spec.name, key)) mine[dr->value] = dr->count;
      if (first) {
        shared = std::move(mine);
        first = false;
      } else {
        for (auto it = shared.begin(); it != shared.end();) {
          auto jt = mine.find(it->first);
          if (jt == mine.end()) it = shared.erase(it);
          else {
            it->second = std::min(it->second, jt->second);
            ++it;
          }
        }
      }
      if (shared.empty()) break;
    }
    if (shared.empty()) continue;
    FilterFamily family;
    family.derived_relation = spec.name;
    family.attribute = spec.property;
    for (const auto& [v, theta] : shared) {
      SemanticProperty p;
      p.attribute = spec.property;
      p.values = {v};
      p.theta = theta;
      Filter f;
      f.kind = FilterKind::Derived;
      f.property = p;
      f.provenance = spec.path;
      f.derived_relation = spec.name;
      f.route = spec.name;
      out.contexts.push_back({p, n});
      out.filters.push_back(std::move(f));
      family.strengths.push_back(theta);
    }
    out.families.push_back(std::move(family));
  }
  return out;
}

}  // namespace abq
