#pragma once

#include <string>
#include <vector>

#include "abq/abduction.hpp"
#include "abq/adb.hpp"
#include "abq/context.hpp"
#include "abq/qbuild.hpp"
#include "abq/query.hpp"

namespace abq {

// One abduction outcome per candidate base query (per surviving
// (relation, attribute) match).
struct AbduceOutcome {
  ExampleSet examples;
  ContextSet contexts;
  AbductionResult abduction;
  CandidateQuery query;
};

struct PipelineResult {
  std::vector<AbduceOutcome> outcomes;  // ranked, best first
  std::size_t dropped_candidates = 0;   // matches beyond the candidate cap

  const AbduceOutcome& best() const {
    if (outcomes.empty()) throw Error("no abduction outcome");
    return outcomes.front();
  }
};

inline constexpr std::size_t kMaxBaseCandidates = 16;

// Full online phase: resolve and disambiguate the examples, derive their
// semantic contexts, abduce a filter set per candidate base query, and
// rank candidates by the cross-base posterior heuristic (ties: fewer
// joins, then query text).
inline PipelineResult run_abduction(const std::vector<std::string>& raw_examples,
                                    const RelStore& store, const Adb& adb,
                                    const AbductionParams& params,
                                    std::size_t max_candidates = kMaxBaseCandidates) {
  params.validate();
  auto matches = resolve_examples(raw_examples, adb.index, store.schema());

  PipelineResult result;
  if (matches.size() > max_candidates) {
    result.dropped_candidates = matches.size() - max_candidates;
    matches.resize(max_candidates);
  }

  for (const auto& mc : matches) {
    AbduceOutcome outcome;
    outcome.examples = disambiguate(mc, store, adb);
    outcome.contexts = derive_contexts(outcome.examples, store, adb);
    BaseQuery base = build_base_query(mc.relation, mc.attribute, outcome.contexts.filters);
    outcome.abduction = abduce(base, outcome.contexts.filters, outcome.contexts.families,
                               outcome.examples.size(), params, store, adb.stats);
    outcome.query = assemble_query(base, outcome.abduction.chosen);
    result.outcomes.push_back(std::move(outcome));
  }

  std::sort(result.outcomes.begin(), result.outcomes.end(),
            [&](const AbduceOutcome& a, const AbduceOutcome& b) {
              if (a.abduction.cross_base_score != b.abduction.cross_base_score)
                return a.abduction.cross_base_score > b.abduction.cross_base_score;
              std::size_t ja = 0, jb = 0;
              for (const auto& f : a.query.filters) ja += f.provenance.hops.size();
              for (const auto& f : b.query.filters) jb += f.provenance.hops.size();
              if (ja != jb) return ja < jb;
              return query_to_json(a.query).dump() < query_to_json(b.query).dump();
            });
  return result;
}

}  // namespace abq
