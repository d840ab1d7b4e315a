#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "abq/adb.hpp"
#include "abq/context.hpp"
#include "abq/query.hpp"

namespace abq {

struct AbductionParams {
  double rho = 0.1;        // base filter prior
  double gamma = 2.0;      // domain-coverage penalty exponent
  double eta = 0.2;        // domain-coverage grace threshold
  std::int64_t tau_a = 5;  // association-strength threshold
  double tau_s = 2.0;      // skewness threshold; -inf disables outlier impact
  double outlier_k = 2.0;  // mean/std outlier multiplier, >= 2
  bool normalize_strength = false;  // reserved, not implemented

  // Preset for query reverse engineering: include filters optimistically.
  static AbductionParams qre_optimistic() {
    AbductionParams p;
    p.rho = 0.9;
    p.gamma = 0.0;
    p.tau_a = 1;
    p.tau_s = -std::numeric_limits<double>::infinity();
    return p;
  }

  void validate() const {
    if (rho <= 0 || rho >= 1) throw ConfigError("rho must be in (0,1)");
    if (gamma < 0) throw ConfigError("gamma must be >= 0");
    if (eta <= 0) throw ConfigError("eta must be > 0");
    if (tau_a < 1) throw ConfigError("tau-a must be a positive integer");
    if (outlier_k < 2) throw ConfigError("outlier-k must be >= 2");
    if (normalize_strength)
      throw ConfigError("normalized association strength is not implemented");
  }
};

// Sample skewness n/((n-1)(n-2)) * sum((a-mean)^3)/s^3 with the sample
// standard deviation s. Undefined for n < 3; zero when s is zero.
inline std::optional<double> skewness(std::span<const double> a) {
  const std::size_t n = a.size();
  if (n < 3) return std::nullopt;
  double mean = std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(n);
  double m2 = 0, m3 = 0;
  for (double x : a) {
    double d = x - mean;
    m2 += d * d;
    m3 += d * d * d;
  }
  double s2 = m2 / static_cast<double>(n - 1);
  if (s2 <= 0) return 0.0;
  double s = std::sqrt(s2);
  return static_cast<double>(n) * m3 /
         (s * s * s * static_cast<double>(n - 1) * static_cast<double>(n - 2));
}

// Fraction of the attribute domain a filter's value covers.
inline double domain_coverage(const Filter& f, const RelStore& store) {
  const auto& dom = store.domain(f.property.attribute);
  if (f.kind == FilterKind::BasicNumeric) {
    if (!dom.has_numeric || dom.num_max <= dom.num_min) return 0.0;
    return (f.property.range_hi.numeric() - f.property.range_lo.numeric()) /
           (dom.num_max - dom.num_min);
  }
  if (dom.distinct_count == 0) return 1.0;
  return 1.0 / static_cast<double>(dom.distinct_count);
}

inline double delta_impact(double coverage, const AbductionParams& p) {
  return 1.0 / std::pow(std::max(1.0, coverage / p.eta), p.gamma);
}

inline double alpha_impact(const Filter& f, const AbductionParams& p) {
  if (!f.is_derived()) return 1.0;
  return (f.property.theta && *f.property.theta < p.tau_a) ? 0.0 : 1.0;
}

// Outlier impact over the family's strength distribution: 1 for basic
// filters; for derived filters 1 iff the distribution is skewed beyond
// tau_s and this filter's strength is an outlier, or the family is too
// small for skewness (n < 3, all members treated as outliers).
inline double lambda_impact(const Filter& f, const std::vector<std::int64_t>& family,
                            const AbductionParams& p) {
  if (!f.is_derived()) return 1.0;
  if (std::isinf(p.tau_s) && p.tau_s < 0) return 1.0;  // outlier impact disabled
  if (family.size() < 3) return 1.0;
  std::vector<double> a(family.begin(), family.end());
  auto skew = skewness(a);
  if (!skew) return 1.0;
  if (*skew <= p.tau_s) return 0.0;
  double mean = std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(a.size());
  double m2 = 0;
  for (double x : a) m2 += (x - mean) * (x - mean);
  double s = std::sqrt(m2 / static_cast<double>(a.size() - 1));
  double theta = static_cast<double>(f.property.theta.value_or(0));
  return (theta - mean) > p.outlier_k * s ? 1.0 : 0.0;
}

// Per-filter inputs to the abduction decision.
struct FilterAssessment {
  double psi = 1.0;
  double delta = 1.0;
  double alpha = 1.0;
  double lambda = 1.0;

  double prior(double rho) const { return rho * delta * alpha * lambda; }
};

inline double filter_prior(const FilterAssessment& a, const AbductionParams& p) {
  return a.prior(p.rho);
}

namespace detail {

constexpr double kLogFloor = -700.0;  // floor on |E|*ln(psi) against underflow

inline double include_log(double prior) {
  return prior > 0 ? std::log(prior) : -std::numeric_limits<double>::infinity();
}

inline double exclude_log(double prior, double psi, std::size_t e_size) {
  if (prior >= 1) return -std::numeric_limits<double>::infinity();
  double ctx = std::max(static_cast<double>(e_size) * std::log(psi), kLogFloor);
  return std::log1p(-prior) + ctx;
}

}  // namespace detail

// Selectivity of a filter from the precomputed statistics: matching-entity
// count over the entity relation's cardinality. Numeric ranges subtract
// prefix counts; derived filters read the (value, theta) table.
inline double selectivity(const Filter& f, const std::string& entity,
                          const SelectivityStats& stats) {
  double base = static_cast<double>(stats.base(entity));
  if (base <= 0) throw Error("empty base relation: " + entity);
  std::int64_t n = 0;
  switch (f.kind) {
    case FilterKind::BasicCategorical:
      n = stats.categorical_count(f.route, f.property.values.front());
      break;
    case FilterKind::BasicNumeric: {
      double lo = f.property.range_lo.numeric();
      double hi = f.property.range_hi.numeric();
      // [lo, hi] = [min, hi] - [min, x) for the largest observed x < lo.
      n = stats.prefix_count_le(f.route, hi) -
          stats.prefix_count_le(f.route, std::nexttoward(lo, -std::numeric_limits<long double>::infinity()));
      break;
    }
    case FilterKind::Derived:
      n = stats.derived_count_ge(f.derived_relation, f.property.values.front(),
                                 f.property.theta.value_or(1));
      break;
  }
  if (n <= 0)
    throw Error("filter matches no entities (selectivity 0): " + f.property.attribute.str());
  return static_cast<double>(n) / base;
}

struct LedgerEntry {
  Filter filter;
  FilterAssessment assessment;
  double prior = 0;
  double include_score = 0;  // prior * 1
  double exclude_score = 0;  // (1 - prior) * psi^|E|
  bool included = false;
};

struct AbductionResult {
  BaseQuery base;
  std::vector<Filter> chosen;
  std::vector<LedgerEntry> ledger;
  double log_score = 0;        // Eq.-6 posterior up to its constant factor
  double cross_base_score = 0; // log_score - sum(ln psi), for ranking bases
};

// Include a filter iff prior * 1 > (1 - prior) * psi^|E|, each filter
// independently; equality excludes.
inline bool decide_inclusion(const FilterAssessment& a, std::size_t e_size,
                             const AbductionParams& p) {
  double prior = filter_prior(a, p);
  return detail::include_log(prior) > detail::exclude_log(prior, a.psi, e_size);
}

// Log of the unnormalized query posterior for an arbitrary selection.
inline double posterior_log_score(const std::vector<bool>& selected,
                                  const std::vector<FilterAssessment>& assessments,
                                  std::size_t e_size, const AbductionParams& p) {
  double sum = 0;
  for (std::size_t i = 0; i < assessments.size(); ++i) {
    double prior = filter_prior(assessments[i], p);
    sum += selected[i] ? detail::include_log(prior)
                       : detail::exclude_log(prior, assessments[i].psi, e_size);
  }
  return sum;
}

inline double posterior_score(const std::vector<bool>& selected,
                              const std::vector<FilterAssessment>& assessments,
                              std::size_t e_size, const AbductionParams& p) {
  return std::exp(posterior_log_score(selected, assessments, e_size, p));
}

// Exhaustive argmax over all 2^n selections; ties resolve toward fewer
// filters, then the lexicographically smallest selection. Test oracle for
// the per-filter decision rule.
inline std::vector<bool> brute_force_abduce(const std::vector<FilterAssessment>& assessments,
                                            std::size_t e_size, const AbductionParams& p) {
  const std::size_t n = assessments.size();
  if (n > 20) throw Error("brute_force_abduce supports at most 20 filters");
  std::vector<std::uint32_t> masks(1u << n);
  std::iota(masks.begin(), masks.end(), 0u);
  std::sort(masks.begin(), masks.end(), [](std::uint32_t a, std::uint32_t b) {
    int pa = std::popcount(a), pb = std::popcount(b);
    return pa != pb ? pa < pb : a < b;
  });
  double best = -std::numeric_limits<double>::infinity();
  std::vector<bool> best_sel(n, false);
  bool first = true;
  for (std::uint32_t mask : masks) {
    std::vector<bool> sel(n);
    for (std::size_t i = 0; i < n; ++i) sel[i] = (mask >> i) & 1u;
    double score = posterior_log_score(sel, assessments, e_size, p);
    if (first || score > best) {
      best = score;
      best_sel = sel;
      first = false;
    }
  }
  return best_sel;
}

// Assesses every minimal valid filter against the statistics and decides
// inclusion per filter (O(|filters|)).
inline AbductionResult abduce(const BaseQuery& base, const std::vector<Filter>& filters,
                              const std::vector<FilterFamily>& families, std::size_t e_size,
                              const AbductionParams& params, const RelStore& store,
                              const SelectivityStats& stats) {
  params.validate();
  if (e_size < 1) throw InputError("abduction requires at least one example");

  AbductionResult result;
  result.base = base;

  std::vector<FilterAssessment> assessments;
  assessments.reserve(filters.size());
  static const std::vector<std::int64_t> kNoFamily;
  for (const auto& f : filters) {
    const std::vector<std::int64_t>* family = &kNoFamily;
    if (f.is_derived()) {
      for (const auto& fam : families)
        if (fam.derived_relation == f.derived_relation) {
          family = &fam.strengths;
          break;
        }
    }
    FilterAssessment a;
    a.psi = selectivity(f, base.root, stats);
    a.delta = delta_impact(domain_coverage(f, store), params);
    a.alpha = alpha_impact(f, params);
    a.lambda = lambda_impact(f, *family, params);
    assessments.push_back(a);
  }

  std::vector<bool> selected(filters.size(), false);
  for (std::size_t i = 0; i < filters.size(); ++i) {
    const auto& a = assessments[i];
    double prior = filter_prior(a, params);
    LedgerEntry entry;
    entry.filter = filters[i];
    entry.assessment = a;
    entry.prior = prior;
    entry.include_score = prior;
    entry.exclude_score = std::exp(detail::exclude_log(prior, a.psi, e_size));
    entry.included = decide_inclusion(a, e_size, params);
    selected[i] = entry.included;
    if (entry.included) result.chosen.push_back(filters[i]);
    result.ledger.push_back(std::move(entry));
  }

  result.log_score = posterior_log_score(selected, assessments, e_size, params);
  double psi_all = 0;
  for (const auto& a : assessments) psi_all += std::log(a.psi);
  result.cross_base_score = result.log_score - psi_all;
  return result;
}

}  // namespace abq
