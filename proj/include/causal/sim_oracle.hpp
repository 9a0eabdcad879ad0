#pragma once

// Seeded synthetic populations and brute-force oracles for verification.
//
// Every generator has two modes. Random draws binomial counts from pinned
// substreams of the seed; Expected emits expected counts rounded
// half-to-even per cell, so closed-form values can be checked without
// sampling noise.
//
// Substream layout for a seed s: (s,0) exposed cases, (s,1) unexposed cases,
// (s,2)/(s,3) confounder carriers among exposed/unexposed, (s,4..7) cases per
// (exposure, confounder) cell, (s,8..15) misclassification draws.

#include <cmath>
#include <cstdint>
#include <optional>
#include <tuple>
#include <vector>

#include "causal/effect_measures.hpp"
#include "causal/errors.hpp"
#include "causal/rng.hpp"
#include "causal/study_model.hpp"
#include "causal/synthesis.hpp"

namespace causal::sim {

enum class Mode { Random, Expected };

/// Round half to even, independent of the current floating-point rounding mode.
inline std::int64_t round_half_even(double x) {
  const double fl = std::floor(x);
  const double diff = x - fl;
  auto base = static_cast<std::int64_t>(fl);
  if (diff > 0.5) return base + 1;
  if (diff < 0.5) return base;
  return (base % 2 == 0) ? base : base + 1;
}

struct CohortTruth {
  std::int64_t n_exposed = 1000;
  std::int64_t n_unexposed = 1000;
  double baseline_risk = 0.01;
  double true_rr = 1.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (n_exposed <= 0 || n_unexposed <= 0) throw DomainError("cohort truth: arm sizes must be positive");
    if (!(baseline_risk > 0.0 && baseline_risk < 1.0)) {
      throw DomainError("cohort truth: baseline risk must lie in (0,1)");
    }
    if (!(true_rr > 0.0) || !std::isfinite(true_rr)) throw DomainError("cohort truth: RR must be positive");
    if (baseline_risk * true_rr > 1.0) throw RiskOverflow("cohort truth: baseline risk x RR exceeds 1");
  }
};

inline std::int64_t draw_or_expect(Mode mode, std::uint64_t seed, std::uint64_t index,
                                   std::int64_t n, double p) {
  if (mode == Mode::Expected) return round_half_even(static_cast<double>(n) * p);
  rng::Stream s(seed, index);
  return static_cast<std::int64_t>(s.binomial(static_cast<std::uint64_t>(n), p));
}

inline TwoByTwoTable simulate_cohort(const CohortTruth& t, Mode mode = Mode::Random) {
  t.validate();
  TwoByTwoTable out;
  out.design = Design::Cohort;
  out.a = draw_or_expect(mode, t.seed, 0, t.n_exposed, t.baseline_risk * t.true_rr);
  out.b = t.n_exposed - out.a;
  out.c = draw_or_expect(mode, t.seed, 1, t.n_unexposed, t.baseline_risk);
  out.d = t.n_unexposed - out.c;
  return out;
}

struct ConfoundedTruth {
  CohortTruth cohort;
  std::optional<ConfounderSpec> confounder;
  /// Multiplier on the joint risk when both exposure and confounder are
  /// present; absent means the two act additively on the risk scale.
  std::optional<double> interaction_rr;
  std::optional<MisclassificationSpec> misclassification;
};

struct ConfoundedSample {
  StratifiedStudy study;
  TwoByTwoTable crude;
};

struct CellRisks {
  double unexposed_absent, exposed_absent, unexposed_present, exposed_present;
};

/// Risk in each (exposure, confounder) cell of the joint model.
inline CellRisks cell_risks(const ConfoundedTruth& t) {
  const double r0 = t.cohort.baseline_risk;
  const double rr = t.cohort.true_rr;
  const double rc = t.confounder ? t.confounder->rr_confounder_outcome : 1.0;
  CellRisks r{r0, r0 * rr, r0 * rc, 0.0};
  r.exposed_present = t.interaction_rr ? r0 * rr * rc * *t.interaction_rr : r0 * (rr + rc - 1.0);
  for (double v : {r.unexposed_absent, r.exposed_absent, r.unexposed_present, r.exposed_present}) {
    if (!(v > 0.0 && v < 1.0)) {
      throw RiskOverflow("composite risk " + std::to_string(v) + " lies outside (0,1)");
    }
  }
  return r;
}

namespace detail {

/// Forward misclassification of one outcome row (exposed, unexposed) counts.
inline std::pair<std::int64_t, std::int64_t> misclassify_row(Mode mode, std::uint64_t seed,
                                                             std::uint64_t index, std::int64_t exposed,
                                                             std::int64_t unexposed, double se,
                                                             double sp) {
  const std::int64_t total = exposed + unexposed;
  std::int64_t recorded_exposed;
  if (mode == Mode::Expected) {
    recorded_exposed = round_half_even(se * static_cast<double>(exposed) +
                                       (1.0 - sp) * static_cast<double>(unexposed));
  } else {
    rng::Stream s(seed, index);
    recorded_exposed = static_cast<std::int64_t>(s.binomial(static_cast<std::uint64_t>(exposed), se)) +
                       static_cast<std::int64_t>(s.binomial(static_cast<std::uint64_t>(unexposed), 1.0 - sp));
  }
  return {recorded_exposed, total - recorded_exposed};
}

inline TwoByTwoTable misclassify(Mode mode, std::uint64_t seed, std::uint64_t base_index,
                                 const TwoByTwoTable& t, const MisclassificationSpec& m) {
  TwoByTwoTable out = t;
  std::tie(out.a, out.c) = misclassify_row(mode, seed, base_index, t.a, t.c, m.case_se(), m.case_sp());
  std::tie(out.b, out.d) =
      misclassify_row(mode, seed, base_index + 1, t.b, t.d, m.noncase_se(), m.noncase_sp());
  return out;
}

}  // namespace detail

/// Confounder-stratified cohort from the joint risk model. Without a
/// confounder the study has one stratum (empty profile) equal to
/// simulate_cohort's table. Misclassification, when given, is applied last.
inline ConfoundedSample simulate_confounded_cohort(const ConfoundedTruth& t, Mode mode = Mode::Random) {
  t.cohort.validate();
  if (t.misclassification) validate_misclassification(*t.misclassification);
  if (t.interaction_rr && !(*t.interaction_rr > 0.0)) throw DomainError("interaction_rr must be positive");
  const auto seed = t.cohort.seed;
  ConfoundedSample out;
  out.study.id = "simulated";
  out.study.metadata = "seed " + std::to_string(seed) + (mode == Mode::Expected ? ", expected counts" : ", random");

  if (!t.confounder) {
    auto table = simulate_cohort(t.cohort, mode);
    (void)cell_risks(t);
    if (t.misclassification) table = detail::misclassify(mode, seed, 8, table, *t.misclassification);
    out.study.strata.push_back({CovariateProfile{}, table});
    out.crude = table;
    return out;
  }

  validate_confounder(*t.confounder);
  const auto risks = cell_risks(t);
  const auto& c = *t.confounder;
  const std::int64_t n1 = t.cohort.n_exposed, n0 = t.cohort.n_unexposed;
  const std::int64_t n1_present = draw_or_expect(mode, seed, 2, n1, c.prevalence_exposed);
  const std::int64_t n0_present = draw_or_expect(mode, seed, 3, n0, c.prevalence_unexposed);
  const std::int64_t n1_absent = n1 - n1_present, n0_absent = n0 - n0_present;

  TwoByTwoTable present, absent;
  present.a = draw_or_expect(mode, seed, 4, n1_present, risks.exposed_present);
  present.b = n1_present - present.a;
  present.c = draw_or_expect(mode, seed, 5, n0_present, risks.unexposed_present);
  present.d = n0_present - present.c;
  absent.a = draw_or_expect(mode, seed, 6, n1_absent, risks.exposed_absent);
  absent.b = n1_absent - absent.a;
  absent.c = draw_or_expect(mode, seed, 7, n0_absent, risks.unexposed_absent);
  absent.d = n0_absent - absent.c;
  if (t.misclassification) {
    present = detail::misclassify(mode, seed, 8, present, *t.misclassification);
    absent = detail::misclassify(mode, seed, 10, absent, *t.misclassification);
  }
  out.study.strata.push_back({CovariateProfile{{"confounder", "absent"}}, absent});
  out.study.strata.push_back({CovariateProfile{{"confounder", "present"}}, present});
  out.crude = out.study.crude();
  return out;
}

/// Study-level log RRs from a random-effects truth: study i has its own
/// standard error drawn uniformly from [se_low, se_high] and
///   y_i = mu + tau * z1 + se_i * z2,
/// all from substream (seed, i).
inline std::vector<StudyEstimate> simulate_meta_estimates(std::size_t k, double mu, double tau,
                                                          double se_low, double se_high,
                                                          std::uint64_t seed) {
  if (k == 0 || !(tau >= 0.0) || !(se_low > 0.0) || !(se_high >= se_low)) {
    throw DomainError("simulate_meta_estimates: need k > 0, tau >= 0, 0 < se_low <= se_high");
  }
  std::vector<StudyEstimate> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    rng::Stream s(seed, i);
    const double se = s.uniform(se_low, se_high);
    const double theta = s.normal(mu, tau);
    out.push_back({"study-" + std::to_string(i), s.normal(theta, se), se});
  }
  return out;
}

/// Two-sided Fisher p by full enumeration of the tables with the observed
/// margins. Point probabilities come from the ratio recurrence
///   P(x+1)/P(x) = (r1-x)(c1-x) / ((x+1)(r2-c1+x+1)),
/// normalized over the support; no log-gamma is involved.
inline double exact_fisher_oracle(const TwoByTwoTable& t) {
  if (t.total() > 10000) throw EnumerationBound("exact_fisher_oracle: total count exceeds 10^4");
  if (t.a < 0 || t.b < 0 || t.c < 0 || t.d < 0) throw DomainError("exact_fisher_oracle: negative cell");
  const std::int64_t r1 = t.a + t.b, r2 = t.c + t.d, c1 = t.a + t.c;
  const std::int64_t lo = std::max<std::int64_t>(0, c1 - r2);
  const std::int64_t hi = std::min(r1, c1);
  std::vector<double> logw;
  logw.reserve(static_cast<std::size_t>(hi - lo + 1));
  double lw = 0.0;
  for (std::int64_t x = lo; x <= hi; ++x) {
    logw.push_back(lw);
    if (x < hi) {
      const double num = static_cast<double>((r1 - x) * (c1 - x));
      const double den = static_cast<double>((x + 1) * (r2 - c1 + x + 1));
      lw += std::log(num / den);
    }
  }
  double mx = logw.front();
  for (double v : logw) mx = std::max(mx, v);
  double norm = 0.0;
  for (double v : logw) norm += std::exp(v - mx);
  const double observed = std::exp(logw[static_cast<std::size_t>(t.a - lo)] - mx) / norm;
  double p = 0.0;
  for (double v : logw) {
    const double px = std::exp(v - mx) / norm;
    if (px <= observed * (1.0 + kFisherTieTolerance)) p += px;
  }
  return std::min(1.0, p);
}

}  // namespace causal::sim
