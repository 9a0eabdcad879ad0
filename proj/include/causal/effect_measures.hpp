#pragma once

// Effect measures on a single 2x2 table: relative risk, odds ratio, excess
// risk, probability that a case is due to the exposure (PDE), the
// association test, and exposure-misclassification correction.
//
// Zero cells: when any cell is zero, 0.5 is added to all four cells before a
// ratio measure is computed (Haldane-Anscombe) and the estimate is flagged
// `corrected`. Intervals for RR and OR are Wald intervals on the log scale.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string_view>

#include "causal/errors.hpp"
#include "causal/stats.hpp"
#include "causal/study_model.hpp"

namespace causal {

enum class Measure { RR, OR, ExcessRisk };

inline std::string_view to_string(Measure m) {
  switch (m) {
    case Measure::RR: return "RR";
    case Measure::OR: return "OR";
    case Measure::ExcessRisk: return "excess_risk";
  }
  return "?";
}

struct EffectEstimate {
  Measure kind = Measure::RR;
  double point = 1.0;
  double lcl = 1.0;
  double ucl = 1.0;
  double confidence_level = 0.95;
  double p_value = 1.0;
  bool corrected = false;
  /// Standard error on the analysis scale (log scale for RR and OR).
  double se = 0.0;

  bool is_ratio() const { return kind != Measure::ExcessRisk; }
  double log_point() const { return std::log(point); }
};

inline constexpr double kDefaultConfidence = 0.95;

namespace detail {

struct Cells {
  double a, b, c, d;
  bool corrected;
};

inline Cells corrected_cells(const TwoByTwoTable& t) {
  const bool zero = t.has_zero_cell();
  const double k = zero ? 0.5 : 0.0;
  return {static_cast<double>(t.a) + k, static_cast<double>(t.b) + k,
          static_cast<double>(t.c) + k, static_cast<double>(t.d) + k, zero};
}

inline void require_margins(const TwoByTwoTable& t, const char* what) {
  const auto report = validate_table(t);
  if (!report.ok()) throw DegenerateError(std::string(what) + ": " + report.violations.front());
}

inline EffectEstimate log_scale_estimate(Measure kind, double point, double se,
                                         double confidence_level, bool corrected) {
  const double z = stats::critical_z(confidence_level);
  EffectEstimate e;
  e.kind = kind;
  e.point = point;
  e.se = se;
  e.lcl = std::exp(std::log(point) - z * se);
  e.ucl = std::exp(std::log(point) + z * se);
  // exp/log round trips can leave the bound one ulp past the point.
  e.lcl = std::min(e.lcl, point);
  e.ucl = std::max(e.ucl, point);
  e.confidence_level = confidence_level;
  e.p_value = stats::two_sided_p_from_z(std::log(point) / se);
  e.corrected = corrected;
  return e;
}

}  // namespace detail

/// Cohort risk ratio a/(a+b) over c/(c+d). Computed in cross-multiplied form
/// a(c+d) / (c(a+b)) so integral inputs with an exact ratio give it exactly.
inline EffectEstimate relative_risk(const TwoByTwoTable& t,
                                    double confidence_level = kDefaultConfidence) {
  if (t.design == Design::CaseControl) {
    throw DesignError("relative risk is not estimable from a case-control table; use the odds ratio");
  }
  detail::require_margins(t, "relative_risk");
  const auto x = detail::corrected_cells(t);
  const double n1 = x.a + x.b;
  const double n0 = x.c + x.d;
  const double point = (x.a * n0) / (x.c * n1);
  const double se = std::sqrt(1.0 / x.a - 1.0 / n1 + 1.0 / x.c - 1.0 / n0);
  return detail::log_scale_estimate(Measure::RR, point, se, confidence_level, x.corrected);
}

/// Cross-product ratio ad/bc.
inline EffectEstimate odds_ratio(const TwoByTwoTable& t,
                                 double confidence_level = kDefaultConfidence) {
  detail::require_margins(t, "odds_ratio");
  if ((t.a == 0 && t.d == 0) || (t.b == 0 && t.c == 0)) {
    throw DegenerateError("odds_ratio: both cells of a cross-product term are zero");
  }
  const auto x = detail::corrected_cells(t);
  const double point = (x.a * x.d) / (x.b * x.c);
  const double se = std::sqrt(1.0 / x.a + 1.0 / x.b + 1.0 / x.c + 1.0 / x.d);
  return detail::log_scale_estimate(Measure::OR, point, se, confidence_level, x.corrected);
}

/// The ratio measure the table's design supports: RR for cohorts, OR for
/// case-control studies.
inline EffectEstimate design_estimate(const TwoByTwoTable& t,
                                      double confidence_level = kDefaultConfidence) {
  return t.design == Design::Cohort ? relative_risk(t, confidence_level)
                                    : odds_ratio(t, confidence_level);
}

/// Probability that a case is due to the exposure, (RR - 1)/RR.
inline double pde(double rr) {
  if (!std::isfinite(rr) || !(rr > 0.0)) throw DomainError("pde: relative risk must be positive");
  return (rr - 1.0) / rr;
}

/// Risk difference with a Wald interval from the binomial variances.
inline EffectEstimate excess_risk(const TwoByTwoTable& t,
                                  double confidence_level = kDefaultConfidence) {
  if (t.design == Design::CaseControl) {
    throw DesignError("excess risk needs cohort data");
  }
  detail::require_margins(t, "excess_risk");
  const double n1 = static_cast<double>(t.exposed_margin());
  const double n0 = static_cast<double>(t.unexposed_margin());
  const double p1 = static_cast<double>(t.a) / n1;
  const double p0 = static_cast<double>(t.c) / n0;
  EffectEstimate e;
  e.kind = Measure::ExcessRisk;
  e.point = p1 - p0;
  e.se = std::sqrt(p1 * (1.0 - p1) / n1 + p0 * (1.0 - p0) / n0);
  const double z = stats::critical_z(confidence_level);
  e.lcl = e.point - z * e.se;
  e.ucl = e.point + z * e.se;
  e.confidence_level = confidence_level;
  if (e.se > 0.0) {
    e.p_value = stats::two_sided_p_from_z(e.point / e.se);
  } else {
    e.p_value = e.point == 0.0 ? 1.0 : 0.0;
  }
  return e;
}

enum class TestMethod { ChiSquare, FisherExact };

inline std::string_view to_string(TestMethod m) {
  return m == TestMethod::ChiSquare ? "chi_square" : "fisher_exact";
}

struct AssociationTest {
  TestMethod method = TestMethod::ChiSquare;
  /// Pearson statistic on the chi-square path; observed cell a on the exact path.
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Relative tolerance when comparing hypergeometric point probabilities, so
/// that tables tied with the observed one in exact arithmetic are counted.
inline constexpr double kFisherTieTolerance = 1e-7;

/// Two-sided Fisher exact p: total probability of the tables, at the
/// observed margins, whose point probability does not exceed the observed
/// one.
inline double fisher_exact_two_sided(const TwoByTwoTable& t) {
  const std::int64_t r1 = t.exposed_margin();
  const std::int64_t r2 = t.unexposed_margin();
  const std::int64_t c1 = t.case_margin();
  const std::int64_t n = t.total();
  auto log_choose = [](std::int64_t m, std::int64_t k) {
    return std::lgamma(static_cast<double>(m) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
           std::lgamma(static_cast<double>(m - k) + 1.0);
  };
  const double log_denominator = log_choose(n, c1);
  auto log_prob = [&](std::int64_t x) {
    return log_choose(r1, x) + log_choose(r2, c1 - x) - log_denominator;
  };
  const std::int64_t lo = std::max<std::int64_t>(0, c1 - r2);
  const std::int64_t hi = std::min(r1, c1);
  const double observed = std::exp(log_prob(t.a));
  double p = 0.0;
  for (std::int64_t x = lo; x <= hi; ++x) {
    const double px = std::exp(log_prob(x));
    if (px <= observed * (1.0 + kFisherTieTolerance)) p += px;
  }
  return std::clamp(p, 0.0, 1.0);
}

/// Pearson chi-square (1 df, no Yates correction) when every expected count
/// is at least 5, two-sided Fisher exact otherwise.
inline AssociationTest association_test(const TwoByTwoTable& t) {
  detail::require_margins(t, "association_test");
  const double n = static_cast<double>(t.total());
  const double r1 = static_cast<double>(t.exposed_margin());
  const double r2 = static_cast<double>(t.unexposed_margin());
  const double c1 = static_cast<double>(t.case_margin());
  const double c2 = static_cast<double>(t.noncase_margin());
  const double min_expected = std::min({r1 * c1, r1 * c2, r2 * c1, r2 * c2}) / n;
  AssociationTest out;
  if (min_expected >= 5.0) {
    const double cross = static_cast<double>(t.a) * static_cast<double>(t.d) -
                         static_cast<double>(t.b) * static_cast<double>(t.c);
    out.method = TestMethod::ChiSquare;
    out.statistic = n * cross * cross / (r1 * r2 * c1 * c2);
    out.p_value = stats::chi_square1_sf(out.statistic);
  } else {
    out.method = TestMethod::FisherExact;
    out.statistic = static_cast<double>(t.a);
    out.p_value = fisher_exact_two_sided(t);
  }
  return out;
}

/// Real-valued counts, as produced by misclassification correction.
struct RealTable {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double d = 0.0;

  static RealTable from(const TwoByTwoTable& t) {
    return {static_cast<double>(t.a), static_cast<double>(t.b), static_cast<double>(t.c),
            static_cast<double>(t.d)};
  }
  bool operator==(const RealTable&) const = default;
};

/// Forward exposure misclassification of true counts: in each outcome row a
/// truly exposed subject is recorded exposed with probability sensitivity and
/// a truly unexposed one with probability 1 - specificity.
inline RealTable apply_misclassification(const RealTable& truth, const MisclassificationSpec& m) {
  validate_misclassification(m);
  RealTable out;
  out.a = m.case_se() * truth.a + (1.0 - m.case_sp()) * truth.c;
  out.c = (1.0 - m.case_se()) * truth.a + m.case_sp() * truth.c;
  out.b = m.noncase_se() * truth.b + (1.0 - m.noncase_sp()) * truth.d;
  out.d = (1.0 - m.noncase_se()) * truth.b + m.noncase_sp() * truth.d;
  return out;
}

struct MisclassificationResult {
  RealTable corrected;
  std::optional<double> rr;   ///< present when the table is cohort and the ratio is finite
  std::optional<double> odds;  ///< present when the cross-product ratio is finite and positive
};

/// Back-correct observed counts for exposure misclassification, row by row:
///   exposed_true = (exposed_obs - (1 - Sp) * row_total) / (Se + Sp - 1).
/// Throws InfeasibleCorrection naming the first cell that goes negative.
inline MisclassificationResult misclassification_adjust(const TwoByTwoTable& t,
                                                        const MisclassificationSpec& m) {
  validate_misclassification(m);
  const auto obs = RealTable::from(t);
  const double cases = obs.a + obs.c;
  const double noncases = obs.b + obs.d;
  MisclassificationResult r;
  r.corrected.a = (obs.a - (1.0 - m.case_sp()) * cases) / (m.case_se() + m.case_sp() - 1.0);
  r.corrected.c = cases - r.corrected.a;
  r.corrected.b = (obs.b - (1.0 - m.noncase_sp()) * noncases) /
                  (m.noncase_se() + m.noncase_sp() - 1.0);
  r.corrected.d = noncases - r.corrected.b;
  const std::pair<const char*, double> cells[] = {{"a", r.corrected.a},
                                                  {"b", r.corrected.b},
                                                  {"c", r.corrected.c},
                                                  {"d", r.corrected.d}};
  for (const auto& [name, value] : cells) {
    if (value < 0.0) throw InfeasibleCorrection(name, value);
  }
  const auto& x = r.corrected;
  if (t.design == Design::Cohort && x.c > 0.0 && x.a + x.b > 0.0) {
    r.rr = (x.a * (x.c + x.d)) / (x.c * (x.a + x.b));
  }
  if (x.b > 0.0 && x.c > 0.0 && x.a > 0.0 && x.d > 0.0) r.odds = (x.a * x.d) / (x.b * x.c);
  return r;
}

}  // namespace causal
