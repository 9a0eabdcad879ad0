#pragma once

// Confounding: stratified (Mantel-Haenszel) pooling, Simpson's-paradox
// detection, Cornfield requirements, the one-binary-confounder bias factor
// and a seeded Monte Carlo sensitivity analysis.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <thread>
#include <vector>

#include "causal/effect_measures.hpp"
#include "causal/errors.hpp"
#include "causal/rng.hpp"
#include "causal/stats.hpp"
#include "causal/study_model.hpp"

namespace causal {

/// Mantel-Haenszel RR (cohort) or OR (case-control) across strata, with the
/// Greenland-Robins and Robins-Breslow-Greenland log-scale variances. One
/// stratum returns that stratum's crude estimate.
inline EffectEstimate mantel_haenszel_pool(const StratifiedStudy& s,
                                           double confidence_level = kDefaultConfidence) {
  if (s.strata.empty()) throw DegenerateError("mantel_haenszel_pool: study has no strata");
  const Design design = s.strata.front().table.design;
  for (const auto& st : s.strata) {
    if (st.table.design != design) {
      throw MixedDesignError("study '" + s.id + "' mixes cohort and case-control strata");
    }
    detail::require_margins(st.table, "mantel_haenszel_pool");
  }
  if (s.strata.size() == 1) return design_estimate(s.strata.front().table, confidence_level);

  auto pool = [&](bool correct) {
    std::vector<detail::Cells> cells;
    for (const auto& st : s.strata) {
      if (correct) {
        cells.push_back(detail::corrected_cells(st.table));
      } else {
        const auto& t = st.table;
        cells.push_back({static_cast<double>(t.a), static_cast<double>(t.b),
                         static_cast<double>(t.c), static_cast<double>(t.d), false});
      }
    }
    struct Sums {
      double r = 0, s = 0, var = 0;
      bool any_corrected = false;
    } out;
    if (design == Design::Cohort) {
      double num = 0.0;
      for (const auto& x : cells) {
        const double n1 = x.a + x.b, n0 = x.c + x.d, n = n1 + n0;
        out.r += x.a * n0 / n;
        out.s += x.c * n1 / n;
        num += (n1 * n0 * (x.a + x.c) - x.a * x.c * n) / (n * n);
        out.any_corrected = out.any_corrected || x.corrected;
      }
      out.var = num / (out.r * out.s);
    } else {
      double pr = 0, psqr = 0, qs = 0;
      for (const auto& x : cells) {
        const double n = x.a + x.b + x.c + x.d;
        const double ri = x.a * x.d / n, si = x.b * x.c / n;
        const double p = (x.a + x.d) / n, q = (x.b + x.c) / n;
        out.r += ri;
        out.s += si;
        pr += p * ri;
        psqr += p * si + q * ri;
        qs += q * si;
        out.any_corrected = out.any_corrected || x.corrected;
      }
      out.var = pr / (2 * out.r * out.r) + psqr / (2 * out.r * out.s) + qs / (2 * out.s * out.s);
    }
    return out;
  };

  auto sums = pool(false);
  if (!(sums.r > 0.0) || !(sums.s > 0.0)) sums = pool(true);
  const double point = sums.r / sums.s;
  return detail::log_scale_estimate(design == Design::Cohort ? Measure::RR : Measure::OR, point,
                                    std::sqrt(sums.var), confidence_level, sums.any_corrected);
}

struct SimpsonReport {
  EffectEstimate crude;
  std::vector<EffectEstimate> per_stratum;
  bool reversal = false;
};

/// Reversal means the crude estimate is off the null and every stratum
/// estimate lies strictly on the other side of 1.
inline SimpsonReport detect_simpson(const StratifiedStudy& s,
                                    double confidence_level = kDefaultConfidence) {
  SimpsonReport r;
  r.crude = design_estimate(s.crude(), confidence_level);
  for (const auto& st : s.strata) r.per_stratum.push_back(design_estimate(st.table, confidence_level));
  const double lc = std::log(r.crude.point);
  if (lc != 0.0 && !r.per_stratum.empty()) {
    r.reversal = std::all_of(r.per_stratum.begin(), r.per_stratum.end(), [&](const auto& e) {
      return lc > 0.0 ? e.point < 1.0 : e.point > 1.0;
    });
  }
  return r;
}

struct CornfieldRequirements {
  double min_rr_confounder = 1.0;
  double min_prevalence_ratio = 1.0;
};

/// For an omitted binary variable to account for all of an observed RR, both
/// its own outcome RR and its exposed:unexposed prevalence ratio must exceed
/// that RR.
inline CornfieldRequirements cornfield_requirements(double rr_observed) {
  if (!std::isfinite(rr_observed) || !(rr_observed > 1.0)) {
    throw DomainError("cornfield_requirements: observed RR must exceed 1");
  }
  return {rr_observed, rr_observed};
}

/// Prevalence ratio p1/p0; +inf when only the exposed carry the confounder.
inline double prevalence_ratio(const ConfounderSpec& c) {
  if (c.prevalence_unexposed == 0.0) {
    return c.prevalence_exposed > 0.0 ? INFINITY : 1.0;
  }
  return c.prevalence_exposed / c.prevalence_unexposed;
}

/// True when the candidate meets both Cornfield requirements, i.e. it is not
/// ruled out as a full explanation of rr_observed.
inline bool cornfield_can_explain(double rr_observed, const ConfounderSpec& c) {
  const auto req = cornfield_requirements(rr_observed);
  return c.rr_confounder_outcome > req.min_rr_confounder &&
         prevalence_ratio(c) > req.min_prevalence_ratio;
}

enum class BiasDirection { Inflating, Masking, Neutral };

inline std::string_view to_string(BiasDirection d) {
  switch (d) {
    case BiasDirection::Inflating: return "inflating";
    case BiasDirection::Masking: return "masking";
    case BiasDirection::Neutral: return "neutral";
  }
  return "?";
}

struct BiasAdjustment {
  double bias_factor = 1.0;
  double rr_adjusted = 1.0;
  BiasDirection direction = BiasDirection::Neutral;
};

/// Bias factor of one binary confounder,
///   B = (p1 (RRc - 1) + 1) / (p0 (RRc - 1) + 1),
/// and the externally adjusted RR = observed / B. B lies between 1 and RRc.
inline BiasAdjustment bias_adjust(double rr_observed, const ConfounderSpec& c) {
  if (!std::isfinite(rr_observed) || !(rr_observed > 0.0)) {
    throw DomainError("bias_adjust: observed RR must be positive");
  }
  validate_confounder(c);
  const double excess = c.rr_confounder_outcome - 1.0;
  BiasAdjustment out;
  out.bias_factor = (c.prevalence_exposed * excess + 1.0) / (c.prevalence_unexposed * excess + 1.0);
  out.rr_adjusted = rr_observed / out.bias_factor;
  out.direction = out.bias_factor > 1.0   ? BiasDirection::Inflating
                  : out.bias_factor < 1.0 ? BiasDirection::Masking
                                          : BiasDirection::Neutral;
  return out;
}

struct SensitivityOptions {
  std::uint64_t draws = 10000;
  std::uint64_t seed = 0;
  double threshold = 2.0;
  unsigned threads = 1;
};

inline constexpr std::array<double, 5> kSensitivityProbs = {0.025, 0.25, 0.5, 0.75, 0.975};

struct SensitivitySummary {
  double rr_observed = 1.0;
  std::uint64_t draws = 0;
  std::uint64_t seed = 0;
  double threshold = 2.0;
  std::array<double, 5> quantiles{};  ///< at kSensitivityProbs, type-7 interpolation
  double fraction_above_threshold = 0.0;

  bool operator==(const SensitivitySummary&) const = default;
};

/// One Monte Carlo draw: confounder parameters uniform on their intervals,
/// drawn in the order (RRc, p1, p0) from substream (seed, index).
inline ConfounderSpec sensitivity_draw(const SensitivityRange& range, std::uint64_t seed,
                                       std::uint64_t index) {
  rng::Stream stream(seed, index);
  ConfounderSpec c;
  c.rr_confounder_outcome = stream.uniform(range.rr_confounder_outcome.low, range.rr_confounder_outcome.high);
  c.prevalence_exposed = stream.uniform(range.prevalence_exposed.low, range.prevalence_exposed.high);
  c.prevalence_unexposed = stream.uniform(range.prevalence_unexposed.low, range.prevalence_unexposed.high);
  return c;
}

/// Distribution of the bias-adjusted RR over uniformly drawn confounders.
/// Each draw has its own substream, so the summary does not depend on
/// `threads`.
inline SensitivitySummary mc_sensitivity(double rr_observed, const SensitivityRange& range,
                                         const SensitivityOptions& opt = {}) {
  validate_sensitivity_range(range);
  if (opt.draws < 1) throw DomainError("mc_sensitivity: draws must be at least 1");
  if (!std::isfinite(rr_observed) || !(rr_observed > 0.0)) {
    throw DomainError("mc_sensitivity: observed RR must be positive");
  }
  std::vector<double> adjusted(opt.draws);
  auto work = [&](std::uint64_t begin, std::uint64_t end) {
    for (std::uint64_t i = begin; i < end; ++i) {
      adjusted[i] = bias_adjust(rr_observed, sensitivity_draw(range, opt.seed, i)).rr_adjusted;
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(opt.threads, 64));
  if (threads == 1) {
    work(0, opt.draws);
  } else {
    std::vector<std::jthread> pool;
    const std::uint64_t chunk = (opt.draws + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
      const std::uint64_t begin = std::min<std::uint64_t>(opt.draws, t * chunk);
      const std::uint64_t end = std::min<std::uint64_t>(opt.draws, begin + chunk);
      if (begin < end) pool.emplace_back(work, begin, end);
    }
  }
  SensitivitySummary out;
  out.rr_observed = rr_observed;
  out.draws = opt.draws;
  out.seed = opt.seed;
  out.threshold = opt.threshold;
  out.fraction_above_threshold =
      static_cast<double>(std::count_if(adjusted.begin(), adjusted.end(),
                                        [&](double v) { return v > opt.threshold; })) /
      static_cast<double>(opt.draws);
  std::sort(adjusted.begin(), adjusted.end());
  for (std::size_t i = 0; i < kSensitivityProbs.size(); ++i) {
    out.quantiles[i] = stats::quantile_sorted(adjusted, kSensitivityProbs[i]);
  }
  return out;
}

}  // namespace causal
