#pragma once

// Evidence synthesis across studies and doses: inverse-variance and
// DerSimonian-Laird meta-analysis with Cochran's Q, the consistency verdict,
// the Cochran-Armitage trend test and the Doll-Peto power model
// RR(x) = (1 + x)^z.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "causal/effect_measures.hpp"
#include "causal/errors.hpp"
#include "causal/stats.hpp"
#include "causal/study_model.hpp"

namespace causal {

struct StudyEstimate {
  std::string study_id;
  double log_rr = 0.0;
  double se = 1.0;

  static StudyEstimate from(std::string id, const EffectEstimate& e) {
    return {std::move(id), e.log_point(), e.se};
  }
};

struct MetaResult {
  EffectEstimate pooled_fixed;
  EffectEstimate pooled_random;
  double q = 0.0;
  int q_df = 0;
  double q_p = 1.0;
  double i_squared = 0.0;
  double tau_squared = 0.0;
};

/// Fixed-effect inverse-variance and DerSimonian-Laird random-effects pooling
/// on the log scale. Studies are summed in a canonical order, so the result
/// does not depend on the order of `estimates`.
inline MetaResult meta_analyze(std::span<const StudyEstimate> estimates,
                               double confidence_level = kDefaultConfidence) {
  if (estimates.size() < 2) {
    throw InsufficientStudies("meta-analysis needs at least 2 studies, got " +
                              std::to_string(estimates.size()));
  }
  std::vector<std::pair<double, double>> ys;  // (log_rr, se)
  for (const auto& e : estimates) {
    if (!std::isfinite(e.log_rr) || !std::isfinite(e.se) || !(e.se > 0.0)) {
      throw DomainError("study '" + e.study_id + "': log RR and SE must be finite, SE positive");
    }
    ys.emplace_back(e.log_rr, e.se);
  }
  std::sort(ys.begin(), ys.end());

  double sw = 0, swy = 0, sw2 = 0;
  for (const auto& [y, se] : ys) {
    const double w = 1.0 / (se * se);
    sw += w;
    swy += w * y;
    sw2 += w * w;
  }
  const double mu_fixed = swy / sw;
  double q = 0.0;
  for (const auto& [y, se] : ys) q += (y - mu_fixed) * (y - mu_fixed) / (se * se);

  MetaResult r;
  r.q = q;
  r.q_df = static_cast<int>(ys.size()) - 1;
  r.q_p = stats::chi_square_sf(q, r.q_df);
  r.i_squared = q > 0.0 ? std::max(0.0, (q - r.q_df) / q) : 0.0;
  const double c = sw - sw2 / sw;
  r.tau_squared = c > 0.0 ? std::max(0.0, (q - r.q_df) / c) : 0.0;

  double sw_r = 0, swy_r = 0;
  for (const auto& [y, se] : ys) {
    const double w = 1.0 / (se * se + r.tau_squared);
    sw_r += w;
    swy_r += w * y;
  }
  r.pooled_fixed = detail::log_scale_estimate(Measure::RR, std::exp(mu_fixed), 1.0 / std::sqrt(sw),
                                              confidence_level, false);
  r.pooled_random = detail::log_scale_estimate(Measure::RR, std::exp(swy_r / sw_r),
                                               1.0 / std::sqrt(sw_r), confidence_level, false);
  return r;
}

enum class ConsistencyStatus { Pass, Fail, Indeterminate };

inline std::string_view to_string(ConsistencyStatus s) {
  switch (s) {
    case ConsistencyStatus::Pass: return "pass";
    case ConsistencyStatus::Fail: return "fail";
    case ConsistencyStatus::Indeterminate: return "indeterminate";
  }
  return "?";
}

struct ConsistencyConfig {
  double heterogeneity_alpha = 0.10;
  double confidence_level = kDefaultConfidence;
};

struct ConsistencyEvidence {
  ConsistencyStatus status = ConsistencyStatus::Indeterminate;
  double q_p = 1.0;
  double overlap_fraction = 1.0;
  MetaResult meta;
};

/// Pass: no significant heterogeneity and the pooled interval lies above 1.
/// Fail: significant heterogeneity with point estimates on both sides of 1.
inline ConsistencyEvidence consistency_verdict(std::span<const StudyEstimate> estimates,
                                               const ConsistencyConfig& cfg = {}) {
  ConsistencyEvidence ev;
  ev.meta = meta_analyze(estimates, cfg.confidence_level);
  ev.q_p = ev.meta.q_p;

  const double z = stats::critical_z(cfg.confidence_level);
  std::size_t pairs = 0, overlapping = 0;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    for (std::size_t j = i + 1; j < estimates.size(); ++j) {
      const auto& x = estimates[i];
      const auto& y = estimates[j];
      ++pairs;
      const bool overlap = x.log_rr - z * x.se <= y.log_rr + z * y.se &&
                           y.log_rr - z * y.se <= x.log_rr + z * x.se;
      if (overlap) ++overlapping;
    }
  }
  ev.overlap_fraction = static_cast<double>(overlapping) / static_cast<double>(pairs);

  const bool homogeneous = ev.q_p >= cfg.heterogeneity_alpha;
  const bool any_harm = std::any_of(estimates.begin(), estimates.end(),
                                    [](const auto& e) { return e.log_rr > 0.0; });
  const bool any_protect = std::any_of(estimates.begin(), estimates.end(),
                                       [](const auto& e) { return e.log_rr < 0.0; });
  if (homogeneous && ev.meta.pooled_fixed.lcl > 1.0) {
    ev.status = ConsistencyStatus::Pass;
  } else if (!homogeneous && any_harm && any_protect) {
    ev.status = ConsistencyStatus::Fail;
  } else {
    ev.status = ConsistencyStatus::Indeterminate;
  }
  return ev;
}

struct TrendGroup {
  double score = 0.0;
  double cases = 0.0;
  double total = 0.0;
};

struct TrendStatistic {
  double u = 0.0;         ///< sum of score * (observed - expected cases)
  double variance = 0.0;  ///< null variance of u
  double z = 0.0;
  double p_increasing = 0.5;  ///< one-sided, increasing alternative
};

/// Cochran-Armitage score statistic for a trend in proportions.
inline TrendStatistic cochran_armitage(std::span<const TrendGroup> groups) {
  double n = 0, cases = 0, sx = 0, sxx = 0;
  for (const auto& g : groups) {
    n += g.total;
    cases += g.cases;
    sx += g.total * g.score;
    sxx += g.total * g.score * g.score;
  }
  if (!(n > 0.0)) throw DegenerateError("trend test: no subjects");
  const double pbar = cases / n;
  TrendStatistic t;
  for (const auto& g : groups) t.u += g.score * (g.cases - g.total * pbar);
  t.variance = pbar * (1.0 - pbar) * (sxx - sx * sx / n);
  if (!(t.variance > 0.0)) {
    throw DegenerateError("trend test: zero-variance score configuration");
  }
  t.z = t.u / std::sqrt(t.variance);
  t.p_increasing = stats::normal_sf(t.z);
  return t;
}

struct DoseTrend {
  TrendStatistic statistic;
  double trend_p = 0.5;
  bool monotone_nondecreasing = true;
};

/// Trend across the dosed groups and the shared referent (scored 0), using
/// the raw doses as scores. The monotone flag compares the dosed groups'
/// risks exactly in integer arithmetic.
inline DoseTrend dose_trend(const DoseSeries& series) {
  validate_dose_series(series);
  if (series.points.size() < 2) throw DomainError("dose_trend: at least 2 dose points are required");
  std::vector<TrendGroup> groups;
  const auto& ref = series.points.front().table;
  groups.push_back({0.0, static_cast<double>(ref.c), static_cast<double>(ref.unexposed_margin())});
  for (const auto& p : series.points) {
    groups.push_back({p.dose, static_cast<double>(p.table.a),
                      static_cast<double>(p.table.exposed_margin())});
  }
  DoseTrend out;
  out.statistic = cochran_armitage(groups);
  out.trend_p = out.statistic.p_increasing;
  for (std::size_t i = 1; i < series.points.size(); ++i) {
    const auto& prev = series.points[i - 1].table;
    const auto& cur = series.points[i].table;
    // cur.a / cur.n >= prev.a / prev.n
    const auto lhs = static_cast<__int128>(cur.a) * prev.exposed_margin();
    const auto rhs = static_cast<__int128>(prev.a) * cur.exposed_margin();
    if (lhs < rhs) out.monotone_nondecreasing = false;
  }
  return out;
}

struct DoseLogPoint {
  double dose = 0.0;
  double log_rr = 0.0;
  double weight = 1.0;
};

struct DoseFit {
  double z = 0.0;
  double residual_sse = 0.0;
  std::vector<double> doses;
  std::vector<double> fitted_rr;

  double rr_at(double dose) const { return std::pow(1.0 + dose, z); }
};

/// Weighted least squares through the origin of log RR on log(1 + dose):
///   z = sum(w u y) / sum(w u^2),  u = log(1 + x),  y = log RR(x).
inline DoseFit fit_doll_peto(std::span<const DoseLogPoint> points) {
  double swuy = 0, swuu = 0;
  for (const auto& p : points) {
    if (!(p.dose >= 0.0) || !(p.weight > 0.0) || !std::isfinite(p.log_rr)) {
      throw DomainError("fit_doll_peto: doses must be >= 0, weights > 0, log RR finite");
    }
    const double u = std::log1p(p.dose);
    swuy += p.weight * u * p.log_rr;
    swuu += p.weight * u * u;
  }
  if (!(swuu > 0.0)) throw DegenerateError("fit_doll_peto: all doses are 0");
  DoseFit fit;
  fit.z = swuy / swuu;
  for (const auto& p : points) {
    const double r = p.log_rr - fit.z * std::log1p(p.dose);
    fit.residual_sse += p.weight * r * r;
    fit.doses.push_back(p.dose);
    fit.fitted_rr.push_back(fit.rr_at(p.dose));
  }
  return fit;
}

/// Fit on a dose series: each point contributes its log RR against the
/// referent with inverse-variance weight.
inline DoseFit fit_doll_peto(const DoseSeries& series) {
  validate_dose_series(series);
  if (series.points.size() < 2) throw DomainError("fit_doll_peto: at least 2 dose points are required");
  std::vector<DoseLogPoint> pts;
  for (const auto& p : series.points) {
    const auto rr = relative_risk(p.table);
    pts.push_back({p.dose, rr.log_point(), 1.0 / (rr.se * rr.se)});
  }
  return fit_doll_peto(std::span<const DoseLogPoint>(pts));
}

}  // namespace causal
