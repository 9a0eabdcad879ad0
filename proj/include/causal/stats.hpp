#pragma once

// Distribution helpers shared by the measure, synthesis and sensitivity code.

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>

#include <boost/math/special_functions/gamma.hpp>

#include "causal/errors.hpp"

namespace causal::stats {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// Upper tail 1 - Phi(x) without cancellation for large x.
inline double normal_sf(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

/// Inverse standard normal CDF, Wichura's AS241 (PPND16), ~1e-16 relative.
inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw DomainError("normal_quantile: p must lie in (0,1)");
  }
  const double q = p - 0.5;
  if (std::fabs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    const double num =
        (((((((2509.0809287301226727 * r + 33430.575583588128105) * r +
              67265.770927008700853) * r + 45921.953931549871457) * r +
            13731.693765509461125) * r + 1971.5909503065514427) * r +
          133.14166789178437745) * r + 3.387132872796366608);
    const double den =
        (((((((5226.495278852545925 * r + 28729.085735721942674) * r +
              39307.89580009271061) * r + 21213.794301586595867) * r +
            5394.1960214247511077) * r + 687.1870074920579083) * r +
          42.313330701600911252) * r + 1.0);
    return q * num / den;
  }
  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double value;
  if (r <= 5.0) {
    r -= 1.6;
    const double num =
        (((((((7.7454501427834140764e-4 * r + 0.0227238449892691845833) * r +
              0.24178072517745061177) * r + 1.27045825245236838258) * r +
            3.64784832476320460504) * r + 5.7694972214606914055) * r +
          4.6303378461565452959) * r + 1.42343711074968357734);
    const double den =
        (((((((1.05075007164441684324e-9 * r + 5.475938084995344946e-4) * r +
              0.0151986665636164571966) * r + 0.14810397642748007459) * r +
            0.68976733498510000455) * r + 1.6763848301838038494) * r +
          2.05319162663775882187) * r + 1.0);
    value = num / den;
  } else {
    r -= 5.0;
    const double num =
        (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
              1.2426609473880784386e-3) * r + 0.026532189526576123093) * r +
            0.29656057182850489123) * r + 1.7848265399172913358) * r +
          5.4637849111641143699) * r + 6.6579046435011037772);
    const double den =
        (((((((2.04426310338993978564e-15 * r + 1.4215117583164458887e-7) * r +
              1.8463183175100546818e-5) * r + 7.868691311456132591e-4) * r +
            0.0148753612908506148525) * r + 0.13692988092273580531) * r +
          0.59983220655588793769) * r + 1.0);
    value = num / den;
  }
  return q < 0.0 ? -value : value;
}

/// Two-sided critical value for a confidence level in (0,1).
inline double critical_z(double confidence_level) {
  if (!(confidence_level > 0.0 && confidence_level < 1.0)) {
    throw DomainError("confidence level must lie in (0,1)");
  }
  return normal_quantile(1.0 - (1.0 - confidence_level) / 2.0);
}

inline double two_sided_p_from_z(double z) {
  return std::min(1.0, 2.0 * normal_sf(std::fabs(z)));
}

/// Chi-square(1) upper tail, 2(1 - Phi(sqrt(x))).
inline double chi_square1_sf(double statistic) {
  if (statistic <= 0.0) return 1.0;
  return std::erfc(std::sqrt(statistic / 2.0));
}

/// Chi-square(df) upper tail via the regularized upper incomplete gamma.
inline double chi_square_sf(double statistic, int df) {
  if (df <= 0) throw DomainError("chi_square_sf: df must be positive");
  if (statistic <= 0.0) return 1.0;
  if (df == 1) return chi_square1_sf(statistic);
  return boost::math::gamma_q(0.5 * df, 0.5 * statistic);
}

/// Linear-interpolation sample quantile (Hyndman-Fan type 7) of sorted data.
inline double quantile_sorted(std::span<const double> sorted, double prob) {
  if (sorted.empty()) throw DomainError("quantile of empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = h - static_cast<double>(lo);
  if (frac == 0.0) return sorted[lo];
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace causal::stats
