#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "bdac/rate_model.hpp"

namespace bdac {

// Outcome of the growth-bound checks (A2)/(A3). Advisory: problems are
// reported as warnings, never thrown.
struct GrowthReport {
  // gamma_alpha, index alpha-1: the (A2) bound over the sampled chi and K.
  std::vector<double> gamma;
  bool finite = true;
  bool monotone = true;
  std::size_t firstIncrease = 0;
  // Least-squares slope of ln(gamma_alpha/alpha) against ln(alpha) over the
  // upper half of the sizes.
  double tailSlope = 0.0;
  bool decays = true;
  // min_alpha alpha / gammaHat_alpha, gammaHat being the smallest
  // non-increasing majorant of gamma.
  double c1 = 0.0;
  std::vector<std::string> warnings;

  bool pass() const noexcept { return finite && monotone && decays; }
};

// Smallest non-increasing sequence that dominates `g`.
inline std::vector<double> nonincreasing_majorant(std::span<const double> g) {
  std::vector<double> out(g.begin(), g.end());
  for (std::size_t i = out.size(); i-- > 1;) out[i - 1] = std::max(out[i - 1], out[i]);
  return out;
}

inline GrowthReport check_growth_assumptions(const RateModel& rm, std::span<const double> kValues,
                                             std::span<const double> chiSamples, std::size_t n) {
  GrowthReport rep;
  rep.gamma.assign(n, 0.0);
  double logKmax = 0.0;  // bare rates R^(1/b) enter with factor 1
  for (double k : kValues) {
    if (k > 0.0) logKmax = std::max(logKmax, std::log(k));
  }
  const double endpoints[] = {0.0, 1.0};
  std::span<const double> chis = chiSamples.empty() ? std::span<const double>(endpoints) : chiSamples;
  for (std::size_t a = 1; a <= n; ++a) {
    double lg = -std::numeric_limits<double>::infinity();
    for (double chi : chis) {
      const double lr = rm.log_rate(a, chi);
      lg = std::max({lg, lr / rm.b1(), lr / rm.b2()});
    }
    rep.gamma[a - 1] = std::exp(lg + logKmax);
    if (!std::isfinite(rep.gamma[a - 1])) rep.finite = false;
  }
  if (!rep.finite) rep.warnings.emplace_back("(A2) growth bound gamma_alpha is not finite");

  for (std::size_t a = 1; a < n; ++a) {
    if (rep.gamma[a] > rep.gamma[a - 1] * (1.0 + 1e-14)) {
      rep.monotone = false;
      rep.firstIncrease = a;
      break;
    }
  }
  if (!rep.monotone) {
    rep.warnings.push_back("(A3) gamma_alpha increases at alpha = " +
                           std::to_string(rep.firstIncrease));
  }

  if (n >= 4 && rep.finite) {
    const std::size_t lo = n / 2;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double m = static_cast<double>(n - lo);
    for (std::size_t a = lo + 1; a <= n; ++a) {
      const double x = std::log(static_cast<double>(a));
      const double y = std::log(rep.gamma[a - 1] / static_cast<double>(a));
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    const double den = m * sxx - sx * sx;
    rep.tailSlope = den > 0.0 ? (m * sxy - sx * sy) / den : 0.0;
    rep.decays = rep.tailSlope < 0.0;
    if (!rep.decays) {
      rep.warnings.push_back("(A3) gamma_alpha/alpha does not decay (tail slope " +
                             std::to_string(rep.tailSlope) + ")");
    }
  }

  const auto hat = nonincreasing_majorant(rep.gamma);
  rep.c1 = std::numeric_limits<double>::infinity();
  for (std::size_t a = 1; a <= n; ++a) rep.c1 = std::min(rep.c1, static_cast<double>(a) / hat[a - 1]);
  if (n == 0) rep.c1 = 0.0;
  return rep;
}

}  // namespace bdac
