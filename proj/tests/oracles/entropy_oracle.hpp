#pragma once

// Brute-force worst-case bin probability used as a test oracle. Bin masses
// come from adaptive Gauss-Kronrod / exp-sinh quadrature of the normal
// density and the adversary's offset is found by a grid scan plus Brent
// refinement. Shares nothing with the library beyond the ADC geometry.

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "qrng/adc.hpp"
#include "qrng/noise.hpp"

namespace oracle {

inline double phi(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI); }

// Integral of the standard normal density from 0 to z >= 0.
inline double phi_0_to(double z) {
  if (z <= 0.0) return 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(phi, 0.0, std::min(z, 40.0), 12, 1e-12);
}

// Upper tail P(Z > z).
inline double upper_tail(double z) {
  if (z <= 0.0) return 0.5 + phi_0_to(-z);
  if (z > 40.0) return 0.0;
  thread_local boost::math::quadrature::exp_sinh<double> es;
  return es.integrate([z](double u) { return phi(z + u); }, 1e-12);
}

inline double phi_interval(double a, double b) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(phi, a, b, 12, 1e-12);
}

// P(a < Z < b), standard normal.
inline double std_mass(double a, double b) {
  if (b <= a) return 0.0;
  if (b <= 0.0) return std_mass(-b, -a);
  if (a >= 0.0) return a >= 40.0 ? 0.0 : phi_interval(a, std::min(b, 40.0));
  return phi_0_to(b) + phi_0_to(-a);
}

inline double max_mass_at(double t, double sd, const qrng::AdcConfig& cfg) {
  const double delta = cfg.bin_width();
  const double lo_edge = (-cfg.range() + 0.5 * delta - t) / sd;
  const double hi_edge = (cfg.range() - 1.5 * delta - t) / sd;
  double best = std::max(upper_tail(-lo_edge), upper_tail(hi_edge));
  const auto k0 = static_cast<std::int64_t>(std::llround(t / delta));
  for (std::int64_t k = k0 - 1; k <= k0 + 1; ++k) {
    if (k <= cfg.index_low() || k >= cfg.index_high()) continue;
    const double c = static_cast<double>(k) * delta;
    best = std::max(best, std_mass((c - 0.5 * delta - t) / sd, (c + 0.5 * delta - t) / sd));
  }
  return best;
}

inline double worst_case_max_bin_prob(double lo, double hi, double sigma_quan_sq, const qrng::AdcConfig& cfg,
                                      int grid = 2000) {
  const double sd = std::sqrt(sigma_quan_sq);
  auto f = [&](double t) { return max_mass_at(t, sd, cfg); };
  if (hi <= lo) return f(lo);
  const double step = (hi - lo) / (grid - 1);
  std::vector<double> v(static_cast<std::size_t>(grid));
  for (int g = 0; g < grid; ++g) v[static_cast<std::size_t>(g)] = f(lo + g * step);
  double best = *std::max_element(v.begin(), v.end());
  std::vector<int> order(static_cast<std::size_t>(grid));
  for (int g = 0; g < grid; ++g) order[static_cast<std::size_t>(g)] = g;
  const std::size_t top = std::min<std::size_t>(6, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(top), order.end(),
                    [&](int a, int b) { return v[static_cast<std::size_t>(a)] > v[static_cast<std::size_t>(b)]; });
  for (std::size_t r = 0; r < top; ++r) {
    const int g = order[r];
    const double a = lo + std::max(0, g - 1) * step;
    const double b = lo + std::min(grid - 1, g + 1) * step;
    const auto res = boost::math::tools::brent_find_minima([&](double t) { return -f(t); }, a, b, 52);
    best = std::max(best, -res.second);
  }
  return best;
}

}  // namespace oracle
