#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "qrng/adc.hpp"
#include "qrng/bits.hpp"
#include "qrng/constants.hpp"
#include "qrng/entropy.hpp"
#include "qrng/noise.hpp"
#include "qrng/toeplitz.hpp"

// Slow, obviously-correct counterparts of the fast paths. Used by the
// selftest to cross-check a build on the machine it runs on.

namespace qrng::reference {

/// Bit-by-bit GF(2) product T x with T[i][j] = seed[i + n - 1 - j].
inline BitString toeplitz_multiply(const BitString& seed, std::size_t m, std::size_t n, const BitString& x) {
  BitString y(m);
  for (std::size_t i = 0; i < m; ++i) {
    bool acc = false;
    for (std::size_t j = 0; j < n; ++j) acc ^= seed.get(i + n - 1 - j) && x.get(j);
    y.set(i, acc);
  }
  return y;
}

namespace detail {

// 10-point Gauss-Legendre nodes/weights on [-1, 1].
inline constexpr std::array<double, 5> gl_x{0.1488743389816312, 0.4333953941292472, 0.6794095682990244,
                                            0.8650633666889845, 0.9739065285171717};
inline constexpr std::array<double, 5> gl_w{0.2955242247147529, 0.2692667193099963, 0.2190863625159820,
                                            0.1494513491505806, 0.0666713443086881};

/// Integral of the N(mean, sd^2) density over [a, b] by composite
/// Gauss-Legendre on panels no wider than sd / 4.
inline double integrate_gaussian(double mean, double sd, double a, double b) {
  a = std::max(a, mean - 40.0 * sd);
  b = std::min(b, mean + 40.0 * sd);
  if (!(b > a)) return 0.0;
  const int panels = std::max(1, static_cast<int>(std::ceil((b - a) / (0.25 * sd))));
  const double h = (b - a) / panels;
  const double norm = 1.0 / (sd * std::sqrt(2.0 * constants::pi));
  double total = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double mid = a + (p + 0.5) * h;
    double s = 0.0;
    for (std::size_t k = 0; k < gl_x.size(); ++k) {
      for (double sign : {-1.0, 1.0}) {
        const double v = mid + sign * 0.5 * h * gl_x[k];
        const double z = (v - mean) / sd;
        s += gl_w[k] * std::exp(-0.5 * z * z);
      }
    }
    total += 0.5 * h * s;
  }
  return total * norm;
}

// Largest mass over all bins for offset t, with numerically integrated bins.
// Interior bins are scanned only near t: for a symmetric unimodal density the
// equal-width bin nearest the mode carries the most mass.
inline double max_bin_mass_at(double t, double sd, const AdcConfig& cfg) {
  const double inf = std::numeric_limits<double>::infinity();
  const double delta = cfg.bin_width();
  double best = std::max(integrate_gaussian(t, sd, -inf, cfg.lower_threshold()),
                         integrate_gaussian(t, sd, cfg.upper_threshold(), inf));
  const auto k0 = static_cast<std::int64_t>(std::floor(t / delta + 0.5));
  for (std::int64_t k = k0 - 1; k <= k0 + 1; ++k) {
    if (k <= cfg.index_low() || k >= cfg.index_high()) continue;
    const double c = static_cast<double>(k) * delta;
    best = std::max(best, integrate_gaussian(t, sd, c - 0.5 * delta, c + 0.5 * delta));
  }
  return best;
}

}  // namespace detail

/// Brute-force adversary: scans the offset over `grid` points in the
/// excursion interval, then refines the best cells by golden-section search.
inline double worst_case_max_bin_prob(const NoiseModel& model, const AdcConfig& cfg, ExcursionConvention conv,
                                      int grid = 10'000) {
  const auto iv = model.offsets(conv);
  const double sd = std::sqrt(model.sigma_quan_sq);
  auto f = [&](double t) { return detail::max_bin_mass_at(t, sd, cfg); };
  if (iv.hi <= iv.lo) return f(iv.lo);

  const double step = (iv.hi - iv.lo) / (grid - 1);
  std::vector<double> values(static_cast<std::size_t>(grid));
  for (int g = 0; g < grid; ++g) values[static_cast<std::size_t>(g)] = f(iv.lo + g * step);
  double best = *std::max_element(values.begin(), values.end());

  // Every interior peak has the same height, so refining the three highest
  // local maxima of the scan is enough.
  std::vector<int> peaks;
  for (int g = 0; g < grid; ++g) {
    const double v = values[static_cast<std::size_t>(g)];
    if ((g == 0 || v >= values[static_cast<std::size_t>(g - 1)]) &&
        (g == grid - 1 || v >= values[static_cast<std::size_t>(g + 1)]))
      peaks.push_back(g);
  }
  const auto top = std::min<std::size_t>(3, peaks.size());
  std::partial_sort(peaks.begin(), peaks.begin() + static_cast<std::ptrdiff_t>(top), peaks.end(),
                    [&](int a, int b) { return values[static_cast<std::size_t>(a)] > values[static_cast<std::size_t>(b)]; });
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  for (std::size_t r = 0; r < top; ++r) {
    const int g = peaks[r];
    double a = iv.lo + std::max(0, g - 1) * step;
    double b = iv.lo + std::min(grid - 1, g + 1) * step;
    double c = b - phi * (b - a), d = a + phi * (b - a);
    double fc = f(c), fd = f(d);
    for (int it = 0; it < 100 && b - a > 1e-13 * std::max(1.0, std::fabs(a)); ++it) {
      if (fc > fd) {
        b = d; d = c; fd = fc; c = b - phi * (b - a); fc = f(c);
      } else {
        a = c; c = d; fc = fd; d = a + phi * (b - a); fd = f(d);
      }
    }
    best = std::max({best, fc, fd});
  }
  return best;
}

}  // namespace qrng::reference
