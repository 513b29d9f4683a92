#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "qrng/bits.hpp"
#include "qrng/constants.hpp"
#include "qrng/errors.hpp"

// Four frequency/run tests in the style of NIST SP 800-22, the NIST
// proportion-of-passes interval, and a Kolmogorov-Smirnov uniformity test
// for collections of p-values.

namespace qrng::health {

inline constexpr std::size_t min_bits = 100;
inline constexpr std::size_t default_block = 128;

/// Frequency (monobit) test.
inline double monobit(const BitString& bits) {
  detail::require(bits.size() >= min_bits, "monobit: need at least 100 bits");
  const double n = static_cast<double>(bits.size());
  const double s = 2.0 * static_cast<double>(bits.count_ones()) - n;
  return std::erfc(std::fabs(s) / std::sqrt(2.0 * n));
}

/// Frequency test within blocks of `block` bits; trailing bits are ignored.
inline double block_frequency(const BitString& bits, std::size_t block = default_block) {
  detail::require(block >= 1, "block_frequency: block size must be >= 1");
  detail::require(bits.size() >= min_bits && bits.size() >= block, "block_frequency: need at least 100 bits and one block");
  const std::size_t blocks = bits.size() / block;
  double chi = 0.0;
  for (std::size_t b = 0; b < blocks; ++b) {
    std::size_t ones = 0;
    for (std::size_t k = b * block; k < (b + 1) * block; ++k) ones += bits.get(k);
    const double pi = static_cast<double>(ones) / static_cast<double>(block) - 0.5;
    chi += pi * pi;
  }
  chi *= 4.0 * static_cast<double>(block);
  return boost::math::gamma_q(static_cast<double>(blocks) / 2.0, chi / 2.0);
}

/// Runs test. Returns 0 when the monobit prerequisite |pi - 1/2| < 2/sqrt(n) fails.
inline double runs(const BitString& bits) {
  detail::require(bits.size() >= min_bits, "runs: need at least 100 bits");
  const double n = static_cast<double>(bits.size());
  const double pi = static_cast<double>(bits.count_ones()) / n;
  if (std::fabs(pi - 0.5) >= 2.0 / std::sqrt(n)) return 0.0;
  std::size_t v = 1;
  for (std::size_t k = 1; k < bits.size(); ++k) v += bits.get(k) != bits.get(k - 1);
  const double num = std::fabs(static_cast<double>(v) - 2.0 * n * pi * (1.0 - pi));
  const double den = 2.0 * std::sqrt(2.0 * n) * pi * (1.0 - pi);
  return std::erfc(num / den);
}

namespace detail {

inline double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / constants::sqrt2); }

}  // namespace detail

/// Cumulative sums test, forward (or backward) mode.
inline double cusum(const BitString& bits, bool backward = false) {
  qrng::detail::require(bits.size() >= min_bits, "cusum: need at least 100 bits");
  const std::size_t len = bits.size();
  long long s = 0, z = 0;
  for (std::size_t k = 0; k < len; ++k) {
    s += bits.get(backward ? len - 1 - k : k) ? 1 : -1;
    z = std::max(z, s < 0 ? -s : s);
  }
  const double n = static_cast<double>(len);
  const double zz = static_cast<double>(z);
  const double rn = std::sqrt(n);
  using detail::std_normal_cdf;

  double sum1 = 0.0;
  for (long long k = static_cast<long long>(std::floor((-n / zz + 1.0) / 4.0));
       k <= static_cast<long long>(std::floor((n / zz - 1.0) / 4.0)); ++k) {
    const double kk = static_cast<double>(k);
    sum1 += std_normal_cdf((4.0 * kk + 1.0) * zz / rn) - std_normal_cdf((4.0 * kk - 1.0) * zz / rn);
  }
  double sum2 = 0.0;
  for (long long k = static_cast<long long>(std::floor((-n / zz - 3.0) / 4.0));
       k <= static_cast<long long>(std::floor((n / zz - 1.0) / 4.0)); ++k) {
    const double kk = static_cast<double>(k);
    sum2 += std_normal_cdf((4.0 * kk + 3.0) * zz / rn) - std_normal_cdf((4.0 * kk + 1.0) * zz / rn);
  }
  return std::clamp(1.0 - sum1 + sum2, 0.0, 1.0);
}

struct ProportionInterval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double x) const { return x >= lo && x <= hi; }
};

/// Acceptable fraction of passing sequences: (1 - a) +/- 3 sqrt((1 - a) a / n).
inline ProportionInterval proportion_interval(double alpha, std::size_t n_sequences) {
  qrng::detail::require(alpha > 0.0 && alpha < 1.0, "proportion_interval: alpha must be in (0, 1)");
  qrng::detail::require(n_sequences >= 1, "proportion_interval: need at least one sequence");
  const double c = 1.0 - alpha;
  const double half = 3.0 * std::sqrt(c * alpha / static_cast<double>(n_sequences));
  return {c - half, c + half};
}

/// One-sample KS statistic against Uniform(0, 1).
inline double ks_statistic(std::span<const double> values) {
  std::vector<double> x(values.begin(), values.end());
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double u = std::clamp(x[i], 0.0, 1.0);
    d = std::max({d, static_cast<double>(i + 1) / n - u, u - static_cast<double>(i) / n});
  }
  return d;
}

namespace detail {

// P(D_n < d), Marsaglia, Tsang & Wang (2003), exact for any n.
inline double kolmogorov_cdf_exact(int n, double d) {
  const int k = static_cast<int>(n * d) + 1;
  const int m = 2 * k - 1;
  const double h = k - n * d;
  using Matrix = std::vector<double>;
  auto at = [m](Matrix& a, int i, int j) -> double& { return a[static_cast<std::size_t>(i * m + j)]; };

  Matrix H(static_cast<std::size_t>(m * m));
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) at(H, i, j) = (i - j + 1 < 0) ? 0.0 : 1.0;
  for (int i = 0; i < m; ++i) {
    at(H, i, 0) -= std::pow(h, i + 1);
    at(H, m - 1, i) -= std::pow(h, m - i);
  }
  at(H, m - 1, 0) += (2 * h - 1 > 0 ? std::pow(2 * h - 1, m) : 0.0);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      if (i - j + 1 > 0)
        for (int g = 1; g <= i - j + 1; ++g) at(H, i, j) /= g;

  auto multiply = [&](const Matrix& a, const Matrix& b) {
    Matrix c(a.size(), 0.0);
    for (int i = 0; i < m; ++i)
      for (int l = 0; l < m; ++l) {
        const double v = a[static_cast<std::size_t>(i * m + l)];
        if (v == 0.0) continue;
        for (int j = 0; j < m; ++j) c[static_cast<std::size_t>(i * m + j)] += v * b[static_cast<std::size_t>(l * m + j)];
      }
    return c;
  };

  // Q = H^n with a power-of-ten exponent carried alongside to avoid overflow.
  Matrix q(static_cast<std::size_t>(m * m), 0.0);
  for (int i = 0; i < m; ++i) at(q, i, i) = 1.0;
  int eq = 0;
  Matrix base = H;
  int eb = 0;
  for (int p = n; p > 0; p >>= 1) {
    if (p & 1) {
      q = multiply(q, base);
      eq += eb;
      if (at(q, k - 1, k - 1) > 1e140) {
        for (auto& v : q) v *= 1e-140;
        eq += 140;
      }
    }
    if (p > 1) {
      base = multiply(base, base);
      eb *= 2;
      if (at(base, k - 1, k - 1) > 1e140) {
        for (auto& v : base) v *= 1e-140;
        eb += 140;
      }
    }
  }
  double s = at(q, k - 1, k - 1);
  for (int i = 1; i <= n; ++i) {
    s = s * i / n;
    if (s < 1e-140) {
      s *= 1e140;
      eq -= 140;
    }
  }
  return s * std::pow(10.0, eq);
}

// Asymptotic P(D_n > d) with the Stephens small-sample correction.
inline double kolmogorov_q_asymptotic(std::size_t n, double d) {
  const double rn = std::sqrt(static_cast<double>(n));
  const double lambda = (rn + 0.12 + 0.11 / rn) * d;
  if (lambda < 1e-3) return 1.0;
  if (lambda < 1.18) {
    // Theta-function form converges quickly for small lambda.
    const double y = std::exp(-constants::pi * constants::pi / (8.0 * lambda * lambda));
    double s = 0.0;
    for (int k = 1; k < 40; k += 2) s += std::pow(y, k * k);
    return std::clamp(1.0 - std::sqrt(2.0 * constants::pi) / lambda * s, 0.0, 1.0);
  }
  double s = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    s += (k % 2 ? term : -term);
    if (term < 1e-300) break;
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

}  // namespace detail

inline constexpr std::size_t ks_min_values = 10;
inline constexpr std::size_t ks_exact_below = 35;

/// p-value of the KS test that `p_values` are Uniform(0, 1).
inline double ks_uniformity(std::span<const double> p_values) {
  qrng::detail::require(p_values.size() >= ks_min_values, "ks_uniformity: need at least 10 p-values");
  for (double p : p_values) qrng::detail::require(p >= 0.0 && p <= 1.0, "ks_uniformity: p-value outside [0, 1]");
  const double d = ks_statistic(p_values);
  if (p_values.size() < ks_exact_below)
    return std::clamp(1.0 - detail::kolmogorov_cdf_exact(static_cast<int>(p_values.size()), d), 0.0, 1.0);
  return detail::kolmogorov_q_asymptotic(p_values.size(), d);
}

enum class Test { monobit, block_frequency, runs, cusum };
inline constexpr Test all_tests[] = {Test::monobit, Test::block_frequency, Test::runs, Test::cusum};

inline std::string to_string(Test t) {
  switch (t) {
    case Test::monobit: return "monobit";
    case Test::block_frequency: return "block_frequency";
    case Test::runs: return "runs";
    case Test::cusum: return "cusum";
  }
  return "unknown";
}

inline double run_test(Test t, const BitString& bits, std::size_t block = default_block) {
  switch (t) {
    case Test::monobit: return monobit(bits);
    case Test::block_frequency: return block_frequency(bits, block);
    case Test::runs: return runs(bits);
    case Test::cusum: return cusum(bits);
  }
  return 0.0;
}

struct TestReport {
  double alpha = 0.01;
  std::size_t sequences = 0;
  std::size_t sequence_bits = 0;
  // p_values[t][s]: test t (order of all_tests) on sequence s.
  std::vector<std::vector<double>> p_values;
  std::vector<double> pass_fraction;
  std::vector<double> ks_p;  // NaN when fewer than 10 sequences
  ProportionInterval interval;

  std::size_t failures() const {
    std::size_t f = 0;
    for (const auto& row : p_values)
      for (double p : row) f += p < alpha;
    return f;
  }
  bool proportions_ok() const {
    return std::all_of(pass_fraction.begin(), pass_fraction.end(),
                       [&](double f) { return interval.contains(f); });
  }
};

/// Splits `bits` into `sequences` equal sequences and runs the battery on each.
inline TestReport run_battery(const BitString& bits, std::size_t sequences, double alpha = 0.01,
                              std::size_t block = default_block) {
  qrng::detail::require(sequences >= 1, "run_battery: need at least one sequence");
  const std::size_t len = bits.size() / sequences;
  qrng::detail::require(len >= block && len >= min_bits, "run_battery: sequences too short");
  TestReport r;
  r.alpha = alpha;
  r.sequences = sequences;
  r.sequence_bits = len;
  r.interval = proportion_interval(alpha, sequences);
  r.p_values.assign(std::size(all_tests), {});
  for (std::size_t s = 0; s < sequences; ++s) {
    const auto seq = bits.slice(s * len, len);
    for (std::size_t t = 0; t < std::size(all_tests); ++t)
      r.p_values[t].push_back(run_test(all_tests[t], seq, block));
  }
  for (const auto& row : r.p_values) {
    const auto pass = std::count_if(row.begin(), row.end(), [&](double p) { return p >= alpha; });
    r.pass_fraction.push_back(static_cast<double>(pass) / static_cast<double>(row.size()));
    r.ks_p.push_back(row.size() >= ks_min_values ? ks_uniformity(row) : std::nan(""));
  }
  return r;
}

}  // namespace qrng::health
