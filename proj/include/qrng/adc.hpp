#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "qrng/constants.hpp"
#include "qrng/errors.hpp"

namespace qrng {

/// n-bit ADC with half-range R (mV). Bins are labelled i_L = -2^(n-1) .. i_M = 2^(n-1)-1
/// with centres i*delta; the two end bins absorb everything off-scale.
class AdcConfig {
 public:
  static constexpr int min_bits = 2;
  static constexpr int max_bits = 24;

  AdcConfig(int bits, double range_mv) : bits_(bits), range_(range_mv) {
    detail::require(bits >= min_bits && bits <= max_bits, "AdcConfig: bits must be in [2, 24]");
    detail::require(std::isfinite(range_mv) && range_mv > 0.0, "AdcConfig: range must be > 0");
  }

  int bits() const { return bits_; }
  double range() const { return range_; }
  double bin_width() const { return std::ldexp(range_, -(bits_ - 1)); }
  std::int32_t index_low() const { return -(std::int32_t{1} << (bits_ - 1)); }
  std::int32_t index_high() const { return (std::int32_t{1} << (bits_ - 1)) - 1; }
  std::size_t bin_count() const { return std::size_t{1} << bits_; }
  double center(std::int32_t i) const { return static_cast<double>(i) * bin_width(); }

  /// Lower edge of the MSB bin, R - 3 delta / 2.
  double upper_threshold() const { return range_ - 1.5 * bin_width(); }
  /// Upper edge of the LSB bin, -R + delta / 2.
  double lower_threshold() const { return -range_ + 0.5 * bin_width(); }

  bool operator==(const AdcConfig&) const = default;

 private:
  int bits_;
  double range_;
};

/// Bin index for voltage v; saturating at the end bins. Interior bins are
/// half-open [V_i - delta/2, V_i + delta/2).
inline std::int32_t quantize(double v, const AdcConfig& cfg) {
  const double x = std::floor(v / cfg.bin_width() + 0.5);
  if (!(x > cfg.index_low())) return cfg.index_low();  // also catches NaN
  if (x >= cfg.index_high()) return cfg.index_high();
  return static_cast<std::int32_t>(x);
}

namespace detail {

inline constexpr double probability_floor = 1e-300;

/// Mass of N(mean, sd^2) on [a, b]; a may be -inf and b may be +inf.
/// Uses whichever tail avoids cancellation.
inline double gaussian_mass(double mean, double sd, double a, double b) {
  const double inv = 1.0 / (sd * constants::sqrt2);
  const double za = (a - mean) * inv;
  const double zb = (b - mean) * inv;
  double m;
  if (zb <= 0.0) {
    m = 0.5 * (std::erfc(-zb) - std::erfc(-za));
  } else if (za >= 0.0) {
    m = 0.5 * (std::erfc(za) - std::erfc(zb));
  } else {
    m = 0.5 * (std::erf(zb) - std::erf(za));
  }
  return m < probability_floor ? 0.0 : m;
}

}  // namespace detail

/// Probability mass per ADC bin, indexed i_L..i_M.
class BinDistribution {
 public:
  BinDistribution(AdcConfig cfg, std::vector<double> probs) : cfg_(cfg), probs_(std::move(probs)) {
    detail::require(probs_.size() == cfg_.bin_count(), "BinDistribution: wrong number of bins");
    for (double p : probs_) detail::require(p >= 0.0 && std::isfinite(p), "BinDistribution: bad mass");
  }

  const AdcConfig& config() const { return cfg_; }
  std::span<const double> probs() const { return probs_; }
  double at(std::int32_t index) const {
    return probs_[static_cast<std::size_t>(index - cfg_.index_low())];
  }
  double lsb() const { return probs_.front(); }
  double msb() const { return probs_.back(); }

  double total() const {
    double s = 0.0;
    for (double p : probs_) s += p;
    return s;
  }

 private:
  AdcConfig cfg_;
  std::vector<double> probs_;
};

/// Per-bin masses of N(mean, stddev^2) with every bin edge moved down by `shift`.
/// Masses below 1e-300 are flushed to zero.
inline BinDistribution bin_probabilities(double mean, double stddev, const AdcConfig& cfg,
                                         double shift = 0.0) {
  detail::require(std::isfinite(stddev) && stddev > 0.0, "bin_probabilities: stddev must be > 0");
  detail::require(std::isfinite(mean) && std::isfinite(shift), "bin_probabilities: non-finite input");
  const double delta = cfg.bin_width();
  const std::int32_t lo = cfg.index_low();
  const double inv = 1.0 / (stddev * constants::sqrt2);

  // Edge e_k = (k - 1/2) delta - shift is the lower edge of bin k, k = lo+1..hi.
  // Every edge is evaluated once so neighbouring masses telescope, and each
  // mass is taken from the tail that keeps it free of cancellation.
  const std::size_t edges = cfg.bin_count() - 1;
  std::vector<double> z(edges), lower(edges), upper(edges);
  for (std::size_t j = 0; j < edges; ++j) {
    const double e = (static_cast<double>(lo + 1 + static_cast<std::int32_t>(j)) - 0.5) * delta - shift;
    z[j] = (e - mean) * inv;
    lower[j] = 0.5 * std::erfc(-z[j]);  // P(X < e)
    upper[j] = 0.5 * std::erfc(z[j]);   // P(X > e)
  }
  auto flush = [](double m) { return m < detail::probability_floor ? 0.0 : m; };

  std::vector<double> probs(cfg.bin_count());
  probs.front() = flush(z.front() <= 0.0 ? lower.front() : 1.0 - upper.front());
  probs.back() = flush(z.back() >= 0.0 ? upper.back() : 1.0 - lower.back());
  for (std::size_t j = 0; j + 1 < edges; ++j) {
    double m;
    if (z[j + 1] <= 0.0)
      m = lower[j + 1] - lower[j];
    else if (z[j] >= 0.0)
      m = upper[j] - upper[j + 1];
    else
      m = 1.0 - lower[j] - upper[j + 1];
    probs[j + 1] = flush(m);
  }
  return BinDistribution(cfg, std::move(probs));
}

/// Fraction of samples that land in a saturated end bin.
inline double offscale_fraction(const BinDistribution& dist) { return dist.lsb() + dist.msb(); }

/// Centre voltage of each bin index.
inline std::vector<double> to_voltages(std::span<const std::int16_t> samples, const AdcConfig& cfg) {
  std::vector<double> v(samples.size());
  const double delta = cfg.bin_width();
  std::transform(samples.begin(), samples.end(), v.begin(),
                 [delta](std::int16_t s) { return static_cast<double>(s) * delta; });
  return v;
}

}  // namespace qrng
