#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "qrng/adc.hpp"
#include "qrng/errors.hpp"
#include "qrng/noise.hpp"
#include "qrng/random.hpp"

namespace qrng {

namespace drift {

struct Constant {
  double offset = 0.0;
};

/// offset(t) = centre of [cl_min, cl_max] + amplitude * sin(2 pi t / period)
struct Sinusoidal {
  double amplitude = 0.0;
  double period_samples = 1e6;
};

/// +/- step per sample with equal probability, clamped to [cl_min, cl_max],
/// starting from the centre of the interval.
struct RandomWalk {
  double step = 0.0;
};

}  // namespace drift

using Drift = std::variant<drift::Constant, drift::Sinusoidal, drift::RandomWalk>;

/// Largest bit depth a 16-bit capture sample can hold.
inline constexpr int max_capture_bits = 16;

struct SimSpec {
  NoiseModel model;
  AdcConfig cfg{12, 100.0};
  std::uint64_t count = 0;
  std::uint64_t seed = 0;
  Drift drift = drift::Constant{};

  void validate() const {
    // A dark capture has no quantum noise, so sigma_quan_sq = 0 is allowed here.
    detail::require(std::isfinite(model.sigma_quan_sq) && model.sigma_quan_sq >= 0.0,
                    "SimSpec: sigma_quan_sq must be >= 0");
    detail::require(std::isfinite(model.sigma_cl_sq) && model.sigma_cl_sq >= 0.0,
                    "SimSpec: sigma_cl_sq must be >= 0");
    detail::require(model.cl_min <= model.cl_max, "SimSpec: need cl_min <= cl_max");
    detail::require(count > 0, "SimSpec: count must be > 0");
    detail::require(cfg.bits() <= max_capture_bits, "SimSpec: captures hold at most 16-bit samples");
    const double half = 0.5 * model.excursion();
    std::visit(
        [&](const auto& d) {
          using T = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<T, drift::Constant>) {
            detail::require(d.offset >= model.cl_min && d.offset <= model.cl_max,
                            "SimSpec: constant drift offset outside [cl_min, cl_max]");
          } else if constexpr (std::is_same_v<T, drift::Sinusoidal>) {
            detail::require(d.amplitude >= 0.0 && d.amplitude <= half * (1.0 + 1e-12),
                            "SimSpec: sinusoid amplitude exceeds half the excursion");
            detail::require(d.period_samples > 0.0, "SimSpec: sinusoid period must be > 0");
          } else {
            detail::require(d.step >= 0.0, "SimSpec: random-walk step must be >= 0");
          }
        },
        drift);
  }
};

namespace detail {

// Counter layout per sample t: words 4t, 4t+1 feed the Box-Muller pair,
// word 4t+2 drives the random walk. Word 4t+3 is unused.
class DriftState {
 public:
  DriftState(const SimSpec& spec, const CounterRng& rng)
      : drift_(spec.drift), rng_(rng), lo_(spec.model.cl_min), hi_(spec.model.cl_max),
        offset_(0.5 * (lo_ + hi_)) {}

  double at(std::uint64_t t) {
    return std::visit(
        [&](const auto& d) -> double {
          using T = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<T, drift::Constant>) {
            return d.offset;
          } else if constexpr (std::is_same_v<T, drift::Sinusoidal>) {
            const double phase = 2.0 * constants::pi * static_cast<double>(t) / d.period_samples;
            return std::clamp(0.5 * (lo_ + hi_) + d.amplitude * std::sin(phase), lo_, hi_);
          } else {
            const double v = offset_;
            const double u = rng_.uniform(4 * t + 2);
            offset_ = std::clamp(offset_ + (u < 0.5 ? -d.step : d.step), lo_, hi_);
            return v;
          }
        },
        drift_);
  }

 private:
  Drift drift_;
  const CounterRng& rng_;
  double lo_, hi_, offset_;
};

}  // namespace detail

/// Quantised samples (bin indices) of quantum + classical Gaussian noise on
/// top of the drifting classical offset. Deterministic in `spec`.
inline std::vector<std::int16_t> generate(const SimSpec& spec) {
  spec.validate();
  const CounterRng rng(spec.seed);
  detail::DriftState drift(spec, rng);
  const double sq = std::sqrt(spec.model.sigma_quan_sq);
  const double sc = std::sqrt(spec.model.sigma_cl_sq);

  std::vector<std::int16_t> out(spec.count);
  for (std::uint64_t t = 0; t < spec.count; ++t) {
    const auto [gq, gc] = rng.normal_pair(2 * t);
    const double v = sq * gq + sc * gc + drift.at(t);
    out[t] = static_cast<std::int16_t>(quantize(v, spec.cfg));
  }
  return out;
}

struct CaptureStats {
  std::size_t count = 0;
  double mean = 0.0;             // mV
  double variance = 0.0;         // mV^2, pooled within-block (slow drift removed)
  double global_variance = 0.0;  // mV^2, about the global mean
  std::vector<double> block_means;
  double excursion_estimate = 0.0;  // max - min of block means
  std::size_t offscale_count = 0;
};

inline constexpr std::size_t default_block_size = 10'000;
inline constexpr std::size_t min_block_size = 1'000;
inline constexpr std::size_t min_blocks = 10;

/// Capture statistics from bin indices. Samples are converted to bin-centre
/// voltages; the trailing partial block only contributes to global moments.
inline CaptureStats estimate_stats(std::span<const std::int16_t> samples, const AdcConfig& cfg,
                                   std::size_t block_size = default_block_size) {
  detail::require(block_size >= min_block_size, "estimate_stats: block_size must be >= 1000");
  detail::require(samples.size() >= min_blocks * block_size,
                  "estimate_stats: need at least 10 blocks of samples");
  const double delta = cfg.bin_width();
  const std::int32_t lo = cfg.index_low();
  const std::int32_t hi = cfg.index_high();

  CaptureStats s;
  s.count = samples.size();
  // Shifted sums around the first sample keep the variance numerically stable.
  const double ref = samples.front() * delta;
  double sum = 0.0, sum_sq = 0.0, within = 0.0;
  std::size_t within_dof = 0;
  const std::size_t full_blocks = samples.size() / block_size;
  s.block_means.reserve(full_blocks);
  // Each block is detrended by a least-squares line so slow drift does not
  // leak into the noise variance.
  const double n_blk = static_cast<double>(block_size);
  const double t_mean = 0.5 * (n_blk - 1.0);
  const double stt = n_blk * (n_blk * n_blk - 1.0) / 12.0;
  for (std::size_t b = 0; b < full_blocks; ++b) {
    double bs = 0.0, bss = 0.0, bst = 0.0;
    const std::size_t start = b * block_size;
    for (std::size_t k = start; k < start + block_size; ++k) {
      const double v = samples[k] * delta - ref;
      bs += v;
      bss += v * v;
      bst += (static_cast<double>(k - start) - t_mean) * v;
    }
    s.block_means.push_back(bs / n_blk + ref);
    within += bss - bs * bs / n_blk - bst * bst / stt;
    within_dof += block_size - 2;
    sum += bs;
    sum_sq += bss;
  }
  for (std::size_t k = full_blocks * block_size; k < samples.size(); ++k) {
    const double v = samples[k] * delta - ref;
    sum += v;
    sum_sq += v * v;
  }
  for (auto x : samples)
    if (x <= lo || x >= hi) ++s.offscale_count;

  const double n = static_cast<double>(samples.size());
  s.mean = sum / n + ref;
  s.global_variance = std::max(0.0, (sum_sq - sum * sum / n) / (n - 1.0));
  s.variance = std::max(0.0, within / static_cast<double>(within_dof));
  const auto [mn, mx] = std::minmax_element(s.block_means.begin(), s.block_means.end());
  s.excursion_estimate = *mx - *mn;
  return s;
}

/// QCNR from a signal capture and a dark (quantum-blocked) capture.
inline double qcnr_from_capture(const CaptureStats& signal, const CaptureStats& dark) {
  detail::require_domain(dark.variance > 0.0, "qcnr_from_capture: dark variance must be > 0");
  detail::require_domain(signal.variance > dark.variance,
                         "qcnr_from_capture: signal variance must exceed dark variance");
  return qcnr_db(signal.variance - dark.variance, dark.variance);
}

}  // namespace qrng
