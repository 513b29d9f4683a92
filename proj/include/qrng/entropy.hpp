#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "qrng/adc.hpp"
#include "qrng/errors.hpp"
#include "qrng/noise.hpp"

// Worst-case conditional min-entropy of a digitised vacuum-noise signal.
//
// Given the classical offset V_cl, the measured voltage is N(V_cl, sigma_quan^2).
// An adversary who knows V_cl and can park it anywhere in the excursion
// interval maximises the most likely ADC outcome. Only three candidates can
// be the most likely outcome: the LSB bin (offset at the bottom of the
// interval), the MSB bin (offset at the top) and the interior bin nearest
// the offset.

namespace qrng {

enum class WorstBin { lsb, center, msb };

inline std::string to_string(WorstBin b) {
  switch (b) {
    case WorstBin::lsb: return "LSB";
    case WorstBin::center: return "center";
    case WorstBin::msb: return "MSB";
  }
  return "unknown";
}

/// Adversarial maxima of the three candidate bins.
struct CandidateMasses {
  double lsb = 0.0;
  double center = 0.0;
  double msb = 0.0;

  double edge() const { return std::max(lsb, msb); }
  double max() const { return std::max(center, edge()); }
  WorstBin worst() const {
    if (center >= edge()) return WorstBin::center;
    return lsb >= msb ? WorstBin::lsb : WorstBin::msb;
  }
};

struct EntropyReport {
  double h_min = 0.0;           // bits per sample
  double optimal_range = 0.0;   // mV
  WorstBin worst_bin = WorstBin::center;
  double p_max = 1.0;
  CandidateMasses masses;
  double clearance_db = 0.0;
  double qcnr_db = 0.0;
  double extraction_bound = 0.0;  // bits per raw bit
  double excursion_sigma = 0.0;   // excursion in units of sigma_cl
  int bits = 0;
  ExcursionConvention convention = ExcursionConvention::symmetric;
};

inline double min_entropy_plain(const BinDistribution& dist) {
  const auto p = dist.probs();
  return -std::log2(*std::max_element(p.begin(), p.end()));
}

namespace detail {

// Distance from [lo, hi] to the nearest interior bin centre.
inline double nearest_interior_distance(double lo, double hi, const AdcConfig& cfg) {
  const double delta = cfg.bin_width();
  const double first = static_cast<double>(cfg.index_low() + 1);
  const double last = static_cast<double>(cfg.index_high() - 1);
  auto distance = [&](double k) {
    k = std::clamp(k, first, last);
    const double c = k * delta;
    if (c < lo) return lo - c;
    if (c > hi) return c - hi;
    return 0.0;
  };
  return std::min({distance(std::ceil(lo / delta)), distance(std::floor(hi / delta)),
                   distance(std::floor(lo / delta)), distance(std::ceil(hi / delta))});
}

}  // namespace detail

inline CandidateMasses worst_case_masses(const NoiseModel& model, const AdcConfig& cfg,
                                         ExcursionConvention conv) {
  model.validate();
  const double inf = std::numeric_limits<double>::infinity();
  const double sd = std::sqrt(model.sigma_quan_sq);
  const auto iv = model.offsets(conv);
  const double delta = cfg.bin_width();
  const double d = detail::nearest_interior_distance(iv.lo, iv.hi, cfg);

  CandidateMasses m;
  m.lsb = detail::gaussian_mass(iv.lo, sd, -inf, cfg.lower_threshold());
  m.msb = detail::gaussian_mass(iv.hi, sd, cfg.upper_threshold(), inf);
  m.center = detail::gaussian_mass(d, sd, -0.5 * delta, 0.5 * delta);
  return m;
}

inline double worst_case_max_bin_prob(const NoiseModel& model, const AdcConfig& cfg,
                                      ExcursionConvention conv) {
  return worst_case_masses(model, cfg, conv).max();
}

inline double conditional_min_entropy(const NoiseModel& model, const AdcConfig& cfg,
                                      ExcursionConvention conv) {
  return -std::log2(worst_case_max_bin_prob(model, cfg, conv));
}

namespace detail {

inline void fill_report_context(EntropyReport& r, const NoiseModel& model) {
  if (model.sigma_cl_sq > 0.0) {
    r.clearance_db = clearance_db(model.sigma_obs_sq(), model.sigma_cl_sq);
    r.qcnr_db = qcnr_db(model.sigma_quan_sq, model.sigma_cl_sq);
    r.excursion_sigma = model.excursion() / std::sqrt(model.sigma_cl_sq);
  } else {
    r.clearance_db = std::numeric_limits<double>::infinity();
    r.qcnr_db = std::numeric_limits<double>::infinity();
    r.excursion_sigma = model.excursion() > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  }
}

}  // namespace detail

/// Evaluates a fixed ADC configuration.
inline EntropyReport evaluate(const NoiseModel& model, const AdcConfig& cfg, ExcursionConvention conv) {
  EntropyReport r;
  r.masses = worst_case_masses(model, cfg, conv);
  r.p_max = r.masses.max();
  r.h_min = -std::log2(r.p_max);
  r.worst_bin = r.masses.worst();
  r.optimal_range = cfg.range();
  r.bits = cfg.bits();
  r.extraction_bound = r.h_min / cfg.bits();
  r.convention = conv;
  detail::fill_report_context(r, model);
  return r;
}

/// Finds the half-range R* at which the centre bin's worst-case mass equals
/// the larger worst-case edge mass. Since the centre mass grows with R and
/// both edge masses shrink, this balance point maximises the conditional
/// min-entropy. Throws DomainError when no sign change can be bracketed.
inline EntropyReport optimize_range(const NoiseModel& model, int bits, ExcursionConvention conv) {
  model.validate();
  detail::require(bits >= AdcConfig::min_bits && bits <= AdcConfig::max_bits,
                  "optimize_range: bits must be in [2, 24]");

  auto balance = [&](double range) {
    const auto m = worst_case_masses(model, AdcConfig(bits, range), conv);
    return m.center - m.edge();
  };

  const double sigma_obs = std::sqrt(model.sigma_obs_sq());
  double lo = sigma_obs;
  double hi = 10.0 * (sigma_obs + model.excursion());
  constexpr int max_growth = 1000;
  int steps = 0;
  while (balance(lo) >= 0.0) {
    lo *= 0.5;
    if (++steps > max_growth || lo < std::numeric_limits<double>::min())
      throw DomainError("optimize_range: could not bracket the optimal range (lower end)");
  }
  steps = 0;
  while (balance(hi) <= 0.0) {
    hi *= 2.0;
    if (++steps > max_growth || !std::isfinite(hi))
      throw DomainError("optimize_range: could not bracket the optimal range (upper end)");
  }

  // Bisect to the resolution of double.
  for (int i = 0; i < 2000; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (balance(mid) < 0.0 ? lo : hi) = mid;
  }

  const auto at_lo = evaluate(model, AdcConfig(bits, lo), conv);
  const auto at_hi = evaluate(model, AdcConfig(bits, hi), conv);
  return at_lo.h_min >= at_hi.h_min ? at_lo : at_hi;
}

struct SweepRow {
  double clearance_db = 0.0;
  double excursion_sigma = 0.0;
  EntropyReport report;
};

inline constexpr const char* sweep_csv_header = "clearance_db,excursion_sigma,h_min_bits,r_star_mv,worst_bin";

/// Optimised conditional min-entropy over a (clearance x excursion) grid.
/// Rows are clearance-major. `sigma_cl_sq` only sets the mV scale of R*.
inline std::vector<SweepRow> entropy_vs_clearance_sweep(std::span<const double> clearances,
                                                        std::span<const double> excursions, int bits,
                                                        ExcursionConvention conv,
                                                        double sigma_cl_sq = 5.89,
                                                        unsigned threads = 1) {
  detail::require(!clearances.empty() && !excursions.empty(), "sweep: grids must be non-empty");
  detail::require(sigma_cl_sq > 0.0, "sweep: sigma_cl_sq must be > 0");
  for (double e : excursions) detail::require(e >= 0.0, "sweep: excursions must be >= 0");
  // Validate every clearance before any work.
  for (double c : clearances) (void)quantum_to_classical_ratio(c);

  std::vector<SweepRow> rows(clearances.size() * excursions.size());
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      const double c = clearances[k / excursions.size()];
      const double e = excursions[k % excursions.size()];
      const double sq = quantum_to_classical_ratio(c) * sigma_cl_sq;
      const auto model = NoiseModel::from_excursion(sq, sigma_cl_sq, e * std::sqrt(sigma_cl_sq), conv);
      rows[k] = {c, e, optimize_range(model, bits, conv)};
    }
  };

  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(rows.size())));
  if (threads == 1) {
    work(0, rows.size());
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (rows.size() + threads - 1) / threads;
    for (std::size_t b = 0; b < rows.size(); b += chunk)
      pool.emplace_back(work, b, std::min(rows.size(), b + chunk));
  }
  return rows;
}

inline std::string to_csv(std::span<const SweepRow> rows) {
  std::ostringstream os;
  os.precision(10);
  os << sweep_csv_header << '\n';
  for (const auto& r : rows)
    os << r.clearance_db << ',' << r.excursion_sigma << ',' << r.report.h_min << ','
       << r.report.optimal_range << ',' << to_string(r.report.worst_bin) << '\n';
  return os.str();
}

}  // namespace qrng
