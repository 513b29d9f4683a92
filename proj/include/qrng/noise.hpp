#pragma once

#include <cmath>
#include <string>

#include "qrng/constants.hpp"
#include "qrng/errors.hpp"

// Noise calculus for a homodyne vacuum-noise source: variance bookkeeping
// between quantum noise, classical (electronic) noise and the observed
// signal, plus the detector-level shot-noise and electronic-noise models.
//
// Variances are in mV^2 and offsets in mV. Detector models are SI.

namespace qrng {

/// Where the classical offset may sit for a given excursion width.
enum class ExcursionConvention {
  one_sided,  ///< V_cl in [0, excursion]
  symmetric,  ///< V_cl in [-excursion/2, +excursion/2]
  absolute,   ///< V_cl in [cl_min, cl_max] exactly as stored in the model
};

inline std::string to_string(ExcursionConvention c) {
  switch (c) {
    case ExcursionConvention::one_sided: return "one_sided";
    case ExcursionConvention::symmetric: return "symmetric";
    case ExcursionConvention::absolute: return "absolute";
  }
  return "unknown";
}

inline ExcursionConvention parse_convention(const std::string& s) {
  if (s == "one_sided" || s == "one-sided") return ExcursionConvention::one_sided;
  if (s == "symmetric") return ExcursionConvention::symmetric;
  if (s == "absolute") return ExcursionConvention::absolute;
  throw ValidationError("unknown excursion convention '" + s + "'");
}

struct OffsetInterval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Gaussian quantum noise plus Gaussian classical noise whose mean may wander
/// over [cl_min, cl_max].
struct NoiseModel {
  double sigma_quan_sq = 1.0;  // mV^2
  double sigma_cl_sq = 0.0;    // mV^2
  double cl_min = 0.0;         // mV
  double cl_max = 0.0;         // mV

  /// Builds a model whose offset interval has width `excursion`, placed per `conv`.
  static NoiseModel from_excursion(double sigma_quan_sq, double sigma_cl_sq, double excursion,
                                   ExcursionConvention conv = ExcursionConvention::symmetric) {
    NoiseModel m{sigma_quan_sq, sigma_cl_sq, 0.0, excursion};
    const auto iv = m.offsets(conv);
    m.cl_min = iv.lo;
    m.cl_max = iv.hi;
    m.validate();
    return m;
  }

  void validate() const {
    detail::require(std::isfinite(sigma_quan_sq) && sigma_quan_sq > 0.0,
                    "NoiseModel: sigma_quan_sq must be > 0");
    detail::require(std::isfinite(sigma_cl_sq) && sigma_cl_sq >= 0.0,
                    "NoiseModel: sigma_cl_sq must be >= 0");
    detail::require(std::isfinite(cl_min) && std::isfinite(cl_max) && cl_min <= cl_max,
                    "NoiseModel: need cl_min <= cl_max");
  }

  /// Scale of the vacuum quadrature, alpha = sqrt(2 sigma_quan^2).
  double alpha() const { return std::sqrt(2.0 * sigma_quan_sq); }
  /// Classical noise parameter, beta = 2 sigma_cl^2.
  double beta() const { return 2.0 * sigma_cl_sq; }
  double sigma_obs_sq() const { return sigma_quan_sq + sigma_cl_sq; }
  double excursion() const { return cl_max - cl_min; }

  OffsetInterval offsets(ExcursionConvention conv) const {
    const double d = excursion();
    switch (conv) {
      case ExcursionConvention::one_sided: return {0.0, d};
      case ExcursionConvention::symmetric: return {-0.5 * d, 0.5 * d};
      case ExcursionConvention::absolute: break;
    }
    return {cl_min, cl_max};
  }
};

/// Homodyne clearance S = sigma_obs^2 / sigma_cl^2 in dB.
inline double clearance_db(double sigma_obs_sq, double sigma_cl_sq) {
  detail::require(sigma_obs_sq > 0.0 && sigma_cl_sq > 0.0,
                  "clearance_db: variances must be positive");
  detail::require_domain(sigma_obs_sq >= sigma_cl_sq,
                         "clearance_db: observed variance below classical variance (miscalibrated)");
  return 10.0 * std::log10(sigma_obs_sq / sigma_cl_sq);
}

inline double qcnr_db(double sigma_quan_sq, double sigma_cl_sq) {
  detail::require_domain(sigma_quan_sq > 0.0 && sigma_cl_sq > 0.0,
                         "qcnr_db: variances must be positive");
  return 10.0 * std::log10(sigma_quan_sq / sigma_cl_sq);
}

/// QCNR implied by a clearance reading: linear QCNR = S - 1.
inline double qcnr_from_clearance(double clearance) {
  detail::require_domain(clearance > 0.0, "qcnr_from_clearance: clearance must be > 0 dB");
  // expm1 keeps precision for clearances just above 0 dB.
  return 10.0 * std::log10(std::expm1(clearance * std::log(10.0) / 10.0));
}

/// Linear ratio sigma_quan^2 / sigma_cl^2 for a clearance in dB.
inline double quantum_to_classical_ratio(double clearance) {
  detail::require_domain(clearance > 0.0, "clearance must be > 0 dB");
  return std::expm1(clearance * std::log(10.0) / 10.0);
}

struct DetectorModel {
  double quantum_efficiency = 0.9;
  double bandwidth_hz = 1e5;             // resolution bandwidth
  double transimpedance = 1.6e4;         // V/A
  double load_impedance = 50.0;          // ohm
  double pd_shunt = 1e9;                 // ohm
  double pd_dark_current = 0.0;          // A (enters squared)
  double feedback_resistance = 1.6e4;    // ohm
  double tia_current_noise = 0.0;        // A/sqrt(Hz)
  double tia_voltage_noise = 0.0;        // V/sqrt(Hz)
  double temperature = 300.0;            // K

  void validate() const {
    detail::require(quantum_efficiency > 0.0 && quantum_efficiency <= 1.0,
                    "DetectorModel: quantum efficiency must be in (0, 1]");
    detail::require(bandwidth_hz > 0.0, "DetectorModel: bandwidth must be > 0");
    detail::require(transimpedance > 0.0 && load_impedance > 0.0 && pd_shunt > 0.0 &&
                        feedback_resistance > 0.0,
                    "DetectorModel: resistances must be > 0");
    detail::require(temperature >= 0.0 && pd_dark_current >= 0.0 && tia_current_noise >= 0.0 &&
                        tia_voltage_noise >= 0.0,
                    "DetectorModel: noise terms must be >= 0");
  }
};

inline double photon_energy(double wavelength_m) {
  detail::require(wavelength_m > 0.0, "photon_energy: wavelength must be > 0");
  return constants::planck * constants::speed_of_light / wavelength_m;
}

/// Shot-noise power at the load in dBm for LO power `lo_power` (W).
inline double shot_noise_power_dbm(const DetectorModel& det, double lo_power, double photon_energy_j) {
  det.validate();
  detail::require(lo_power > 0.0, "shot_noise_power_dbm: LO power must be > 0");
  detail::require(photon_energy_j > 0.0, "shot_noise_power_dbm: photon energy must be > 0");
  const double e = constants::elementary_charge;
  const double photon_rate = lo_power / photon_energy_j;
  const double watts = 4.0 * e * e * photon_rate * det.quantum_efficiency * det.bandwidth_hz *
                       det.transimpedance * det.transimpedance / det.load_impedance;
  return 10.0 * std::log10(watts / constants::milliwatt);
}

/// Input-referred electronic noise voltage density (V/sqrt(Hz)) at the TIA output.
inline double electronic_noise_voltage(const DetectorModel& det) {
  det.validate();
  const double kt4 = 4.0 * constants::boltzmann * det.temperature;
  const double r = det.transimpedance;
  const double v_term = det.tia_voltage_noise / r;
  const double psd = kt4 / det.pd_shunt + det.pd_dark_current * det.pd_dark_current +
                     kt4 / det.feedback_resistance +
                     det.tia_current_noise * det.tia_current_noise + v_term * v_term;
  return r * std::sqrt(psd);
}

}  // namespace qrng
