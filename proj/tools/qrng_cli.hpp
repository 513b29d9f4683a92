#pragma once

// Command-line front end for the qrng library. Kept in a header so the test
// suite can drive every subcommand in-process through run().

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qrng/qrng.hpp"
#include "qrng/reference.hpp"

namespace qrng::cli {

namespace fs = std::filesystem;

enum ExitCode : int { ok = 0, validation = 1, domain = 2, io_failure = 3 };

inline std::string sha256_hex(std::span<const std::uint8_t> bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw IoError("sha256 failed");
  std::ostringstream os;
  for (unsigned i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int{md[i]};
  return os.str();
}

inline std::string file_digest(const fs::path& p) { return sha256_hex(io::read_bytes(p)); }

inline std::string fmt(double v, int precision = 10) {
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

/// Setting lookup with precedence: flag > config file > capture sidecar > default.
class Settings {
 public:
  void bind(CLI::App* sub, const std::string& flag, const std::string& key, const std::string& help) {
    options_.emplace(key, sub->add_option(flag, raw_[key], help));
  }

  void set_config(io::KeyValues kv) { config_ = std::move(kv); }
  void set_sidecar(io::KeyValues kv) { sidecar_ = std::move(kv); }

  std::optional<std::string> lookup(const std::string& key) const {
    const auto [first, last] = options_.equal_range(key);
    for (auto it = first; it != last; ++it)
      if (it->second->count() > 0) return raw_.at(key);
    if (auto it = config_.find(key); it != config_.end()) return it->second;
    if (auto it = sidecar_.find(key); it != sidecar_.end()) return it->second;
    return std::nullopt;
  }

  bool has(const std::string& key) const { return lookup(key).has_value(); }

  std::string str(const std::string& key, const std::string& fallback) const {
    return lookup(key).value_or(fallback);
  }

  double real(const std::string& key, double fallback) const {
    const auto v = lookup(key);
    if (!v) return fallback;
    return parse_real(key, *v);
  }

  std::int64_t integer(const std::string& key, std::int64_t fallback) const {
    const auto v = lookup(key);
    if (!v) return fallback;
    try {
      std::size_t pos = 0;
      const auto x = std::stoll(*v, &pos);
      if (pos != v->size()) throw std::invalid_argument(key);
      return x;
    } catch (const std::logic_error&) {
      throw ValidationError("--" + key + ": expected an integer, got '" + *v + "'");
    }
  }

  std::vector<double> list(const std::string& key, const std::vector<double>& fallback) const {
    const auto v = lookup(key);
    if (!v) return fallback;
    std::vector<double> out;
    std::stringstream ss(*v);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = io::trim(item);
      if (!item.empty()) out.push_back(parse_real(key, item));
    }
    return out;
  }

 private:
  static double parse_real(const std::string& key, const std::string& s) {
    try {
      std::size_t pos = 0;
      const double x = std::stod(s, &pos);
      if (pos != s.size() || !std::isfinite(x)) throw std::invalid_argument(key);
      return x;
    } catch (const std::logic_error&) {
      throw ValidationError("--" + key + ": expected a number, got '" + s + "'");
    }
  }

  std::map<std::string, std::string> raw_;
  std::multimap<std::string, CLI::Option*> options_;
  io::KeyValues config_;
  io::KeyValues sidecar_;
};

inline int bits_setting(const Settings& s, int fallback) {
  const auto b = s.integer("bits", fallback);
  detail::require(b >= AdcConfig::min_bits && b <= max_capture_bits, "--bits must be in [2, 16]");
  return static_cast<int>(b);
}

inline std::size_t block_size_setting(const Settings& s) {
  const auto b = s.integer("block_size", static_cast<std::int64_t>(default_block_size));
  detail::require(b >= static_cast<std::int64_t>(min_block_size), "--block-size must be >= 1000");
  return static_cast<std::size_t>(b);
}

inline void write_report(std::ostream& out, const io::KeyValues& kv, const std::vector<std::string>& order) {
  for (const auto& k : order)
    if (auto it = kv.find(k); it != kv.end()) out << k << '=' << it->second << '\n';
}

inline void add_entropy_fields(io::KeyValues& kv, const EntropyReport& r, const std::string& suffix = "") {
  kv["h_min_bits" + suffix] = fmt(r.h_min);
  kv["r_star_mv" + suffix] = fmt(r.optimal_range);
  kv["p_max" + suffix] = fmt(r.p_max);
  kv["worst_bin" + suffix] = to_string(r.worst_bin);
  kv["extraction_bound" + suffix] = fmt(r.extraction_bound);
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string out;
  bool dark = false;
};

inline NoiseModel model_from_settings(const Settings& s, ExcursionConvention conv) {
  const double sigma_cl_sq = s.real("sigma_cl_sq", 5.89);
  detail::require(sigma_cl_sq >= 0.0, "--sigma-cl-sq must be >= 0");
  double sigma_quan_sq = s.real("sigma_quan_sq", 154.43 - 5.89);
  if (s.has("qcnr_db")) {
    detail::require(sigma_cl_sq > 0.0, "--qcnr-db needs a positive --sigma-cl-sq");
    sigma_quan_sq = sigma_cl_sq * std::pow(10.0, s.real("qcnr_db", 0.0) / 10.0);
  } else if (s.has("clearance_db")) {
    detail::require(sigma_cl_sq > 0.0, "--clearance-db needs a positive --sigma-cl-sq");
    sigma_quan_sq = sigma_cl_sq * quantum_to_classical_ratio(s.real("clearance_db", 0.0));
  }
  const double excursion_sigma = s.real("excursion_sigma", 17.2);
  detail::require(excursion_sigma >= 0.0, "--excursion-sigma must be >= 0");
  return NoiseModel::from_excursion(sigma_quan_sq, sigma_cl_sq, excursion_sigma * std::sqrt(sigma_cl_sq), conv);
}

inline int cmd_simulate(const Settings& s, const SimulateArgs& a, std::ostream& out) {
  const auto conv = parse_convention(s.str("convention", "symmetric"));
  const auto model = model_from_settings(s, conv);
  const int bits = bits_setting(s, 12);
  const auto count = s.integer("count", 1'000'000);
  detail::require(count > 0, "--count must be > 0");
  const auto seed = static_cast<std::uint64_t>(s.integer("seed", 1));
  const double rate = s.real("sample_rate_hz", 1e8);
  detail::require(rate > 0.0, "--sample-rate-hz must be > 0");

  double range = 0.0;
  if (s.str("range_mv", "auto") == "auto")
    range = optimize_range(model, bits, conv).optimal_range;
  else
    range = s.real("range_mv", 0.0);
  const AdcConfig cfg(bits, range);

  SimSpec spec;
  spec.model = model;
  if (a.dark) spec.model.sigma_quan_sq = 0.0;
  spec.cfg = cfg;
  spec.count = static_cast<std::uint64_t>(count);
  spec.seed = seed;
  const auto drift = s.str("drift", "sinusoidal");
  if (drift == "constant") {
    spec.drift = drift::Constant{s.real("drift_offset", 0.5 * (model.cl_min + model.cl_max))};
  } else if (drift == "sinusoidal") {
    spec.drift = drift::Sinusoidal{0.5 * model.excursion(), s.real("drift_period", 200'000.0)};
  } else if (drift == "random_walk") {
    spec.drift = drift::RandomWalk{s.real("drift_step", 0.01 * std::sqrt(std::max(model.sigma_cl_sq, 1e-12)))};
  } else {
    throw ValidationError("--drift must be constant, sinusoidal or random_walk");
  }
  spec.validate();
  detail::require(!a.out.empty(), "--out is required");

  const auto samples = generate(spec);
  io::CaptureMeta meta{bits, range, rate, seed};
  io::write_capture(a.out, samples);
  io::write_key_values(io::meta_path(a.out), meta.to_key_values());
  out << "wrote " << samples.size() << " samples to " << a.out << " (bits=" << bits
      << " range_mv=" << fmt(range) << " seed=" << seed << (a.dark ? " dark" : "") << ")\n";
  return ok;
}

// ----------------------------------------------------------------- analyze

struct AnalyzeArgs {
  std::string capture, dark, report_out, csv_out;
};

inline void require_file(const std::string& p) {
  if (!fs::is_regular_file(p)) throw IoError("cannot open " + p);
}

inline AdcConfig capture_config(const Settings& s) {
  const int bits = bits_setting(s, 12);
  detail::require(s.has("range_mv"), "ADC range unknown: pass --range-mv or provide a .meta sidecar");
  return AdcConfig(bits, s.real("range_mv", 0.0));
}

inline int cmd_analyze(Settings& s, const AnalyzeArgs& a, std::ostream& out) {
  detail::require(!a.capture.empty() && !a.dark.empty(), "analyze needs --capture and --dark");
  require_file(a.capture);
  require_file(a.dark);
  const auto conv = parse_convention(s.str("convention", "symmetric"));
  const auto block = block_size_setting(s);

  io::KeyValues signal_meta, dark_meta;
  if (fs::exists(io::meta_path(a.capture))) signal_meta = io::read_key_values(io::meta_path(a.capture));
  if (fs::exists(io::meta_path(a.dark))) dark_meta = io::read_key_values(io::meta_path(a.dark));
  for (const char* key : {"bits", "range_mv"}) {
    if (signal_meta.count(key) && dark_meta.count(key))
      detail::require(std::abs(std::stod(signal_meta[key]) - std::stod(dark_meta[key])) <=
                          1e-9 * std::abs(std::stod(signal_meta[key])),
                      std::string("signal and dark captures disagree on ") + key);
  }
  s.set_sidecar(signal_meta.empty() ? dark_meta : signal_meta);
  const auto cfg = capture_config(s);

  const auto signal_bytes = io::read_bytes(a.capture);
  const auto dark_bytes = io::read_bytes(a.dark);
  const auto signal = io::decode_capture(signal_bytes);
  const auto dark = io::decode_capture(dark_bytes);
  for (const auto* cap : {&signal, &dark})
    for (auto v : *cap)
      detail::require(v >= cfg.index_low() && v <= cfg.index_high(), "capture sample outside the ADC bit depth");

  const auto sst = estimate_stats(signal, cfg, block);
  const auto dst = estimate_stats(dark, cfg, block);
  const double qcnr = qcnr_from_capture(sst, dst);
  const double sigma_cl_sq = dst.variance;
  const double sigma_quan_sq = sst.variance - dst.variance;
  const auto model = NoiseModel::from_excursion(sigma_quan_sq, sigma_cl_sq, sst.excursion_estimate, conv);
  const auto report = optimize_range(model, cfg.bits(), conv);

  io::KeyValues kv;
  kv["tool_version"] = version;
  kv["convention"] = to_string(conv);
  kv["qcnr_source"] = "measured";
  kv["bits"] = std::to_string(cfg.bits());
  kv["capture_range_mv"] = fmt(cfg.range());
  kv["samples"] = std::to_string(sst.count);
  kv["dark_samples"] = std::to_string(dst.count);
  kv["block_size"] = std::to_string(block);
  kv["signal_variance_mv2"] = fmt(sst.variance);
  kv["dark_variance_mv2"] = fmt(dst.variance);
  kv["sigma_quan_sq"] = fmt(sigma_quan_sq);
  kv["sigma_cl_sq"] = fmt(sigma_cl_sq);
  kv["qcnr_db"] = fmt(qcnr);
  kv["clearance_db"] = fmt(clearance_db(sst.variance, dst.variance));
  kv["excursion_mv"] = fmt(sst.excursion_estimate);
  kv["excursion_sigma"] = fmt(report.excursion_sigma);
  kv["offscale_count"] = std::to_string(sst.offscale_count);
  kv["capture_sha256"] = file_digest(a.capture);
  kv["dark_sha256"] = file_digest(a.dark);
  add_entropy_fields(kv, report);
  std::vector<std::string> order{"tool_version", "convention", "qcnr_source", "bits", "capture_range_mv",
                                 "samples", "dark_samples", "block_size", "signal_variance_mv2",
                                 "dark_variance_mv2", "sigma_quan_sq", "sigma_cl_sq", "qcnr_db",
                                 "clearance_db", "excursion_mv", "excursion_sigma", "offscale_count",
                                 "h_min_bits", "r_star_mv", "p_max", "worst_bin", "extraction_bound"};

  if (s.has("stated_qcnr_db")) {
    const double stated = s.real("stated_qcnr_db", 0.0);
    kv["stated_qcnr_db"] = fmt(stated);
    order.push_back("stated_qcnr_db");
    if (std::fabs(stated - qcnr) > 0.1) {
      auto alt = model;
      alt.sigma_quan_sq = sigma_cl_sq * std::pow(10.0, stated / 10.0);
      add_entropy_fields(kv, optimize_range(alt, cfg.bits(), conv), "_stated");
      kv["qcnr_note"] = "measured and stated QCNR differ by " + fmt(std::fabs(stated - qcnr), 4) +
                        " dB; both interpretations reported";
      for (const char* k : {"h_min_bits_stated", "r_star_mv_stated", "p_max_stated", "worst_bin_stated",
                            "extraction_bound_stated", "qcnr_note"})
        order.push_back(k);
    }
  }
  order.push_back("capture_sha256");
  order.push_back("dark_sha256");

  // Validate output targets exist before writing anything.
  for (const auto& p : {a.report_out, a.csv_out})
    if (!p.empty()) {
      const auto parent = fs::path(p).parent_path();
      if (!parent.empty() && !fs::exists(parent)) throw IoError("directory does not exist: " + parent.string());
    }

  write_report(out, kv, order);
  if (!a.report_out.empty()) {
    std::ofstream f(a.report_out, std::ios::trunc);
    if (!f) throw IoError("cannot write " + a.report_out);
    write_report(f, kv, order);
  }
  if (!a.csv_out.empty()) {
    std::ofstream f(a.csv_out, std::ios::trunc);
    if (!f) throw IoError("cannot write " + a.csv_out);
    for (std::size_t i = 0; i < order.size(); ++i) f << (i ? "," : "") << order[i];
    f << '\n';
    for (std::size_t i = 0; i < order.size(); ++i) f << (i ? "," : "") << kv[order[i]];
    f << '\n';
  }
  return ok;
}

// ----------------------------------------------------------------- extract

struct ExtractArgs {
  std::string capture, seed_file, out, report;
  bool override_bound = false;
};

inline int cmd_extract(Settings& s, const ExtractArgs& a, std::ostream& out, std::ostream& err) {
  detail::require(!a.capture.empty() && !a.seed_file.empty() && !a.out.empty(),
                  "extract needs --capture, --seed-file and --out");
  require_file(a.capture);
  require_file(a.seed_file);
  if (fs::exists(io::meta_path(a.capture))) s.set_sidecar(io::read_key_values(io::meta_path(a.capture)));
  const int bits = bits_setting(s, 12);

  std::optional<double> h_min;
  if (s.has("h_min")) h_min = s.real("h_min", 0.0);
  if (!h_min && !a.report.empty()) {
    const auto rep = io::read_key_values(a.report);
    const auto it = rep.find("h_min_bits");
    detail::require(it != rep.end(), "report has no h_min_bits");
    h_min = std::stod(it->second);
    if (auto b = rep.find("bits"); b != rep.end())
      detail::require(std::stoi(b->second) == bits, "report bit depth does not match the capture");
  }

  const auto n_in = s.integer("block_n", 4096);
  detail::require(n_in >= 1, "--block-n must be >= 1");
  ExtractionPlan p;
  if (s.has("m")) {
    const auto m = s.integer("m", 0);
    detail::require(m >= 1 && m <= n_in, "--m must be in [1, block_n]");
    if (!h_min) {
      detail::require(a.override_bound, "no min-entropy given (--h-min or --report); cannot check the ratio bound");
      p = explicit_plan(static_cast<std::size_t>(m), static_cast<std::size_t>(n_in), 0.0, bits, true);
    } else {
      p = explicit_plan(static_cast<std::size_t>(m), static_cast<std::size_t>(n_in), *h_min, bits,
                        a.override_bound);
    }
  } else {
    detail::require(h_min.has_value(), "extract needs --h-min, --report or an explicit --m");
    p = plan(*h_min, bits, static_cast<std::size_t>(n_in));
  }
  if (p.over_bound || !h_min)
    err << "WARNING: extraction ratio " << fmt(p.ratio, 6)
        << " is not backed by the min-entropy bound; output is not information-theoretically secure\n";

  const auto seed = io::read_seed(a.seed_file, p.seed_bits());
  const ToeplitzExtractor ex(seed, p.m, p.n);
  const auto samples = io::read_capture(a.capture);
  const auto threads = static_cast<unsigned>(std::max<std::int64_t>(1, s.integer("threads", 1)));
  const auto bits_out = extract_stream(ex, p, samples, threads);
  io::write_bits(a.out, bits_out);

  const std::size_t blocks = samples.size() * static_cast<std::size_t>(bits) / p.n;
  out << "input_samples=" << samples.size() << " blocks=" << blocks << " m=" << p.m << " n=" << p.n
      << " output_bits=" << bits_out.size() << " ratio=" << fmt(p.ratio, 6)
      << " bound=" << fmt(p.entropy_bound, 6) << '\n';
  out << "tool_version=" << version << " capture_sha256=" << file_digest(a.capture)
      << " seed_sha256=" << file_digest(a.seed_file) << '\n';
  return ok;
}

// ------------------------------------------------------------------- sweep

struct SweepArgs {
  std::string out, lo_out;
  bool lo_sweep = false;
};

inline std::vector<double> default_clearances() {
  std::vector<double> c;
  for (int k = 2; k <= 20; ++k) c.push_back(k);
  return c;
}

inline DetectorModel detector_from_settings(const Settings& s) {
  DetectorModel d;
  d.quantum_efficiency = s.real("efficiency", 0.9);
  d.bandwidth_hz = s.real("bandwidth_hz", 1e5);
  d.transimpedance = s.real("transimpedance", 1.6e4);
  d.load_impedance = s.real("load_ohm", 50.0);
  d.validate();
  return d;
}

inline int cmd_sweep(const Settings& s, const SweepArgs& a, std::ostream& out) {
  const auto conv = parse_convention(s.str("convention", "symmetric"));
  const auto clearances = s.list("clearances", default_clearances());
  const auto excursions = s.list("excursions", {3.0, 17.2, 40.0});
  detail::require(!clearances.empty(), "--clearances: empty grid");
  detail::require(!excursions.empty(), "--excursions: empty grid");
  const auto b = s.integer("bits", 12);
  detail::require(b >= AdcConfig::min_bits && b <= AdcConfig::max_bits, "--bits must be in [2, 24]");
  const double sigma_cl_sq = s.real("sigma_cl_sq", 5.89);

  std::vector<double> lo_powers;
  if (a.lo_sweep || s.has("lo_powers_mw")) {
    lo_powers = s.list("lo_powers_mw", {0.3, 0.6, 1.2, 2.4, 4.8});
    detail::require(!lo_powers.empty(), "--lo-powers-mw: empty grid");
  }
  const auto det = detector_from_settings(s);
  const double ephot = photon_energy(s.real("wavelength_nm", 1550.0) * 1e-9);

  const auto rows = entropy_vs_clearance_sweep(clearances, excursions, static_cast<int>(b), conv, sigma_cl_sq,
                                               static_cast<unsigned>(std::max<std::int64_t>(1, s.integer("threads", 1))));
  const auto csv = to_csv(rows);
  if (a.out.empty()) {
    out << csv;
  } else {
    std::ofstream f(a.out, std::ios::trunc);
    if (!f) throw IoError("cannot write " + a.out);
    f << csv;
    out << "wrote " << rows.size() << " rows to " << a.out << " (convention=" << to_string(conv) << ")\n";
  }

  if (!lo_powers.empty()) {
    std::ostringstream t;
    const bool with_qcnr = s.has("electronic_noise_dbm");
    t << "lo_power_mw,shot_noise_dbm" << (with_qcnr ? ",qcnr_db" : "") << '\n';
    for (double mw : lo_powers) {
      const double p = shot_noise_power_dbm(det, mw * 1e-3, ephot);
      t << fmt(mw) << ',' << fmt(p, 12);
      if (with_qcnr) t << ',' << fmt(p - s.real("electronic_noise_dbm", 0.0), 12);
      t << '\n';
    }
    if (a.lo_out.empty()) {
      out << '\n' << t.str();
    } else {
      std::ofstream f(a.lo_out, std::ios::trunc);
      if (!f) throw IoError("cannot write " + a.lo_out);
      f << t.str();
    }
  }
  return ok;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
  bool operating_points = false;
};

inline void print_report(std::ostream& out, const std::string& label, const EntropyReport& r) {
  out << label << " convention=" << to_string(r.convention) << " qcnr_db=" << fmt(r.qcnr_db, 6)
      << " clearance_db=" << fmt(r.clearance_db, 6) << " excursion_sigma=" << fmt(r.excursion_sigma, 6)
      << " r_star_mv=" << fmt(r.optimal_range, 8) << " h_min_bits=" << fmt(r.h_min, 6)
      << " worst_bin=" << to_string(r.worst_bin) << " extraction_bound=" << fmt(r.extraction_bound, 6) << '\n';
}

/// The measured operating points and the values reported for them.
struct OperatingPoint {
  std::string label;
  double sigma_quan_sq;
  double excursion_sigma;
};

inline std::vector<OperatingPoint> operating_points() {
  const double scl = 5.89;
  return {{"high_lo_stated_qcnr_17.8dB", scl * std::pow(10.0, 1.78), 17.2},
          {"high_lo_variance_qcnr_14.02dB", 154.43 - 5.89, 17.2},
          {"low_lo_clearance_4.06dB", scl * quantum_to_classical_ratio(4.06), 19.3}};
}

inline int cmd_evaluate(const Settings& s, const EvaluateArgs& a, std::ostream& out) {
  const int bits = static_cast<int>(s.integer("bits", 12));
  if (a.operating_points) {
    out << "tool_version=" << version << '\n';
    for (const auto& c : operating_points())
      for (auto conv : {ExcursionConvention::one_sided, ExcursionConvention::symmetric}) {
        const auto m = NoiseModel::from_excursion(c.sigma_quan_sq, 5.89, c.excursion_sigma * std::sqrt(5.89), conv);
        print_report(out, c.label, optimize_range(m, bits, conv));
      }
    out << "note: the stated 17.8 dB QCNR and the 154.43/5.89 mV^2 variances (14.02 dB) disagree\n"
        << "note: 3520/4096 = 0.859, 10.13/12 = 0.844 and the quoted 85.3% ratio are mutually inconsistent\n"
        << "note: excursion placement (one-sided or symmetric) is not determined by the source data\n";
    return ok;
  }
  std::vector<ExcursionConvention> convs;
  const auto c = s.str("convention", "symmetric");
  if (c == "all")
    convs = {ExcursionConvention::one_sided, ExcursionConvention::symmetric};
  else
    convs = {parse_convention(c)};
  for (auto conv : convs) {
    const auto model = model_from_settings(s, conv);
    if (s.has("range_mv"))
      print_report(out, "fixed_range", evaluate(model, AdcConfig(bits, s.real("range_mv", 0.0)), conv));
    else
      print_report(out, "optimal_range", optimize_range(model, bits, conv));
  }
  return ok;
}

// -------------------------------------------------------------------- seed

inline int cmd_seed(const Settings& s, const std::string& path, std::ostream& out) {
  detail::require(!path.empty(), "seed needs --out");
  std::int64_t nbits = s.integer("seed_bits", 0);
  if (nbits == 0) {
    const auto m = s.integer("m", 0), n = s.integer("block_n", 4096);
    detail::require(m >= 1 && n >= m, "seed needs --seed-bits or --m (and --block-n)");
    nbits = m + n - 1;
  }
  detail::require(nbits >= 1, "--seed-bits must be >= 1");
  std::uint64_t key;
  if (s.has("seed")) {
    key = static_cast<std::uint64_t>(s.integer("seed", 0));
  } else {
    std::random_device rd;
    key = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  }
  const CounterRng rng(key);
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>((nbits + 7) / 8));
  for (std::size_t i = 0; i < bytes.size(); ++i)
    bytes[i] = static_cast<std::uint8_t>(rng.word(i / 8) >> (8 * (i % 8)));
  io::write_bytes(path, bytes);
  out << "wrote " << nbits << " seed bits (" << bytes.size() << " bytes) to " << path << '\n';
  return ok;
}

// ---------------------------------------------------------------- selftest

struct SelftestArgs {
  std::optional<std::size_t> tamper_bit;
};

inline std::vector<std::uint8_t> from_hex(const std::string& hex) {
  std::vector<std::uint8_t> out;
  for (std::size_t i = 0; i + 1 < hex.size(); i += 2)
    out.push_back(static_cast<std::uint8_t>(std::stoi(hex.substr(i, 2), nullptr, 16)));
  return out;
}

inline int cmd_selftest(const Settings& s, const SelftestArgs& a, std::ostream& out) {
  bool all_ok = true;
  auto line = [&](const std::string& name, bool pass, const std::string& detail) {
    out << (pass ? "PASS " : "FAIL ") << name << "  " << detail << '\n';
    all_ok = all_ok && pass;
  };

  // Known-answer fixture (m = 24, n = 64).
  {
    auto seed = BitString::from_bytes_msb(from_hex("5009d7b950b37b8903066b"), 24 + 64 - 1);
    if (a.tamper_bit) {
      detail::require(*a.tamper_bit < seed.size(), "--tamper-seed-bit out of range");
      seed.flip(*a.tamper_bit);
    }
    const auto input = BitString::from_bytes_msb(from_hex("2b09408bff0b4aa8"), 64);
    const auto expected = BitString::from_bytes_msb(from_hex("68918d"), 24);
    const ToeplitzExtractor ex(seed, 24, 64);
    const auto fast = ex.extract_block(input);
    const auto naive = reference::toeplitz_multiply(seed, 24, 64, input);
    line("toeplitz_known_answer", fast == expected && naive == expected,
         "fast=" + fast.to_string() + " expected=" + expected.to_string());
  }

  // Fast vs naive GF(2) product on random shapes.
  {
    const CounterRng rng(0x5EED);
    std::uint64_t c = 0;
    int mismatches = 0;
    const int cases = 300;
    for (int k = 0; k < cases; ++k) {
      const std::size_t n = 1 + rng.word(c++) % 200;
      const std::size_t m = 1 + rng.word(c++) % n;
      BitString seed(m + n - 1), x(n);
      for (std::size_t i = 0; i < seed.size(); ++i) seed.set(i, rng.word(c++) & 1u);
      for (std::size_t i = 0; i < n; ++i) x.set(i, rng.word(c++) & 1u);
      if (ToeplitzExtractor(seed, m, n).extract_block(x) != reference::toeplitz_multiply(seed, m, n, x))
        ++mismatches;
    }
    line("toeplitz_oracle_equivalence", mismatches == 0,
         std::to_string(cases - mismatches) + "/" + std::to_string(cases) + " cases agree" +
             (detail::hardware_clmul() ? " (pclmul)" : " (portable clmul)"));
  }

  // Closed-form worst case vs brute-force offset scan.
  {
    double worst = 0.0;
    const NoiseModel models[] = {NoiseModel::from_excursion(0.5, 0.1, 0.0),
                                 NoiseModel::from_excursion(0.5, 0.2, 0.5, ExcursionConvention::one_sided),
                                 NoiseModel::from_excursion(148.54, 5.89, 17.2 * std::sqrt(5.89))};
    const int bits[] = {3, 8, 12};
    const double ranges[] = {1.2, 3.0, 80.0};
    for (int k = 0; k < 3; ++k) {
      const AdcConfig cfg(bits[k], ranges[k]);
      for (auto conv : {ExcursionConvention::one_sided, ExcursionConvention::symmetric}) {
        const double closed = worst_case_max_bin_prob(models[k], cfg, conv);
        const double brute = reference::worst_case_max_bin_prob(models[k], cfg, conv, 2000);
        worst = std::max(worst, std::fabs(closed - brute));
      }
    }
    line("entropy_oracle_equivalence", worst <= 1e-9, "max |closed - brute| = " + fmt(worst, 3));
  }

  // Simulate, evaluate, extract and test the reference operating point.
  {
    const auto seed = static_cast<std::uint64_t>(s.integer("seed", 1));
    const auto conv = ExcursionConvention::symmetric;
    const auto model = NoiseModel::from_excursion(148.54, 5.89, 17.2 * std::sqrt(5.89), conv);
    const auto rep = optimize_range(model, 12, conv);
    SimSpec spec;
    spec.model = model;
    spec.cfg = AdcConfig(12, rep.optimal_range);
    spec.count = 1'000'000;
    spec.seed = seed;
    spec.drift = drift::Sinusoidal{0.5 * model.excursion(), 200'000.0};
    const auto samples = generate(spec);
    const auto p = plan(rep.h_min, 12, 4096);
    BitString tseed(p.seed_bits());
    const CounterRng rng(seed ^ 0xA5A5A5A5A5A5A5A5ULL);
    for (std::size_t i = 0; i < tseed.size(); ++i) tseed.set(i, (rng.word(i / 64) >> (i % 64)) & 1u);
    const auto bits_out = extract_stream(ToeplitzExtractor(tseed, p.m, p.n), p, samples);
    const auto report = health::run_battery(bits_out, 10, 0.01);
    std::ostringstream d;
    d << "h_min=" << fmt(rep.h_min, 5) << " m=" << p.m << " bits=" << bits_out.size()
      << " failures=" << report.failures() << "/" << report.sequences * std::size(health::all_tests);
    for (std::size_t t = 0; t < std::size(health::all_tests); ++t)
      d << ' ' << health::to_string(health::all_tests[t]) << ':' << fmt(report.pass_fraction[t], 3);
    line("health_battery", report.failures() <= 2 && report.proportions_ok(), d.str());
  }

  out << (all_ok ? "selftest: PASS" : "selftest: FAIL") << '\n';
  return all_ok ? ok : validation;
}

// --------------------------------------------------------------------- run

inline int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Vacuum-noise QRNG toolkit: entropy evaluation, simulation and Toeplitz extraction", "qrng"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(version));
  std::string config_path;
  app.add_option("--config", config_path, "key = value configuration file");

  Settings s;

  auto* sim = app.add_subcommand("simulate", "Write a simulated capture and its .meta sidecar");
  SimulateArgs sim_args;
  sim->add_option("--out", sim_args.out, "capture file to write")->required();
  sim->add_flag("--dark", sim_args.dark, "block the quantum signal (electronic noise only)");
  for (auto [flag, key, help] : std::initializer_list<std::tuple<const char*, const char*, const char*>>{
           {"--count", "count", "number of samples"},
           {"--seed", "seed", "generator seed"},
           {"--bits", "bits", "ADC bit depth"},
           {"--range-mv", "range_mv", "ADC half-range in mV, or 'auto' for the optimal range"},
           {"--sigma-quan-sq", "sigma_quan_sq", "quantum noise variance (mV^2)"},
           {"--sigma-cl-sq", "sigma_cl_sq", "classical noise variance (mV^2)"},
           {"--qcnr-db", "qcnr_db", "set the quantum variance from a QCNR"},
           {"--clearance-db", "clearance_db", "set the quantum variance from a clearance"},
           {"--excursion-sigma", "excursion_sigma", "offset excursion in units of sigma_cl"},
           {"--convention", "convention", "one_sided | symmetric"},
           {"--drift", "drift", "constant | sinusoidal | random_walk"},
           {"--drift-offset", "drift_offset", "offset for constant drift (mV)"},
           {"--drift-period", "drift_period", "sinusoid period in samples"},
           {"--drift-step", "drift_step", "random-walk step (mV)"},
           {"--sample-rate-hz", "sample_rate_hz", "recorded in the sidecar"}})
    s.bind(sim, flag, key, help);

  auto* ana = app.add_subcommand("analyze", "Estimate QCNR, excursion and min-entropy from captures");
  AnalyzeArgs ana_args;
  ana->add_option("--capture", ana_args.capture, "signal capture")->required();
  ana->add_option("--dark", ana_args.dark, "dark capture (quantum signal blocked)")->required();
  ana->add_option("--report-out", ana_args.report_out, "write the key=value report here");
  ana->add_option("--csv-out", ana_args.csv_out, "write a one-row CSV report here");
  for (auto [flag, key, help] : std::initializer_list<std::tuple<const char*, const char*, const char*>>{
           {"--bits", "bits", "ADC bit depth (overrides sidecar)"},
           {"--range-mv", "range_mv", "ADC half-range (overrides sidecar)"},
           {"--convention", "convention", "one_sided | symmetric"},
           {"--block-size", "block_size", "samples per block for drift statistics"},
           {"--stated-qcnr-db", "stated_qcnr_db", "a QCNR quoted elsewhere, reported alongside"}})
    s.bind(ana, flag, key, help);

  auto* ext = app.add_subcommand("extract", "Toeplitz-hash a capture into output bits");
  ExtractArgs ext_args;
  ext->add_option("--capture", ext_args.capture, "capture file")->required();
  ext->add_option("--seed-file", ext_args.seed_file, "Toeplitz seed, ceil((m+n-1)/8) bytes")->required();
  ext->add_option("--out", ext_args.out, "packed output bit file")->required();
  ext->add_option("--report", ext_args.report, "analyze report providing h_min_bits");
  ext->add_flag("--override", ext_args.override_bound, "allow m/n above the min-entropy bound");
  for (auto [flag, key, help] : std::initializer_list<std::tuple<const char*, const char*, const char*>>{
           {"--h-min", "h_min", "min-entropy per sample (bits)"},
           {"--m", "m", "explicit output bits per block"},
           {"--block-n", "block_n", "input bits per block"},
           {"--bits", "bits", "ADC bit depth (overrides sidecar)"},
           {"--threads", "threads", "worker threads"}})
    s.bind(ext, flag, key, help);

  auto* swp = app.add_subcommand("sweep", "Entropy vs clearance table, optional shot noise vs LO power");
  SweepArgs swp_args;
  swp->add_option("--out", swp_args.out, "CSV output (default stdout)");
  swp->add_option("--lo-out", swp_args.lo_out, "LO-power CSV output (default stdout)");
  swp->add_flag("--lo-sweep", swp_args.lo_sweep, "also emit shot-noise power vs LO power");
  for (auto [flag, key, help] : std::initializer_list<std::tuple<const char*, const char*, const char*>>{
           {"--clearances", "clearances", "comma-separated clearances in dB"},
           {"--excursions", "excursions", "comma-separated excursions in sigma_cl"},
           {"--bits", "bits", "ADC bit depth"},
           {"--convention", "convention", "one_sided | symmetric"},
           {"--sigma-cl-sq", "sigma_cl_sq", "classical variance setting the mV scale"},
           {"--lo-powers-mw", "lo_powers_mw", "comma-separated LO powers in mW"},
           {"--efficiency", "efficiency", "photodiode quantum efficiency"},
           {"--bandwidth-hz", "bandwidth_hz", "resolution bandwidth"},
           {"--transimpedance", "transimpedance", "TIA gain in V/A"},
           {"--load-ohm", "load_ohm", "load impedance"},
           {"--wavelength-nm", "wavelength_nm", "LO wavelength"},
           {"--electronic-noise-dbm", "electronic_noise_dbm", "electronic noise floor for a QCNR column"},
           {"--threads", "threads", "worker threads"}})
    s.bind(swp, flag, key, help);

  auto* evl = app.add_subcommand("evaluate", "Conditional min-entropy of a noise model");
  EvaluateArgs evl_args;
  evl->add_flag("--operating-points", evl_args.operating_points, "evaluate the reference operating points under every convention");
  for (auto [flag, key, help] : std::initializer_list<std::tuple<const char*, const char*, const char*>>{
           {"--sigma-quan-sq", "sigma_quan_sq", "quantum noise variance (mV^2)"},
           {"--sigma-cl-sq", "sigma_cl_sq", "classical noise variance (mV^2)"},
           {"--qcnr-db", "qcnr_db", "set the quantum variance from a QCNR"},
           {"--clearance-db", "clearance_db", "set the quantum variance from a clearance"},
           {"--excursion-sigma", "excursion_sigma", "offset excursion in units of sigma_cl"},
           {"--bits", "bits", "ADC bit depth"},
           {"--range-mv", "range_mv", "fixed ADC half-range (default: optimise)"},
           {"--convention", "convention", "one_sided | symmetric | all"}})
    s.bind(evl, flag, key, help);

  auto* sd = app.add_subcommand("seed", "Write a Toeplitz seed file");
  std::string seed_out;
  sd->add_option("--out", seed_out, "seed file")->required();
  for (auto [flag, key, help] : std::initializer_list<std::tuple<const char*, const char*, const char*>>{
           {"--seed-bits", "seed_bits", "number of seed bits"},
           {"--m", "m", "output bits per block (seed bits = m + n - 1)"},
           {"--block-n", "block_n", "input bits per block"},
           {"--seed", "seed", "deterministic generator key (default: random_device)"}})
    s.bind(sd, flag, key, help);

  auto* st = app.add_subcommand("selftest", "Oracle cross-checks and a health battery on fresh output");
  SelftestArgs st_args;
  std::size_t tamper = 0;
  auto* tamper_opt = st->add_option("--tamper-seed-bit", tamper, "flip one fixture seed bit (negative control)");
  s.bind(st, "--seed", "seed", "simulation seed");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(std::move(reversed));
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return ok;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return ok;
  } catch (const CLI::CallForVersion&) {
    out << version << '\n';
    return ok;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return validation;
  }

  try {
    if (!config_path.empty()) s.set_config(io::read_key_values(config_path));
    if (sim->parsed()) return cmd_simulate(s, sim_args, out);
    if (ana->parsed()) return cmd_analyze(s, ana_args, out);
    if (ext->parsed()) return cmd_extract(s, ext_args, out, err);
    if (swp->parsed()) return cmd_sweep(s, swp_args, out);
    if (evl->parsed()) return cmd_evaluate(s, evl_args, out);
    if (sd->parsed()) return cmd_seed(s, seed_out, out);
    if (st->parsed()) {
      if (tamper_opt->count()) st_args.tamper_bit = tamper;
      return cmd_selftest(s, st_args, out);
    }
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return validation;
  } catch (const DomainError& e) {
    err << "domain error: " << e.what() << '\n';
    return domain;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << '\n';
    return io_failure;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "i/o error: " << e.what() << '\n';
    return io_failure;
  } catch (const std::logic_error& e) {
    err << "error: " << e.what() << '\n';
    return validation;
  }
  return validation;
}

}  // namespace qrng::cli
