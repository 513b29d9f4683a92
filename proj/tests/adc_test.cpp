#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>

#include <cmath>
#include <numeric>
#include <random>

#include "qrng/adc.hpp"
#include "qrng/random.hpp"

using namespace qrng;

TEST(Adc, Geometry) {
  const AdcConfig cfg(12, 100.0);
  EXPECT_DOUBLE_EQ(cfg.bin_width(), 100.0 / 2048.0);
  EXPECT_EQ(cfg.index_low(), -2048);
  EXPECT_EQ(cfg.index_high(), 2047);
  EXPECT_EQ(cfg.bin_count(), 4096u);
  EXPECT_DOUBLE_EQ(cfg.center(10), 10.0 * cfg.bin_width());
}

TEST(Adc, Validation) {
  EXPECT_THROW(AdcConfig(1, 1.0), ValidationError);
  EXPECT_THROW(AdcConfig(25, 1.0), ValidationError);
  EXPECT_THROW(AdcConfig(8, 0.0), ValidationError);
  EXPECT_THROW(AdcConfig(8, -1.0), ValidationError);
  EXPECT_THROW(AdcConfig(8, std::nan("")), ValidationError);
}

TEST(Adc, QuantizeRoundsToNearestCentre) {
  const AdcConfig cfg(3, 1.0);  // delta = 0.25
  EXPECT_EQ(quantize(0.0, cfg), 0);
  EXPECT_EQ(quantize(0.12, cfg), 0);
  EXPECT_EQ(quantize(0.13, cfg), 1);
  EXPECT_EQ(quantize(-0.13, cfg), -1);
  EXPECT_EQ(quantize(0.125, cfg), 1);
  EXPECT_EQ(quantize(-0.125, cfg), 0);
}

TEST(Adc, QuantizeClampsToEdges) {
  const AdcConfig cfg(3, 1.0);
  EXPECT_EQ(quantize(-1e9, cfg), -4);
  EXPECT_EQ(quantize(1e9, cfg), 3);
  EXPECT_EQ(quantize(0.7, cfg), 3);   // past R - 3 delta / 2 = 0.625
  EXPECT_EQ(quantize(0.6, cfg), 2);
  EXPECT_EQ(quantize(-0.88, cfg), -4);  // below -R + delta / 2 = -0.875
  EXPECT_EQ(quantize(-0.87, cfg), -3);
}

TEST(Adc, ThresholdsAreEdgeBinBoundaries) {
  const AdcConfig cfg(8, 3.0);
  EXPECT_EQ(quantize(cfg.upper_threshold(), cfg), cfg.index_high());
  EXPECT_EQ(quantize(std::nextafter(cfg.upper_threshold(), 0.0), cfg), cfg.index_high() - 1);
  EXPECT_EQ(quantize(std::nextafter(cfg.lower_threshold(), -10.0), cfg), cfg.index_low());
}

TEST(Adc, StandardNormalThreeBits) {
  const auto d = bin_probabilities(0.0, 1.0, AdcConfig(3, 1.0));
  EXPECT_NEAR(d.at(0), 0.099476449660225786, 1e-15);
  EXPECT_NEAR(d.lsb(), 0.19078695285251063, 1e-15);
  EXPECT_NEAR(d.msb(), 0.26598552904870053, 1e-15);
  EXPECT_NEAR(offscale_fraction(d), 0.45677248190121116, 1e-15);
  EXPECT_NEAR(d.total(), 1.0, 1e-14);
}

TEST(Adc, ShiftMovesMean) {
  const AdcConfig cfg(6, 2.0);
  const auto a = bin_probabilities(0.3, 0.5, cfg);
  const auto b = bin_probabilities(0.0, 0.5, cfg, 0.3);
  for (std::size_t i = 0; i < a.probs().size(); ++i) EXPECT_NEAR(a.probs()[i], b.probs()[i], 1e-12);
}

TEST(Adc, RejectsNonPositiveWidth) {
  EXPECT_THROW(bin_probabilities(0.0, 0.0, AdcConfig(4, 1.0)), ValidationError);
  EXPECT_THROW(bin_probabilities(0.0, -1.0, AdcConfig(4, 1.0)), ValidationError);
}

TEST(Adc, InteriorSymmetryAboutZero) {
  const AdcConfig cfg(10, 7.0);
  const auto d = bin_probabilities(0.0, 1.3, cfg);
  for (std::int32_t i = 1; i < cfg.index_high(); ++i) EXPECT_NEAR(d.at(i), d.at(-i), 1e-12);
}

// Edges move down by the shift, so only mean + shift matters.
TEST(Adc, ShiftEquivalence) {
  const AdcConfig cfg(8, 5.0);
  for (double sft : {-3.0, 0.01, 2.5}) {
    const auto a = bin_probabilities(0.4 + sft, 0.9, cfg, 0.2 - sft);
    const auto b = bin_probabilities(0.4, 0.9, cfg, 0.2);
    for (std::size_t i = 0; i < a.probs().size(); ++i) ASSERT_NEAR(a.probs()[i], b.probs()[i], 1e-12);
  }
}

TEST(Adc, FarTailsAreExactZeroNotDenormal) {
  const auto d = bin_probabilities(0.0, 1e-3, AdcConfig(12, 100.0));
  EXPECT_EQ(d.lsb(), 0.0);
  EXPECT_EQ(d.msb(), 0.0);
  EXPECT_NEAR(d.total(), 1.0, 1e-12);
}

TEST(Adc, ProbabilitiesSumToOneRandomized) {
  std::mt19937_64 g(123);
  std::uniform_int_distribution<int> bits(2, 16);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    const AdcConfig cfg(bits(g), std::exp(u(g) * 10.0 - 5.0));
    const double sd = cfg.range() * std::exp(u(g) * 8.0 - 5.0);
    const double mean = (u(g) * 4.0 - 2.0) * cfg.range();
    const auto d = bin_probabilities(mean, sd, cfg);
    ASSERT_NEAR(d.total(), 1.0, 1e-12) << "bits=" << cfg.bits() << " R=" << cfg.range() << " sd=" << sd;
    for (double p : d.probs()) ASSERT_GE(p, 0.0);
  }
}

TEST(Adc, SymmetryAboutHalfBinShift) {
  // Reflection v -> -v - delta maps bin i onto bin -1 - i.
  const AdcConfig cfg(5, 1.0);
  const double delta = cfg.bin_width();
  const auto a = bin_probabilities(0.17, 0.3, cfg);
  const auto b = bin_probabilities(-0.17 - delta, 0.3, cfg);
  for (std::int32_t i = cfg.index_low(); i <= cfg.index_high(); ++i)
    EXPECT_NEAR(a.at(i), b.at(-1 - i), 1e-15);
}

TEST(Adc, ToVoltages) {
  const AdcConfig cfg(4, 1.0);
  const std::vector<std::int16_t> s{-8, 0, 7};
  const auto v = to_voltages(s, cfg);
  EXPECT_DOUBLE_EQ(v[0], -1.0);
  EXPECT_DOUBLE_EQ(v[1], 0.0);
  EXPECT_DOUBLE_EQ(v[2], 0.875);
}

TEST(Adc, ChiSquaredFidelity) {
  const AdcConfig cfg(6, 3.0);
  const double mean = 0.2, sd = 1.1;
  const auto d = bin_probabilities(mean, sd, cfg);
  const CounterRng rng(99);
  const std::size_t n = 1'000'000;
  std::vector<double> counts(cfg.bin_count(), 0.0);
  for (std::size_t k = 0; k < n / 2; ++k) {
    const auto [z0, z1] = rng.normal_pair(k);
    counts[static_cast<std::size_t>(quantize(mean + sd * z0, cfg) - cfg.index_low())] += 1.0;
    counts[static_cast<std::size_t>(quantize(mean + sd * z1, cfg) - cfg.index_low())] += 1.0;
  }
  double chi2 = 0.0;
  int dof = -1;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double e = d.probs()[i] * static_cast<double>(n);
    if (e < 5.0) continue;
    chi2 += (counts[i] - e) * (counts[i] - e) / e;
    ++dof;
  }
  const double p = boost::math::cdf(boost::math::complement(boost::math::chi_squared(dof), chi2));
  EXPECT_GT(p, 0.001) << "chi2=" << chi2 << " dof=" << dof;
}
