#include <gtest/gtest.h>

#include <cmath>

#include "qrng/entropy.hpp"
#include "qrng/simulator.hpp"

using namespace qrng;

namespace {

SimSpec reference_spec(std::uint64_t count, std::uint64_t seed) {
  SimSpec s;
  s.model = NoiseModel::from_excursion(154.43 - 5.89, 5.89, 17.2 * std::sqrt(5.89));
  s.cfg = AdcConfig(12, 60.0);
  s.count = count;
  s.seed = seed;
  s.drift = drift::Sinusoidal{0.5 * s.model.excursion(), 200'000.0};
  return s;
}

}  // namespace

TEST(Random, CounterRngIsStateless) {
  const CounterRng a(5), b(5), c(6);
  EXPECT_EQ(a.word(17), b.word(17));
  EXPECT_NE(a.word(17), c.word(17));
  EXPECT_NE(a.word(0), a.word(1));
}

TEST(Random, UniformInOpenUnitInterval) {
  const CounterRng r(1);
  double sum = 0.0;
  for (std::uint64_t k = 0; k < 100000; ++k) {
    const double u = r.uniform(k);
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / 100000.0, 0.5, 0.005);
}

TEST(Random, NormalMoments) {
  const CounterRng r(3);
  double s1 = 0.0, s2 = 0.0, s4 = 0.0;
  const std::uint64_t n = 200000;
  for (std::uint64_t k = 0; k < n; ++k) {
    const auto [a, b] = r.normal_pair(k);
    for (double z : {a, b}) {
      s1 += z;
      s2 += z * z;
      s4 += z * z * z * z;
    }
  }
  EXPECT_NEAR(s1 / (2 * n), 0.0, 0.01);
  EXPECT_NEAR(s2 / (2 * n), 1.0, 0.01);
  EXPECT_NEAR(s4 / (2 * n), 3.0, 0.06);
}

TEST(Simulator, Deterministic) {
  const auto a = generate(reference_spec(50000, 42));
  const auto b = generate(reference_spec(50000, 42));
  const auto c = generate(reference_spec(50000, 43));
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
}

TEST(Simulator, PrefixStable) {
  const auto a = generate(reference_spec(1000, 9));
  const auto b = generate(reference_spec(3000, 9));
  EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin()));
}

TEST(Simulator, SamplesWithinAdcIndices) {
  auto s = reference_spec(100000, 1);
  s.cfg = AdcConfig(8, 10.0);  // heavy clipping
  for (auto v : generate(s)) {
    ASSERT_GE(v, s.cfg.index_low());
    ASSERT_LE(v, s.cfg.index_high());
  }
}

TEST(Simulator, Validation) {
  auto s = reference_spec(0, 1);
  EXPECT_THROW(generate(s), ValidationError);
  s = reference_spec(10, 1);
  s.cfg = AdcConfig(17, 1.0);
  EXPECT_THROW(generate(s), ValidationError);
  s = reference_spec(10, 1);
  s.drift = drift::Sinusoidal{s.model.excursion(), 100.0};
  EXPECT_THROW(generate(s), ValidationError);
  s = reference_spec(10, 1);
  s.drift = drift::Constant{s.model.cl_max + 1.0};
  EXPECT_THROW(generate(s), ValidationError);
  s = reference_spec(10, 1);
  s.drift = drift::RandomWalk{-1.0};
  EXPECT_THROW(generate(s), ValidationError);
}

TEST(Simulator, RandomWalkStaysInInterval) {
  auto s = reference_spec(200000, 4);
  s.model.sigma_quan_sq = 0.0;
  s.model.sigma_cl_sq = 0.0;
  s.drift = drift::RandomWalk{0.5};
  for (auto v : generate(s)) {
    ASSERT_GE(v * s.cfg.bin_width(), s.model.cl_min - s.cfg.bin_width());
    ASSERT_LE(v * s.cfg.bin_width(), s.model.cl_max + s.cfg.bin_width());
  }
}

TEST(Simulator, StatsRecoverModel) {
  const auto spec = reference_spec(2'000'000, 11);
  const auto st = estimate_stats(generate(spec), spec.cfg);
  EXPECT_EQ(st.count, 2'000'000u);
  EXPECT_EQ(st.block_means.size(), 200u);
  // Quantisation adds delta^2 / 12 (about 2e-4 mV^2), well inside tolerance.
  EXPECT_NEAR(st.variance, 154.43, 154.43 * 0.01);
  EXPECT_NEAR(st.excursion_estimate, spec.model.excursion(), 0.05 * spec.model.excursion());
  EXPECT_GT(st.global_variance, st.variance);
  EXPECT_NEAR(st.mean, 0.0, 0.5);
}

TEST(Simulator, DarkAndSignalGiveQcnr) {
  auto sig = reference_spec(1'000'000, 21);
  auto dark = sig;
  dark.seed = 22;
  dark.model.sigma_quan_sq = 0.0;
  const auto a = estimate_stats(generate(sig), sig.cfg);
  const auto b = estimate_stats(generate(dark), dark.cfg);
  EXPECT_NEAR(b.variance, 5.89, 0.1);
  EXPECT_NEAR(qcnr_from_capture(a, b), 14.0172812479248, 0.1);
}

TEST(Simulator, QcnrRejectsSelfComparison) {
  auto dark = reference_spec(200000, 3);
  dark.model.sigma_quan_sq = 0.0;
  const auto st = estimate_stats(generate(dark), dark.cfg);
  EXPECT_THROW(qcnr_from_capture(st, st), DomainError);
}

TEST(Simulator, StatsValidation) {
  const std::vector<std::int16_t> few(5000, 0);
  const AdcConfig cfg(12, 60.0);
  EXPECT_THROW(estimate_stats(few, cfg), ValidationError);
  EXPECT_THROW(estimate_stats(few, cfg, 100), ValidationError);
  EXPECT_NO_THROW(estimate_stats(std::vector<std::int16_t>(10000, 0), cfg, 1000));
}

TEST(Simulator, OffscaleCount) {
  const AdcConfig cfg(4, 1.0);
  std::vector<std::int16_t> s(10000, 0);
  s[0] = -8;
  s[1] = 7;
  s[2] = 6;
  EXPECT_EQ(estimate_stats(s, cfg, 1000).offscale_count, 2u);
}

TEST(Simulator, DetrendRemovesLinearDrift) {
  const AdcConfig cfg(12, 100.0);
  std::vector<std::int16_t> s(20000);
  for (std::size_t k = 0; k < s.size(); ++k) s[k] = static_cast<std::int16_t>(k / 10 - 1000);
  const auto st = estimate_stats(s, cfg, 1000);
  // Staircase residual is uniform over a step: variance ~ (10 delta)^2 / 12 / 100.
  EXPECT_LT(st.variance, 0.01);
  EXPECT_GT(st.global_variance, 100.0);
}
