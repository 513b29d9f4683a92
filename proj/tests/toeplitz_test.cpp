#include <gtest/gtest.h>

#include <chrono>
#include <random>

#include "qrng/bits.hpp"
#include "qrng/reference.hpp"
#include "qrng/simulator.hpp"
#include "qrng/toeplitz.hpp"

using namespace qrng;

namespace {

BitString random_bits(std::mt19937_64& g, std::size_t n) {
  BitString b(n);
  for (std::size_t i = 0; i < n; ++i) b.set(i, g() & 1u);
  return b;
}

BitString hex_msb(const std::string& hex, std::size_t nbits) {
  std::vector<std::uint8_t> bytes;
  for (std::size_t i = 0; i < hex.size(); i += 2) bytes.push_back(static_cast<std::uint8_t>(std::stoi(hex.substr(i, 2), nullptr, 16)));
  return BitString::from_bytes_msb(bytes, nbits);
}

}  // namespace

TEST(Bits, StringRoundTrip) {
  const auto b = BitString::from_string("1011001110001");
  EXPECT_EQ(b.size(), 13u);
  EXPECT_EQ(b.to_string(), "1011001110001");
  EXPECT_EQ(b.count_ones(), 7u);
  EXPECT_THROW(BitString::from_string("10x1"), ValidationError);
}

TEST(Bits, BytesMsbFirst) {
  const std::vector<std::uint8_t> bytes{0xA5, 0x80};
  const auto b = BitString::from_bytes_msb(bytes, 9);
  EXPECT_EQ(b.to_string(), "101001011");
  const auto back = b.to_bytes_msb();
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0], 0xA5);
  EXPECT_EQ(back[1], 0x80);
}

TEST(Bits, AppendUnaligned) {
  std::mt19937_64 g(1);
  for (int trial = 0; trial < 200; ++trial) {
    const auto a = random_bits(g, g() % 300);
    const auto b = random_bits(g, g() % 300);
    BitString c = a;
    c.append(b);
    ASSERT_EQ(c.to_string(), a.to_string() + b.to_string());
    ASSERT_EQ(c.slice(a.size(), b.size()), b);
  }
}

TEST(Bits, AppendMsbFirst) {
  BitString b;
  b.append_msb_first(0b101, 3);
  b.append_msb_first(0x3, 2);
  EXPECT_EQ(b.to_string(), "10111");
}

TEST(Bits, XorAndEquality) {
  const auto a = BitString::from_string("1100");
  const auto b = BitString::from_string("1010");
  EXPECT_EQ((a ^ b).to_string(), "0110");
  EXPECT_THROW(a ^ BitString::from_string("1"), ValidationError);
}

TEST(Clmul, PortableMatchesHardware) {
  std::mt19937_64 g(5);
  for (int i = 0; i < 10000; ++i) {
    const auto a = g(), b = g();
    const auto p = detail::clmul64_portable(a, b);
    const auto h = detail::clmul64(a, b);
    ASSERT_EQ(p.lo, h.lo);
    ASSERT_EQ(p.hi, h.hi);
  }
}

TEST(Toeplitz, KnownAnswer) {
  const auto seed = hex_msb("5009d7b950b37b8903066b", 24 + 64 - 1);
  const auto in = hex_msb("2b09408bff0b4aa8", 64);
  const ToeplitzExtractor ex(seed, 24, 64);
  EXPECT_EQ(ex.extract_block(in), hex_msb("68918d", 24));
}

TEST(Toeplitz, EntriesAreConstantAlongDiagonals) {
  std::mt19937_64 g(3);
  const ToeplitzExtractor ex(random_bits(g, 20 + 30 - 1), 20, 30);
  for (std::size_t i = 1; i < 20; ++i)
    for (std::size_t j = 1; j < 30; ++j) ASSERT_EQ(ex.entry(i, j), ex.entry(i - 1, j - 1));
}

TEST(Toeplitz, MatchesNaiveOracle) {
  std::mt19937_64 g(77);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + g() % 128;
    const std::size_t m = 1 + g() % std::min<std::size_t>(64, n);
    const auto seed = random_bits(g, m + n - 1);
    const auto x = random_bits(g, n);
    const ToeplitzExtractor ex(seed, m, n);
    ASSERT_EQ(ex.extract_block(x), reference::toeplitz_multiply(seed, m, n, x)) << "m=" << m << " n=" << n;
  }
}

TEST(Toeplitz, MatchesNaiveOracleLargeBlocks) {
  std::mt19937_64 g(78);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 100 + g() % 5000;
    const std::size_t m = 1 + g() % n;
    const auto seed = random_bits(g, m + n - 1);
    const auto x = random_bits(g, n);
    ASSERT_EQ(ToeplitzExtractor(seed, m, n).extract_block(x), reference::toeplitz_multiply(seed, m, n, x));
  }
}

TEST(Toeplitz, Linearity) {
  std::mt19937_64 g(8);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + g() % 200;
    const std::size_t m = 1 + g() % n;
    const ToeplitzExtractor ex(random_bits(g, m + n - 1), m, n);
    const auto a = random_bits(g, n), b = random_bits(g, n);
    ASSERT_EQ(ex.extract_block(a ^ b), ex.extract_block(a) ^ ex.extract_block(b));
  }
}

TEST(Toeplitz, ConstructionValidation) {
  EXPECT_THROW(ToeplitzExtractor(BitString(10), 5, 4), ValidationError);
  EXPECT_THROW(ToeplitzExtractor(BitString(10), 4, 6), ValidationError);
  EXPECT_THROW(ToeplitzExtractor(BitString(0), 0, 0), ValidationError);
  const ToeplitzExtractor ex(BitString(9), 4, 6);
  EXPECT_THROW(ex.extract_block(BitString(5)), ValidationError);
}

TEST(Toeplitz, AllZeroInputGivesZero) {
  std::mt19937_64 g(1);
  const ToeplitzExtractor ex(random_bits(g, 100 + 300 - 1), 100, 300);
  EXPECT_EQ(ex.extract_block(BitString(300)).count_ones(), 0u);
}

TEST(Plan, FloorArithmetic) {
  const auto p = plan(10.13, 12, 4096);
  EXPECT_EQ(p.m, 3457u);  // floor(4096 * 10.13 / 12) = floor(3457.7)
  EXPECT_NEAR(p.ratio, 3457.0 / 4096.0, 1e-15);
  EXPECT_LE(p.ratio, p.entropy_bound);
  const auto q = plan(7.73, 12, 4096);
  EXPECT_EQ(q.m, 2638u);
  EXPECT_NEAR(q.ratio, 0.63, 0.02);
}

TEST(Plan, BoundIsRespectedEverywhere) {
  std::mt19937_64 g(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 2000; ++trial) {
    const int bits = 2 + static_cast<int>(g() % 15);
    const double h = bits * (0.05 + 0.95 * u(g));
    const std::size_t n = 64 + g() % 10000;
    const auto p = plan(h, bits, n);
    ASSERT_LE(static_cast<double>(p.m) * bits, static_cast<double>(n) * h);
    ASSERT_GT(static_cast<double>(p.m + 1) * bits, static_cast<double>(n) * h);
  }
}

TEST(Plan, FullEntropyGivesSquare) {
  const auto p = plan(12.0, 12, 4096);
  EXPECT_EQ(p.m, 4096u);
}

TEST(Plan, Errors) {
  EXPECT_THROW(plan(0.0, 12, 4096), DomainError);
  EXPECT_THROW(plan(13.0, 12, 4096), ValidationError);
  EXPECT_THROW(plan(0.001, 12, 10), DomainError);
  EXPECT_THROW(explicit_plan(4000, 4096, 10.13, 12), ValidationError);
  EXPECT_TRUE(explicit_plan(4000, 4096, 10.13, 12, true).over_bound);
  EXPECT_FALSE(explicit_plan(3000, 4096, 10.13, 12).over_bound);
}

TEST(Serialize, OffsetBinaryMsbFirst) {
  const std::vector<std::int16_t> s{-4, 3, 0};
  EXPECT_EQ(serialize_samples(s, 3).to_string(), "000111100");
  const std::vector<std::int16_t> bad{4};
  EXPECT_THROW(serialize_samples(bad, 3), ValidationError);
}

TEST(Stream, BlocksSpanSampleBoundariesAndDropTail) {
  std::mt19937_64 g(12);
  std::vector<std::int16_t> samples(1000);
  for (auto& s : samples) s = static_cast<std::int16_t>(static_cast<int>(g() % 4096) - 2048);
  const auto p = plan(10.13, 12, 4096);
  const ToeplitzExtractor ex(random_bits(g, p.seed_bits()), p.m, p.n);
  const auto out = extract_stream(ex, p, samples);
  const std::size_t blocks = 12000 / 4096;
  ASSERT_EQ(out.size(), blocks * p.m);
  const auto raw = serialize_samples(samples, 12);
  for (std::size_t b = 0; b < blocks; ++b)
    ASSERT_EQ(out.slice(b * p.m, p.m), reference::toeplitz_multiply(ex.seed(), p.m, p.n, raw.slice(b * p.n, p.n)));
}

TEST(Stream, ThreadsAgree) {
  std::mt19937_64 g(13);
  const auto raw = random_bits(g, 4096 * 37 + 100);
  const ToeplitzExtractor ex(random_bits(g, 3000 + 4096 - 1), 3000, 4096);
  const auto a = extract_bits(ex, raw, 1);
  EXPECT_EQ(a, extract_bits(ex, raw, 3));
  EXPECT_EQ(a, extract_bits(ex, raw, 64));
}

TEST(Stream, FullEntropySquareKeepsLength) {
  std::mt19937_64 g(14);
  const auto raw = random_bits(g, 4096 * 5 + 77);
  const ToeplitzExtractor ex(random_bits(g, 2 * 4096 - 1), 4096, 4096);
  EXPECT_EQ(extract_bits(ex, raw).size(), 4096u * 5);
}

TEST(Stream, DimensionMismatch) {
  const auto p = plan(10.0, 12, 4096);
  const ToeplitzExtractor ex(BitString(100 + 4096 - 1), 100, 4096);
  EXPECT_THROW(extract_stream(ex, p, std::vector<std::int16_t>(10)), ValidationError);
}

#ifdef NDEBUG
TEST(Stream, Throughput) {
  std::mt19937_64 g(15);
  const auto raw = random_bits(g, 4096 * 12'000);  // ~49 Mbit
  const ToeplitzExtractor ex(random_bits(g, 3457 + 4096 - 1), 3457, 4096);
  const auto t0 = std::chrono::steady_clock::now();
  const auto out = extract_bits(ex, raw);
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const double mbps = static_cast<double>(raw.size()) / s / 1e6;
  RecordProperty("input_mbit_per_s", std::to_string(mbps));
  EXPECT_EQ(out.size(), 12'000u * 3457);
  EXPECT_GT(mbps, 50.0);
}
#endif
