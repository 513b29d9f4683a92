#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <thread>
#include <vector>

#if defined(__PCLMUL__)
#include <wmmintrin.h>
#endif

#include "qrng/adc.hpp"
#include "qrng/bits.hpp"
#include "qrng/errors.hpp"

// Seeded Toeplitz hashing over GF(2).
//
// An m x n Toeplitz matrix is fixed by m + n - 1 seed bits through its
// diagonals: T[i][j] = d[i - j] with d[k] = seed[k + n - 1]. Then
//   y_i = sum_j seed[i + n - 1 - j] x_j,
// which is coefficient i + n - 1 of the polynomial product seed(z) * x(z).
// The fast path computes that window of the product with carry-less
// multiplication on 64-bit words.

namespace qrng {

namespace detail {

struct Clmul128 {
  std::uint64_t lo;
  std::uint64_t hi;
};

inline Clmul128 clmul64_portable(std::uint64_t a, std::uint64_t b) {
  std::uint64_t lo = 0, hi = 0;
  for (unsigned i = 0; i < 64; ++i) {
    const std::uint64_t mask = 0 - ((b >> i) & 1u);
    lo ^= (a << i) & mask;
    if (i) hi ^= (a >> (64 - i)) & mask;
  }
  return {lo, hi};
}

inline Clmul128 clmul64(std::uint64_t a, std::uint64_t b) {
#if defined(__PCLMUL__)
  const __m128i r = _mm_clmulepi64_si128(_mm_cvtsi64_si128(static_cast<long long>(a)),
                                         _mm_cvtsi64_si128(static_cast<long long>(b)), 0x00);
  return {static_cast<std::uint64_t>(_mm_cvtsi128_si64(r)),
          static_cast<std::uint64_t>(_mm_cvtsi128_si64(_mm_unpackhi_epi64(r, r)))};
#else
  return clmul64_portable(a, b);
#endif
}

constexpr bool hardware_clmul() {
#if defined(__PCLMUL__)
  return true;
#else
  return false;
#endif
}

}  // namespace detail

class ToeplitzExtractor {
 public:
  /// m output bits per block from n input bits; seed must hold exactly m + n - 1 bits.
  ToeplitzExtractor(BitString seed, std::size_t m, std::size_t n) : seed_(std::move(seed)), m_(m), n_(n) {
    detail::require(m >= 1 && n >= 1, "Toeplitz: dimensions must be >= 1");
    detail::require(m <= n, "Toeplitz: output length m must not exceed input length n");
    detail::require(seed_.size() == m + n - 1, "Toeplitz: seed must have exactly m + n - 1 bits");
    in_words_ = (n_ + 63) / 64;
    first_word_ = (n_ - 1) / 64;
    last_word_ = (n_ + m_ - 2) / 64;
  }

  std::size_t output_bits() const { return m_; }
  std::size_t input_bits() const { return n_; }
  const BitString& seed() const { return seed_; }

  /// Matrix entry T[i][j].
  bool entry(std::size_t i, std::size_t j) const { return seed_.get(i + n_ - 1 - j); }

  BitString extract_block(const BitString& input) const {
    detail::require(input.size() == n_, "Toeplitz: input block must have exactly n bits");
    BitString out(m_);
    extract_words(input.words(), out.words_mut());
    out.trim();
    return out;
  }

  /// Hashes one block given as ceil(n/64) words (bits past n must be zero)
  /// into ceil(m/64) output words.
  void extract_words(std::span<const std::uint64_t> in, std::span<std::uint64_t> out) const {
    const auto seed = seed_.words();
    const std::size_t span_words = last_word_ - first_word_ + 1;
    // acc[w - first_word_] holds product word w for w in [first_word_, last_word_ + 1].
    std::uint64_t acc_small[80];
    std::vector<std::uint64_t> acc_big;
    std::uint64_t* acc = acc_small;
    if (span_words + 1 > std::size(acc_small)) {
      acc_big.assign(span_words + 1, 0);
      acc = acc_big.data();
    } else {
      std::fill_n(acc, span_words + 1, 0);
    }

    for (std::size_t q = 0; q < in_words_; ++q) {
      const std::uint64_t x = in[q];
      if (!x) continue;
      // Only p with p + q in [first_word_ - 1, last_word_] reach the output window.
      const std::size_t p_begin = first_word_ >= q + 1 ? first_word_ - q - 1 : 0;
      const std::size_t p_end = last_word_ >= q ? std::min(seed.size(), last_word_ - q + 1) : 0;
      for (std::size_t p = p_begin; p < p_end; ++p) {
        const auto r = detail::clmul64(seed[p], x);
        const std::size_t s = p + q;
        if (s >= first_word_) acc[s - first_word_] ^= r.lo;
        if (s + 1 >= first_word_ && s + 1 <= last_word_ + 1) acc[s + 1 - first_word_] ^= r.hi;
      }
    }

    // Output bit i is product coefficient n - 1 + i.
    const unsigned sh = (n_ - 1) & 63;
    const std::size_t out_words = (m_ + 63) / 64;
    for (std::size_t k = 0; k < out_words; ++k) {
      const std::uint64_t a = acc[k];
      const std::uint64_t b = k + 1 <= span_words ? acc[k + 1] : 0;
      out[k] = sh == 0 ? a : (a >> sh) | (b << (64 - sh));
    }
    if (m_ & 63) out[out_words - 1] &= (std::uint64_t{1} << (m_ & 63)) - 1;
  }

 private:
  BitString seed_;
  std::size_t m_;
  std::size_t n_;
  std::size_t in_words_ = 0;
  std::size_t first_word_ = 0;
  std::size_t last_word_ = 0;
};

/// Block dimensions and the entropy bound they must respect.
struct ExtractionPlan {
  std::size_t m = 0;  // output bits per block
  std::size_t n = 0;  // input bits per block
  int bits_per_sample = 0;
  double h_min = 0.0;
  double ratio = 0.0;           // m / n
  double entropy_bound = 0.0;   // h_min / bits_per_sample, bits per raw bit
  bool over_bound = false;      // set only when explicitly overridden

  std::size_t seed_bits() const { return m + n - 1; }
};

/// Largest m with m / n <= h_min / bits_per_sample.
inline ExtractionPlan plan(double h_min, int bits_per_sample, std::size_t target_n) {
  detail::require(bits_per_sample >= AdcConfig::min_bits && bits_per_sample <= AdcConfig::max_bits,
                  "plan: bits_per_sample out of range");
  detail::require(target_n >= 1, "plan: block length must be >= 1");
  detail::require_domain(h_min > 0.0, "plan: no extractable randomness (h_min = 0)");
  detail::require(h_min <= bits_per_sample, "plan: h_min exceeds bits per sample");

  ExtractionPlan p;
  p.n = target_n;
  p.bits_per_sample = bits_per_sample;
  p.h_min = h_min;
  p.entropy_bound = h_min / bits_per_sample;
  auto m = static_cast<std::size_t>(std::floor(static_cast<double>(target_n) * h_min / bits_per_sample));
  m = std::min(m, target_n);
  while (m > 0 && static_cast<double>(m) * bits_per_sample > static_cast<double>(target_n) * h_min) --m;
  detail::require_domain(m >= 1, "plan: block too short to extract a single bit");
  p.m = m;
  p.ratio = static_cast<double>(m) / static_cast<double>(target_n);
  return p;
}

/// Plan with caller-chosen dimensions. Exceeding the entropy bound is a
/// ValidationError unless `allow_over_bound` is set.
inline ExtractionPlan explicit_plan(std::size_t m, std::size_t n, double h_min, int bits_per_sample,
                                    bool allow_over_bound = false) {
  detail::require(m >= 1 && m <= n, "explicit_plan: need 1 <= m <= n");
  detail::require(bits_per_sample >= AdcConfig::min_bits && bits_per_sample <= AdcConfig::max_bits,
                  "explicit_plan: bits_per_sample out of range");
  detail::require(h_min >= 0.0 && h_min <= bits_per_sample, "explicit_plan: h_min out of range");
  ExtractionPlan p;
  p.m = m;
  p.n = n;
  p.bits_per_sample = bits_per_sample;
  p.h_min = h_min;
  p.entropy_bound = h_min / bits_per_sample;
  p.ratio = static_cast<double>(m) / static_cast<double>(n);
  p.over_bound = static_cast<double>(m) * bits_per_sample > static_cast<double>(n) * h_min;
  detail::require(!p.over_bound || allow_over_bound,
                  "extraction ratio m/n exceeds the min-entropy bound h_min/bits");
  return p;
}

/// Offset-binary serialisation: each sample becomes (index - i_L) as an
/// unsigned `bits`-wide word, most significant bit first.
inline BitString serialize_samples(std::span<const std::int16_t> samples, int bits) {
  detail::require(bits >= AdcConfig::min_bits && bits <= 16, "serialize_samples: bits must be in [2, 16]");
  const std::int32_t low = -(std::int32_t{1} << (bits - 1));
  const std::int32_t high = (std::int32_t{1} << (bits - 1)) - 1;
  BitString out;
  out.reserve(samples.size() * static_cast<std::size_t>(bits));
  for (auto s : samples) {
    detail::require(s >= low && s <= high, "serialize_samples: sample outside the ADC bit depth");
    out.append_msb_first(static_cast<std::uint64_t>(s - low), static_cast<unsigned>(bits));
  }
  return out;
}

/// Hashes consecutive n-bit blocks of `raw` into m-bit outputs, in input
/// order. The trailing partial block is discarded.
inline BitString extract_bits(const ToeplitzExtractor& ex, const BitString& raw, unsigned threads = 1) {
  const std::size_t n = ex.input_bits();
  const std::size_t m = ex.output_bits();
  const std::size_t blocks = raw.size() / n;
  const std::size_t in_words = (n + 63) / 64;
  const std::size_t out_words = (m + 63) / 64;

  auto run = [&](std::size_t b0, std::size_t b1) {
    BitString part;
    part.reserve((b1 - b0) * m);
    std::vector<std::uint64_t> in(in_words), out(out_words);
    BitString block_out(m);
    for (std::size_t b = b0; b < b1; ++b) {
      raw.read_words(b * n, in);
      if (n & 63) in.back() &= (std::uint64_t{1} << (n & 63)) - 1;
      ex.extract_words(in, block_out.words_mut());
      part.append(block_out);
    }
    return part;
  };

  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(blocks, 1))));
  if (threads == 1) return run(0, blocks);

  std::vector<BitString> parts(threads);
  {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (blocks + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
      const std::size_t b0 = std::min(blocks, t * chunk);
      const std::size_t b1 = std::min(blocks, b0 + chunk);
      pool.emplace_back([&, t, b0, b1] { parts[t] = run(b0, b1); });
    }
  }
  BitString out;
  out.reserve(blocks * m);
  for (const auto& p : parts) out.append(p);
  return out;
}

/// Serialises samples and hashes them per `p`. `ex` must match the plan's dimensions.
inline BitString extract_stream(const ToeplitzExtractor& ex, const ExtractionPlan& p,
                                std::span<const std::int16_t> samples, unsigned threads = 1) {
  detail::require(ex.output_bits() == p.m && ex.input_bits() == p.n,
                  "extract_stream: extractor dimensions do not match the plan");
  return extract_bits(ex, serialize_samples(samples, p.bits_per_sample), threads);
}

}  // namespace qrng
