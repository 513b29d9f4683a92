#pragma once

#include <algorithm>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qrng/errors.hpp"

namespace qrng {

/// Packed bit string. Bit k lives in word k / 64 at bit position k % 64.
class BitString {
 public:
  BitString() = default;
  explicit BitString(std::size_t n, bool value = false)
      : words_((n + 63) / 64, value ? ~std::uint64_t{0} : 0), size_(n) {
    trim();
  }

  /// From a "0101..." string; other characters are rejected.
  static BitString from_string(const std::string& s) {
    BitString b(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      detail::require(s[i] == '0' || s[i] == '1', "BitString: expected only '0'/'1'");
      b.set(i, s[i] == '1');
    }
    return b;
  }

  static BitString from_bits(std::initializer_list<int> bits) {
    BitString b(bits.size());
    std::size_t i = 0;
    for (int v : bits) b.set(i++, v != 0);
    return b;
  }

  /// First `nbits` bits of `bytes`, most significant bit of each byte first.
  static BitString from_bytes_msb(std::span<const std::uint8_t> bytes, std::size_t nbits) {
    detail::require(nbits <= bytes.size() * 8, "BitString: not enough bytes");
    BitString b(nbits);
    for (std::size_t i = 0; i < nbits; ++i) b.set(i, (bytes[i / 8] >> (7 - i % 8)) & 1u);
    return b;
  }

  /// Packs bits MSB-first; a final partial byte is zero-padded.
  std::vector<std::uint8_t> to_bytes_msb() const {
    std::vector<std::uint8_t> out((size_ + 7) / 8, 0);
    for (std::size_t i = 0; i < size_; ++i)
      if (get(i)) out[i / 8] |= static_cast<std::uint8_t>(0x80u >> (i % 8));
    return out;
  }

  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }

  bool get(std::size_t i) const { return (words_[i >> 6] >> (i & 63)) & 1u; }
  bool operator[](std::size_t i) const { return get(i); }
  void set(std::size_t i, bool v) {
    const std::uint64_t mask = std::uint64_t{1} << (i & 63);
    if (v)
      words_[i >> 6] |= mask;
    else
      words_[i >> 6] &= ~mask;
  }
  void flip(std::size_t i) { words_[i >> 6] ^= std::uint64_t{1} << (i & 63); }

  void push_back(bool v) {
    if ((size_ & 63) == 0) words_.push_back(0);
    ++size_;
    set(size_ - 1, v);
  }

  /// Appends the low `width` bits of `value`, most significant first.
  void append_msb_first(std::uint64_t value, unsigned width) {
    std::uint64_t r = 0;
    for (unsigned k = 0; k < width; ++k) r |= ((value >> k) & 1u) << (width - 1 - k);
    append_lsb_first(r, width);
  }

  void append(const BitString& other) {
    if (other.empty()) return;
    const unsigned sh = size_ & 63;
    reserve(size_ + other.size_);
    if (sh == 0) {
      words_.insert(words_.end(), other.words_.begin(), other.words_.end());
    } else {
      for (auto w : other.words_) {
        words_.back() |= w << sh;
        words_.push_back(w >> (64 - sh));
      }
    }
    size_ += other.size_;
    words_.resize((size_ + 63) / 64);
    trim();
  }

  /// Appends the low `width` (<= 64) bits of `value`, least significant first.
  void append_lsb_first(std::uint64_t value, unsigned width) {
    if (width == 0) return;
    if (width < 64) value &= (std::uint64_t{1} << width) - 1;
    const unsigned sh = size_ & 63;
    if (sh == 0) {
      words_.push_back(value);
    } else {
      words_.back() |= value << sh;
      if (sh + width > 64) words_.push_back(value >> (64 - sh));
    }
    size_ += width;
  }

  void reserve(std::size_t nbits) { words_.reserve((nbits + 63) / 64); }

  void resize(std::size_t n) {
    words_.resize((n + 63) / 64, 0);
    size_ = n;
    trim();
  }

  /// Copies bits [start, start + 64 * out.size()) into out; bits past the end read as 0.
  void read_words(std::size_t start, std::span<std::uint64_t> out) const {
    const std::size_t w = start >> 6;
    const unsigned sh = start & 63;
    for (std::size_t k = 0; k < out.size(); ++k) {
      const std::uint64_t a = word_or_zero(w + k);
      out[k] = sh == 0 ? a : (a >> sh) | (word_or_zero(w + k + 1) << (64 - sh));
    }
  }

  BitString slice(std::size_t start, std::size_t len) const {
    detail::require(start + len <= size_, "BitString::slice out of range");
    BitString b(len);
    read_words(start, b.words_);
    b.trim();
    return b;
  }

  std::size_t count_ones() const {
    std::size_t c = 0;
    for (auto w : words_) c += static_cast<std::size_t>(std::popcount(w));
    return c;
  }

  std::span<const std::uint64_t> words() const { return words_; }
  std::span<std::uint64_t> words_mut() { return words_; }

  BitString& operator^=(const BitString& o) {
    detail::require(size_ == o.size_, "BitString: xor of different lengths");
    for (std::size_t k = 0; k < words_.size(); ++k) words_[k] ^= o.words_[k];
    return *this;
  }
  friend BitString operator^(BitString a, const BitString& b) { return a ^= b; }

  friend bool operator==(const BitString& a, const BitString& b) {
    return a.size_ == b.size_ && a.words_ == b.words_;
  }

  std::string to_string() const {
    std::string s(size_, '0');
    for (std::size_t i = 0; i < size_; ++i)
      if (get(i)) s[i] = '1';
    return s;
  }

  /// Clears storage bits past size(); keeps equality and popcount exact.
  void trim() {
    if (size_ & 63) words_.back() &= (std::uint64_t{1} << (size_ & 63)) - 1;
  }

 private:
  std::uint64_t word_or_zero(std::size_t k) const { return k < words_.size() ? words_[k] : 0; }

  std::vector<std::uint64_t> words_;
  std::size_t size_ = 0;
};

}  // namespace qrng
