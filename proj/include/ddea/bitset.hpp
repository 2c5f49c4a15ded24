#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ddea {

/// Fixed-size bit vector backed by 64-bit words. Bit i corresponds to vertex i.
class Bitset {
 public:
  Bitset() = default;

  explicit Bitset(int n) : n_(n), words_((n + 63) / 64, 0) {
    if (n < 0) throw std::invalid_argument("Bitset: negative size");
  }

  int size() const { return n_; }
  int num_words() const { return static_cast<int>(words_.size()); }

  bool test(int i) const { return (words_[i >> 6] >> (i & 63)) & 1ULL; }
  void set(int i) { words_[i >> 6] |= 1ULL << (i & 63); }
  void reset(int i) { words_[i >> 6] &= ~(1ULL << (i & 63)); }
  void assign(int i, bool v) { v ? set(i) : reset(i); }

  void set_all() {
    for (auto& w : words_) w = ~0ULL;
    trim();
  }
  void clear() {
    for (auto& w : words_) w = 0;
  }

  int count() const {
    int c = 0;
    for (auto w : words_) c += std::popcount(w);
    return c;
  }

  bool any() const {
    for (auto w : words_) if (w) return true;
    return false;
  }
  bool none() const { return !any(); }

  std::span<const std::uint64_t> words() const { return words_; }
  std::span<std::uint64_t> words() { return words_; }

  /// true iff this and `other` share a set bit.
  bool intersects(std::span<const std::uint64_t> other) const {
    for (std::size_t k = 0; k < words_.size(); ++k)
      if (words_[k] & other[k]) return true;
    return false;
  }

  Bitset& operator&=(const Bitset& o) {
    for (std::size_t k = 0; k < words_.size(); ++k) words_[k] &= o.words_[k];
    return *this;
  }
  Bitset& operator|=(const Bitset& o) {
    for (std::size_t k = 0; k < words_.size(); ++k) words_[k] |= o.words_[k];
    return *this;
  }

  /// this &= ~mask
  void subtract(std::span<const std::uint64_t> mask) {
    for (std::size_t k = 0; k < words_.size(); ++k) words_[k] &= ~mask[k];
  }

  friend Bitset operator&(Bitset a, const Bitset& b) { return a &= b; }
  friend Bitset operator|(Bitset a, const Bitset& b) { return a |= b; }

  int hamming_distance(const Bitset& o) const {
    int d = 0;
    for (std::size_t k = 0; k < words_.size(); ++k)
      d += std::popcount(words_[k] ^ o.words_[k]);
    return d;
  }

  /// Calls f(i) for every set bit, in increasing order of i.
  template <typename F>
  void for_each(F&& f) const {
    for (std::size_t k = 0; k < words_.size(); ++k) {
      std::uint64_t w = words_[k];
      while (w) {
        int i = static_cast<int>(k << 6) + std::countr_zero(w);
        f(i);
        w &= w - 1;
      }
    }
  }

  friend bool operator==(const Bitset& a, const Bitset& b) = default;

  /// '0'/'1' characters, vertex 0 first.
  std::string to_string() const {
    std::string s(n_, '0');
    for (int i = 0; i < n_; ++i)
      if (test(i)) s[i] = '1';
    return s;
  }

  static Bitset from_string(const std::string& s) {
    Bitset b(static_cast<int>(s.size()));
    for (int i = 0; i < b.n_; ++i) {
      if (s[i] == '1')
        b.set(i);
      else if (s[i] != '0')
        throw std::invalid_argument("Bitset::from_string: expected '0' or '1'");
    }
    return b;
  }

  std::size_t hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (auto w : words_) {
      h ^= w;
      h *= 0x100000001b3ULL;
    }
    return static_cast<std::size_t>(h ^ static_cast<std::uint64_t>(n_));
  }

 private:
  void trim() {
    if (n_ & 63) words_.back() &= (1ULL << (n_ & 63)) - 1;
    if (n_ == 0 && !words_.empty()) words_.back() = 0;
  }

  int n_ = 0;
  std::vector<std::uint64_t> words_;
};

struct BitsetHash {
  std::size_t operator()(const Bitset& b) const { return b.hash(); }
};

}  // namespace ddea
