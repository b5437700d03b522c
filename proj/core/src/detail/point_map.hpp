#pragma once

#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>
#include <vector>

namespace flatten::detail {

/// Open-addressing accumulator from fixed-length integer keys to
/// (representative point, weight). Iteration order is insertion order.
class PointAccumulator {
 public:
  explicit PointAccumulator(std::size_t dim, std::size_t expected = 64) : dim_(dim) {
    std::size_t cap = 64;
    while (cap < 2 * expected) cap <<= 1;
    slots_.assign(cap, kEmpty);
  }

  std::size_t size() const noexcept { return weights_.size(); }
  std::size_t dim() const noexcept { return dim_; }

  /// Adds `w` to the entry for `key`; a new entry takes `point` as its
  /// representative.
  void add(std::span<const std::uint64_t> key, std::span<const double> point, double w) {
    if (2 * (weights_.size() + 1) > slots_.size()) grow();
    std::size_t s = hash(key) & (slots_.size() - 1);
    for (;;) {
      const std::uint32_t e = slots_[s];
      if (e == kEmpty) {
        slots_[s] = static_cast<std::uint32_t>(weights_.size());
        keys_.insert(keys_.end(), key.begin(), key.end());
        points_.insert(points_.end(), point.begin(), point.end());
        weights_.push_back(w);
        return;
      }
      if (std::memcmp(&keys_[e * dim_], key.data(), dim_ * sizeof(std::uint64_t)) == 0) {
        weights_[e] += w;
        return;
      }
      s = (s + 1) & (slots_.size() - 1);
    }
  }

  std::span<const std::uint64_t> key(std::size_t i) const noexcept { return {&keys_[i * dim_], dim_}; }
  std::span<const double> point(std::size_t i) const noexcept { return {&points_[i * dim_], dim_}; }
  double weight(std::size_t i) const noexcept { return weights_[i]; }

 private:
  static constexpr std::uint32_t kEmpty = 0xffffffffu;

  std::uint64_t hash(std::span<const std::uint64_t> key) const noexcept {
    std::uint64_t h = 0x9e3779b97f4a7c15ull;
    for (std::uint64_t k : key) {
      h ^= k + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
      h *= 0xbf58476d1ce4e5b9ull;
      h ^= h >> 31;
    }
    return h;
  }

  void grow() {
    std::vector<std::uint32_t> next(slots_.size() * 2, kEmpty);
    for (std::uint32_t e = 0; e < weights_.size(); ++e) {
      std::size_t s = hash(key(e)) & (next.size() - 1);
      while (next[s] != kEmpty) s = (s + 1) & (next.size() - 1);
      next[s] = e;
    }
    slots_ = std::move(next);
  }

  std::size_t dim_;
  std::vector<std::uint32_t> slots_;
  std::vector<std::uint64_t> keys_;
  std::vector<double> points_;
  std::vector<double> weights_;
};

inline std::uint64_t double_key(double x) noexcept {
  if (x == 0.0) x = 0.0;  // fold -0 into +0
  std::uint64_t k;
  std::memcpy(&k, &x, sizeof k);
  return k;
}

}  // namespace flatten::detail
