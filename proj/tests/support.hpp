#pragma once

#include <cmath>
#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include "flatten/ifs.hpp"
#include "flatten/measures.hpp"

namespace flatten::fixtures {

/// Random valid IFS with n maps, |lambda| in [lo, hi], translations in [0, 1].
inline WeightedIFS random_ifs(std::mt19937_64& rng, std::size_t n, double lo = 0.2, double hi = 0.6,
                              bool allow_negative = true) {
  std::uniform_real_distribution<double> ratio(lo, hi), shift(0.0, 1.0), weight(0.5, 1.5);
  for (;;) {
    std::vector<AffineMap1D> maps;
    std::vector<double> w;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double l = ratio(rng);
      if (allow_negative && (rng() & 1)) l = -l;
      maps.push_back({l, shift(rng)});
      w.push_back(weight(rng));
      total += w.back();
    }
    for (double& x : w) x /= total;
    // Renormalizing can leave the sum an ulp or two off 1; fold it into w[0].
    double s = 0.0;
    for (std::size_t i = 1; i < n; ++i) s += w[i];
    w[0] = 1.0 - s;
    try {
      return make_ifs(maps, w);
    } catch (...) {
    }
  }
}

inline WeightedIFS two_ratio_ifs() { return make_ifs({{0.5, 0.0}, {1.0 / 3.0, 2.0 / 3.0}}, {0.5, 0.5}); }

inline DiscreteMeasure uniform_line(std::vector<double> xs) {
  std::vector<double> w(xs.size(), 1.0 / static_cast<double>(xs.size()));
  return DiscreteMeasure(1, std::move(xs), std::move(w));
}

// Every word up to max_len whose ratio first drops below tau.
inline std::vector<Word> brute_force_cut(const WeightedIFS& ifs, double tau, std::size_t max_len) {
  std::vector<Word> out;
  std::vector<Word> frontier = {{}};
  for (std::size_t len = 0; len < max_len && !frontier.empty(); ++len) {
    std::vector<Word> next;
    for (const auto& w : frontier) {
      for (std::uint32_t j = 0; j < ifs.size(); ++j) {
        Word v = w;
        v.push_back(j);
        const ComposedWord c = compose(ifs, v);
        if (std::fabs(c.ratio) < tau) {
          out.push_back(v);
        } else {
          next.push_back(v);
        }
      }
    }
    frontier = std::move(next);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace flatten::fixtures
