#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace flatten {

/// x -> lambda * x + t with 0 < |lambda| < 1.
struct AffineMap1D {
  double lambda = 1.0;
  double t = 0.0;

  double operator()(double x) const noexcept { return lambda * x + t; }
  double fixed_point() const noexcept { return t / (1.0 - lambda); }
};

/// Weighted self-similar IFS on the line: maps f_i with probability vector p.
struct WeightedIFS {
  std::vector<AffineMap1D> maps;
  std::vector<double> weights;

  std::size_t size() const noexcept { return maps.size(); }
  double max_abs_ratio() const noexcept;
  double min_abs_ratio() const noexcept;
};

/// Finite word over the IFS alphabet; letters index into WeightedIFS::maps.
using Word = std::vector<std::uint32_t>;

/// A word together with its composed map f_w = f_{w_1} o ... o f_{w_k}
/// (ratio lambda_w, translation t_w = f_w(0)) and weight p_w.
struct ComposedWord {
  Word word;
  double ratio = 1.0;
  double translation = 0.0;
  double weight = 1.0;

  AffineMap1D map() const noexcept { return {ratio, translation}; }
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double length() const noexcept { return hi - lo; }
  bool contains(double x) const noexcept { return lo <= x && x <= hi; }
};

inline constexpr double kWeightSumTolerance = 1e-12;
inline constexpr std::size_t kDefaultIterateCap = 1'000'000;
inline constexpr std::size_t kDefaultCutSetCap = 20'000'000;

/// Throws Error (kNonContraction, kBadWeights, kDegenerateIFS) unless the IFS
/// satisfies the standing assumptions.
void validate(const WeightedIFS& ifs);

WeightedIFS make_ifs(std::vector<AffineMap1D> maps, std::vector<double> weights);

/// Uniform-weight IFS from ratio/translation pairs.
WeightedIFS make_uniform_ifs(std::vector<AffineMap1D> maps);

ComposedWord compose(const WeightedIFS& ifs, const Word& word);

/// Cut-set P_tau: words whose ratio first drops strictly below tau.
/// Depth-first in letter order, so the output is lexicographically sorted.
std::vector<ComposedWord> cut_set(const WeightedIFS& ifs, double tau,
                                  std::size_t max_words = kDefaultCutSetCap);

/// All n^depth words of length `depth`, lexicographic.
std::vector<ComposedWord> words_of_length(const WeightedIFS& ifs, std::size_t depth,
                                          std::size_t max_words = kDefaultCutSetCap);

/// Letter-count vector of a word; the contraction ratio depends only on this.
std::vector<std::uint32_t> letter_counts(const Word& word, std::size_t alphabet);

/// Lambda_tau = { lambda_w : w in words }, deduplicated by letter multiset.
/// Sorted by increasing absolute value.
std::vector<double> contraction_ratio_set(const std::vector<ComposedWord>& words,
                                          const WeightedIFS& ifs);

/// Letter multisets occurring in P_tau, enumerated without expanding words:
/// a count vector c belongs iff |lambda^c| < tau and |lambda^(c - e_i)| >= tau
/// for some letter i with c_i > 0.
std::vector<std::vector<std::uint32_t>> cut_set_signatures(const WeightedIFS& ifs, double tau);

/// #Lambda_tau computed from cut_set_signatures (same set as
/// contraction_ratio_set(cut_set(ifs, tau), ifs), without the word expansion).
std::size_t contraction_ratio_count(const WeightedIFS& ifs, double tau);

/// Phi^m: all n^m compositions of length m with product weights.
WeightedIFS iterate(const WeightedIFS& ifs, std::size_t m, std::size_t cap = kDefaultIterateCap);

/// A compact interval mapped into itself by every f_i.
Interval attractor_interval(const WeightedIFS& ifs);

/// Text form: one "lambda t weight" line per map, 17 significant digits.
void write_ifs(std::ostream& os, const WeightedIFS& ifs);
WeightedIFS read_ifs(std::istream& is);

/// Common test systems.
namespace systems {
WeightedIFS dyadic();           // {x/2, x/2 + 1/2}, uniform; natural measure is Lebesgue on [0,1]
WeightedIFS middle_thirds();    // {x/3, x/3 + 2/3}, uniform; Cantor measure
}  // namespace systems

}  // namespace flatten
