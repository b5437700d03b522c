#include "flatten/ifs.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <string>

#include "detail/cut_walk.hpp"
#include "flatten/error.hpp"
#include "flatten/numeric.hpp"

namespace flatten {

double WeightedIFS::max_abs_ratio() const noexcept {
  double r = 0.0;
  for (const auto& f : maps) r = std::max(r, std::fabs(f.lambda));
  return r;
}

double WeightedIFS::min_abs_ratio() const noexcept {
  double r = 1.0;
  for (const auto& f : maps) r = std::min(r, std::fabs(f.lambda));
  return r;
}

void validate(const WeightedIFS& ifs) {
  if (ifs.maps.size() < 2) {
    throw Error(ErrorCode::kDegenerateIFS, "an IFS needs at least two maps");
  }
  for (std::size_t i = 0; i < ifs.maps.size(); ++i) {
    const double l = ifs.maps[i].lambda;
    if (!std::isfinite(l) || !std::isfinite(ifs.maps[i].t) || !(std::fabs(l) > 0.0) || !(std::fabs(l) < 1.0)) {
      throw Error(ErrorCode::kNonContraction, "map " + std::to_string(i) + " has ratio " + format_double(l));
    }
  }
  if (ifs.weights.size() != ifs.maps.size()) {
    throw Error(ErrorCode::kBadWeights, "expected " + std::to_string(ifs.maps.size()) + " weights, got " +
                                            std::to_string(ifs.weights.size()));
  }
  CompensatedSum total;
  for (double w : ifs.weights) {
    if (!(w > 0.0) || !std::isfinite(w)) throw Error(ErrorCode::kBadWeights, "weights must be positive");
    total.add(w);
  }
  if (std::fabs(total.value() - 1.0) > kWeightSumTolerance) {
    throw Error(ErrorCode::kBadWeights, "weights sum to " + format_double(total.value()));
  }
  const double fp0 = ifs.maps[0].fixed_point();
  const bool all_equal = std::all_of(ifs.maps.begin(), ifs.maps.end(), [&](const AffineMap1D& f) {
    return std::fabs(f.fixed_point() - fp0) <= 1e-12 * (1.0 + std::fabs(fp0));
  });
  if (all_equal) throw Error(ErrorCode::kDegenerateIFS, "all maps share the fixed point " + format_double(fp0));
}

WeightedIFS make_ifs(std::vector<AffineMap1D> maps, std::vector<double> weights) {
  WeightedIFS ifs{std::move(maps), std::move(weights)};
  validate(ifs);
  return ifs;
}

WeightedIFS make_uniform_ifs(std::vector<AffineMap1D> maps) {
  std::vector<double> weights(maps.size(), maps.empty() ? 0.0 : 1.0 / static_cast<double>(maps.size()));
  return make_ifs(std::move(maps), std::move(weights));
}

ComposedWord compose(const WeightedIFS& ifs, const Word& word) {
  ComposedWord out;
  out.word = word;
  for (std::uint32_t j : word) {
    if (j >= ifs.size()) throw Error(ErrorCode::kInvalidArgument, "letter " + std::to_string(j) + " out of range");
    const AffineMap1D& f = ifs.maps[j];
    out.translation += out.ratio * f.t;
    out.ratio *= f.lambda;
    out.weight *= ifs.weights[j];
  }
  return out;
}

std::vector<ComposedWord> cut_set(const WeightedIFS& ifs, double tau, std::size_t max_words) {
  if (!(tau > 0.0 && tau < 1.0)) throw Error(ErrorCode::kTauOutOfRange, "tau = " + format_double(tau));
  std::vector<ComposedWord> out;
  detail::walk_cut_set(ifs, tau, max_words, [&](const detail::WalkState& s, const Word& w) {
    out.push_back({w, s.ratio, s.translation, s.weight});
  });
  return out;
}

std::vector<ComposedWord> words_of_length(const WeightedIFS& ifs, std::size_t depth, std::size_t max_words) {
  const auto n = static_cast<double>(ifs.size());
  if (std::pow(n, static_cast<double>(depth)) > static_cast<double>(max_words)) {
    throw Error(ErrorCode::kSizeOverflow, std::to_string(ifs.size()) + "^" + std::to_string(depth) +
                                              " words exceed the cap of " + std::to_string(max_words));
  }
  std::vector<ComposedWord> level{ComposedWord{}};
  for (std::size_t k = 0; k < depth; ++k) {
    std::vector<ComposedWord> next;
    next.reserve(level.size() * ifs.size());
    for (const auto& w : level) {
      for (std::uint32_t j = 0; j < ifs.size(); ++j) {
        ComposedWord c = w;
        c.word.push_back(j);
        c.translation += c.ratio * ifs.maps[j].t;
        c.ratio *= ifs.maps[j].lambda;
        c.weight *= ifs.weights[j];
        next.push_back(std::move(c));
      }
    }
    level = std::move(next);
  }
  return level;
}

std::vector<std::uint32_t> letter_counts(const Word& word, std::size_t alphabet) {
  std::vector<std::uint32_t> counts(alphabet, 0);
  for (std::uint32_t j : word) ++counts.at(j);
  return counts;
}

namespace {

double ratio_of_counts(const WeightedIFS& ifs, const std::vector<std::uint32_t>& counts) {
  double r = 1.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    for (std::uint32_t k = 0; k < counts[i]; ++k) r *= ifs.maps[i].lambda;
  }
  return r;
}

}  // namespace

std::vector<double> contraction_ratio_set(const std::vector<ComposedWord>& words, const WeightedIFS& ifs) {
  std::map<std::vector<std::uint32_t>, double> by_signature;
  for (const auto& w : words) {
    auto counts = letter_counts(w.word, ifs.size());
    by_signature.try_emplace(counts, 0.0);
  }
  std::vector<double> out;
  out.reserve(by_signature.size());
  for (const auto& [counts, unused] : by_signature) out.push_back(ratio_of_counts(ifs, counts));
  std::sort(out.begin(), out.end(), [](double a, double b) { return std::fabs(a) < std::fabs(b); });
  return out;
}

std::vector<std::vector<std::uint32_t>> cut_set_signatures(const WeightedIFS& ifs, double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw Error(ErrorCode::kTauOutOfRange, "tau = " + format_double(tau));
  const std::size_t n = ifs.size();
  // Every member has |lambda^c| >= tau * min|lambda|, which bounds the search.
  const double floor = tau * ifs.min_abs_ratio();
  std::vector<std::vector<std::uint32_t>> out;
  std::vector<std::uint32_t> counts(n, 0);

  auto accept = [&] {
    const double r = std::fabs(ratio_of_counts(ifs, counts));
    if (!(r < tau)) return false;
    for (std::size_t i = 0; i < n; ++i) {
      if (counts[i] == 0) continue;
      --counts[i];
      const double parent = std::fabs(ratio_of_counts(ifs, counts));
      ++counts[i];
      if (parent >= tau) return true;
    }
    return false;
  };

  auto recurse = [&](auto&& self, std::size_t letter, double partial) -> void {
    if (letter == n) {
      if (accept()) out.push_back(counts);
      return;
    }
    const double l = std::fabs(ifs.maps[letter].lambda);
    double r = partial;
    for (std::uint32_t c = 0;; ++c) {
      counts[letter] = c;
      self(self, letter + 1, r);
      r *= l;
      if (r < floor) break;
    }
    counts[letter] = 0;
  };
  recurse(recurse, 0, 1.0);
  return out;
}

std::size_t contraction_ratio_count(const WeightedIFS& ifs, double tau) {
  return cut_set_signatures(ifs, tau).size();
}

WeightedIFS iterate(const WeightedIFS& ifs, std::size_t m, std::size_t cap) {
  if (m == 0) throw Error(ErrorCode::kInvalidArgument, "iterate order must be at least 1");
  const auto words = words_of_length(ifs, m, cap);
  WeightedIFS out;
  out.maps.reserve(words.size());
  out.weights.reserve(words.size());
  for (const auto& w : words) {
    out.maps.push_back(w.map());
    out.weights.push_back(w.weight);
  }
  return out;
}

namespace {

Interval image(const AffineMap1D& f, const Interval& j) {
  const double a = f(j.lo);
  const double b = f(j.hi);
  return {std::min(a, b), std::max(a, b)};
}

bool invariant(const WeightedIFS& ifs, const Interval& j) {
  return std::all_of(ifs.maps.begin(), ifs.maps.end(), [&](const AffineMap1D& f) {
    const Interval im = image(f, j);
    return im.lo >= j.lo && im.hi <= j.hi;
  });
}

}  // namespace

Interval attractor_interval(const WeightedIFS& ifs) {
  Interval j{ifs.maps.front().fixed_point(), ifs.maps.front().fixed_point()};
  for (const auto& f : ifs.maps) {
    j.lo = std::min(j.lo, f.fixed_point());
    j.hi = std::max(j.hi, f.fixed_point());
  }
  // The hull map J -> hull(U f_i(J)) grows the fixed-point hull monotonically
  // to the attractor's hull.
  for (int iter = 0; iter < 4096 && !invariant(ifs, j); ++iter) {
    Interval next = j;
    for (const auto& f : ifs.maps) {
      const Interval im = image(f, j);
      next.lo = std::min(next.lo, im.lo);
      next.hi = std::max(next.hi, im.hi);
    }
    if (next.lo == j.lo && next.hi == j.hi) break;
    j = next;
  }
  // Rounding can stall just short of invariance; widen by ulps until it holds.
  double pad = 4.0 * std::numeric_limits<double>::epsilon() * std::max({1.0, std::fabs(j.lo), std::fabs(j.hi)});
  while (!invariant(ifs, j)) {
    j.lo -= pad;
    j.hi += pad;
    pad *= 2.0;
  }
  return j;
}

void write_ifs(std::ostream& os, const WeightedIFS& ifs) {
  for (std::size_t i = 0; i < ifs.size(); ++i) {
    os << format_double(ifs.maps[i].lambda) << ' ' << format_double(ifs.maps[i].t) << ' '
       << format_double(ifs.weights[i]) << '\n';
  }
}

WeightedIFS read_ifs(std::istream& is) {
  WeightedIFS ifs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream row(line);
    double l, t, w;
    if (!(row >> l >> t >> w)) {
      throw Error(ErrorCode::kParseError, "IFS line " + std::to_string(lineno) + ": expected 'lambda t weight'");
    }
    ifs.maps.push_back({l, t});
    ifs.weights.push_back(w);
  }
  validate(ifs);
  return ifs;
}

namespace systems {

WeightedIFS dyadic() { return make_ifs({{0.5, 0.0}, {0.5, 0.5}}, {0.5, 0.5}); }

WeightedIFS middle_thirds() { return make_ifs({{1.0 / 3.0, 0.0}, {1.0 / 3.0, 2.0 / 3.0}}, {0.5, 0.5}); }

}  // namespace systems

}  // namespace flatten
