#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "flatten/error.hpp"
#include "flatten/ifs.hpp"

namespace flatten::detail {

struct WalkState {
  double ratio;
  double translation;
  double weight;
};

/// Depth-first walk of P_tau in letter order without storing words.
/// visit(state, word) is called for every cut-set word; `word` is only valid
/// during the call.
template <class Visit>
std::size_t walk_cut_set(const WeightedIFS& ifs, double tau, std::size_t max_words, Visit&& visit) {
  struct Frame {
    WalkState state;
    std::uint32_t next_letter;
  };
  const auto n = static_cast<std::uint32_t>(ifs.size());
  std::vector<Frame> stack;
  Word word;
  stack.push_back({{1.0, 0.0, 1.0}, 0});
  std::size_t emitted = 0;
  while (!stack.empty()) {
    Frame& top = stack.back();
    if (top.next_letter == n) {
      stack.pop_back();
      if (!word.empty()) word.pop_back();
      continue;
    }
    const std::uint32_t j = top.next_letter++;
    const AffineMap1D& f = ifs.maps[j];
    const WalkState child{top.state.ratio * f.lambda, top.state.translation + top.state.ratio * f.t,
                          top.state.weight * ifs.weights[j]};
    word.push_back(j);
    if (std::fabs(child.ratio) < tau) {
      if (++emitted > max_words) {
        throw Error(ErrorCode::kSizeOverflow, "cut-set exceeds " + std::to_string(max_words) + " words");
      }
      visit(child, static_cast<const Word&>(word));
      word.pop_back();
    } else {
      stack.push_back({child, 0});
    }
  }
  return emitted;
}

}  // namespace flatten::detail
