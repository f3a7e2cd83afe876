#include "unidecon/isotonic.hpp"

#include <cstddef>

#include "unidecon/errors.hpp"

namespace unidecon {

std::vector<double> isotonic_regression(std::span<const double> y, std::span<const double> w) {
  if (y.size() != w.size()) throw DomainError("isotonic regression: size mismatch");
  struct Block {
    double sum_wy;
    double sum_w;
    std::size_t end;  // one past the last index
  };
  std::vector<Block> stack;
  stack.reserve(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!(w[i] > 0.0)) throw DomainError("isotonic regression: weights must be positive");
    stack.push_back({w[i] * y[i], w[i], i + 1});
    // Pool while the previous block's mean is >= the current one. Means are
    // compared by cross-multiplication to avoid rounding from division.
    while (stack.size() > 1) {
      const Block& cur = stack.back();
      const Block& prev = stack[stack.size() - 2];
      if (prev.sum_wy * cur.sum_w < cur.sum_wy * prev.sum_w) break;
      Block merged{prev.sum_wy + cur.sum_wy, prev.sum_w + cur.sum_w, cur.end};
      stack.pop_back();
      stack.back() = merged;
    }
  }
  std::vector<double> fit(y.size());
  std::size_t start = 0;
  for (const auto& b : stack) {
    const double mean = b.sum_wy / b.sum_w;
    for (std::size_t i = start; i < b.end; ++i) fit[i] = mean;
    start = b.end;
  }
  return fit;
}

}  // namespace unidecon
