#pragma once

#include <span>
#include <vector>

namespace unidecon {

// Weighted least-squares isotonic (nondecreasing) regression by pool
// adjacent violators. Equivalent to the left derivative of the greatest
// convex minorant of the cumulative sum diagram (W_k, sum_{j<=k} w_j y_j).
// Adjacent blocks with equal means are pooled, so each fitted value is
// (sum of w*y over its block) / (sum of w over its block), computed once.
std::vector<double> isotonic_regression(std::span<const double> y, std::span<const double> w);

}  // namespace unidecon
