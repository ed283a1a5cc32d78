#pragma once

#include <vector>

namespace tcindiff {

// Nodes and weights for E[f(Z)], Z standard normal.
struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Cached; thread-safe. n >= 2.
const GaussHermiteRule& gauss_hermite(int n);

}  // namespace tcindiff
