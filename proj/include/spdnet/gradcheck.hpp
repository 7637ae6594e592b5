#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "spdnet/linalg.hpp"

namespace spdnet {

// Central differences of a scalar function of a matrix, one entry at a time.
Matrix numeric_gradient(const std::function<double(const Matrix&)>& f, const Matrix& x, double h);

// Central differences for a function of a symmetric matrix. Off-diagonal
// entries are perturbed in symmetric pairs and the derivative is split
// evenly between (i, j) and (j, i), matching the gradient convention of the
// backward passes.
Matrix numeric_gradient_symmetric(const std::function<double(const Matrix&)>& f,
                                  const Matrix& x, double h);

// |a - n|_2 / max(|a|_2, |n|_2, 1e-12)
double relative_error(const Matrix& analytic, const Matrix& numeric);

struct GradcheckOptions {
  std::uint64_t seed = 0;
  int instances = 20;
  double step = 1e-5;
  double threshold = 1e-4;
  std::string layer;     // empty: all layers
  bool corrupt = false;  // scale analytic gradients by 1.01 (negative control)
};

struct GradcheckRow {
  std::string layer;
  int instances = 0;
  double max_rel_error = 0.0;
  bool pass = false;
};

std::vector<std::string> gradcheck_layers();

/// Compares every layer's backward pass with central differences of the
/// probe loss <C, layer(x)> on seeded random instances (dims <= 6), plus the
/// whole network at toy scale. Throws InvalidInput for an unknown layer.
std::vector<GradcheckRow> run_gradcheck(const GradcheckOptions& opts);

}  // namespace spdnet
