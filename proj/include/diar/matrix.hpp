#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace diar {

// Dense row-major matrix of doubles. Deliberately minimal; the toolkit only
// needs storage plus element access at desk scale (a few thousand windows).
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c, double fill = 0.0)
      : rows(r), cols(c), data(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), fill) {
    if (r < 0 || c < 0) throw std::invalid_argument("Matrix: negative dimensions");
  }

  double& at(int i, int j) { return data[static_cast<std::size_t>(i) * cols + j]; }
  double at(int i, int j) const { return data[static_cast<std::size_t>(i) * cols + j]; }

  bool operator==(const Matrix& other) const = default;
};

}  // namespace diar
