#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "diar/embeddings.hpp"

namespace diar {

// Square pairwise-similarity matrix over embedding windows. Diagonal is zero
// by convention (no self-loop), which keeps the graph Laplacian's
// connected-components property intact.
struct AffinityMatrix {
  int n = 0;
  std::vector<double> values;  // row-major n*n

  AffinityMatrix() = default;
  explicit AffinityMatrix(int size)
      : n(size), values(static_cast<std::size_t>(size) * static_cast<std::size_t>(size), 0.0) {}

  double& at(int i, int j) { return values[static_cast<std::size_t>(i) * n + j]; }
  double at(int i, int j) const { return values[static_cast<std::size_t>(i) * n + j]; }

  bool operator==(const AffinityMatrix&) const = default;
};

// The menu of affinity manipulations applied before spectral clustering.
enum class AffinityVariant { pruned, binarized, normalized, boosted };

AffinityVariant affinity_variant_from_string(const std::string& name);
std::string to_string(AffinityVariant variant);

// Cosine similarity, clamped to [-1, 1] against rounding.
double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b);

// A[i][j] = cosine(v_i, v_j) for i != j; zero diagonal.
AffinityMatrix build_affinity(const std::vector<EmbeddingWindow>& windows);

// Keeps the ceil(keep_fraction*n) largest off-diagonal entries per row
// (ties keep the lower column index) and zeroes the rest. Result is
// generally asymmetric.
AffinityMatrix prune_rows(const AffinityMatrix& A, double keep_fraction);

// (A + A^T) / 2 with exact symmetry.
AffinityMatrix symmetrize(const AffinityMatrix& A);

// Nonzero entries become 1; zeros and the diagonal stay 0.
AffinityMatrix binarize(const AffinityMatrix& A);

// Divides each row by its row maximum when that maximum is positive.
AffinityMatrix row_normalize(const AffinityMatrix& A);

// Adds delta to every nonzero off-diagonal entry; preserves the zero pattern.
AffinityMatrix boost(const AffinityMatrix& A, double delta);

// Elementwise mean of equally sized matrices.
AffinityMatrix fuse(const std::vector<AffinityMatrix>& matrices);

// The canonical manipulation chain for one raw cosine matrix:
//   pruned:     prune -> symmetrize
//   binarized:  prune -> symmetrize -> binarize
//   normalized: prune -> row_normalize -> symmetrize
//   boosted:    prune -> symmetrize -> boost
// Every chain ends symmetric, as the Laplacian requires.
AffinityMatrix manipulate(const AffinityMatrix& raw, AffinityVariant variant, double keep_fraction,
                          double boost_delta);

}  // namespace diar
