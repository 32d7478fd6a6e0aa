#pragma once

#include <cstdint>
#include <vector>

#include "diar/affinity.hpp"
#include "diar/matrix.hpp"

namespace diar {

// Full eigensystem of a real symmetric matrix, eigenvalues ascending,
// eigenvector columns aligned with them and unit norm.
struct SpectralDecomposition {
  std::vector<double> eigenvalues;
  Matrix eigenvectors;
};

// Output of spectral clustering: estimated speaker count, one label per
// window, and per-cluster centroids in the original embedding space.
struct ClusterResult {
  int k = 0;
  std::vector<int> labels;
  std::vector<std::vector<double>> centroids;
};

struct KMeansResult {
  std::vector<int> labels;
  Matrix centroids;               // k x dims, in the clustered space
  double objective = 0.0;         // sum of squared distances
  std::vector<double> objective_trace;  // objective after each Lloyd iteration
};

// Unnormalized graph Laplacian L = D - W. W must be symmetric with a zero
// diagonal.
Matrix laplacian(const AffinityMatrix& W);

// Symmetric eigendecomposition via Householder tridiagonalization and
// implicit-shift QL iteration.
SpectralDecomposition eigendecompose(const Matrix& L);

// Eigenvalues only (ascending); skips eigenvector accumulation, which makes
// repeated speaker-count estimation much cheaper.
std::vector<double> symmetric_eigenvalues(const Matrix& L);

// Maximum-eigengap estimate of the cluster count: the 1-based index i in
// [min_k, min(max_k, n-1)] maximizing eigenvalues[i+1] - eigenvalues[i],
// ties toward smaller k. Returns 1 when fewer than two eigenvalues exist.
int estimate_k(const std::vector<double>& eigenvalues_ascending, int min_k, int max_k);

// Rows are the k-dimensional spectral embeddings: columns are the
// eigenvectors of the k smallest eigenvalues, rows not renormalized.
Matrix spectral_embeddings(const SpectralDecomposition& decomposition, int k);

// Single k-means run: k-means++ initialization from the seed, Lloyd updates
// until centroid movement < tol or max_iter, empty clusters repaired by
// stealing the point farthest from its centroid. Deterministic per seed.
KMeansResult kmeans(const Matrix& points, int k, std::uint64_t seed, int max_iter = 300,
                    double tol = 1e-8);

// Unit-normalized mean embedding per cluster. Throws std::logic_error on an
// empty cluster.
std::vector<std::vector<double>> compute_centroids(const std::vector<EmbeddingWindow>& windows,
                                                   const std::vector<int>& labels, int k);

// The full chain: laplacian -> eigendecompose -> estimate_k ->
// spectral_embeddings -> k-means (10 restarts, best objective, ties toward
// the lowest restart index). Centroids come from the original window vectors.
ClusterResult cluster(const AffinityMatrix& W, const std::vector<EmbeddingWindow>& windows,
                      int min_k, int max_k, std::uint64_t seed);

}  // namespace diar
