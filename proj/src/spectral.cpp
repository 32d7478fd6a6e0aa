#include "diar/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "diar/rng.hpp"

namespace diar {

namespace {

void check_symmetric_input(const Matrix& M) {
  if (M.rows != M.cols || M.rows < 1) throw std::invalid_argument("matrix must be square");
  for (int i = 0; i < M.rows; ++i)
    for (int j = 0; j < M.cols; ++j) {
      if (!std::isfinite(M.at(i, j))) throw std::invalid_argument("matrix has non-finite entry");
      if (M.at(i, j) != M.at(j, i)) throw std::invalid_argument("matrix is not symmetric");
    }
}

// Householder reduction of the symmetric matrix stored in V to tridiagonal
// form (d = diagonal, e = subdiagonal). EISPACK tred2 lineage. The reduction
// leaves each step's Householder vector in the upper triangle (column i,
// rows < i) and zeroes the strict lower triangle; when q_transposed is given
// it receives the accumulated transform with EIGENVECTORS AS ROWS, built with
// contiguous row arithmetic.
void householder_tridiagonalize(Matrix& V, std::vector<double>& d, std::vector<double>& e,
                                Matrix* q_transposed) {
  const int n = V.rows;
  for (int j = 0; j < n; ++j) d[j] = V.at(n - 1, j);

  for (int i = n - 1; i > 0; --i) {
    double scale = 0.0;
    double h = 0.0;
    for (int k = 0; k < i; ++k) scale += std::abs(d[k]);
    if (scale == 0.0) {
      e[i] = d[i - 1];
      for (int j = 0; j < i; ++j) {
        d[j] = V.at(i - 1, j);
        V.at(i, j) = 0.0;
        V.at(j, i) = 0.0;
      }
    } else {
      for (int k = 0; k < i; ++k) {
        d[k] /= scale;
        h += d[k] * d[k];
      }
      double f = d[i - 1];
      double g = std::sqrt(h);
      if (f > 0.0) g = -g;
      e[i] = scale * g;
      h -= f * g;
      d[i - 1] = f - g;
      for (int j = 0; j < i; ++j) e[j] = 0.0;

      for (int j = 0; j < i; ++j) {
        f = d[j];
        V.at(j, i) = f;
        g = e[j] + V.at(j, j) * f;
        for (int k = j + 1; k <= i - 1; ++k) {
          g += V.at(k, j) * d[k];
          e[k] += V.at(k, j) * f;
        }
        e[j] = g;
      }
      f = 0.0;
      for (int j = 0; j < i; ++j) {
        e[j] /= h;
        f += e[j] * d[j];
      }
      const double hh = f / (h + h);
      for (int j = 0; j < i; ++j) e[j] -= hh * d[j];
      for (int j = 0; j < i; ++j) {
        f = d[j];
        g = e[j];
        for (int k = j; k <= i - 1; ++k) V.at(k, j) -= f * e[k] + g * d[k];
        d[j] = V.at(i - 1, j);
        V.at(i, j) = 0.0;
      }
    }
    d[i] = h;
  }

  // d currently holds the per-step Householder h values; the tridiagonal
  // diagonal sits on the reduced matrix's diagonal.
  if (q_transposed != nullptr) {
    Matrix& QT = *q_transposed;
    QT = Matrix(n, n);
    for (int i = 0; i < n; ++i) QT.at(i, i) = 1.0;
    std::vector<double> v(n), w(n);
    for (int i = 0; i < n - 1; ++i) {
      const double h = d[i + 1];
      if (h == 0.0) continue;
      for (int k = 0; k <= i; ++k) {
        v[k] = V.at(k, i + 1);
        w[k] = v[k] / h;
      }
      // QT row a accumulates Q column a: apply I - v*v^T/h on the right.
      for (int a = 0; a <= i; ++a) {
        double* row = &QT.data[static_cast<std::size_t>(a) * n];
        double t = 0.0;
        for (int b = 0; b <= i; ++b) t += row[b] * v[b];
        for (int b = 0; b <= i; ++b) row[b] -= t * w[b];
      }
    }
  }
  for (int j = 0; j < n; ++j) d[j] = V.at(j, j);
  e[0] = 0.0;
}

// Implicit-shift QL iteration on the tridiagonal (d, e). q_transposed, when
// given, carries eigenvector candidates as rows; each Givens rotation then
// streams two contiguous rows instead of striding down two columns. Ends
// with d ascending and rows reordered to match.
void ql_implicit_shift(std::vector<double>& d, std::vector<double>& e, Matrix* q_transposed) {
  const int n = static_cast<int>(d.size());
  for (int i = 1; i < n; ++i) e[i - 1] = e[i];
  e[n - 1] = 0.0;

  double f = 0.0;
  double tst1 = 0.0;
  const double eps = std::numeric_limits<double>::epsilon();
  for (int l = 0; l < n; ++l) {
    tst1 = std::max(tst1, std::abs(d[l]) + std::abs(e[l]));
    int m = l;
    while (m < n && std::abs(e[m]) > eps * tst1) ++m;
    if (m > l) {
      int iter = 0;
      do {
        if (++iter > 100) throw std::runtime_error("eigendecompose: QL failed to converge");
        double g = d[l];
        double p = (d[l + 1] - g) / (2.0 * e[l]);
        double r = std::hypot(p, 1.0);
        if (p < 0.0) r = -r;
        d[l] = e[l] / (p + r);
        d[l + 1] = e[l] * (p + r);
        const double dl1 = d[l + 1];
        double h = g - d[l];
        for (int i = l + 2; i < n; ++i) d[i] -= h;
        f += h;

        p = d[m];
        double c = 1.0, c2 = c, c3 = c;
        const double el1 = e[l + 1];
        double s = 0.0, s2 = 0.0;
        for (int i = m - 1; i >= l; --i) {
          c3 = c2;
          c2 = c;
          s2 = s;
          g = c * e[i];
          h = c * p;
          r = std::hypot(p, e[i]);
          e[i + 1] = s * r;
          s = e[i] / r;
          c = p / r;
          p = c * d[i] - s * g;
          d[i + 1] = h + s * (c * g + s * d[i]);
          if (q_transposed != nullptr) {
            double* lo = &q_transposed->data[static_cast<std::size_t>(i) * n];
            double* hi = &q_transposed->data[static_cast<std::size_t>(i + 1) * n];
            for (int k = 0; k < n; ++k) {
              const double t = hi[k];
              hi[k] = s * lo[k] + c * t;
              lo[k] = c * lo[k] - s * t;
            }
          }
        }
        p = -s * s2 * c3 * el1 * e[l] / dl1;
        e[l] = s * p;
        d[l] = c * p;
      } while (std::abs(e[l]) > eps * tst1);
    }
    d[l] += f;
    e[l] = 0.0;
  }

  // Selection sort into ascending order, moving vectors along.
  for (int i = 0; i < n - 1; ++i) {
    int k = i;
    double p = d[i];
    for (int j = i + 1; j < n; ++j) {
      if (d[j] < p) {
        k = j;
        p = d[j];
      }
    }
    if (k != i) {
      d[k] = d[i];
      d[i] = p;
      if (q_transposed != nullptr)
        std::swap_ranges(q_transposed->data.begin() + static_cast<std::ptrdiff_t>(i) * n,
                         q_transposed->data.begin() + static_cast<std::ptrdiff_t>(i + 1) * n,
                         q_transposed->data.begin() + static_cast<std::ptrdiff_t>(k) * n);
    }
  }
}

double squared_distance(const Matrix& points, int row, const std::vector<double>& center) {
  double acc = 0.0;
  for (int j = 0; j < points.cols; ++j) {
    const double diff = points.at(row, j) - center[j];
    acc += diff * diff;
  }
  return acc;
}

}  // namespace

Matrix laplacian(const AffinityMatrix& W) {
  if (W.n < 1) throw std::invalid_argument("laplacian: empty matrix");
  for (int i = 0; i < W.n; ++i) {
    if (W.at(i, i) != 0.0) throw std::invalid_argument("laplacian: nonzero diagonal");
    for (int j = i + 1; j < W.n; ++j)
      if (W.at(i, j) != W.at(j, i)) throw std::invalid_argument("laplacian: asymmetric input");
  }
  Matrix L(W.n, W.n);
  for (int i = 0; i < W.n; ++i) {
    double degree = 0.0;
    for (int j = 0; j < W.n; ++j) {
      degree += W.at(i, j);
      L.at(i, j) = -W.at(i, j);
    }
    L.at(i, i) = degree;
  }
  return L;
}

SpectralDecomposition eigendecompose(const Matrix& L) {
  check_symmetric_input(L);
  const int n = L.rows;
  Matrix scratch = L;
  Matrix q_transposed;
  SpectralDecomposition out;
  out.eigenvalues.assign(n, 0.0);
  std::vector<double> e(n, 0.0);
  householder_tridiagonalize(scratch, out.eigenvalues, e, &q_transposed);
  ql_implicit_shift(out.eigenvalues, e, &q_transposed);
  out.eigenvectors = Matrix(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out.eigenvectors.at(i, j) = q_transposed.at(j, i);
  return out;
}

std::vector<double> symmetric_eigenvalues(const Matrix& L) {
  check_symmetric_input(L);
  const int n = L.rows;
  Matrix scratch = L;
  std::vector<double> d(n, 0.0), e(n, 0.0);
  householder_tridiagonalize(scratch, d, e, nullptr);
  ql_implicit_shift(d, e, nullptr);
  return d;
}

int estimate_k(const std::vector<double>& eigenvalues_ascending, int min_k, int max_k) {
  if (min_k < 1 || max_k < min_k) throw std::invalid_argument("estimate_k: bad k range");
  const int n = static_cast<int>(eigenvalues_ascending.size());
  if (n < 2) return 1;

  const int hi = std::min(max_k, n - 1);
  if (hi < min_k) return min_k;
  int best = min_k;
  double best_gap = -std::numeric_limits<double>::infinity();
  for (int i = min_k; i <= hi; ++i) {
    // 1-based eigenvalue indexing: gap between the i-th and (i+1)-th value.
    const double gap = eigenvalues_ascending[i] - eigenvalues_ascending[i - 1];
    if (gap > best_gap) {
      best_gap = gap;
      best = i;
    }
  }
  return best;
}

Matrix spectral_embeddings(const SpectralDecomposition& decomposition, int k) {
  const int n = static_cast<int>(decomposition.eigenvalues.size());
  if (k < 1 || k > n) throw std::invalid_argument("spectral_embeddings: k out of range");
  Matrix out(n, k);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < k; ++j) out.at(i, j) = decomposition.eigenvectors.at(i, j);
  return out;
}

KMeansResult kmeans(const Matrix& points, int k, std::uint64_t seed, int max_iter, double tol) {
  const int n = points.rows;
  const int dims = points.cols;
  if (k < 1) throw std::invalid_argument("kmeans: k must be >= 1");
  if (n < k) throw std::invalid_argument("kmeans: fewer points than clusters");

  Rng rng(seed);
  std::vector<std::vector<double>> centers;
  centers.reserve(k);

  // k-means++ seeding: first center uniform, then proportional to squared
  // distance from the nearest chosen center.
  {
    const int first = rng.uniform_int(0, n - 1);
    centers.emplace_back(points.data.begin() + static_cast<std::ptrdiff_t>(first) * dims,
                         points.data.begin() + static_cast<std::ptrdiff_t>(first + 1) * dims);
    std::vector<double> min_d2(n);
    for (int i = 0; i < n; ++i) min_d2[i] = squared_distance(points, i, centers[0]);
    while (static_cast<int>(centers.size()) < k) {
      double total = 0.0;
      for (double v : min_d2) total += v;
      int chosen;
      if (total > 0.0) {
        const double target = rng.uniform() * total;
        double acc = 0.0;
        chosen = n - 1;
        for (int i = 0; i < n; ++i) {
          acc += min_d2[i];
          if (acc > target) {
            chosen = i;
            break;
          }
        }
      } else {
        chosen = rng.uniform_int(0, n - 1);  // all points coincide with centers
      }
      centers.emplace_back(points.data.begin() + static_cast<std::ptrdiff_t>(chosen) * dims,
                           points.data.begin() + static_cast<std::ptrdiff_t>(chosen + 1) * dims);
      for (int i = 0; i < n; ++i)
        min_d2[i] = std::min(min_d2[i], squared_distance(points, i, centers.back()));
    }
  }

  KMeansResult result;
  result.labels.assign(n, 0);
  std::vector<int> counts(k, 0);

  for (int iter = 0; iter < max_iter; ++iter) {
    // Assignment step; ties go to the lower cluster index.
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double best_d2 = squared_distance(points, i, centers[0]);
      for (int c = 1; c < k; ++c) {
        const double d2 = squared_distance(points, i, centers[c]);
        if (d2 < best_d2) {
          best_d2 = d2;
          best = c;
        }
      }
      result.labels[i] = best;
    }

    std::fill(counts.begin(), counts.end(), 0);
    for (int label : result.labels) ++counts[label];

    // Empty-cluster repair: the point farthest from its centroid becomes the
    // empty cluster's centroid.
    for (int c = 0; c < k; ++c) {
      if (counts[c] != 0) continue;
      int farthest = -1;
      double far_d2 = -1.0;
      for (int i = 0; i < n; ++i) {
        if (counts[result.labels[i]] <= 1) continue;  // do not empty another cluster
        const double d2 = squared_distance(points, i, centers[result.labels[i]]);
        if (d2 > far_d2) {
          far_d2 = d2;
          farthest = i;
        }
      }
      if (farthest < 0) throw std::logic_error("kmeans: cannot repair empty cluster");
      --counts[result.labels[farthest]];
      result.labels[farthest] = c;
      ++counts[c];
      for (int j = 0; j < dims; ++j) centers[c][j] = points.at(farthest, j);
    }

    // Update step.
    std::vector<std::vector<double>> next(k, std::vector<double>(dims, 0.0));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < dims; ++j) next[result.labels[i]][j] += points.at(i, j);
    double movement = 0.0;
    for (int c = 0; c < k; ++c) {
      double shift2 = 0.0;
      for (int j = 0; j < dims; ++j) {
        next[c][j] /= counts[c];
        const double diff = next[c][j] - centers[c][j];
        shift2 += diff * diff;
      }
      movement = std::max(movement, std::sqrt(shift2));
      centers[c] = std::move(next[c]);
    }

    double objective = 0.0;
    for (int i = 0; i < n; ++i) objective += squared_distance(points, i, centers[result.labels[i]]);
    result.objective_trace.push_back(objective);
    if (movement < tol) break;
  }

  // Final assignment against the converged centers.
  for (int i = 0; i < n; ++i) {
    int best = 0;
    double best_d2 = squared_distance(points, i, centers[0]);
    for (int c = 1; c < k; ++c) {
      const double d2 = squared_distance(points, i, centers[c]);
      if (d2 < best_d2) {
        best_d2 = d2;
        best = c;
      }
    }
    result.labels[i] = best;
  }
  result.objective = 0.0;
  for (int i = 0; i < n; ++i)
    result.objective += squared_distance(points, i, centers[result.labels[i]]);

  result.centroids = Matrix(k, dims);
  for (int c = 0; c < k; ++c)
    for (int j = 0; j < dims; ++j) result.centroids.at(c, j) = centers[c][j];
  return result;
}

std::vector<std::vector<double>> compute_centroids(const std::vector<EmbeddingWindow>& windows,
                                                   const std::vector<int>& labels, int k) {
  if (windows.size() != labels.size())
    throw std::invalid_argument("compute_centroids: label count mismatch");
  if (k < 1) throw std::invalid_argument("compute_centroids: k must be >= 1");
  const std::size_t dim = windows.empty() ? 0 : windows.front().vector.size();
  std::vector<std::vector<double>> sums(k, std::vector<double>(dim, 0.0));
  std::vector<int> counts(k, 0);
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const int label = labels[i];
    if (label < 0 || label >= k) throw std::invalid_argument("compute_centroids: label out of range");
    for (std::size_t j = 0; j < dim; ++j) sums[label][j] += windows[i].vector[j];
    ++counts[label];
  }
  std::vector<std::vector<double>> centroids(k);
  for (int c = 0; c < k; ++c) {
    if (counts[c] == 0) throw std::logic_error("compute_centroids: empty cluster");
    for (double& v : sums[c]) v /= counts[c];
    centroids[c] = unit_normalize(std::move(sums[c]));
  }
  return centroids;
}

ClusterResult cluster(const AffinityMatrix& W, const std::vector<EmbeddingWindow>& windows,
                      int min_k, int max_k, std::uint64_t seed) {
  if (static_cast<std::size_t>(W.n) != windows.size())
    throw std::invalid_argument("cluster: affinity size does not match window count");

  ClusterResult result;
  if (W.n == 1) {
    result.k = 1;
    result.labels = {0};
    result.centroids = compute_centroids(windows, result.labels, 1);
    return result;
  }

  const SpectralDecomposition decomposition = eigendecompose(laplacian(W));
  const int k = estimate_k(decomposition.eigenvalues, min_k, max_k);
  const Matrix points = spectral_embeddings(decomposition, k);

  // Restarts with derived sub-seeds; best objective wins, ties resolved by
  // the lowest restart index so parallel and sequential execution agree.
  constexpr int kRestarts = 10;
  KMeansResult best;
  bool have_best = false;
  for (int r = 0; r < kRestarts; ++r) {
    KMeansResult attempt = kmeans(points, k, Rng::mix(seed, static_cast<std::uint64_t>(r)));
    if (!have_best || attempt.objective < best.objective) {
      best = std::move(attempt);
      have_best = true;
    }
  }

  result.k = k;
  result.labels = std::move(best.labels);
  result.centroids = compute_centroids(windows, result.labels, k);
  return result;
}

}  // namespace diar
