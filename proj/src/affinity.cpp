#include "diar/affinity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace diar {

AffinityVariant affinity_variant_from_string(const std::string& name) {
  if (name == "pruned") return AffinityVariant::pruned;
  if (name == "binarized") return AffinityVariant::binarized;
  if (name == "normalized") return AffinityVariant::normalized;
  if (name == "boosted") return AffinityVariant::boosted;
  throw std::invalid_argument("unknown affinity variant: " + name);
}

std::string to_string(AffinityVariant variant) {
  switch (variant) {
    case AffinityVariant::pruned: return "pruned";
    case AffinityVariant::binarized: return "binarized";
    case AffinityVariant::normalized: return "normalized";
    case AffinityVariant::boosted: return "boosted";
  }
  return "unknown";
}

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("cosine: dimension mismatch");
  if (a.empty()) throw std::invalid_argument("cosine: empty vectors");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (!(na > 0.0) || !(nb > 0.0)) throw std::invalid_argument("cosine: zero vector");
  const double value = dot / (std::sqrt(na) * std::sqrt(nb));
  if (!std::isfinite(value)) throw std::invalid_argument("cosine: non-finite input");
  return std::clamp(value, -1.0, 1.0);
}

AffinityMatrix build_affinity(const std::vector<EmbeddingWindow>& windows) {
  if (windows.empty()) throw std::invalid_argument("build_affinity: no windows");
  const int n = static_cast<int>(windows.size());
  AffinityMatrix A(n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double s = cosine_similarity(windows[i].vector, windows[j].vector);
      A.at(i, j) = s;
      A.at(j, i) = s;
    }
  }
  return A;
}

AffinityMatrix prune_rows(const AffinityMatrix& A, double keep_fraction) {
  if (!(keep_fraction > 0.0) || keep_fraction > 1.0)
    throw std::invalid_argument("prune_rows: keep_fraction must be in (0, 1]");
  const int n = A.n;
  const int keep = std::min(n - 1, static_cast<int>(std::ceil(keep_fraction * n)));

  AffinityMatrix out(n);
  std::vector<int> cols(n);
  for (int i = 0; i < n; ++i) {
    cols.clear();
    for (int j = 0; j < n; ++j)
      if (j != i) cols.push_back(j);
    // Largest first; ties keep the lower column index.
    std::stable_sort(cols.begin(), cols.end(),
                     [&](int a, int b) { return A.at(i, a) > A.at(i, b); });
    for (int r = 0; r < keep && r < static_cast<int>(cols.size()); ++r)
      out.at(i, cols[r]) = A.at(i, cols[r]);
  }
  return out;
}

AffinityMatrix symmetrize(const AffinityMatrix& A) {
  const int n = A.n;
  AffinityMatrix out(n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double v = 0.5 * (A.at(i, j) + A.at(j, i));
      out.at(i, j) = v;
      out.at(j, i) = v;
    }
  }
  return out;
}

AffinityMatrix binarize(const AffinityMatrix& A) {
  AffinityMatrix out(A.n);
  for (int i = 0; i < A.n; ++i)
    for (int j = 0; j < A.n; ++j)
      if (i != j && A.at(i, j) != 0.0) out.at(i, j) = 1.0;
  return out;
}

AffinityMatrix row_normalize(const AffinityMatrix& A) {
  AffinityMatrix out = A;
  for (int i = 0; i < A.n; ++i) {
    double row_max = 0.0;
    for (int j = 0; j < A.n; ++j) row_max = std::max(row_max, A.at(i, j));
    if (row_max > 0.0)
      for (int j = 0; j < A.n; ++j) out.at(i, j) = A.at(i, j) / row_max;
  }
  return out;
}

AffinityMatrix boost(const AffinityMatrix& A, double delta) {
  if (delta < 0.0) throw std::invalid_argument("boost: negative delta");
  AffinityMatrix out = A;
  for (int i = 0; i < A.n; ++i)
    for (int j = 0; j < A.n; ++j)
      if (i != j && out.at(i, j) != 0.0) out.at(i, j) += delta;
  return out;
}

AffinityMatrix fuse(const std::vector<AffinityMatrix>& matrices) {
  if (matrices.empty()) throw std::invalid_argument("fuse: no matrices");
  const int n = matrices.front().n;
  for (const AffinityMatrix& m : matrices)
    if (m.n != n) throw std::invalid_argument("fuse: size mismatch");

  AffinityMatrix out(n);
  const double inv = 1.0 / static_cast<double>(matrices.size());
  for (std::size_t k = 0; k < out.values.size(); ++k) {
    double acc = 0.0;
    for (const AffinityMatrix& m : matrices) acc += m.values[k];
    out.values[k] = acc * inv;
  }
  return out;
}

AffinityMatrix manipulate(const AffinityMatrix& raw, AffinityVariant variant, double keep_fraction,
                          double boost_delta) {
  const AffinityMatrix pruned = prune_rows(raw, keep_fraction);
  switch (variant) {
    case AffinityVariant::pruned: return symmetrize(pruned);
    case AffinityVariant::binarized: return binarize(symmetrize(pruned));
    case AffinityVariant::normalized: return symmetrize(row_normalize(pruned));
    case AffinityVariant::boosted: return boost(symmetrize(pruned), boost_delta);
  }
  throw std::logic_error("manipulate: unreachable");
}

}  // namespace diar
