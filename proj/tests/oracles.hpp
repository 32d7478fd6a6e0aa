#pragma once

// Brute-force reference implementations used only by tests. These share the
// domain types with the production code but none of its computational paths:
// scoring is literal 1 ms frame enumeration with exhaustive-permutation
// speaker mapping, graph structure is flood fill, and assignment is
// permutation search.

#include <string>
#include <vector>

#include "diar/affinity.hpp"
#include "diar/embeddings.hpp"
#include "diar/matrix.hpp"
#include "diar/timeline.hpp"

namespace oracle {

struct ScoreResult {
  double missed_pct = 0.0;
  double falarm_pct = 0.0;
  double spkerr_pct = 0.0;
  double der_pct = 0.0;
  double jer_pct = 0.0;
};

// 1 ms frame scorer with exhaustive mapping; recordings up to ~60 s and at
// most 6 speakers per side.
ScoreResult score_1ms(const diar::Annotation& ref, const diar::Annotation& hyp, double collar_s);

// Connected components of the nonzero pattern, by flood fill.
int connected_components(const diar::AffinityMatrix& W);

// Best achievable assignment score by brute-force permutation search
// (square matrices up to 8x8).
double best_assignment_score(const diar::Matrix& score);

// 1 ms sweep version of overlap-region extraction.
std::vector<diar::TimeSpan> overlap_regions_1ms(const diar::Annotation& annotation);

// 1 ms frame-vote version of window-to-annotation conversion (majority per
// channel, ties to the latest-starting covering window).
diar::Annotation vote_annotation_1ms(const std::vector<diar::EmbeddingWindow>& windows,
                                     const std::vector<int>& labels,
                                     const std::vector<int>& removed,
                                     const std::string& recording_id);

// Ascending Laplacian spectrum of disjoint complete blocks with uniform edge
// weight: each block of size m contributes one 0 and (m-1) copies of w*m.
std::vector<double> block_laplacian_eigenvalues(const std::vector<int>& block_sizes, double weight);

}  // namespace oracle
