#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "ggmcp/dataset.hpp"
#include "ggmcp/rng.hpp"
#include "ggmcp/sym_matrix.hpp"

namespace ggmcp {

struct GeneratorSpec {
  int p = 10;
  double density = 0.25;         // Bernoulli probability per off-diagonal entry
  double magnitude_shift = 4.0;  // entries pushed away from zero by this much
  uint64_t seed = 0;
};

// Sparse symmetric M: standard-normal draws shifted by +-magnitude_shift in
// the direction of their sign, diagonal always drawn, off-diagonals kept with
// probability density (density = 0 gives M = 0). Returned as
// M + (1 - lambda_min(M)) I, so lambda_min is exactly 1.
SpdMatrix random_precision(const GeneratorSpec& spec);

// theta_j = shared + C_j where the shared part has q_pct% nonzeros, C_1 and
// C_2 have p_pct% off-diagonal nonzeros each and one common diagonal. Both
// are lifted by the same multiple of I (so theta_2 - theta_1 is preserved and
// min_j lambda_min(theta_j) = 1). p_pct = 0 gives theta_1 = theta_2 exactly.
std::pair<SpdMatrix, SpdMatrix> similar_pair(int p, double q_pct, double p_pct,
                                             uint64_t seed);

// Piecewise Gaussian sampling: rows 1..taus[0] ~ N(0, thetas[0]^-1), rows
// taus[0]+1..taus[1] ~ N(0, thetas[1]^-1), and so on. taus must be strictly
// increasing inside (0, T) with len(thetas) = len(taus) + 1.
Dataset sample_series(const std::vector<SpdMatrix>& thetas,
                      const std::vector<int>& taus, int T, uint64_t seed);

}  // namespace ggmcp
