#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "ggmcp/dataset.hpp"
#include "ggmcp/penalty.hpp"
#include "ggmcp/prox.hpp"
#include "ggmcp/solvers.hpp"

namespace ggmcp {

enum class SegmentSolver { ApproxMM, Sa };

// Which index feeds the lambda schedule for the unsplit (single-theta) fit:
// the segment midpoint, or the full segment length on both sides.
enum class UnsplitLambda { Midpoint, FullLength };

struct SegmentationConfig {
  PenaltyConfig penalty{};
  double C = 2.0;                 // complexity penalty: split iff ell_tau + C p < ell_F
  double window_frac = 0.05;      // segment-local n0 = max(ceil(frac * len), n0_floor)
  int n0_floor = 5;
  SegmentSolver solver = SegmentSolver::ApproxMM;
  double gamma = 0.25;
  std::optional<double> refine_gamma{};  // defaults to the solver's stabilized step
  int refine_iters = 500;
  StoppingRule rule{};                   // Practical only
  KernelSpec kernel{};                   // annealing proposal (Sa solver)
  CoolingSchedule cooling{};
  double guard = 2e3;             // reject-split when ||theta||^2 exceeds this
  bool guard_frobenius = false;   // default: squared spectral norm
  UnsplitLambda unsplit_lambda = UnsplitLambda::Midpoint;
  uint64_t seed = 0;
  int max_restarts = 10;
};

struct SegmentNode {
  int lo = 1, hi = 0;      // segment rows lo..hi, absolute and inclusive
  std::optional<int> tau;  // absolute split point when the split was accepted
  std::optional<SpdMatrix> theta_left, theta_right;  // leaves fill theta_left
  double ell_tau = 0.0, ell_F = 0.0;
  bool diverged = false;   // solver blew up or the norm guard tripped
  std::unique_ptr<SegmentNode> left, right;
};

struct Segment {
  int lo = 1, hi = 0;
  SpdMatrix theta;
};

struct ChangePointSet {
  std::vector<int> taus;          // internal split points, sorted
  std::vector<Segment> segments;  // leaf ranges, left to right
};

struct SegmentationResult {
  std::unique_ptr<SegmentNode> tree;
  ChangePointSet points;
};

// Recursive binary segmentation. Each segment runs the single-change-point
// solver, refines both blocks with refine_iters extra prox steps at the found
// tau, and splits iff ell_tau + C p < ell_F where ell_F comes from an equally
// refined unsplit fit. A segment becomes a leaf when shorter than 2 n0 + 1,
// when the stop rule fires, or when divergence or the norm guard trips.
// Deterministic: node seeds derive from (seed, lo, hi) only.
SegmentationResult binary_segmentation(const Dataset& d,
                                       const SegmentationConfig& cfg);

// ell value of one segment: len H, the summed penalized negative
// log-likelihood. With a split, H(tau | theta1, theta2) at refined estimates;
// without, the same functional with both blocks tied to a single fit and the
// lambda schedule indexed per cfg.unsplit_lambda. The summed scale is what
// makes the C p complexity penalty meaningful.
double penalized_nll(const Dataset& segment, std::optional<int> split,
                     const SegmentationConfig& cfg);

}  // namespace ggmcp
