#pragma once

#include <optional>

#include "ggmcp/dataset.hpp"
#include "ggmcp/sym_matrix.hpp"

namespace ggmcp {

// lambda_{1,tau} = lambda * sqrt(log p / tau) (Experimental) or the
// theory-driven rate (kappa_bar / (alpha T)) * sqrt(48 tau log(p T)); Right
// replaces tau with T - tau in both.
enum class LambdaSchedule { Experimental, Theory };

// How ||.||_F^2 and ||.||_1 inside the elastic-net penalty count off-diagonal
// entries. FullMatrix (both triangles) matches the geometry under which the
// uniform entrywise prox is an exact proximal-gradient step, so objective
// traces are monotone; UpperTriangle counts each stored entry once.
enum class FrobConvention { FullMatrix, UpperTriangle };

// WeightedTau scales the loss gradient by tau/(2T) (resp. (T-tau)/(2T)), the
// form the step-size stability bounds are stated for. Unweighted drops the
// data-fraction factor.
enum class GradientScaling { WeightedTau, Unweighted };

struct PenaltyConfig {
  double alpha = 0.5;        // l1 vs ridge mix, must lie in [0, 1)
  double lambda_base = 0.13; // schedule scale
  LambdaSchedule schedule = LambdaSchedule::Experimental;
  std::optional<double> theory_kappa_bar{};
  FrobConvention frob = FrobConvention::FullMatrix;
  GradientScaling grad = GradientScaling::WeightedTau;
  bool penalize_diagonal = true;

  void validate() const;
};

double lambda_at(Side side, int tau, const PenaltyConfig& cfg, int T, int p);
double lambda_at(Side side, int tau, const PenaltyConfig& cfg, const Dataset& d);

// Elastic net: alpha ||theta||_1 + (1-alpha)/2 ||theta||_F^2 under cfg.frob.
// With penalize_diagonal=false the diagonal is exempt from the l1 part only.
double penalty(const SymMatrix& theta, const PenaltyConfig& cfg);

}  // namespace ggmcp
