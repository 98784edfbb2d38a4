#pragma once

#include <Eigen/Dense>

#include "ggmcp/errors.hpp"
#include "ggmcp/sym_matrix.hpp"

namespace ggmcp {

// Which side of a candidate change-point a statistic refers to: Left covers
// rows 1..tau, Right covers rows tau+1..T.
enum class Side { Left, Right };

// Observation matrix, one row per time step. Time indices are 1-based
// throughout to match the change-point convention (tau splits {1..tau} from
// {tau+1..T}).
class Dataset {
 public:
  explicit Dataset(Eigen::MatrixXd rows);

  int T() const { return static_cast<int>(rows_.rows()); }
  int p() const { return static_cast<int>(rows_.cols()); }
  const Eigen::MatrixXd& rows() const { return rows_; }

  Eigen::MatrixXd::ConstRowXpr row_t(int t) const { return rows_.row(t - 1); }

  // Rows lo..hi (1-based, inclusive) as a new Dataset.
  Dataset slice(int lo, int hi) const;

 private:
  Eigen::MatrixXd rows_;
};

// Candidate change-point window {n0, ..., T - n0}. Both sides of every
// candidate keep at least n0 rows; a singleton window (T = 2 n0) is allowed.
struct SearchWindow {
  int n0 = 0;
  int lo = 0;
  int hi = 0;

  SearchWindow(int n0_in, int T);
  static SearchWindow from_frac(double frac, int T);

  int size() const { return hi - lo + 1; }
  bool contains(int tau) const { return tau >= lo && tau <= hi; }
};

// S_1(tau) = (1/tau) sum_{t<=tau} x_t x_t'  or  S_2(tau) over rows t > tau.
// tau must leave the requested side nonempty (1 <= tau <= T-1).
SymMatrix scatter(Side side, int tau, const Dataset& d);

// Running scatter sums under rank-one moves of tau. left_sum() is
// P(tau) = sum_{t<=tau} x_t' x_t; total_sum() is fixed at P(T).
class ScatterTracker {
 public:
  ScatterTracker(const Dataset& d, int tau);

  void move_to(int tau);
  int tau() const { return tau_; }

  const Eigen::MatrixXd& left_sum() const { return left_; }
  const Eigen::MatrixXd& total_sum() const { return total_; }

  SymMatrix left_avg() const;   // S_1(tau)
  SymMatrix right_avg() const;  // S_2(tau)

 private:
  const Dataset* d_;
  int tau_;
  Eigen::MatrixXd left_;
  Eigen::MatrixXd total_;
};

}  // namespace ggmcp
