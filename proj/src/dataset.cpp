#include "ggmcp/dataset.hpp"

#include <cmath>
#include <string>

namespace ggmcp {

Dataset::Dataset(Eigen::MatrixXd rows) : rows_(std::move(rows)) {
  if (rows_.rows() < 1 || rows_.cols() < 1) {
    throw ShapeMismatch("Dataset: needs at least one row and one column");
  }
  if (!rows_.allFinite()) {
    throw ShapeMismatch("Dataset: non-finite entries");
  }
}

Dataset Dataset::slice(int lo, int hi) const {
  if (lo < 1 || hi > T() || lo > hi) {
    throw ShapeMismatch("Dataset::slice: bad range [" + std::to_string(lo) +
                        ", " + std::to_string(hi) + "]");
  }
  return Dataset(rows_.middleRows(lo - 1, hi - lo + 1));
}

SearchWindow::SearchWindow(int n0_in, int T) : n0(n0_in), lo(n0_in), hi(T - n0_in) {
  if (n0 < 1 || lo > hi) {
    throw DegenerateWindow("SearchWindow: n0=" + std::to_string(n0) +
                           " leaves no candidates for T=" + std::to_string(T));
  }
}

SearchWindow SearchWindow::from_frac(double frac, int T) {
  if (!(frac > 0.0) || !(frac < 1.0)) {
    throw DegenerateWindow("SearchWindow: fraction must lie in (0,1)");
  }
  const int n0 = std::max(1, static_cast<int>(std::ceil(frac * T)));
  return SearchWindow(n0, T);
}

SymMatrix scatter(Side side, int tau, const Dataset& d) {
  if (tau < 1 || tau > d.T() - 1) {
    throw OutOfWindow("scatter: tau=" + std::to_string(tau) +
                      " outside [1, " + std::to_string(d.T() - 1) + "]");
  }
  const int T = d.T();
  Eigen::MatrixXd block = (side == Side::Left)
                              ? d.rows().topRows(tau)
                              : d.rows().bottomRows(T - tau);
  const double n = static_cast<double>(block.rows());
  Eigen::MatrixXd s = (block.transpose() * block) / n;
  return SymMatrix::from_full(s, 1e-8);
}

ScatterTracker::ScatterTracker(const Dataset& d, int tau) : d_(&d), tau_(tau) {
  if (tau < 1 || tau > d.T() - 1) {
    throw OutOfWindow("ScatterTracker: tau outside [1, T-1]");
  }
  total_ = d.rows().transpose() * d.rows();
  const Eigen::MatrixXd top = d.rows().topRows(tau);
  left_ = top.transpose() * top;
}

void ScatterTracker::move_to(int tau) {
  if (tau < 1 || tau > d_->T() - 1) {
    throw OutOfWindow("ScatterTracker::move_to: tau outside [1, T-1]");
  }
  while (tau_ < tau) {
    ++tau_;
    const auto x = d_->row_t(tau_);
    left_.noalias() += x.transpose() * x;
  }
  while (tau_ > tau) {
    const auto x = d_->row_t(tau_);
    left_.noalias() -= x.transpose() * x;
    --tau_;
  }
}

SymMatrix ScatterTracker::left_avg() const {
  return SymMatrix::from_full(left_ / static_cast<double>(tau_), 1e-6);
}

SymMatrix ScatterTracker::right_avg() const {
  const double n = static_cast<double>(d_->T() - tau_);
  return SymMatrix::from_full((total_ - left_) / n, 1e-6);
}

}  // namespace ggmcp
