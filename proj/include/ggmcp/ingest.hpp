#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ggmcp/dataset.hpp"

namespace ggmcp {

struct RawTable {
  std::vector<std::string> names;  // empty when the file had no header
  Eigen::MatrixXd values;          // T x p
  int dropped_rows = 0;            // rows with blank or unparseable cells
};

// Comma-separated numerics, optional single header row. Rows whose field
// count differs from the first data row make the file malformed; rows with
// the right count but blank/unparseable cells are dropped and counted.
RawTable load_csv(const std::string& path, bool has_header);

struct CleanOptions {
  double clip = 3.0;      // threshold in standardized units
  bool drop_rows = false; // drop whole rows past the threshold instead of clipping
};

// Price table -> log returns, standardized per column to mean 0 and sample
// sd 1 (n-1 denominator), then values past +-clip are winsorized (or the row
// dropped). No re-standardization afterwards. Output has T-1 rows.
Dataset clean_returns(const RawTable& t, const CleanOptions& opts = {});

// Same dialect load_csv reads: optional header, full double precision.
void write_csv(const std::string& path, const Eigen::MatrixXd& values,
               const std::vector<std::string>& names = {});

}  // namespace ggmcp
