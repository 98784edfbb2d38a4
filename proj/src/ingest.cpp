#include "ggmcp/ingest.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>

#include "ggmcp/errors.hpp"

namespace ggmcp {

namespace {

std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::optional<double> parse_cell(const std::string& raw) {
  const std::string s = trim(raw);
  if (s.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) return std::nullopt;
  if (!std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace

RawTable load_csv(const std::string& path, bool has_header) {
  std::ifstream in(path);
  if (!in) throw IoError("load_csv: cannot open " + path);

  RawTable table;
  std::vector<std::vector<double>> rows;
  std::string line;
  bool header_pending = has_header;
  size_t width = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    std::vector<std::string> fields = split_fields(line);
    if (header_pending) {
      header_pending = false;
      table.names.reserve(fields.size());
      for (const std::string& f : fields) table.names.push_back(trim(f));
      width = fields.size();
      continue;
    }
    if (width == 0) width = fields.size();
    if (fields.size() != width) {
      throw MalformedCsv("load_csv: ragged row in " + path);
    }
    std::vector<double> row;
    row.reserve(width);
    bool ok = true;
    for (const std::string& f : fields) {
      if (auto v = parse_cell(f)) {
        row.push_back(*v);
      } else {
        ok = false;
        break;
      }
    }
    if (ok) {
      rows.push_back(std::move(row));
    } else {
      ++table.dropped_rows;
    }
  }
  if (rows.empty()) throw EmptyTable("load_csv: no data rows in " + path);

  table.values.resize(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(width));
  for (size_t i = 0; i < rows.size(); ++i) {
    for (size_t j = 0; j < width; ++j) {
      table.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          rows[i][j];
    }
  }
  return table;
}

Dataset clean_returns(const RawTable& t, const CleanOptions& opts) {
  const Eigen::Index T = t.values.rows();
  const Eigen::Index p = t.values.cols();
  if (T < 3) throw EmptyTable("clean_returns: need at least 3 price rows");
  if ((t.values.array() <= 0.0).any()) {
    throw NonPositivePrice("clean_returns: prices must be strictly positive");
  }

  Eigen::MatrixXd r(T - 1, p);
  for (Eigen::Index tt = 0; tt + 1 < T; ++tt) {
    r.row(tt) = (t.values.row(tt + 1).array() / t.values.row(tt).array()).log();
  }
  const Eigen::Index n = r.rows();
  for (Eigen::Index j = 0; j < p; ++j) {
    const double mean = r.col(j).mean();
    const double sd =
        std::sqrt((r.col(j).array() - mean).square().sum() / (n - 1));
    if (!(sd > 0.0)) {
      throw ZeroVariance("clean_returns: constant return column " +
                         std::to_string(j));
    }
    r.col(j) = (r.col(j).array() - mean) / sd;
  }

  if (!opts.drop_rows) {
    r = r.array().min(opts.clip).max(-opts.clip);
    return Dataset(std::move(r));
  }
  std::vector<Eigen::Index> keep;
  keep.reserve(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (r.row(i).array().abs().maxCoeff() <= opts.clip) keep.push_back(i);
  }
  if (keep.empty()) throw EmptyTable("clean_returns: every row clipped away");
  Eigen::MatrixXd kept(static_cast<Eigen::Index>(keep.size()), p);
  for (size_t i = 0; i < keep.size(); ++i) {
    kept.row(static_cast<Eigen::Index>(i)) = r.row(keep[i]);
  }
  return Dataset(std::move(kept));
}

void write_csv(const std::string& path, const Eigen::MatrixXd& values,
               const std::vector<std::string>& names) {
  std::ofstream out(path);
  if (!out) throw IoError("write_csv: cannot open " + path);
  if (!names.empty()) {
    if (static_cast<Eigen::Index>(names.size()) != values.cols()) {
      throw ShapeMismatch("write_csv: header width mismatch");
    }
    for (size_t j = 0; j < names.size(); ++j) {
      if (j) out << ',';
      out << names[j];
    }
    out << '\n';
  }
  char buf[40];
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      if (j) out << ',';
      std::snprintf(buf, sizeof buf, "%.17g", values(i, j));
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw IoError("write_csv: write failed for " + path);
}

}  // namespace ggmcp
