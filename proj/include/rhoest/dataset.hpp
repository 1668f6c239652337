#pragma once

#include <cstdint>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace rhoest {

enum class RowFlag : std::uint8_t { clean, outlier, contaminated };

inline std::string_view to_string(RowFlag f) {
  switch (f) {
    case RowFlag::clean: return "clean";
    case RowFlag::outlier: return "outlier";
    case RowFlag::contaminated: return "contaminated";
  }
  return "?";
}

inline RowFlag row_flag_from_string(std::string_view s) {
  if (s == "clean" || s == "0") return RowFlag::clean;
  if (s == "outlier" || s == "1") return RowFlag::outlier;
  if (s == "contaminated" || s == "2") return RowFlag::contaminated;
  throw std::invalid_argument("unknown row flag '" + std::string(s) + "'");
}

/// n observations (w_i, y_i) with a provenance flag per row.
struct Dataset {
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> w;
  std::vector<double> y;
  std::vector<RowFlag> flag;

  Dataset() = default;
  Dataset(Eigen::Index n, Eigen::Index d)
      : w(n, d), y(static_cast<std::size_t>(n), 0.0), flag(static_cast<std::size_t>(n), RowFlag::clean) {}

  std::size_t size() const { return y.size(); }
  Eigen::Index dim() const { return w.cols(); }

  std::size_t count(RowFlag f) const {
    std::size_t c = 0;
    for (auto v : flag) c += (v == f) ? 1 : 0;
    return c;
  }

  void append(const Eigen::Ref<const Eigen::RowVectorXd>& wi, double yi, RowFlag f) {
    const auto n = w.rows();
    w.conservativeResize(n + 1, wi.size());
    w.row(n) = wi;
    y.push_back(yi);
    flag.push_back(f);
  }

  /// Rows whose flag is clean, in their original order.
  Dataset clean_rows() const {
    Dataset out(0, w.cols());
    for (std::size_t i = 0; i < size(); ++i) {
      if (flag[i] == RowFlag::clean) out.append(w.row(static_cast<Eigen::Index>(i)), y[i], flag[i]);
    }
    return out;
  }

  friend bool operator==(const Dataset& a, const Dataset& b) {
    return a.w.rows() == b.w.rows() && a.w.cols() == b.w.cols() && a.w == b.w &&
           a.y == b.y && a.flag == b.flag;
  }
};

// CSV layout: header w1,...,wd,y,flag; one row per observation; values with 17
// significant digits so that a write/read cycle is exact.
inline void write_csv(std::ostream& os, const Dataset& ds) {
  const auto d = ds.dim();
  for (Eigen::Index j = 0; j < d; ++j) os << 'w' << (j + 1) << ',';
  os << "y,flag\n";
  const auto old_prec = os.precision(std::numeric_limits<double>::max_digits10);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (Eigen::Index j = 0; j < d; ++j) os << ds.w(static_cast<Eigen::Index>(i), j) << ',';
    os << ds.y[i] << ',' << to_string(ds.flag[i]) << '\n';
  }
  os.precision(old_prec);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    std::size_t b = 0;
    while (b < cell.size() && cell[b] == ' ') ++b;
    cells.push_back(cell.substr(b));
  }
  return cells;
}

inline double parse_double(const std::string& s, std::size_t line_no) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty()) {
    throw std::runtime_error("dataset line " + std::to_string(line_no) + ": cannot parse '" + s + "'");
  }
  return v;
}

/// Reads the CSV layout produced by write_csv. The flag column is optional.
inline Dataset read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("dataset: empty input");
  const auto header = split_csv_line(line);
  Eigen::Index d = 0;
  while (d < static_cast<Eigen::Index>(header.size()) &&
         header[static_cast<std::size_t>(d)] == "w" + std::to_string(d + 1)) {
    ++d;
  }
  const auto rest = header.size() - static_cast<std::size_t>(d);
  if (d == 0 || rest < 1 || header[static_cast<std::size_t>(d)] != "y" ||
      (rest == 2 && header.back() != "flag") || rest > 2) {
    throw std::runtime_error("dataset: header must be w1,...,wd,y[,flag]");
  }
  const bool has_flag = rest == 2;
  Dataset ds(0, d);
  std::vector<double> wv;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw std::runtime_error("dataset line " + std::to_string(line_no) + ": expected " +
                               std::to_string(header.size()) + " fields");
    }
    Eigen::RowVectorXd wi(d);
    for (Eigen::Index j = 0; j < d; ++j) wi[j] = parse_double(cells[static_cast<std::size_t>(j)], line_no);
    const double yi = parse_double(cells[static_cast<std::size_t>(d)], line_no);
    const RowFlag f = has_flag ? row_flag_from_string(cells.back()) : RowFlag::clean;
    ds.append(wi, yi, f);
  }
  return ds;
}

}  // namespace rhoest
