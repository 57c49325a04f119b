#include "dataset_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include "modalreg/format.hpp"

namespace modalreg::cli {
namespace {

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    cells.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

Table read_table(std::istream& in, const std::string& source) {
  Table t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    auto cells = split_row(line);
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size())
      fail(ErrorCode::DimensionError, source + ":" + std::to_string(lineno) + ": expected " +
                                          std::to_string(t.header.size()) + " columns, found " +
                                          std::to_string(cells.size()));
    std::vector<double> row(cells.size());
    for (std::size_t k = 0; k < cells.size(); ++k) {
      const std::string& c = cells[k];
      const char* first = c.data();
      if (!c.empty() && c[0] == '+') ++first;
      const auto [ptr, ec] = std::from_chars(first, c.data() + c.size(), row[k]);
      if (c.empty() || ec != std::errc() || ptr != c.data() + c.size())
        fail(ErrorCode::ParseError, source + ":" + std::to_string(lineno) + ": cannot parse '" + c +
                                        "' as a number");
      if (!std::isfinite(row[k]))
        fail(ErrorCode::NonFiniteError, source + ":" + std::to_string(lineno) + ": non-finite value in column '" +
                                            t.header[k] + "' (data row " + std::to_string(t.rows.size() + 1) + ")");
    }
    t.rows.push_back(std::move(row));
  }
  if (t.header.empty()) fail(ErrorCode::ParseError, source + ": missing header row");
  return t;
}

std::ifstream open(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open '" + path + "'");
  return in;
}

}  // namespace

Dataset parse_scalar_dataset(std::istream& in, const std::string& source) {
  const Table t = read_table(in, source);
  if (t.header != std::vector<std::string>{"x", "y"})
    fail(ErrorCode::ParseError, source + ":1: scalar layout needs the header 'x,y'");
  std::vector<double> x, y;
  for (const auto& r : t.rows) {
    x.push_back(r[0]);
    y.push_back(r[1]);
  }
  return Dataset(std::move(x), std::move(y));
}

VCDataset parse_vc_dataset(std::istream& in, const std::string& source) {
  const Table t = read_table(in, source);
  const auto& h = t.header;
  bool ok = h.size() >= 2 && h.front() == "u" && h.back() == "y";
  for (std::size_t k = 1; ok && k + 1 < h.size(); ++k) ok = h[k] == "x" + std::to_string(k);
  if (!ok) fail(ErrorCode::ParseError, source + ":1: varying-coefficient layout needs the header 'u,x1,...,xk,y'");
  const auto n = static_cast<Eigen::Index>(t.rows.size());
  const auto k = static_cast<Eigen::Index>(h.size() - 2);
  std::vector<double> u, y;
  Eigen::MatrixXd Z(n, k);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = t.rows[static_cast<std::size_t>(i)];
    u.push_back(r.front());
    y.push_back(r.back());
    for (Eigen::Index j = 0; j < k; ++j) Z(i, j) = r[static_cast<std::size_t>(j + 1)];
  }
  return VCDataset::with_intercept(std::move(u), Z, std::move(y));
}

std::variant<Dataset, VCDataset> parse_dataset(const std::string& path) {
  std::string first;
  {
    auto in = open(path);
    std::string line;
    while (std::getline(in, line))
      if (line.find_first_not_of(" \t\r") != std::string::npos) break;
    const auto cells = split_row(line);
    if (!cells.empty()) first = cells.front();
  }
  if (first == "u") return parse_vc_dataset_file(path);
  return parse_scalar_dataset_file(path);
}

Dataset parse_scalar_dataset_file(const std::string& path) {
  auto in = open(path);
  return parse_scalar_dataset(in, path);
}

VCDataset parse_vc_dataset_file(const std::string& path) {
  auto in = open(path);
  return parse_vc_dataset(in, path);
}

void write_dataset(std::ostream& out, const Dataset& data) {
  out << "x,y\n";
  for (std::size_t i = 0; i < data.size(); ++i)
    out << format_number(data.x[i]) << ',' << format_number(data.y[i]) << '\n';
}

void write_dataset(std::ostream& out, const VCDataset& data) {
  out << 'u';
  for (int j = 1; j < data.dims(); ++j) out << ",x" << j;
  out << ",y\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << format_number(data.u[i]);
    for (int j = 1; j < data.dims(); ++j) out << ',' << format_number(data.X(static_cast<Eigen::Index>(i), j));
    out << ',' << format_number(data.y[i]) << '\n';
  }
}

}  // namespace modalreg::cli
