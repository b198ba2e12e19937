#include "fundrv/dataset.hpp"

#include "fundrv/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace fundrv {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string::size_type start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& s, double& v) {
  if (s.empty()) return false;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  return ec == std::errc() && ptr == last && std::isfinite(v);
}

}  // namespace

Dataset parse_wide_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty file: missing header row");
  std::vector<std::string> header = split_fields(line);
  for (auto& h : header) h = trim(h);

  Dataset ds;
  std::size_t m = 0;
  while (m < header.size() && header[m].rfind("w_", 0) == 0) {
    double a = 0.0;
    if (!parse_double(header[m].substr(2), a)) {
      throw FormatError("curve column '" + header[m] + "' does not name a numeric abscissa");
    }
    if (!ds.abscissae.empty() && !(a > ds.abscissae.back())) {
      throw FormatError("abscissae must strictly increase: '" + header[m] + "' follows '" + header[m - 1] + "'");
    }
    ds.abscissae.push_back(a);
    ++m;
  }
  if (m < 2) throw FormatError("header needs at least two curve columns named w_<abscissa>");
  if (header.size() == m) throw FormatError("header has no response column after the curve columns");
  for (std::size_t j = m; j < header.size(); ++j) {
    if (header[j].rfind("w_", 0) == 0) throw FormatError("curve column '" + header[j] + "' after a non-curve column");
    if (header[j].empty()) throw FormatError("empty column name at column " + std::to_string(j + 1));
  }
  ds.response_name = header[m];
  ds.scalar_names.assign(header.begin() + static_cast<std::ptrdiff_t>(m) + 1, header.end());

  std::vector<std::vector<double>> rows;
  std::size_t file_row = 1;
  while (std::getline(in, line)) {
    ++file_row;
    if (trim(line).empty()) continue;
    const std::vector<std::string> fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw ParseError("row " + std::to_string(file_row) + " has " + std::to_string(fields.size()) +
                           " fields, header has " + std::to_string(header.size()),
                       file_row, std::min(fields.size(), header.size()) + 1);
    }
    std::vector<double> values(fields.size());
    for (std::size_t j = 0; j < fields.size(); ++j) {
      const std::string cell = trim(fields[j]);
      if (!parse_double(cell, values[j])) {
        throw ParseError("row " + std::to_string(file_row) + ", column " + std::to_string(j + 1) + " (" + header[j] +
                             "): " + (cell.empty() ? "missing value" : "not a finite number: '" + cell + "'"),
                         file_row, j + 1);
      }
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw FormatError("no data rows");

  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto q = static_cast<Eigen::Index>(ds.scalar_names.size());
  ds.curves.resize(n, static_cast<Eigen::Index>(m));
  ds.response.resize(n);
  if (q > 0) ds.scalars = Eigen::MatrixXd(n, q);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    for (std::size_t j = 0; j < m; ++j) ds.curves(i, static_cast<Eigen::Index>(j)) = r[j];
    ds.response[i] = r[m];
    for (Eigen::Index j = 0; j < q; ++j) (*ds.scalars)(i, j) = r[m + 1 + static_cast<std::size_t>(j)];
  }
  const double lo = ds.abscissae.front();
  const double span = ds.abscissae.back() - lo;
  ds.grid.resize(m);
  for (std::size_t j = 0; j < m; ++j) ds.grid[j] = (ds.abscissae[j] - lo) / span;
  ds.grid.back() = 1.0;
  return ds;
}

Dataset ingest_wide_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open '" + path + "'");
  return parse_wide_csv(f);
}

}  // namespace fundrv
