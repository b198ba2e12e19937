#pragma once

#include <Eigen/Dense>

#include <istream>
#include <optional>
#include <string>
#include <vector>

namespace fundrv {

struct Dataset {
  // Abscissae as read from the w_<value> column names, and mapped onto [0, 1].
  std::vector<double> abscissae;
  std::vector<double> grid;
  Eigen::MatrixXd curves;  // n x m
  Eigen::VectorXd response;
  std::string response_name;
  std::optional<Eigen::MatrixXd> scalars;
  std::vector<std::string> scalar_names;

  Eigen::Index n() const noexcept { return curves.rows(); }
  Eigen::Index m() const noexcept { return curves.cols(); }
};

/// Wide CSV: a header, then one row per curve. Leading columns named
/// w_<abscissa> hold the curve values; the next column is the response and
/// any further columns are scalar covariates. Comma separated, '.' decimals,
/// no quoting.
///
/// Throws ParseError (1-based file row, 1-based column) for missing or
/// malformed cells and FormatError for header problems such as abscissae
/// that do not strictly increase.
Dataset parse_wide_csv(std::istream& in);
Dataset ingest_wide_csv(const std::string& path);

}  // namespace fundrv
