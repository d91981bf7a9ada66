#pragma once

#include <cstddef>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mfhd/errors.hpp"

namespace mfhd {

/// n x p predictors plus a length-n response.
struct Dataset {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  std::vector<std::string> predictor_names;
  std::string response_name = "y";

  Eigen::Index n() const { return X.rows(); }
  Eigen::Index p() const { return X.cols(); }

  /// Shape agreement and finiteness; throws InputError.
  void validate() const;
};

/// CSV problem located at a 1-based physical line.
class CsvError : public InputError {
 public:
  CsvError(std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Non-numeric cell.
class CsvValueError : public CsvError {
 public:
  CsvValueError(std::size_t line, std::size_t column, const std::string& cell);
  std::size_t column() const { return column_; }

 private:
  std::size_t column_;
};

/// RFC-4180 records: quoted fields, doubled quotes, CRLF or LF endings.
/// Each record carries the physical line it starts on.
struct CsvRecord {
  std::size_t line = 0;
  std::vector<std::string> fields;
};
std::vector<CsvRecord> parse_csv(std::istream& in);

/// Reads a numeric table with a header row. `response` names the response
/// column, or gives its 1-based position when no header matches. Every other
/// column becomes a predictor. Empty cells are rejected.
Dataset read_dataset(std::istream& in, const std::string& response);
Dataset read_dataset_file(const std::string& path, const std::string& response);

/// Writes predictors then the response, 17 significant digits.
void write_dataset(std::ostream& out, const Dataset& data);

}  // namespace mfhd
