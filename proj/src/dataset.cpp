#include "mfhd/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace mfhd {

void Dataset::validate() const {
  if (X.rows() != y.size()) throw InputError("predictor and response lengths differ");
  if (!predictor_names.empty() &&
      static_cast<Eigen::Index>(predictor_names.size()) != X.cols()) {
    throw InputError("predictor name count does not match column count");
  }
  if (!X.allFinite() || !y.allFinite()) throw InputError("dataset has non-finite values");
}

CsvError::CsvError(std::size_t line, const std::string& what)
    : InputError("line " + std::to_string(line) + ": " + what), line_(line) {}

CsvValueError::CsvValueError(std::size_t line, std::size_t column,
                             const std::string& cell)
    : CsvError(line, "column " + std::to_string(column) +
                         ": non-numeric value '" + cell + "'"),
      column_(column) {}

std::vector<CsvRecord> parse_csv(std::istream& in) {
  std::vector<CsvRecord> records;
  CsvRecord current;
  std::string field;
  std::size_t line = 1;
  current.line = line;
  bool in_quotes = false;
  bool field_quoted = false;
  bool record_started = false;

  auto end_field = [&] {
    current.fields.push_back(std::move(field));
    field.clear();
    field_quoted = false;
  };
  auto end_record = [&] {
    end_field();
    records.push_back(std::move(current));
    current = CsvRecord{};
    record_started = false;
  };

  char ch;
  while (in.get(ch)) {
    if (in_quotes) {
      if (ch == '"') {
        if (in.peek() == '"') {
          in.get(ch);
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        if (ch == '\n') ++line;
        field.push_back(ch);
      }
      continue;
    }
    if (!record_started) {
      current.line = line;
      record_started = true;
    }
    switch (ch) {
      case '"':
        if (!field.empty() || field_quoted) {
          throw CsvError(line, "quote inside an unquoted field");
        }
        in_quotes = true;
        field_quoted = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        if (in.peek() == '\n') in.get(ch);
        [[fallthrough]];
      case '\n':
        end_record();
        ++line;
        break;
      default:
        if (field_quoted) throw CsvError(line, "text after closing quote");
        field.push_back(ch);
    }
  }
  if (in_quotes) throw CsvError(current.line, "unterminated quoted field");
  if (record_started) end_record();
  // Blank lines carry no data.
  std::erase_if(records, [](const CsvRecord& r) {
    return r.fields.size() == 1 && r.fields[0].empty();
  });
  return records;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string& raw, std::size_t line, std::size_t column) {
  const std::string cell = trim(raw);
  if (cell.empty()) throw CsvError(line, "column " + std::to_string(column) + ": missing value");
  double value = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || !std::isfinite(value)) {
    throw CsvValueError(line, column, cell);
  }
  return value;
}

}  // namespace

Dataset read_dataset(std::istream& in, const std::string& response) {
  const auto records = parse_csv(in);
  if (records.empty()) throw CsvError(1, "missing header row");
  const auto& header = records.front().fields;
  const std::size_t width = header.size();
  if (width < 2) throw CsvError(records.front().line, "need a response and at least one predictor");

  std::size_t response_col = width;
  for (std::size_t c = 0; c < width; ++c) {
    if (trim(header[c]) == response) {
      response_col = c;
      break;
    }
  }
  if (response_col == width) {
    std::size_t pos = 0;
    const auto [ptr, ec] =
        std::from_chars(response.data(), response.data() + response.size(), pos);
    if (ec != std::errc() || ptr != response.data() + response.size() || pos < 1 ||
        pos > width) {
      throw InputError("response column '" + response + "' not found in header");
    }
    response_col = pos - 1;
  }

  const auto n = static_cast<Eigen::Index>(records.size() - 1);
  Dataset data;
  data.X.resize(n, static_cast<Eigen::Index>(width - 1));
  data.y.resize(n);
  data.response_name = trim(header[response_col]);
  for (std::size_t c = 0; c < width; ++c) {
    if (c != response_col) data.predictor_names.push_back(trim(header[c]));
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& rec = records[static_cast<std::size_t>(i) + 1];
    if (rec.fields.size() != width) {
      throw CsvError(rec.line, "expected " + std::to_string(width) + " fields, found " +
                                   std::to_string(rec.fields.size()));
    }
    Eigen::Index col = 0;
    for (std::size_t c = 0; c < width; ++c) {
      const double v = parse_number(rec.fields[c], rec.line, c + 1);
      if (c == response_col) {
        data.y[i] = v;
      } else {
        data.X(i, col++) = v;
      }
    }
  }
  return data;
}

Dataset read_dataset_file(const std::string& path, const std::string& response) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open input file '" + path + "'");
  return read_dataset(in, response);
}

namespace {

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

}  // namespace

void write_dataset(std::ostream& out, const Dataset& data) {
  data.validate();
  for (Eigen::Index j = 0; j < data.p(); ++j) {
    const std::string name = data.predictor_names.empty()
                                 ? "X" + std::to_string(j + 1)
                                 : data.predictor_names[static_cast<std::size_t>(j)];
    out << quote_if_needed(name) << ',';
  }
  out << quote_if_needed(data.response_name) << '\n';
  out << std::setprecision(17);
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    for (Eigen::Index j = 0; j < data.p(); ++j) out << data.X(i, j) << ',';
    out << data.y[i] << '\n';
  }
}

}  // namespace mfhd
