#include "mixhp/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "mixhp/errors.hpp"

namespace mixhp {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

double parse_cell(const std::string& cell, std::size_t row, std::size_t col) {
  double value = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last)
    throw ArtifactError("csv: non-numeric cell at row " + std::to_string(row) +
                        ", column " + std::to_string(col + 1));
  if (!std::isfinite(value))
    throw ArtifactError("csv: non-finite cell at row " + std::to_string(row) +
                        ", column " + std::to_string(col + 1));
  return value;
}

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

Dataset read_csv(const std::filesystem::path& path, const std::string& response_column,
                 const std::vector<std::string>& exempt_columns, bool intercept) {
  std::ifstream in(path);
  if (!in) throw ArtifactError("csv: cannot open " + path.string());

  std::string line;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> header;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    ++lineno;
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_line(line);
    if (header.empty()) {
      header = cells;
      continue;
    }
    if (cells.size() != header.size())
      throw ArtifactError("csv: row " + std::to_string(lineno) + " has " +
                          std::to_string(cells.size()) + " cells, expected " +
                          std::to_string(header.size()));
    std::vector<double> parsed;
    parsed.reserve(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c)
      parsed.push_back(parse_cell(cells[c], lineno, c));
    rows.push_back(std::move(parsed));
  }
  if (header.empty()) throw ArtifactError("csv: empty file " + path.string());
  if (rows.empty()) throw ArtifactError("csv: no data rows in " + path.string());

  const auto resp_it = std::find(header.begin(), header.end(), response_column);
  if (resp_it == header.end())
    throw ArtifactError("csv: missing response column '" + response_column + "'");
  const std::size_t resp_idx = static_cast<std::size_t>(resp_it - header.begin());
  for (const std::string& name : exempt_columns)
    if (std::find(header.begin(), header.end(), name) == header.end())
      throw ArtifactError("csv: missing exempt column '" + name + "'");

  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index p = static_cast<Eigen::Index>(header.size()) - 1;
  if (p < 1) throw ArtifactError("csv: no predictor columns");

  Eigen::VectorXd y(n);
  Eigen::MatrixXd X(n, p);
  std::vector<std::string> names;
  std::vector<bool> exempt;
  names.reserve(static_cast<std::size_t>(p));
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c == resp_idx) continue;
    names.push_back(header[c]);
    exempt.push_back(std::find(exempt_columns.begin(), exempt_columns.end(),
                               header[c]) != exempt_columns.end());
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    y[i] = row[resp_idx];
    Eigen::Index k = 0;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c == resp_idx) continue;
      X(i, k++) = row[c];
    }
  }

  Dataset d = Dataset::make(std::move(y), std::move(X), std::move(names),
                            std::move(exempt));
  return intercept ? with_intercept(std::move(d)) : d;
}

void write_csv(const Dataset& data, const std::filesystem::path& path,
               const std::string& response_name) {
  data.validate();
  std::ofstream out(path);
  if (!out) throw ArtifactError("csv: cannot write " + path.string());
  std::ostringstream buf;
  buf << response_name;
  for (const std::string& name : data.predictor_names) buf << ',' << name;
  buf << '\n';
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    buf << format_double(data.y[i]);
    for (Eigen::Index k = 0; k < data.p(); ++k)
      buf << ',' << format_double(data.X(i, k));
    buf << '\n';
  }
  out << buf.str();
  if (!out) throw ArtifactError("csv: write failed for " + path.string());
}

}  // namespace mixhp
