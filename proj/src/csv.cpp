#include "ipmlab/csv.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "ipmlab/errors.hpp"

namespace ipmlab::measures {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::stringstream ss(line);
  while (std::getline(ss, cur, ',')) out.push_back(cur);
  return out;
}

bool parse_double(const std::string& s, double& out) {
  const char* begin = s.c_str();
  char* end = nullptr;
  out = std::strtod(begin, &end);
  if (end == begin) return false;
  while (*end == ' ' || *end == '\t' || *end == '\r') ++end;
  return *end == '\0';
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Mat read_csv_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("read_csv_matrix: cannot open '" + path + "'");

  std::vector<std::vector<double>> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    std::vector<double> row;
    row.reserve(fields.size());
    bool ok = true;
    for (const auto& f : fields) {
      double v;
      if (!parse_double(f, v)) {
        ok = false;
        break;
      }
      row.push_back(v);
    }
    if (!ok) {
      if (first) {
        first = false;
        continue;  // header line
      }
      throw UsageError("read_csv_matrix: non-numeric field in '" + path + "'");
    }
    first = false;
    if (!rows.empty() && rows.front().size() != row.size())
      throw UsageError("read_csv_matrix: ragged rows in '" + path + "'");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw UsageError("read_csv_matrix: no data rows in '" + path + "'");

  Mat m(int(rows.size()), int(rows.front().size()));
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j];
  return m;
}

void write_csv_matrix(const std::string& path, const Mat& m,
                      const std::vector<std::string>& header) {
  std::ofstream out(path);
  if (!out) throw UsageError("write_csv_matrix: cannot open '" + path + "' for writing");
  if (!header.empty()) {
    if (int(header.size()) != m.cols())
      throw UsageError("write_csv_matrix: header width does not match matrix");
    for (size_t j = 0; j < header.size(); ++j) {
      if (j) out << ',';
      out << header[j];
    }
    out << '\n';
  }
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

}  // namespace ipmlab::measures
