#include "wlasso/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace wlasso {

std::string format_double(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s, bool& ok) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  while (first < last && (*first == ' ' || *first == '\t')) ++first;
  while (last > first && (last[-1] == ' ' || last[-1] == '\t')) --last;
  auto res = std::from_chars(first, last, v);
  ok = res.ec == std::errc() && res.ptr == last && first != last;
  return v;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
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

}  // namespace

DenseMatrix load_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CsvError(path + ": cannot open file");
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::vector<double>> rows;
  std::size_t width = 0;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields = split_csv_line(line);
    if (!saw_header) {
      saw_header = true;
      width = fields.size();
      continue;  // header row
    }
    if (fields.size() != width)
      throw CsvError(path + ":" + std::to_string(lineno) + ": expected " +
                     std::to_string(width) + " fields, got " + std::to_string(fields.size()));
    std::vector<double> row(fields.size());
    for (std::size_t j = 0; j < fields.size(); ++j) {
      bool ok = false;
      row[j] = parse_double(fields[j], ok);
      if (!ok || !std::isfinite(row[j]))
        throw CsvError(path + ":" + std::to_string(lineno) + ": bad numeric field '" +
                       fields[j] + "'");
    }
    rows.push_back(std::move(row));
  }
  if (!saw_header) throw CsvError(path + ": empty file");
  if (rows.empty()) throw CsvError(path + ": no data rows");
  DenseMatrix m(rows.size(), width);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < width; ++j) m(i, j) = rows[i][j];
  return m;
}

void write_matrix_csv(const std::string& path, const DenseMatrix& m,
                      const std::vector<std::string>& header) {
  if (!header.empty() && header.size() != m.cols())
    throw CsvError("write_matrix_csv: header width mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CsvError(path + ": cannot open for writing");
  if (header.empty()) {
    for (std::size_t j = 0; j < m.cols(); ++j) out << (j ? ",c" : "c") << (j + 1);
  } else {
    out << csv_join(header);
  }
  out << '\n';
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

std::string csv_join(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += fields[i];
  }
  return out;
}

}  // namespace wlasso
