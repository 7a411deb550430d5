#include "blindcal/csv.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace blindcal {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

CsvWriter::CsvWriter(const std::string& path, bool append)
    : out_(path, append ? std::ios::app : std::ios::trunc), path_(path) {
  if (!out_) throw Error("cannot open '" + path + "' for writing");
}

void CsvWriter::write_row(const std::vector<std::string>& fields) {
  for (size_t i = 0; i < fields.size(); ++i) {
    if (i) out_ << ',';
    out_ << fields[i];
  }
  out_ << '\n';
  out_.flush();
  if (!out_) throw Error("write to '" + path_ + "' failed");
}

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  std::vector<std::vector<std::string>> rows;
  size_t start = 0;
  while (start < text.size()) {
    const size_t end = text.find('\n', start);
    if (end == std::string::npos) break;  // partial trailing line
    std::string line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> fields;
    size_t pos = 0;
    while (true) {
      const size_t comma = line.find(',', pos);
      fields.push_back(line.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    rows.push_back(std::move(fields));
    start = end + 1;
  }
  return rows;
}

void write_vector_csv(const std::string& path, const Vector& v) {
  CsvWriter w(path, false);
  w.write_row({"index", "value"});
  for (Index i = 0; i < v.size(); ++i) w.write_row({std::to_string(i), format_double(v[i])});
}

void write_vector_csv(const std::string& path, const CVector& v) {
  CsvWriter w(path, false);
  w.write_row({"index", "real", "imag"});
  for (Index i = 0; i < v.size(); ++i) {
    w.write_row({std::to_string(i), format_double(v[i].real()), format_double(v[i].imag())});
  }
}

}  // namespace blindcal
