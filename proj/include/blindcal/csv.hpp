#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "blindcal/types.hpp"

namespace blindcal {

/// Locale-independent, round-trip-stable rendering used in every CSV output.
std::string format_double(double v);

/// Line-oriented CSV writer. Fields never contain separators, so no quoting
/// is performed; every row is flushed so an interrupted run leaves only whole
/// rows behind.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, bool append);
  void write_row(const std::vector<std::string>& fields);

 private:
  std::ofstream out_;
  std::string path_;
};

/// Complete rows of a CSV file (a trailing partial line is dropped).
std::vector<std::vector<std::string>> read_csv(const std::string& path);

/// index,value rows of a real vector.
void write_vector_csv(const std::string& path, const Vector& v);
/// index,real,imag rows of a complex vector.
void write_vector_csv(const std::string& path, const CVector& v);

}  // namespace blindcal
