// Copyright 2026 The srupp authors. Apache 2.0 License.

#include "srupp/csv.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

namespace srupp {

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_matrix_csv(const std::string& path, const Tensor& m) {
  if (m.rank() != 2) {
    throw ShapeError("write_matrix_csv: need rank 2, got " + m.shape_str());
  }
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("csv: cannot write '" + tmp + "'");
    const std::int64_t rows = m.dim(0), cols = m.dim(1);
    for (std::int64_t i = 0; i < rows; ++i) {
      for (std::int64_t j = 0; j < cols; ++j) {
        if (j) out << ',';
        out << format_g17(m.get(i * cols + j));
      }
      out << '\n';
    }
    if (!out) throw IoError("csv: write failed for '" + tmp + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    throw IoError("csv: cannot rename '" + tmp + "' to '" + path +
                  "': " + ec.message());
  }
}

Tensor read_matrix_csv(const std::string& path, Dtype dt) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("csv: cannot open '" + path + "'");
  std::vector<double> values;
  std::int64_t rows = 0, cols = -1;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::int64_t this_cols = 0;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str()) {
        throw IoError("csv '" + path + "': non-numeric cell '" + cell +
                      "' on row " + std::to_string(rows + 1));
      }
      values.push_back(v);
      ++this_cols;
    }
    if (cols < 0) {
      cols = this_cols;
    } else if (this_cols != cols) {
      throw IoError("csv '" + path + "': ragged row " +
                    std::to_string(rows + 1));
    }
    ++rows;
  }
  if (rows == 0 || cols < 1) throw IoError("csv '" + path + "': empty file");
  return Tensor::from({rows, cols}, std::move(values), dt);
}

}  // namespace srupp
