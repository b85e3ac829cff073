// data.hpp
//
// Sample containers: a dense samples-by-variables matrix with a missing
// mask, and a sparse binary document-by-variable set for bag-of-words
// style data.

#ifndef COREX_DATA_HPP
#define COREX_DATA_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace corex {

struct DataMatrix {
  int n_rows = 0;
  int n_cols = 0;
  std::vector<double> values;        // row-major, n_rows * n_cols
  std::vector<std::uint8_t> missing; // same shape; 1 = missing
  std::vector<std::string> column_names; // empty, or one name per column

  DataMatrix() = default;
  DataMatrix(int rows, int cols)
      : n_rows(rows),
        n_cols(cols),
        values(static_cast<std::size_t>(rows) * cols, 0.0),
        missing(static_cast<std::size_t>(rows) * cols, 0) {}

  double& at(int r, int c) { return values[static_cast<std::size_t>(r) * n_cols + c]; }
  double at(int r, int c) const { return values[static_cast<std::size_t>(r) * n_cols + c]; }
  bool is_missing(int r, int c) const {
    return missing[static_cast<std::size_t>(r) * n_cols + c] != 0;
  }
  void set_missing(int r, int c, bool m = true) {
    missing[static_cast<std::size_t>(r) * n_cols + c] = m ? 1 : 0;
  }
  bool has_missing() const;

  // Name of column c, or "x<c>" when names are absent.
  std::string column_label(int c) const;

  // Throws input_error on shape/name violations.
  void validate() const;
};

// Binary documents: cells not listed are observed zeros; `entries` are
// the observed ones; `missing_entries` are cells with no evidence either
// way. Entry lists are kept sorted and deduplicated.
struct SparseBinaryData {
  int n_docs = 0;
  int n_vars = 0;
  std::vector<std::pair<int, int>> entries;          // (row, col), value 1
  std::vector<std::pair<int, int>> missing_entries;  // (row, col)

  void normalize();       // sort + dedup both lists
  void validate() const;  // throws input_error on bad indices/duplicates
  std::size_t nnz() const { return entries.size(); }
};

// Per-document index built once before iterating.
struct SparseRows {
  std::vector<std::vector<int>> ones;     // per doc: variables observed 1
  std::vector<std::vector<int>> missing;  // per doc: variables missing

  explicit SparseRows(const SparseBinaryData& data);
};

}  // namespace corex

#endif  // COREX_DATA_HPP
