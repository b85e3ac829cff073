// data.cpp

#include "corex/data.hpp"

#include <algorithm>
#include <set>

#include "corex/common.hpp"

namespace corex {

bool DataMatrix::has_missing() const {
  for (auto m : missing) {
    if (m) return true;
  }
  return false;
}

std::string DataMatrix::column_label(int c) const {
  if (!column_names.empty()) return column_names[c];
  return "x" + std::to_string(c);
}

void DataMatrix::validate() const {
  const std::size_t expect = static_cast<std::size_t>(n_rows) * n_cols;
  if (values.size() != expect || missing.size() != expect) {
    throw input_error("DataMatrix: values/mask size does not match shape");
  }
  if (!column_names.empty()) {
    if (static_cast<int>(column_names.size()) != n_cols) {
      throw input_error("DataMatrix: column name count does not match columns");
    }
    std::set<std::string> seen;
    for (const auto& name : column_names) {
      if (!seen.insert(name).second) {
        throw input_error("DataMatrix: duplicate column name '" + name + "'");
      }
    }
  }
}

void SparseBinaryData::normalize() {
  std::sort(entries.begin(), entries.end());
  entries.erase(std::unique(entries.begin(), entries.end()), entries.end());
  std::sort(missing_entries.begin(), missing_entries.end());
  missing_entries.erase(
      std::unique(missing_entries.begin(), missing_entries.end()),
      missing_entries.end());
}

void SparseBinaryData::validate() const {
  auto check = [this](const std::vector<std::pair<int, int>>& list,
                      const char* what) {
    for (std::size_t k = 0; k < list.size(); ++k) {
      const auto& [r, c] = list[k];
      if (r < 0 || r >= n_docs || c < 0 || c >= n_vars) {
        throw input_error(std::string("SparseBinaryData: ") + what + " (" +
                          std::to_string(r) + ", " + std::to_string(c) +
                          ") out of range");
      }
      if (k > 0 && list[k] == list[k - 1]) {
        throw input_error(std::string("SparseBinaryData: duplicate ") + what +
                          " (" + std::to_string(r) + ", " + std::to_string(c) +
                          ")");
      }
    }
  };
  check(entries, "entry");
  check(missing_entries, "missing entry");
}

SparseRows::SparseRows(const SparseBinaryData& data)
    : ones(data.n_docs), missing(data.n_docs) {
  for (const auto& [r, c] : data.entries) ones[r].push_back(c);
  for (const auto& [r, c] : data.missing_entries) missing[r].push_back(c);
}

}  // namespace corex
