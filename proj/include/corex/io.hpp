// io.hpp
//
// File formats: delimited numeric text for dense matrices, "row col"
// pair lists for sparse binary data, and a versioned JSON archive for
// trained models. Archives round-trip exactly: save -> load -> save is
// byte-identical. All writers go through a temp-file-plus-rename step so
// a failed run never leaves a half-written artifact.

#ifndef COREX_IO_HPP
#define COREX_IO_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "corex/data.hpp"
#include "corex/discrete_corex.hpp"
#include "corex/hierarchy.hpp"
#include "corex/linear_corex.hpp"
#include "corex/sieve.hpp"

namespace corex {

struct DenseLoadOptions {
  // '\0' sniffs the delimiter from the first line (comma, tab, semicolon,
  // then space, in that order).
  char delimiter = '\0';
  enum class Header { automatic, yes, no };
  Header header = Header::automatic;
  // Cells equal to this token become missing entries. Empty means the
  // file may not contain missing values.
  std::string missing_token;
};

// Streams the file row by row; memory stays proportional to the matrix.
// Ragged rows fail with the line number, bad cells with row and column.
DataMatrix load_dense(const std::string& path,
                      const DenseLoadOptions& options = {});

void write_dense(const std::string& path, const DataMatrix& data,
                 char delimiter = ',', const std::string& missing_token = "NA");

// Lines are "row col" or "row col 1", zero-based, with an optional
// leading "%dims R C" line; otherwise dimensions come from the largest
// indices. Duplicate entries collapse with a warning.
SparseBinaryData load_sparse(const std::string& path,
                             std::vector<std::string>* warnings = nullptr);

struct ModelArchive {
  static constexpr int kFormatVersion = 1;

  int format_version = kFormatVersion;
  std::string model_kind;  // "linear" | "discrete" | "hierarchy" | "sieve"
  std::uint64_t seed = 0;

  // Exactly one group below is meaningful, per model_kind.
  LinearLayer linear;
  FitReport linear_report;
  TrainConfig linear_config;

  DiscreteFactorModel discrete;
  DiscreteFitReport discrete_report;
  DiscreteTrainConfig discrete_config;

  HierarchyModel hierarchy;
  HierarchyConfig hierarchy_config;

  SieveModel sieve;
  SieveConfig sieve_config;
  int sieve_k_max = 0;
  double sieve_epsilon = 0.0;
};

void save_model(const ModelArchive& archive, const std::string& path);

// Rejects unknown format versions outright and names the first missing
// or ill-typed field of a corrupt payload.
ModelArchive load_model(const std::string& path);

std::string tree_json(const TreeExport& tree);
std::string tree_dot(const TreeExport& tree);

void write_text_atomic(const std::string& path, const std::string& content);

}  // namespace corex

#endif  // COREX_IO_HPP
