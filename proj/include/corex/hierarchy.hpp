// hierarchy.hpp
//
// Greedy stacking of CorEx layers. Layer 0 is trained on the data;
// layer k+1 is trained on layer k's factor summaries (realized factor
// channels, score plus seeded unit noise, for the linear family;
// most-probable states for the discrete family). The unit noise keeps a
// weak factor's summary at honest scale; restandardizing a bare score
// column would inflate whatever correlation it carries.
// Each layer contributes a term to a running lower bound on the total
// correlation of the inputs, and the per-layer argmax-MI parents induce
// a tree over variables and factors.

#ifndef COREX_HIERARCHY_HPP
#define COREX_HIERARCHY_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "corex/common.hpp"
#include "corex/data.hpp"
#include "corex/discrete_corex.hpp"
#include "corex/linear_corex.hpp"

namespace corex {

enum class LayerFamily { linear, discrete };

struct HierarchyConfig {
  TrainConfig linear;
  DiscreteTrainConfig discrete;
  std::uint64_t seed = 0;  // per-layer fit seeds are derived from this
};

struct HierarchyLayer {
  // Exactly one of (linear, discrete) is meaningful; family lives on the
  // owning model.
  LinearLayer linear;
  FitReport linear_report;
  DiscreteFactorModel discrete;
  DiscreteFitReport discrete_report;

  Eigen::MatrixXd parent_mi;          // this layer's inputs x factors
  std::vector<int> parent;            // argmax factor per input
  std::vector<double> factor_bounds;  // per-factor attribution, nats
  double term = 0.0;                  // layer bound contribution, nats
  int n_inputs = 0;
  int n_factors = 0;
};

struct HierarchyModel {
  LayerFamily family = LayerFamily::linear;
  std::vector<HierarchyLayer> layers;
  std::vector<std::string> input_names;  // layer-0 input labels
  std::uint64_t seed = 0;
};

struct BoundLedger {
  std::vector<double> terms_nats;       // one per layer
  std::vector<double> cumulative_nats;  // prefix sums
  std::vector<double> terms_bits;
  std::vector<double> cumulative_bits;
};

// Zero widths are skipped (an empty layer contributes nothing); negative
// widths are an error. Any layer-fit failure is rethrown with the layer
// index attached.
HierarchyModel build_linear(const DataMatrix& data, const std::vector<int>& widths,
                            const HierarchyConfig& config = {});
HierarchyModel build_discrete(const SparseBinaryData& data,
                              const std::vector<int>& widths,
                              const HierarchyConfig& config = {});

BoundLedger bound_ledger(const HierarchyModel& model);

struct DepthSuggestion {
  int depth = 0;                    // layers kept; the first is mandatory
  BoundLedger ledger;               // ledger of the kept layers
  std::vector<double> tried_terms;  // every evaluated layer, kept or not
  HierarchyModel model;
};

// Grows the stack one layer at a time (widths taken from max_widths) and
// stops at the first layer whose term falls below epsilon; that trial
// layer is discarded. A trial layer that cannot be fit (factor summaries
// carry no usable signal) also stops the search.
DepthSuggestion suggest_depth(const DataMatrix& data,
                              const std::vector<int>& max_widths, double epsilon,
                              const HierarchyConfig& config = {});
DepthSuggestion suggest_depth(const SparseBinaryData& data,
                              const std::vector<int>& max_widths, double epsilon,
                              const HierarchyConfig& config = {});

struct TreeNode {
  std::string id;     // "x<i>" for inputs, "y<layer>_<j>" for factors
  std::string label;  // column name for inputs, id for factors
  int layer = 0;      // 0 for inputs, k+1 for factors of layer k
  int index = 0;
  double bound = 0.0;  // factor attribution, 0 for inputs
};

struct TreeEdge {
  std::string child;
  std::string parent;
  double mi = 0.0;  // nats
};

struct TreeExport {
  std::vector<TreeNode> nodes;
  std::vector<TreeEdge> edges;
};

TreeExport export_tree(const HierarchyModel& model);

}  // namespace corex

#endif  // COREX_HIERARCHY_HPP
