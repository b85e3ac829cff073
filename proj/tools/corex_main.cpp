// corex_main.cpp
//
// Command-line surface. Every subcommand reads --input and/or --model,
// writes a machine-readable artifact to --output, and prints a short
// human summary to stdout. Exit codes: 0 success, 2 bad input, 3
// numerical failure, 1 anything unexpected.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "corex/common.hpp"
#include "corex/data.hpp"
#include "corex/discrete_corex.hpp"
#include "corex/hierarchy.hpp"
#include "corex/info_core.hpp"
#include "corex/io.hpp"
#include "corex/linear_corex.hpp"
#include "corex/sieve.hpp"

namespace {

using nlohmann::json;

struct Units {
  bool bits = false;
  double operator()(double nats) const { return bits ? corex::nats_to_bits(nats) : nats; }
  const char* name() const { return bits ? "bits" : "nats"; }
};

corex::DataMatrix load_dense_input(const std::string& path,
                                   const std::string& missing_token) {
  corex::DenseLoadOptions options;
  options.missing_token = missing_token;
  return corex::load_dense(path, options);
}

corex::SparseBinaryData load_sparse_input(const std::string& path) {
  std::vector<std::string> warnings;
  corex::SparseBinaryData data = corex::load_sparse(path, &warnings);
  for (const std::string& w : warnings) std::cout << "note: " << w << "\n";
  return data;
}

void require_format(const std::string& format, const std::string& expected,
                    const std::string& command) {
  if (format != expected)
    throw corex::input_error(command + " requires --format " + expected);
}

// Anchor lines are "column_or_index factor". Columns resolve against the
// given names, then against "x<i>" labels, then as bare indices.
std::map<int, int> parse_anchor_file(const std::string& path,
                                     const std::vector<std::string>& names,
                                     int n_vars) {
  std::ifstream in(path);
  if (!in) throw corex::input_error("cannot open " + path);
  std::map<int, int> anchors;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string token;
    if (!(ls >> token)) continue;
    if (token.front() == '#') continue;
    int factor = -1;
    if (!(ls >> factor))
      throw corex::input_error("anchors line " + std::to_string(line_no) +
                               ": expected \"column factor_index\"");
    int var = -1;
    const auto named = std::find(names.begin(), names.end(), token);
    if (named != names.end()) {
      var = static_cast<int>(named - names.begin());
    } else {
      std::string digits = token;
      if (digits.size() > 1 && digits.front() == 'x' &&
          digits.find_first_not_of("0123456789", 1) == std::string::npos)
        digits = digits.substr(1);
      try {
        std::size_t used = 0;
        var = std::stoi(digits, &used);
        if (used != digits.size()) var = -1;
      } catch (const std::exception&) {
        var = -1;
      }
    }
    if (var < 0 || var >= n_vars)
      throw corex::input_error("anchors line " + std::to_string(line_no) +
                               ": unknown column \"" + token + "\"");
    anchors[var] = factor;
  }
  return anchors;
}

std::string variable_label(const std::vector<std::string>& names, int i) {
  if (i < static_cast<int>(names.size())) return names[i];
  return "x" + std::to_string(i);
}

corex::DataMatrix matrix_to_data(const Eigen::MatrixXd& m,
                                 std::vector<std::string> names) {
  corex::DataMatrix out(static_cast<int>(m.rows()), static_cast<int>(m.cols()));
  out.column_names = std::move(names);
  for (int r = 0; r < out.n_rows; ++r)
    for (int c = 0; c < out.n_cols; ++c) out.at(r, c) = m(r, c);
  return out;
}

// --- subcommand bodies ------------------------------------------------------

struct FitLinearArgs {
  std::string input, format = "dense", missing_token, output;
  int factors = 0;
  std::uint64_t seed = 0;
  Units units;
};

void run_fit_linear(const FitLinearArgs& a) {
  require_format(a.format, "dense", "fit-linear");
  const corex::DataMatrix data = load_dense_input(a.input, a.missing_token);
  corex::TrainConfig config;
  config.seed = a.seed;
  auto [layer, report] = corex::fit_layer(data, a.factors, config);

  corex::ModelArchive archive;
  archive.model_kind = "linear";
  archive.seed = a.seed;
  archive.linear = layer;
  archive.linear_report = report;
  archive.linear_config = config;
  corex::save_model(archive, a.output);

  std::cout << "fit " << a.factors << " factors to " << data.n_rows << "x"
            << data.n_cols << " data\n";
  std::cout << "TC lower bound: " << a.units(report.tc_lower_bound) << " "
            << a.units.name() << (report.converged ? " (converged after "
                                                   : " (stopped after ")
            << report.iterations_run << " iterations)\n";
  const std::vector<double> bounds = corex::per_factor_bounds(layer);
  const std::vector<int> clusters = corex::cluster_assignments(layer);
  for (int j = 0; j < layer.n_factors(); ++j) {
    const long size = std::count(clusters.begin(), clusters.end(), j);
    std::cout << "factor " << j << ": bound " << a.units(bounds[j]) << " "
              << a.units.name() << ", " << size << " variables\n";
  }
  for (const std::string& w : report.warnings) std::cout << "warning: " << w << "\n";
  std::cout << "model written to " << a.output << "\n";
}

struct FitDiscreteArgs {
  std::string input, format = "sparse", anchors_path, output;
  int factors = 0;
  std::uint64_t seed = 0;
  Units units;
};

void run_fit_discrete(const FitDiscreteArgs& a) {
  require_format(a.format, "sparse", "fit-discrete");
  const corex::SparseBinaryData data = load_sparse_input(a.input);
  std::map<int, int> anchors;
  if (!a.anchors_path.empty())
    anchors = parse_anchor_file(a.anchors_path, {}, data.n_vars);
  corex::DiscreteTrainConfig config;
  config.seed = a.seed;
  auto [model, report] = corex::fit(data, a.factors, config, anchors);

  corex::ModelArchive archive;
  archive.model_kind = "discrete";
  archive.seed = a.seed;
  archive.discrete = model;
  archive.discrete_report = report;
  archive.discrete_config = config;
  corex::save_model(archive, a.output);

  std::cout << "fit " << a.factors << " factors to " << data.n_docs << " docs over "
            << data.n_vars << " variables (" << data.nnz() << " nonzeros)\n";
  std::cout << "total bound: " << a.units(report.total_bound) << " "
            << a.units.name() << (report.converged ? " (converged after "
                                                   : " (stopped after ")
            << report.iterations_run << " iterations)\n";
  const Eigen::MatrixXd mi = corex::factor_mutual_informations(model, data);
  for (int j = 0; j < model.n_factors(); ++j) {
    std::cout << "factor " << j << ": bound "
              << a.units(report.tc_bound_per_factor[j]) << " " << a.units.name()
              << ", top words:";
    for (int i : corex::top_words_from_mi(mi, j, 5)) std::cout << " x" << i;
    std::cout << "\n";
  }
  if (!report.excluded_columns.empty()) {
    std::cout << "note: " << report.excluded_columns.size()
              << " all-zero columns excluded\n";
  }
  std::cout << "model written to " << a.output << "\n";
}

struct HierarchyArgs {
  std::string input, format = "dense", missing_token, output;
  std::vector<int> widths;
  int layers = 0;  // 0 = use all widths
  double epsilon = 0.0;  // > 0 switches to depth suggestion
  std::uint64_t seed = 0;
  Units units;
};

void run_hierarchy(const HierarchyArgs& a) {
  std::vector<int> widths = a.widths;
  if (a.layers > 0 && a.layers < static_cast<int>(widths.size()))
    widths.resize(a.layers);
  corex::HierarchyConfig config;
  config.seed = a.seed;
  config.linear.seed = a.seed;
  config.discrete.seed = a.seed;

  corex::HierarchyModel model;
  std::vector<double> tried;
  if (a.format == "dense") {
    const corex::DataMatrix data = load_dense_input(a.input, a.missing_token);
    if (a.epsilon > 0.0) {
      corex::DepthSuggestion s = corex::suggest_depth(data, widths, a.epsilon, config);
      model = std::move(s.model);
      tried = std::move(s.tried_terms);
    } else {
      model = corex::build_linear(data, widths, config);
    }
  } else if (a.format == "sparse") {
    const corex::SparseBinaryData data = load_sparse_input(a.input);
    if (a.epsilon > 0.0) {
      corex::DepthSuggestion s = corex::suggest_depth(data, widths, a.epsilon, config);
      model = std::move(s.model);
      tried = std::move(s.tried_terms);
    } else {
      model = corex::build_discrete(data, widths, config);
    }
  } else {
    throw corex::input_error("unknown --format \"" + a.format + "\"");
  }

  corex::ModelArchive archive;
  archive.model_kind = "hierarchy";
  archive.seed = a.seed;
  archive.hierarchy = model;
  archive.hierarchy_config = config;
  corex::save_model(archive, a.output);

  const corex::BoundLedger ledger = corex::bound_ledger(model);
  if (a.epsilon > 0.0) {
    std::cout << "suggested depth: " << model.layers.size() << " (tried terms:";
    for (double t : tried) std::cout << " " << a.units(t);
    std::cout << " " << a.units.name() << ")\n";
  }
  for (std::size_t k = 0; k < ledger.terms_nats.size(); ++k) {
    std::cout << "layer " << k << ": width " << model.layers[k].n_factors
              << ", term " << a.units(ledger.terms_nats[k]) << ", cumulative "
              << a.units(ledger.cumulative_nats[k]) << " " << a.units.name()
              << "\n";
  }
  std::cout << "model written to " << a.output << "\n";
}

struct SieveArgs {
  std::string input, format = "dense", missing_token, output;
  int factors = 0;
  double epsilon = 0.01;
  std::uint64_t seed = 0;
  Units units;
};

void run_sieve_cmd(const SieveArgs& a) {
  require_format(a.format, "dense", "sieve");
  const corex::DataMatrix data = load_dense_input(a.input, a.missing_token);
  corex::SieveConfig config;
  config.train.seed = a.seed;
  const corex::SieveModel model = corex::run_sieve(data, a.factors, a.epsilon, config);

  corex::ModelArchive archive;
  archive.model_kind = "sieve";
  archive.seed = a.seed;
  archive.sieve = model;
  archive.sieve_config = config;
  archive.sieve_k_max = a.factors;
  archive.sieve_epsilon = a.epsilon;
  corex::save_model(archive, a.output);

  for (std::size_t c = 0; c < model.components.size(); ++c) {
    const corex::SieveComponent& comp = model.components[c];
    std::cout << "component " << c << ": extracted " << a.units(comp.extracted_tc)
              << ", cumulative " << a.units(model.cumulative_tc[c]) << " "
              << a.units.name();
    if (comp.saturated) std::cout << " (saturated)";
    if (!comp.dropped_columns.empty())
      std::cout << " (" << comp.dropped_columns.size() << " columns dropped)";
    std::cout << "\n";
  }
  if (model.instability_stop)
    std::cout << "stopped early: repeated non-PD remainders\n";
  std::cout << "model written to " << a.output << "\n";
}

struct TransformArgs {
  std::string model_path, input, format, missing_token, output;
};

void run_transform(const TransformArgs& a) {
  const corex::ModelArchive archive = corex::load_model(a.model_path);
  if (archive.model_kind == "linear") {
    if (!a.format.empty()) require_format(a.format, "dense", "transform (linear model)");
    const corex::DataMatrix data = load_dense_input(a.input, a.missing_token);
    const corex::DataMatrix scores = corex::transform(archive.linear, data);
    corex::write_dense(a.output, scores);
    std::cout << "wrote " << scores.n_rows << "x" << scores.n_cols
              << " factor scores to " << a.output << "\n";
    return;
  }
  if (archive.model_kind == "discrete") {
    if (!a.format.empty()) require_format(a.format, "sparse", "transform (discrete model)");
    const corex::SparseBinaryData data = load_sparse_input(a.input);
    if (data.n_vars != archive.discrete.n_vars())
      throw corex::input_error("data has " + std::to_string(data.n_vars) +
                               " variables, model expects " +
                               std::to_string(archive.discrete.n_vars()));
    const corex::SparseRows rows(data);
    const corex::PosteriorBaseline base = corex::posterior_baseline(archive.discrete);
    const int m = archive.discrete.n_factors();
    const int k = archive.discrete.factor_cardinality();
    corex::DataMatrix out(data.n_docs, m);
    for (int j = 0; j < m; ++j) out.column_names.push_back("factor" + std::to_string(j));
    for (int d = 0; d < data.n_docs; ++d) {
      const Eigen::MatrixXd q = corex::posterior(
          archive.discrete, corex::SparseDoc{rows.ones[d], rows.missing[d]}, base);
      for (int j = 0; j < m; ++j) {
        if (k == 2) {
          out.at(d, j) = q(j, 1);  // probability the factor is on
        } else {
          int best = 0;
          for (int s = 1; s < k; ++s)
            if (q(j, s) > q(j, best)) best = s;
          out.at(d, j) = best;
        }
      }
    }
    corex::write_dense(a.output, out);
    std::cout << "wrote " << out.n_rows << "x" << out.n_cols
              << " factor activations to " << a.output << "\n";
    return;
  }
  throw corex::input_error("transform supports linear and discrete models, not " +
                           archive.model_kind);
}

struct CovarianceArgs {
  std::string model_path, output;
  bool original_units = false;
};

void run_covariance(const CovarianceArgs& a) {
  const corex::ModelArchive archive = corex::load_model(a.model_path);
  if (archive.model_kind != "linear")
    throw corex::input_error("covariance requires a linear model archive");
  const Eigen::MatrixXd cov =
      corex::implied_covariance(archive.linear, a.original_units);
  corex::write_dense(a.output, matrix_to_data(cov, {}));
  std::cout << "wrote " << cov.rows() << "x" << cov.cols()
            << (a.original_units ? " covariance" : " correlation")
            << " estimate to " << a.output << "\n";
}

struct TopicsArgs {
  std::string model_path, input, anchors_path, output;
  int factors = 0;
  int top = 10;
  std::uint64_t seed = 0;
  Units units;
};

void run_topics(const TopicsArgs& a) {
  const corex::SparseBinaryData data = load_sparse_input(a.input);

  corex::DiscreteFactorModel model;
  corex::DiscreteFitReport report;
  if (!a.model_path.empty()) {
    const corex::ModelArchive archive = corex::load_model(a.model_path);
    if (archive.model_kind != "discrete")
      throw corex::input_error("topics requires a discrete model archive");
    model = archive.discrete;
    report = archive.discrete_report;
  } else {
    if (a.factors < 1)
      throw corex::input_error("topics needs --model or --factors to fit");
    std::map<int, int> anchors;
    if (!a.anchors_path.empty())
      anchors = parse_anchor_file(a.anchors_path, {}, data.n_vars);
    corex::DiscreteTrainConfig config;
    config.seed = a.seed;
    std::tie(model, report) = corex::fit(data, a.factors, config, anchors);
  }

  const Eigen::MatrixXd mi = corex::factor_mutual_informations(model, data);
  json doc;
  json topics = json::array();
  for (int j = 0; j < model.n_factors(); ++j) {
    json t;
    t["factor"] = j;
    t["bound"] = j < static_cast<int>(report.tc_bound_per_factor.size())
                     ? report.tc_bound_per_factor[j]
                     : 0.0;
    json words = json::array();
    for (int i : corex::top_words_from_mi(mi, j, a.top)) {
      json w;
      w["index"] = i;
      w["mi"] = mi(i, j);
      w["name"] = "x" + std::to_string(i);
      words.push_back(std::move(w));
    }
    t["words"] = std::move(words);
    topics.push_back(std::move(t));
  }
  doc["topics"] = std::move(topics);
  corex::write_text_atomic(a.output, doc.dump(2) + "\n");

  for (int j = 0; j < model.n_factors(); ++j) {
    std::cout << "factor " << j;
    if (j < static_cast<int>(report.tc_bound_per_factor.size()))
      std::cout << " (bound " << a.units(report.tc_bound_per_factor[j]) << " "
                << a.units.name() << ")";
    std::cout << ":";
    for (int i : corex::top_words_from_mi(mi, j, a.top)) std::cout << " x" << i;
    std::cout << "\n";
  }
  std::cout << "topic table written to " << a.output << "\n";
}

struct TreeArgs {
  std::string model_path, output, dot_output;
  Units units;
};

void run_tree(const TreeArgs& a) {
  const corex::ModelArchive archive = corex::load_model(a.model_path);
  if (archive.model_kind != "hierarchy")
    throw corex::input_error("tree requires a hierarchy model archive");
  const corex::TreeExport tree = corex::export_tree(archive.hierarchy);
  corex::write_text_atomic(a.output, corex::tree_json(tree));
  std::string dot_path = a.dot_output;
  if (dot_path.empty()) dot_path = a.output + ".dot";
  corex::write_text_atomic(dot_path, corex::tree_dot(tree));

  const corex::BoundLedger ledger = corex::bound_ledger(archive.hierarchy);
  for (std::size_t k = 0; k < ledger.terms_nats.size(); ++k)
    std::cout << "layer " << k << ": term " << a.units(ledger.terms_nats[k])
              << ", cumulative " << a.units(ledger.cumulative_nats[k]) << " "
              << a.units.name() << "\n";
  std::cout << tree.nodes.size() << " nodes, " << tree.edges.size()
            << " edges written to " << a.output << " and " << dot_path << "\n";
}

struct InfoArgs {
  std::string input, format = "dense", missing_token, output;
  Units units;
};

// A column is "discrete enough" when every observed value is an integer
// and at most 16 distinct values appear.
bool looks_discrete(const corex::DataMatrix& data) {
  for (int c = 0; c < data.n_cols; ++c) {
    std::set<long long> distinct;
    for (int r = 0; r < data.n_rows; ++r) {
      if (data.is_missing(r, c)) continue;
      const double v = data.at(r, c);
      const double rounded = std::round(v);
      if (std::abs(v - rounded) > 1e-9) return false;
      distinct.insert(static_cast<long long>(rounded));
      if (distinct.size() > 16) return false;
    }
  }
  return true;
}

corex::DiscreteJoint pair_joint(const corex::DataMatrix& data, int a, int b) {
  std::map<long long, int> va, vb;
  for (int r = 0; r < data.n_rows; ++r) {
    if (!data.is_missing(r, a))
      va.emplace(static_cast<long long>(std::llround(data.at(r, a))),
                 static_cast<int>(va.size()));
    if (b >= 0 && !data.is_missing(r, b))
      vb.emplace(static_cast<long long>(std::llround(data.at(r, b))),
                 static_cast<int>(vb.size()));
  }
  const int ka = std::max<int>(1, static_cast<int>(va.size()));
  const int kb = b >= 0 ? std::max<int>(1, static_cast<int>(vb.size())) : 1;
  std::vector<double> counts(static_cast<std::size_t>(ka) * kb, 0.0);
  double total = 0.0;
  for (int r = 0; r < data.n_rows; ++r) {
    if (data.is_missing(r, a) || (b >= 0 && data.is_missing(r, b))) continue;
    const int ia = va.at(static_cast<long long>(std::llround(data.at(r, a))));
    const int ib = b >= 0 ? vb.at(static_cast<long long>(std::llround(data.at(r, b)))) : 0;
    counts[static_cast<std::size_t>(ia) * kb + ib] += 1.0;
    total += 1.0;
  }
  if (total <= 0.0) throw corex::input_error("no jointly observed rows");
  for (double& c : counts) c /= total;
  return corex::DiscreteJoint(b >= 0 ? std::vector<int>{ka, kb}
                                     : std::vector<int>{ka},
                              counts);
}

void run_info(const InfoArgs& a) {
  require_format(a.format, "dense", "info");
  const corex::DataMatrix data = load_dense_input(a.input, a.missing_token);
  const bool discrete = looks_discrete(data);

  std::vector<double> entropies(data.n_cols);
  std::vector<std::pair<std::pair<int, int>, double>> pairs;
  std::optional<double> tc_estimate;

  if (discrete) {
    for (int c = 0; c < data.n_cols; ++c)
      entropies[c] = corex::entropy(pair_joint(data, c, -1), {0}).nats();
    for (int i = 0; i < data.n_cols; ++i)
      for (int j = i + 1; j < data.n_cols; ++j)
        pairs.push_back({{i, j},
                         corex::mutual_information(pair_joint(data, i, j), {0}, {1}).nats()});
  } else {
    const corex::Standardization st = corex::column_standardization(data);
    const corex::CorrelationResult prep = corex::prepare_correlation(data, st);
    const double half_log_2pie = 0.5 * std::log(2.0 * M_PI * std::exp(1.0));
    for (int c = 0; c < data.n_cols; ++c)
      entropies[c] = half_log_2pie + std::log(st.scales(c));
    for (int i = 0; i < data.n_cols; ++i)
      for (int j = i + 1; j < data.n_cols; ++j)
        pairs.push_back({{i, j},
                         corex::gaussian_mi_from_correlation(prep.correlation(i, j)).nats()});
    tc_estimate = corex::tc_gaussian(prep.correlation).nats();
  }

  std::stable_sort(pairs.begin(), pairs.end(),
                   [](const auto& x, const auto& y) { return x.second > y.second; });

  std::cout << data.n_rows << " rows, " << data.n_cols << " columns ("
            << (discrete ? "discrete" : "gaussian") << " treatment)\n";
  for (int c = 0; c < data.n_cols; ++c)
    std::cout << "H(" << data.column_label(c) << ") = " << a.units(entropies[c])
              << " " << a.units.name() << "\n";
  const std::size_t show = std::min<std::size_t>(pairs.size(), 10);
  for (std::size_t p = 0; p < show; ++p)
    std::cout << "I(" << data.column_label(pairs[p].first.first) << "; "
              << data.column_label(pairs[p].first.second)
              << ") = " << a.units(pairs[p].second) << " " << a.units.name() << "\n";
  if (tc_estimate)
    std::cout << "TC estimate = " << a.units(*tc_estimate) << " " << a.units.name()
              << "\n";

  if (!a.output.empty()) {
    json doc;
    doc["kind"] = discrete ? "discrete" : "gaussian";
    doc["n_cols"] = data.n_cols;
    doc["n_rows"] = data.n_rows;
    json ent = json::array();
    for (int c = 0; c < data.n_cols; ++c) {
      json e;
      e["entropy"] = entropies[c];
      e["name"] = data.column_label(c);
      ent.push_back(std::move(e));
    }
    doc["entropies"] = std::move(ent);
    json top = json::array();
    for (std::size_t p = 0; p < std::min<std::size_t>(pairs.size(), 50); ++p) {
      json e;
      e["a"] = data.column_label(pairs[p].first.first);
      e["b"] = data.column_label(pairs[p].first.second);
      e["mi"] = pairs[p].second;
      top.push_back(std::move(e));
    }
    doc["pairs"] = std::move(top);
    if (tc_estimate)
      doc["tc_estimate"] = *tc_estimate;
    else
      doc["tc_estimate"] = nullptr;
    corex::write_text_atomic(a.output, doc.dump(2) + "\n");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"corex: latent factor learning by total correlation explanation"};
  app.require_subcommand(1);

  FitLinearArgs fl;
  CLI::App* fit_linear = app.add_subcommand("fit-linear", "fit one linear factor layer");
  fit_linear->add_option("--input", fl.input, "dense data file")->required();
  fit_linear->add_option("--format", fl.format, "input format (dense)");
  fit_linear->add_option("--factors", fl.factors, "number of factors")->required();
  fit_linear->add_option("--seed", fl.seed, "random seed");
  fit_linear->add_option("--missing-token", fl.missing_token, "token marking missing cells");
  fit_linear->add_option("--output", fl.output, "model archive path")->required();
  fit_linear->add_flag("--bits", fl.units.bits, "print bits instead of nats");

  FitDiscreteArgs fd;
  CLI::App* fit_discrete =
      app.add_subcommand("fit-discrete", "fit one discrete factor layer");
  fit_discrete->add_option("--input", fd.input, "sparse data file")->required();
  fit_discrete->add_option("--format", fd.format, "input format (sparse)");
  fit_discrete->add_option("--factors", fd.factors, "number of factors")->required();
  fit_discrete->add_option("--seed", fd.seed, "random seed");
  fit_discrete->add_option("--anchors", fd.anchors_path, "anchor file");
  fit_discrete->add_option("--output", fd.output, "model archive path")->required();
  fit_discrete->add_flag("--bits", fd.units.bits, "print bits instead of nats");

  HierarchyArgs hi;
  CLI::App* hierarchy = app.add_subcommand("hierarchy", "stack factor layers");
  hierarchy->add_option("--input", hi.input, "data file")->required();
  hierarchy->add_option("--format", hi.format, "dense or sparse");
  hierarchy->add_option("--widths", hi.widths, "factor counts per layer")
      ->required()
      ->delimiter(',');
  hierarchy->add_option("--layers", hi.layers, "cap on layer count");
  hierarchy->add_option("--epsilon", hi.epsilon,
                        "stop when a layer's term falls below this (nats)");
  hierarchy->add_option("--seed", hi.seed, "random seed");
  hierarchy->add_option("--missing-token", hi.missing_token, "token marking missing cells");
  hierarchy->add_option("--output", hi.output, "model archive path")->required();
  hierarchy->add_flag("--bits", hi.units.bits, "print bits instead of nats");

  SieveArgs si;
  CLI::App* sieve = app.add_subcommand("sieve", "extract factors one at a time");
  sieve->add_option("--input", si.input, "dense data file")->required();
  sieve->add_option("--format", si.format, "input format (dense)");
  sieve->add_option("--factors", si.factors, "maximum components")->required();
  sieve->add_option("--epsilon", si.epsilon, "stop threshold (nats)");
  sieve->add_option("--seed", si.seed, "random seed");
  sieve->add_option("--missing-token", si.missing_token, "token marking missing cells");
  sieve->add_option("--output", si.output, "model archive path")->required();
  sieve->add_flag("--bits", si.units.bits, "print bits instead of nats");

  TransformArgs tr;
  CLI::App* transform = app.add_subcommand("transform", "apply a model to data");
  transform->add_option("--model", tr.model_path, "model archive")->required();
  transform->add_option("--input", tr.input, "data file")->required();
  transform->add_option("--format", tr.format, "dense or sparse");
  transform->add_option("--missing-token", tr.missing_token, "token marking missing cells");
  transform->add_option("--output", tr.output, "scores file")->required();

  CovarianceArgs cv;
  CLI::App* covariance =
      app.add_subcommand("covariance", "correlation implied by a linear model");
  covariance->add_option("--model", cv.model_path, "linear model archive")->required();
  covariance->add_flag("--original-units", cv.original_units,
                       "rescale by the recorded input scales");
  covariance->add_option("--output", cv.output, "matrix file")->required();

  TopicsArgs tp;
  CLI::App* topics = app.add_subcommand("topics", "ranked words per discrete factor");
  topics->add_option("--model", tp.model_path, "discrete model archive");
  topics->add_option("--input", tp.input, "sparse data file")->required();
  topics->add_option("--factors", tp.factors, "fit this many factors when no model given");
  topics->add_option("--anchors", tp.anchors_path, "anchor file (only when fitting)");
  topics->add_option("--top", tp.top, "words per factor");
  topics->add_option("--seed", tp.seed, "random seed (only when fitting)");
  topics->add_option("--output", tp.output, "topic table path")->required();
  topics->add_flag("--bits", tp.units.bits, "print bits instead of nats");

  TreeArgs te;
  CLI::App* tree = app.add_subcommand("tree", "export a hierarchy as a tree");
  tree->add_option("--model", te.model_path, "hierarchy model archive")->required();
  tree->add_option("--output", te.output, "tree file")->required();
  tree->add_option("--dot", te.dot_output, "DOT file (default: <output>.dot)");
  tree->add_flag("--bits", te.units.bits, "print bits instead of nats");

  InfoArgs in;
  CLI::App* info = app.add_subcommand("info", "per-variable entropies and pairwise MI");
  info->add_option("--input", in.input, "dense data file")->required();
  info->add_option("--format", in.format, "input format (dense)");
  info->add_option("--missing-token", in.missing_token, "token marking missing cells");
  info->add_option("--output", in.output, "summary file (optional)");
  info->add_flag("--bits", in.units.bits, "print bits instead of nats");

  try {
    app.parse(argc, argv);
    if (fit_linear->parsed()) run_fit_linear(fl);
    if (fit_discrete->parsed()) run_fit_discrete(fd);
    if (hierarchy->parsed()) run_hierarchy(hi);
    if (sieve->parsed()) run_sieve_cmd(si);
    if (transform->parsed()) run_transform(tr);
    if (covariance->parsed()) run_covariance(cv);
    if (topics->parsed()) run_topics(tp);
    if (tree->parsed()) run_tree(te);
    if (info->parsed()) run_info(in);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const corex::input_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const corex::numerical_error& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
