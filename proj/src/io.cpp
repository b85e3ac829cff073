#include "corex/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string_view>
#include <system_error>
#include <utility>

#include "json.hpp"

namespace corex {

namespace {

using nlohmann::json;

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

bool parse_double(std::string_view token, double* out) {
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  if (token.empty()) return false;
  const char* first = token.data();
  const char* last = first + token.size();
  auto [p, ec] = std::from_chars(first, last, *out);
  return ec == std::errc() && p == last;
}

bool parse_int(std::string_view token, long long* out) {
  if (token.empty()) return false;
  const char* first = token.data();
  const char* last = first + token.size();
  auto [p, ec] = std::from_chars(first, last, *out);
  return ec == std::errc() && p == last;
}

// Splits one line into trimmed cells. A space delimiter means runs of
// arbitrary whitespace.
std::vector<std::string> split_cells(const std::string& line, char delimiter) {
  std::vector<std::string> cells;
  if (delimiter == ' ') {
    std::istringstream in(line);
    std::string token;
    while (in >> token) cells.push_back(token);
    return cells;
  }
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(delimiter, start);
    if (pos == std::string::npos) {
      cells.push_back(trim(std::string_view(line).substr(start)));
      break;
    }
    cells.push_back(trim(std::string_view(line).substr(start, pos - start)));
    start = pos + 1;
  }
  return cells;
}

char sniff_delimiter(const std::string& line) {
  for (char c : {',', '\t', ';'})
    if (line.find(c) != std::string::npos) return c;
  return ' ';
}

}  // namespace

DataMatrix load_dense(const std::string& path, const DenseLoadOptions& options) {
  std::ifstream in(path);
  if (!in) throw input_error("cannot open " + path);

  std::vector<double> values;
  std::vector<std::uint8_t> mask;
  std::vector<std::string> names;
  int n_cols = -1;
  int n_rows = 0;
  char delimiter = options.delimiter;
  bool saw_content = false;
  const bool has_missing_token = !options.missing_token.empty();

  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    if (delimiter == '\0') delimiter = sniff_delimiter(line);
    std::vector<std::string> cells = split_cells(line, delimiter);

    if (!saw_content) {
      saw_content = true;
      bool header = options.header == DenseLoadOptions::Header::yes;
      if (options.header == DenseLoadOptions::Header::automatic) {
        for (const std::string& cell : cells) {
          double ignored;
          if (has_missing_token && cell == options.missing_token) continue;
          if (!parse_double(cell, &ignored)) {
            header = true;
            break;
          }
        }
      }
      n_cols = static_cast<int>(cells.size());
      if (header) {
        names = std::move(cells);
        continue;
      }
    }

    if (static_cast<int>(cells.size()) != n_cols) {
      throw input_error("line " + std::to_string(line_no) + ": expected " +
                        std::to_string(n_cols) + " cells, found " +
                        std::to_string(cells.size()));
    }
    for (int c = 0; c < n_cols; ++c) {
      if (has_missing_token && cells[c] == options.missing_token) {
        values.push_back(0.0);
        mask.push_back(1);
        continue;
      }
      double v;
      if (!parse_double(cells[c], &v)) {
        throw input_error("line " + std::to_string(line_no) + ", column " +
                          std::to_string(c + 1) + ": cannot parse \"" +
                          cells[c] + "\" as a number");
      }
      values.push_back(v);
      mask.push_back(0);
    }
    ++n_rows;
  }
  if (!saw_content) throw input_error(path + " contains no data");
  if (n_rows == 0) throw input_error(path + " has a header but no rows");

  DataMatrix data;
  data.n_rows = n_rows;
  data.n_cols = n_cols;
  data.values = std::move(values);
  data.missing = std::move(mask);
  data.column_names = std::move(names);
  data.validate();
  return data;
}

void write_dense(const std::string& path, const DataMatrix& data,
                 char delimiter, const std::string& missing_token) {
  std::ostringstream out;
  out << std::setprecision(17);
  if (!data.column_names.empty()) {
    for (int c = 0; c < data.n_cols; ++c) {
      if (c > 0) out << delimiter;
      out << data.column_names[c];
    }
    out << '\n';
  }
  for (int r = 0; r < data.n_rows; ++r) {
    for (int c = 0; c < data.n_cols; ++c) {
      if (c > 0) out << delimiter;
      if (data.is_missing(r, c))
        out << missing_token;
      else
        out << data.at(r, c);
    }
    out << '\n';
  }
  write_text_atomic(path, out.str());
}

SparseBinaryData load_sparse(const std::string& path,
                             std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) throw input_error("cannot open " + path);

  SparseBinaryData data;
  long long dims_r = -1;
  long long dims_c = -1;
  long long max_r = -1;
  long long max_c = -1;
  bool saw_content = false;

  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string text = trim(line);
    if (text.empty()) continue;
    const std::string at_line = "line " + std::to_string(line_no) + ": ";

    if (text.front() == '%') {
      std::istringstream ls(text);
      std::string tag;
      ls >> tag;
      if (tag != "%dims" || saw_content)
        throw input_error(at_line + "unrecognized directive \"" + tag + "\"");
      if (!(ls >> dims_r >> dims_c) || dims_r < 0 || dims_c < 0)
        throw input_error(at_line + "%dims needs two nonnegative integers");
      std::string extra;
      if (ls >> extra) throw input_error(at_line + "%dims has trailing content");
      saw_content = true;
      continue;
    }
    saw_content = true;

    std::istringstream ls(text);
    std::vector<std::string> tokens;
    std::string token;
    while (ls >> token) tokens.push_back(token);
    if (tokens.size() != 2 && tokens.size() != 3)
      throw input_error(at_line + "expected \"row col\" or \"row col 1\"");
    long long r, c;
    if (!parse_int(tokens[0], &r) || !parse_int(tokens[1], &c))
      throw input_error(at_line + "indices must be integers");
    if (r < 0 || c < 0) throw input_error(at_line + "negative index");
    if (tokens.size() == 3 && tokens[2] != "1")
      throw input_error(at_line + "entry value must be 1 (binarize upstream)");
    if (dims_r >= 0 && (r >= dims_r || c >= dims_c))
      throw input_error(at_line + "index outside declared %dims");
    max_r = std::max(max_r, r);
    max_c = std::max(max_c, c);
    data.entries.emplace_back(static_cast<int>(r), static_cast<int>(c));
  }

  data.n_docs = static_cast<int>(dims_r >= 0 ? dims_r : max_r + 1);
  data.n_vars = static_cast<int>(dims_c >= 0 ? dims_c : max_c + 1);
  const std::size_t before = data.entries.size();
  data.normalize();
  if (warnings && data.entries.size() < before) {
    warnings->push_back(std::to_string(before - data.entries.size()) +
                        " duplicate entries collapsed");
  }
  data.validate();
  return data;
}

// --- model archives -------------------------------------------------------

namespace {

json vec_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json mat_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

[[noreturn]] void fail_field(const std::string& where, const std::string& why) {
  throw input_error("model archive: field " + where + " " + why);
}

const json& field(const json& j, const char* key, const std::string& where) {
  if (!j.is_object()) fail_field(where, "is not an object");
  const auto it = j.find(key);
  if (it == j.end())
    throw input_error("model archive: missing field " + where + "." + key);
  return *it;
}

std::string join(const std::string& where, const char* key) {
  return where + "." + key;
}

double get_double(const json& j, const char* key, const std::string& where) {
  const json& v = field(j, key, where);
  if (!v.is_number()) fail_field(join(where, key), "is not a number");
  return v.get<double>();
}

int get_int(const json& j, const char* key, const std::string& where) {
  const json& v = field(j, key, where);
  if (!v.is_number_integer()) fail_field(join(where, key), "is not an integer");
  return v.get<int>();
}

std::uint64_t get_u64(const json& j, const char* key, const std::string& where) {
  const json& v = field(j, key, where);
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<long long>() >= 0)
    return static_cast<std::uint64_t>(v.get<long long>());
  fail_field(join(where, key), "is not a nonnegative integer");
}

bool get_bool(const json& j, const char* key, const std::string& where) {
  const json& v = field(j, key, where);
  if (!v.is_boolean()) fail_field(join(where, key), "is not a boolean");
  return v.get<bool>();
}

std::string get_string(const json& j, const char* key, const std::string& where) {
  const json& v = field(j, key, where);
  if (!v.is_string()) fail_field(join(where, key), "is not a string");
  return v.get<std::string>();
}

const json& get_array(const json& j, const char* key, const std::string& where) {
  const json& v = field(j, key, where);
  if (!v.is_array()) fail_field(join(where, key), "is not an array");
  return v;
}

Eigen::VectorXd get_vec(const json& j, const char* key, const std::string& where) {
  const json& a = get_array(j, key, where);
  Eigen::VectorXd v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a[i].is_number()) fail_field(join(where, key), "holds a non-number");
    v(static_cast<Eigen::Index>(i)) = a[i].get<double>();
  }
  return v;
}

Eigen::MatrixXd get_mat(const json& j, const char* key, const std::string& where) {
  const json& rows = get_array(j, key, where);
  const std::size_t n_rows = rows.size();
  std::size_t n_cols = 0;
  if (n_rows > 0) {
    if (!rows[0].is_array()) fail_field(join(where, key), "is not a matrix");
    n_cols = rows[0].size();
  }
  Eigen::MatrixXd m(n_rows, n_cols);
  for (std::size_t r = 0; r < n_rows; ++r) {
    if (!rows[r].is_array() || rows[r].size() != n_cols)
      fail_field(join(where, key), "has ragged rows");
    for (std::size_t c = 0; c < n_cols; ++c) {
      if (!rows[r][c].is_number()) fail_field(join(where, key), "holds a non-number");
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          rows[r][c].get<double>();
    }
  }
  return m;
}

std::vector<double> get_dvec(const json& j, const char* key,
                             const std::string& where) {
  const json& a = get_array(j, key, where);
  std::vector<double> v;
  v.reserve(a.size());
  for (const json& x : a) {
    if (!x.is_number()) fail_field(join(where, key), "holds a non-number");
    v.push_back(x.get<double>());
  }
  return v;
}

std::vector<int> get_ivec(const json& j, const char* key, const std::string& where) {
  const json& a = get_array(j, key, where);
  std::vector<int> v;
  v.reserve(a.size());
  for (const json& x : a) {
    if (!x.is_number_integer()) fail_field(join(where, key), "holds a non-integer");
    v.push_back(x.get<int>());
  }
  return v;
}

std::vector<std::string> get_svec(const json& j, const char* key,
                                  const std::string& where) {
  const json& a = get_array(j, key, where);
  std::vector<std::string> v;
  v.reserve(a.size());
  for (const json& x : a) {
    if (!x.is_string()) fail_field(join(where, key), "holds a non-string");
    v.push_back(x.get<std::string>());
  }
  return v;
}

// --- configs ---

json train_config_json(const TrainConfig& c) {
  json j;
  j["eigenvalue_clip"] = c.eigenvalue_clip;
  j["max_iterations"] = c.max_iterations;
  j["n_restarts"] = c.n_restarts;
  j["objective_tolerance"] = c.objective_tolerance;
  j["seed"] = c.seed;
  j["step_size"] = c.step_size;
  j["tolerance_streak"] = c.tolerance_streak;
  j["weight_norm_cap"] = c.weight_norm_cap;
  return j;
}

TrainConfig train_config_from(const json& j, const std::string& where) {
  TrainConfig c;
  c.eigenvalue_clip = get_double(j, "eigenvalue_clip", where);
  c.max_iterations = get_int(j, "max_iterations", where);
  c.n_restarts = get_int(j, "n_restarts", where);
  c.objective_tolerance = get_double(j, "objective_tolerance", where);
  c.seed = get_u64(j, "seed", where);
  c.step_size = get_double(j, "step_size", where);
  c.tolerance_streak = get_int(j, "tolerance_streak", where);
  c.weight_norm_cap = get_double(j, "weight_norm_cap", where);
  return c;
}

json discrete_config_json(const DiscreteTrainConfig& c) {
  json j;
  j["beta"] = c.beta;
  j["factor_cardinality"] = c.factor_cardinality;
  j["max_iterations"] = c.max_iterations;
  j["seed"] = c.seed;
  j["smoothing_strength"] = c.smoothing_strength;
  j["tolerance"] = c.tolerance;
  return j;
}

DiscreteTrainConfig discrete_config_from(const json& j, const std::string& where) {
  DiscreteTrainConfig c;
  c.beta = get_double(j, "beta", where);
  c.factor_cardinality = get_int(j, "factor_cardinality", where);
  c.max_iterations = get_int(j, "max_iterations", where);
  c.seed = get_u64(j, "seed", where);
  c.smoothing_strength = get_double(j, "smoothing_strength", where);
  c.tolerance = get_double(j, "tolerance", where);
  return c;
}

// --- linear payload ---

json linear_payload(const LinearLayer& layer, const FitReport& report) {
  json p;
  p["cov_xy"] = mat_json(layer.cov_xy());
  p["cov_y"] = mat_json(layer.cov_y());
  p["input_means"] = vec_json(layer.input_means());
  p["input_scales"] = vec_json(layer.input_scales());
  p["noise_variance"] = vec_json(layer.noise_variance());
  p["weights"] = mat_json(layer.weights());
  json r;
  r["converged"] = report.converged;
  r["iterations_run"] = report.iterations_run;
  r["objective_trace"] = report.objective_trace;
  r["pd_projected"] = report.pd_projected;
  r["tc_lower_bound"] = report.tc_lower_bound;
  r["warnings"] = report.warnings;
  p["report"] = std::move(r);
  return p;
}

void linear_from(const json& p, const std::string& where, LinearLayer* layer,
                 FitReport* report) {
  Eigen::MatrixXd weights = get_mat(p, "weights", where);
  const Eigen::Index m = weights.rows();
  const Eigen::Index n = weights.cols();
  Eigen::VectorXd noise = get_vec(p, "noise_variance", where);
  Eigen::VectorXd means = get_vec(p, "input_means", where);
  Eigen::VectorXd scales = get_vec(p, "input_scales", where);
  Eigen::MatrixXd cov_xy = get_mat(p, "cov_xy", where);
  Eigen::MatrixXd cov_y = get_mat(p, "cov_y", where);
  if (noise.size() != m) fail_field(join(where, "noise_variance"), "has wrong length");
  if (means.size() != n) fail_field(join(where, "input_means"), "has wrong length");
  if (scales.size() != n) fail_field(join(where, "input_scales"), "has wrong length");
  if (cov_xy.rows() != n || cov_xy.cols() != m)
    fail_field(join(where, "cov_xy"), "has wrong shape");
  if (cov_y.rows() != m || cov_y.cols() != m)
    fail_field(join(where, "cov_y"), "has wrong shape");
  *layer = LinearLayer::from_moments(std::move(weights), std::move(noise),
                                     std::move(means), std::move(scales),
                                     std::move(cov_xy), std::move(cov_y));
  const json& r = field(p, "report", where);
  const std::string rw = join(where, "report");
  report->converged = get_bool(r, "converged", rw);
  report->iterations_run = get_int(r, "iterations_run", rw);
  report->objective_trace = get_dvec(r, "objective_trace", rw);
  report->pd_projected = get_bool(r, "pd_projected", rw);
  report->tc_lower_bound = get_double(r, "tc_lower_bound", rw);
  report->warnings = get_svec(r, "warnings", rw);
}

// --- discrete payload ---

json discrete_payload(const DiscreteFactorModel& model,
                      const DiscreteFitReport& report) {
  const int m = model.n_factors();
  const int k = model.factor_cardinality();
  const int n = model.n_vars();
  json p;
  p["cardinality"] = k;
  p["n_factors"] = m;
  p["n_vars"] = n;
  p["alpha"] = mat_json(model.alpha_matrix());

  json prior = json::array();
  for (int j = 0; j < m; ++j) {
    json states = json::array();
    for (int s = 0; s < k; ++s) states.push_back(model.log_prior(j, s));
    prior.push_back(std::move(states));
  }
  p["log_prior"] = std::move(prior);

  json marg = json::array();
  for (int j = 0; j < m; ++j) {
    json states = json::array();
    for (int s = 0; s < k; ++s) {
      json vars = json::array();
      for (int i = 0; i < n; ++i)
        vars.push_back(json::array({model.log_marginal(j, s, i, 0),
                                    model.log_marginal(j, s, i, 1)}));
      states.push_back(std::move(vars));
    }
    marg.push_back(std::move(states));
  }
  p["log_marginals"] = std::move(marg);

  json px = json::array();
  for (int i = 0; i < n; ++i)
    px.push_back(json::array({model.log_px(i, 0), model.log_px(i, 1)}));
  p["log_px"] = std::move(px);

  json anchors = json::array();
  for (const auto& [var, factor] : model.anchors())
    anchors.push_back(json::array({var, factor}));
  p["anchors"] = std::move(anchors);

  json r;
  r["converged"] = report.converged;
  r["excluded_columns"] = report.excluded_columns;
  r["iteration_trace"] = report.iteration_trace;
  r["iterations_run"] = report.iterations_run;
  r["tc_bound_per_factor"] = report.tc_bound_per_factor;
  r["total_bound"] = report.total_bound;
  p["report"] = std::move(r);
  return p;
}

void discrete_from(const json& p, const std::string& where,
                   DiscreteFactorModel* model, DiscreteFitReport* report) {
  const int k = get_int(p, "cardinality", where);
  const int m = get_int(p, "n_factors", where);
  const int n = get_int(p, "n_vars", where);
  if (m < 1 || n < 1 || k < 2) fail_field(where, "has inconsistent dimensions");
  DiscreteFactorModel out(n, m, k);

  const json& prior = get_array(p, "log_prior", where);
  if (static_cast<int>(prior.size()) != m)
    fail_field(join(where, "log_prior"), "has wrong length");
  for (int j = 0; j < m; ++j) {
    if (!prior[j].is_array() || static_cast<int>(prior[j].size()) != k)
      fail_field(join(where, "log_prior"), "has ragged rows");
    for (int s = 0; s < k; ++s) {
      if (!prior[j][s].is_number())
        fail_field(join(where, "log_prior"), "holds a non-number");
      out.set_log_prior(j, s, prior[j][s].get<double>());
    }
  }

  const json& marg = get_array(p, "log_marginals", where);
  if (static_cast<int>(marg.size()) != m)
    fail_field(join(where, "log_marginals"), "has wrong length");
  for (int j = 0; j < m; ++j) {
    const json& states = marg[j];
    if (!states.is_array() || static_cast<int>(states.size()) != k)
      fail_field(join(where, "log_marginals"), "has ragged state lists");
    for (int s = 0; s < k; ++s) {
      const json& vars = states[s];
      if (!vars.is_array() || static_cast<int>(vars.size()) != n)
        fail_field(join(where, "log_marginals"), "has ragged variable lists");
      for (int i = 0; i < n; ++i) {
        const json& pair = vars[i];
        if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() ||
            !pair[1].is_number())
          fail_field(join(where, "log_marginals"), "holds a malformed value pair");
        out.set_log_marginal(j, s, i, 0, pair[0].get<double>());
        out.set_log_marginal(j, s, i, 1, pair[1].get<double>());
      }
    }
  }

  const json& px = get_array(p, "log_px", where);
  if (static_cast<int>(px.size()) != n)
    fail_field(join(where, "log_px"), "has wrong length");
  for (int i = 0; i < n; ++i) {
    const json& pair = px[i];
    if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() ||
        !pair[1].is_number())
      fail_field(join(where, "log_px"), "holds a malformed value pair");
    out.set_log_px(i, 0, pair[0].get<double>());
    out.set_log_px(i, 1, pair[1].get<double>());
  }

  const Eigen::MatrixXd alpha = get_mat(p, "alpha", where);
  if (alpha.rows() != n || alpha.cols() != m)
    fail_field(join(where, "alpha"), "has wrong shape");
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) out.set_alpha(i, j, alpha(i, j));

  const json& anchors = get_array(p, "anchors", where);
  std::map<int, int> amap;
  for (const json& pair : anchors) {
    if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number_integer() ||
        !pair[1].is_number_integer())
      fail_field(join(where, "anchors"), "holds a malformed pair");
    amap[pair[0].get<int>()] = pair[1].get<int>();
  }
  out.set_anchors(std::move(amap));

  try {
    out.validate();
  } catch (const input_error& e) {
    throw input_error("model archive: " + where + ": " + e.what());
  }

  const json& r = field(p, "report", where);
  const std::string rw = join(where, "report");
  report->converged = get_bool(r, "converged", rw);
  report->excluded_columns = get_ivec(r, "excluded_columns", rw);
  report->iteration_trace = get_dvec(r, "iteration_trace", rw);
  report->iterations_run = get_int(r, "iterations_run", rw);
  report->tc_bound_per_factor = get_dvec(r, "tc_bound_per_factor", rw);
  report->total_bound = get_double(r, "total_bound", rw);
  *model = std::move(out);
}

// --- hierarchy payload ---

json hierarchy_payload(const HierarchyModel& model) {
  json p;
  p["family"] = model.family == LayerFamily::linear ? "linear" : "discrete";
  p["input_names"] = model.input_names;
  p["seed"] = model.seed;
  json layers = json::array();
  for (const HierarchyLayer& layer : model.layers) {
    json l;
    l["factor_bounds"] = layer.factor_bounds;
    l["n_factors"] = layer.n_factors;
    l["n_inputs"] = layer.n_inputs;
    l["parent"] = layer.parent;
    l["parent_mi"] = mat_json(layer.parent_mi);
    l["term"] = layer.term;
    if (model.family == LayerFamily::linear)
      l["model"] = linear_payload(layer.linear, layer.linear_report);
    else
      l["model"] = discrete_payload(layer.discrete, layer.discrete_report);
    layers.push_back(std::move(l));
  }
  p["layers"] = std::move(layers);
  return p;
}

HierarchyModel hierarchy_from(const json& p, const std::string& where) {
  HierarchyModel model;
  const std::string family = get_string(p, "family", where);
  if (family == "linear")
    model.family = LayerFamily::linear;
  else if (family == "discrete")
    model.family = LayerFamily::discrete;
  else
    fail_field(join(where, "family"), "must be \"linear\" or \"discrete\"");
  model.input_names = get_svec(p, "input_names", where);
  model.seed = get_u64(p, "seed", where);

  const json& layers = get_array(p, "layers", where);
  if (layers.empty()) fail_field(join(where, "layers"), "is empty");
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const std::string lw = where + ".layers[" + std::to_string(k) + "]";
    const json& l = layers[k];
    HierarchyLayer rec;
    rec.factor_bounds = get_dvec(l, "factor_bounds", lw);
    rec.n_factors = get_int(l, "n_factors", lw);
    rec.n_inputs = get_int(l, "n_inputs", lw);
    rec.parent = get_ivec(l, "parent", lw);
    rec.parent_mi = get_mat(l, "parent_mi", lw);
    rec.term = get_double(l, "term", lw);
    const json& m = field(l, "model", lw);
    if (model.family == LayerFamily::linear)
      linear_from(m, join(lw, "model"), &rec.linear, &rec.linear_report);
    else
      discrete_from(m, join(lw, "model"), &rec.discrete, &rec.discrete_report);
    if (rec.parent_mi.rows() != rec.n_inputs || rec.parent_mi.cols() != rec.n_factors)
      fail_field(join(lw, "parent_mi"), "has wrong shape");
    if (static_cast<int>(rec.parent.size()) != rec.n_inputs)
      fail_field(join(lw, "parent"), "has wrong length");
    model.layers.push_back(std::move(rec));
  }
  return model;
}

// --- sieve payload ---

json sieve_payload(const SieveModel& model, int k_max, double epsilon) {
  json p;
  p["column_names"] = model.column_names;
  p["cumulative_tc"] = model.cumulative_tc;
  p["epsilon"] = epsilon;
  p["instability_stop"] = model.instability_stop;
  p["k_max"] = k_max;
  p["n_vars"] = model.n_vars;
  json comps = json::array();
  for (const SieveComponent& c : model.components) {
    json e;
    e["active_columns"] = c.active_columns;
    e["dropped_columns"] = c.dropped_columns;
    e["extracted_tc"] = c.extracted_tc;
    e["pd_projected"] = c.pd_projected;
    e["regression_loadings"] = vec_json(c.regression_loadings);
    e["saturated"] = c.saturated;
    e["weights"] = vec_json(c.weights);
    comps.push_back(std::move(e));
  }
  p["components"] = std::move(comps);
  return p;
}

SieveModel sieve_from(const json& p, const std::string& where, int* k_max,
                      double* epsilon) {
  SieveModel model;
  model.column_names = get_svec(p, "column_names", where);
  model.cumulative_tc = get_dvec(p, "cumulative_tc", where);
  model.instability_stop = get_bool(p, "instability_stop", where);
  model.n_vars = get_int(p, "n_vars", where);
  *k_max = get_int(p, "k_max", where);
  *epsilon = get_double(p, "epsilon", where);
  const json& comps = get_array(p, "components", where);
  for (std::size_t i = 0; i < comps.size(); ++i) {
    const std::string cw = where + ".components[" + std::to_string(i) + "]";
    const json& e = comps[i];
    SieveComponent c;
    c.active_columns = get_ivec(e, "active_columns", cw);
    c.dropped_columns = get_ivec(e, "dropped_columns", cw);
    c.extracted_tc = get_double(e, "extracted_tc", cw);
    c.pd_projected = get_bool(e, "pd_projected", cw);
    c.regression_loadings = get_vec(e, "regression_loadings", cw);
    c.saturated = get_bool(e, "saturated", cw);
    c.weights = get_vec(e, "weights", cw);
    if (c.weights.size() != static_cast<Eigen::Index>(c.active_columns.size()))
      fail_field(join(cw, "weights"), "has wrong length");
    if (c.regression_loadings.size() != c.weights.size())
      fail_field(join(cw, "regression_loadings"), "has wrong length");
    model.components.push_back(std::move(c));
  }
  if (model.cumulative_tc.size() != model.components.size())
    fail_field(join(where, "cumulative_tc"), "has wrong length");
  return model;
}

}  // namespace

void save_model(const ModelArchive& archive, const std::string& path) {
  json doc;
  doc["format_version"] = archive.format_version;
  doc["model_kind"] = archive.model_kind;
  doc["seed"] = archive.seed;
  if (archive.model_kind == "linear") {
    doc["fit_config"] = train_config_json(archive.linear_config);
    doc["payload"] = linear_payload(archive.linear, archive.linear_report);
  } else if (archive.model_kind == "discrete") {
    doc["fit_config"] = discrete_config_json(archive.discrete_config);
    doc["payload"] = discrete_payload(archive.discrete, archive.discrete_report);
  } else if (archive.model_kind == "hierarchy") {
    json cfg;
    cfg["discrete"] = discrete_config_json(archive.hierarchy_config.discrete);
    cfg["linear"] = train_config_json(archive.hierarchy_config.linear);
    cfg["seed"] = archive.hierarchy_config.seed;
    doc["fit_config"] = std::move(cfg);
    doc["payload"] = hierarchy_payload(archive.hierarchy);
  } else if (archive.model_kind == "sieve") {
    json cfg;
    cfg["tc_cap"] = archive.sieve_config.tc_cap;
    cfg["train"] = train_config_json(archive.sieve_config.train);
    cfg["variance_floor"] = archive.sieve_config.variance_floor;
    doc["fit_config"] = std::move(cfg);
    doc["payload"] =
        sieve_payload(archive.sieve, archive.sieve_k_max, archive.sieve_epsilon);
  } else {
    throw input_error("unknown model_kind \"" + archive.model_kind + "\"");
  }
  write_text_atomic(path, doc.dump(2) + "\n");
}

ModelArchive load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw input_error("cannot open " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw input_error("not a valid model archive: " + std::string(e.what()));
  }

  ModelArchive archive;
  archive.format_version = get_int(doc, "format_version", "archive");
  if (archive.format_version != ModelArchive::kFormatVersion) {
    throw input_error("unsupported format_version " +
                      std::to_string(archive.format_version) + " (this build reads " +
                      std::to_string(ModelArchive::kFormatVersion) + ")");
  }
  archive.model_kind = get_string(doc, "model_kind", "archive");
  archive.seed = get_u64(doc, "seed", "archive");
  const json& payload = field(doc, "payload", "archive");
  const json& cfg = field(doc, "fit_config", "archive");

  if (archive.model_kind == "linear") {
    archive.linear_config = train_config_from(cfg, "fit_config");
    linear_from(payload, "payload", &archive.linear, &archive.linear_report);
  } else if (archive.model_kind == "discrete") {
    archive.discrete_config = discrete_config_from(cfg, "fit_config");
    discrete_from(payload, "payload", &archive.discrete, &archive.discrete_report);
  } else if (archive.model_kind == "hierarchy") {
    archive.hierarchy_config.discrete =
        discrete_config_from(field(cfg, "discrete", "fit_config"), "fit_config.discrete");
    archive.hierarchy_config.linear =
        train_config_from(field(cfg, "linear", "fit_config"), "fit_config.linear");
    archive.hierarchy_config.seed = get_u64(cfg, "seed", "fit_config");
    archive.hierarchy = hierarchy_from(payload, "payload");
  } else if (archive.model_kind == "sieve") {
    archive.sieve_config.tc_cap = get_double(cfg, "tc_cap", "fit_config");
    archive.sieve_config.train =
        train_config_from(field(cfg, "train", "fit_config"), "fit_config.train");
    archive.sieve_config.variance_floor = get_double(cfg, "variance_floor", "fit_config");
    archive.sieve = sieve_from(payload, "payload", &archive.sieve_k_max,
                               &archive.sieve_epsilon);
  } else {
    throw input_error("unknown model_kind \"" + archive.model_kind + "\"");
  }
  return archive;
}

// --- tree exports ----------------------------------------------------------

std::string tree_json(const TreeExport& tree) {
  json doc;
  json nodes = json::array();
  for (const TreeNode& n : tree.nodes) {
    json e;
    e["bound"] = n.bound;
    e["id"] = n.id;
    e["index"] = n.index;
    e["label"] = n.label;
    e["layer"] = n.layer;
    nodes.push_back(std::move(e));
  }
  json edges = json::array();
  for (const TreeEdge& n : tree.edges) {
    json e;
    e["child"] = n.child;
    e["mi"] = n.mi;
    e["parent"] = n.parent;
    edges.push_back(std::move(e));
  }
  doc["edges"] = std::move(edges);
  doc["nodes"] = std::move(nodes);
  return doc.dump(2) + "\n";
}

namespace {
std::string dot_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out;
}
}  // namespace

std::string tree_dot(const TreeExport& tree) {
  std::ostringstream out;
  out << "digraph factors {\n  rankdir=BT;\n";
  for (const TreeNode& n : tree.nodes) {
    out << "  \"" << dot_escape(n.id) << "\" [label=\"" << dot_escape(n.label)
        << "\"";
    if (n.layer > 0) out << ", shape=box";
    out << "];\n";
  }
  for (const TreeEdge& e : tree.edges) {
    out << "  \"" << dot_escape(e.child) << "\" -> \"" << dot_escape(e.parent)
        << "\" [label=\"" << std::fixed << std::setprecision(4) << e.mi
        << "\"];\n";
  }
  out << "}\n";
  return out.str();
}

void write_text_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp(target);
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw input_error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw input_error("failed while writing " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw input_error("cannot move " + tmp.string() + " into place: " + ec.message());
  }
}

}  // namespace corex
