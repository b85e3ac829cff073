#include "corex/discrete_corex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "corex/rng.hpp"

namespace corex {

namespace {

constexpr double kProbFloor = 1e-12;

double safe_log(double p) { return std::log(std::max(p, kProbFloor)); }

// Per-iteration sufficient statistics. ones_count is indexed (j, s, i)
// like the marginal table; missing corrections are kept separately and
// allocated only when the data has missing cells.
struct Accumulators {
  Eigen::MatrixXd state_mass;          // n_factors x cardinality, sum of q
  std::vector<double> ones_count;      // m * k * n, posterior-weighted 1s
  std::vector<double> missing_mass;    // m * k * n, mass to subtract, or empty
  Eigen::VectorXd neg_entropy;         // per factor, sum over docs of q log q

  Accumulators(int m, int k, int n, bool any_missing)
      : state_mass(Eigen::MatrixXd::Zero(m, k)),
        ones_count(static_cast<std::size_t>(m) * k * n, 0.0),
        neg_entropy(Eigen::VectorXd::Zero(m)) {
    if (any_missing) missing_mass.assign(static_cast<std::size_t>(m) * k * n, 0.0);
  }

  void add_doc(const std::vector<int>& ones, const std::vector<int>& missing,
               const Eigen::MatrixXd& q, int k, int n) {
    const int m = static_cast<int>(q.rows());
    state_mass += q;
    for (int j = 0; j < m; ++j) {
      for (int s = 0; s < k; ++s) {
        const double w = q(j, s);
        neg_entropy(j) += plogp(w);
        const std::size_t row = (static_cast<std::size_t>(j) * k + s) * n;
        for (int i : ones) ones_count[row + i] += w;
        if (!missing_mass.empty())
          for (int i : missing) missing_mass[row + i] += w;
      }
    }
  }
};

struct ColumnStats {
  std::vector<double> observed_docs;  // per variable, docs with evidence
  std::vector<double> ones_total;     // per variable, observed ones
  std::vector<double> px1;            // smoothed marginal p(x_i = 1)
  std::vector<int> excluded;          // variables with no observed ones
};

ColumnStats column_stats(const SparseBinaryData& data, const SparseRows& rows) {
  ColumnStats st;
  st.observed_docs.assign(data.n_vars, static_cast<double>(data.n_docs));
  st.ones_total.assign(data.n_vars, 0.0);
  st.px1.resize(data.n_vars);
  for (const auto& doc : rows.missing)
    for (int i : doc) st.observed_docs[i] -= 1.0;
  for (const auto& doc : rows.ones)
    for (int i : doc) st.ones_total[i] += 1.0;
  for (int i = 0; i < data.n_vars; ++i) {
    st.px1[i] = (st.ones_total[i] + 0.5) / (st.observed_docs[i] + 1.0);
    if (st.ones_total[i] <= 0.0 || st.observed_docs[i] <= 0.0)
      st.excluded.push_back(i);
  }
  return st;
}

// log p(x_i = v | y_j = s) - log p(x_i = v), weighted by alpha, folded
// into the two quantities sparse evaluation needs: the all-zeros baseline
// and the per-variable swap term for observed ones.
struct EvalTables {
  Eigen::MatrixXd baseline;       // m x k
  std::vector<double> one_delta;  // m * k * n: swap zero evidence for one
  std::vector<double> zero_term;  // m * k * n: zero-evidence contribution
};

EvalTables build_eval_tables(const DiscreteFactorModel& model) {
  const int m = model.n_factors();
  const int k = model.factor_cardinality();
  const int n = model.n_vars();
  EvalTables t;
  t.baseline.resize(m, k);
  t.one_delta.resize(static_cast<std::size_t>(m) * k * n);
  t.zero_term.resize(static_cast<std::size_t>(m) * k * n);
  for (int j = 0; j < m; ++j) {
    for (int s = 0; s < k; ++s) {
      double base = model.log_prior(j, s);
      const std::size_t row = (static_cast<std::size_t>(j) * k + s) * n;
      for (int i = 0; i < n; ++i) {
        const double a = model.alpha(i, j);
        const double z = a * (model.log_marginal(j, s, i, 0) - model.log_px(i, 0));
        const double o = a * (model.log_marginal(j, s, i, 1) - model.log_px(i, 1));
        t.zero_term[row + i] = z;
        t.one_delta[row + i] = o - z;
        base += z;
      }
      t.baseline(j, s) = base;
    }
  }
  return t;
}

Eigen::MatrixXd posterior_from_tables(const EvalTables& t, int m, int k, int n,
                                      const std::vector<int>& ones,
                                      const std::vector<int>& missing) {
  Eigen::MatrixXd q(m, k);
  for (int j = 0; j < m; ++j) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int s = 0; s < k; ++s) {
      const std::size_t row = (static_cast<std::size_t>(j) * k + s) * n;
      double v = t.baseline(j, s);
      for (int i : ones) v += t.one_delta[row + i];
      for (int i : missing) v -= t.zero_term[row + i];
      q(j, s) = v;
      mx = std::max(mx, v);
    }
    double z = 0.0;
    for (int s = 0; s < k; ++s) {
      q(j, s) = std::exp(q(j, s) - mx);
      z += q(j, s);
    }
    q.row(j) /= z;
  }
  return q;
}

// Plug-in I(X_i;Y_j) from posterior-weighted counts. joint mass of
// (x_i = 1, s) is ones_count; the zero cell is the remaining observed mass.
Eigen::MatrixXd mi_from_counts(const Accumulators& acc, const ColumnStats& st,
                               int m, int k, int n) {
  Eigen::MatrixXd mi = Eigen::MatrixXd::Zero(n, m);
  for (int i = 0; i < n; ++i) {
    const double total = st.observed_docs[i];
    if (total <= 0.0 || st.ones_total[i] <= 0.0) continue;
    const double p1 = st.ones_total[i] / total;
    const double pv[2] = {1.0 - p1, p1};
    for (int j = 0; j < m; ++j) {
      double value = 0.0;
      for (int s = 0; s < k; ++s) {
        const std::size_t row = (static_cast<std::size_t>(j) * k + s) * n;
        const double miss =
            acc.missing_mass.empty() ? 0.0 : acc.missing_mass[row + i];
        const double mass = acc.state_mass(j, s) - miss;
        const double c1 = std::clamp(acc.ones_count[row + i], 0.0, mass);
        const double ps = mass / total;
        const double joint[2] = {(mass - c1) / total, c1 / total};
        for (int v = 0; v < 2; ++v) {
          if (joint[v] > 1e-15 && ps > 1e-15)
            value += joint[v] * (std::log(joint[v]) - std::log(pv[v]) - std::log(ps));
        }
      }
      mi(i, j) = std::max(value, 0.0);
    }
  }
  return mi;
}

struct MStepResult {
  Eigen::MatrixXd mi;      // n x m
  double total_bound = 0.0;
  Eigen::VectorXd factor_bound;  // per factor, unclamped
};

// Re-estimates priors and marginals from the accumulated posteriors,
// refreshes alpha by soft competition, and evaluates the bound
//   sum_j [ sum_i alpha_ij I_ij - mean KL(q_j || prior_j) ].
MStepResult m_step(const Accumulators& acc, const ColumnStats& st,
                   const SparseBinaryData& data, const DiscreteTrainConfig& cfg,
                   DiscreteFactorModel& model) {
  const int m = model.n_factors();
  const int k = model.factor_cardinality();
  const int n = model.n_vars();
  const double docs = static_cast<double>(data.n_docs);

  for (int j = 0; j < m; ++j) {
    for (int s = 0; s < k; ++s) {
      const double p = (acc.state_mass(j, s) + 0.5) / (docs + 0.5 * k);
      model.set_log_prior(j, s, safe_log(p));
      const std::size_t row = (static_cast<std::size_t>(j) * k + s) * n;
      for (int i = 0; i < n; ++i) {
        const double miss =
            acc.missing_mass.empty() ? 0.0 : acc.missing_mass[row + i];
        const double mass = std::max(acc.state_mass(j, s) - miss, 0.0);
        const double c1 = std::clamp(acc.ones_count[row + i], 0.0, mass);
        const double lambda =
            cfg.smoothing_strength * std::sqrt(mass) + 1e-10;
        double p1 = (c1 + lambda * st.px1[i]) / (mass + lambda);
        p1 = std::clamp(p1, kProbFloor, 1.0 - kProbFloor);
        model.set_log_marginal(j, s, i, 1, std::log(p1));
        model.set_log_marginal(j, s, i, 0, std::log1p(-p1));
      }
    }
  }

  MStepResult out;
  out.mi = mi_from_counts(acc, st, m, k, n);

  for (int i = 0; i < n; ++i) {
    const double mx = out.mi.row(i).maxCoeff();
    for (int j = 0; j < m; ++j)
      model.set_alpha(i, j, std::exp(cfg.beta * (out.mi(i, j) - mx)));
  }
  for (int i : st.excluded)
    for (int j = 0; j < m; ++j) model.set_alpha(i, j, 0.0);
  for (const auto& [var, factor] : model.anchors()) model.set_alpha(var, factor, 1.0);

  out.factor_bound.resize(m);
  for (int j = 0; j < m; ++j) {
    double explained = 0.0;
    for (int i = 0; i < n; ++i) explained += model.alpha(i, j) * out.mi(i, j);
    double cross = 0.0;
    for (int s = 0; s < k; ++s)
      cross += acc.state_mass(j, s) * model.log_prior(j, s);
    const double mean_kl = (acc.neg_entropy(j) - cross) / docs;
    out.factor_bound(j) = explained - mean_kl;
  }
  out.total_bound = out.factor_bound.sum();
  return out;
}

}  // namespace

DiscreteFactorModel::DiscreteFactorModel(int n_vars, int n_factors, int cardinality)
    : n_vars_(n_vars),
      n_factors_(n_factors),
      cardinality_(cardinality),
      log_prior_(static_cast<std::size_t>(n_factors) * cardinality, 0.0),
      log_marginals_(static_cast<std::size_t>(n_factors) * cardinality * n_vars * 2, 0.0),
      log_px_(static_cast<std::size_t>(n_vars) * 2, 0.0),
      alpha_(Eigen::MatrixXd::Zero(n_vars, n_factors)) {
  if (n_vars < 1 || n_factors < 1 || cardinality < 2)
    throw input_error("discrete factor model needs n_vars >= 1, n_factors >= 1, cardinality >= 2");
}

void DiscreteFactorModel::set_anchors(std::map<int, int> anchors) {
  for (const auto& [var, factor] : anchors) {
    if (var < 0 || var >= n_vars_)
      throw input_error("anchor variable index " + std::to_string(var) + " out of range");
    if (factor < 0 || factor >= n_factors_)
      throw input_error("anchor factor index " + std::to_string(factor) + " out of range");
  }
  anchors_ = std::move(anchors);
}

void DiscreteFactorModel::validate() const {
  for (int j = 0; j < n_factors_; ++j) {
    double total = 0.0;
    for (int s = 0; s < cardinality_; ++s) total += std::exp(log_prior(j, s));
    if (std::abs(total - 1.0) > 1e-10)
      throw input_error("factor " + std::to_string(j) + " prior does not normalize");
    for (int s = 0; s < cardinality_; ++s) {
      for (int i = 0; i < n_vars_; ++i) {
        const double p = std::exp(log_marginal(j, s, i, 0)) + std::exp(log_marginal(j, s, i, 1));
        if (std::abs(p - 1.0) > 1e-10) {
          std::ostringstream msg;
          msg << "conditional marginal (factor " << j << ", state " << s
              << ", variable " << i << ") does not normalize";
          throw input_error(msg.str());
        }
      }
    }
  }
  for (int i = 0; i < n_vars_; ++i)
    for (int j = 0; j < n_factors_; ++j)
      if (!(alpha_(i, j) >= 0.0 && alpha_(i, j) <= 1.0))
        throw input_error("alpha out of [0,1] at variable " + std::to_string(i));
  for (const auto& [var, factor] : anchors_)
    if (alpha_(var, factor) != 1.0)
      throw input_error("anchored alpha not exactly 1 at variable " + std::to_string(var));
}

std::pair<DiscreteFactorModel, DiscreteFitReport> fit(
    const SparseBinaryData& data, int n_factors, const DiscreteTrainConfig& config,
    const std::map<int, int>& anchors) {
  data.validate();
  if (data.n_docs < 2) throw input_error("need at least 2 documents");
  if (n_factors < 1) throw input_error("need at least 1 factor");
  if (config.factor_cardinality < 2) throw input_error("factor cardinality must be >= 2");
  if (config.max_iterations < 1) throw input_error("max_iterations must be >= 1");

  const int m = n_factors;
  const int k = config.factor_cardinality;
  const int n = data.n_vars;

  const SparseRows rows(data);
  const ColumnStats st = column_stats(data, rows);

  DiscreteFactorModel model(n, m, k);
  model.set_anchors(anchors);
  for (int i = 0; i < n; ++i) {
    model.set_log_px(i, 1, std::log(st.px1[i]));
    model.set_log_px(i, 0, std::log1p(-st.px1[i]));
  }

  DiscreteFitReport report;
  report.excluded_columns = st.excluded;

  const bool any_missing = !data.missing_entries.empty();

  // Random soft assignments seed the first count pass. Anchored factors
  // instead start from their anchor words' presence indicator: a single
  // pinned connection cannot outvote hundreds of free ones once EM has
  // settled into a basin, so the anchor has to choose the basin up front.
  // The random draws are consumed either way, keeping unanchored factors'
  // starting point independent of the anchor set.
  std::vector<std::vector<int>> anchors_of_factor(m);
  for (const auto& [var, factor] : anchors)
    anchors_of_factor[factor].push_back(var);
  Rng rng(mix_seed(config.seed, 0xd15cul));
  Accumulators acc(m, k, n, any_missing);
  Eigen::MatrixXd q(m, k);
  for (int d = 0; d < data.n_docs; ++d) {
    for (int j = 0; j < m; ++j) {
      double z = 0.0;
      for (int s = 0; s < k; ++s) {
        q(j, s) = 1.0 + rng.uniform();
        z += q(j, s);
      }
      q.row(j) /= z;
      if (!anchors_of_factor[j].empty()) {
        bool present = false;
        for (int var : anchors_of_factor[j])
          present = present || std::binary_search(rows.ones[d].begin(),
                                                  rows.ones[d].end(), var);
        const int on_state = present ? k - 1 : 0;
        for (int s = 0; s < k; ++s)
          q(j, s) = s == on_state ? 0.9 : 0.1 / (k - 1);
      }
    }
    acc.add_doc(rows.ones[d], rows.missing[d], q, k, n);
  }

  MStepResult step = m_step(acc, st, data, config, model);
  report.iteration_trace.push_back(step.total_bound);

  for (int t = 1; t <= config.max_iterations; ++t) {
    const EvalTables tables = build_eval_tables(model);
    Accumulators next(m, k, n, any_missing);
    for (int d = 0; d < data.n_docs; ++d) {
      q = posterior_from_tables(tables, m, k, n, rows.ones[d], rows.missing[d]);
      next.add_doc(rows.ones[d], rows.missing[d], q, k, n);
    }
    acc = std::move(next);
    step = m_step(acc, st, data, config, model);

    const double prev = report.iteration_trace.back();
    report.iteration_trace.push_back(step.total_bound);
    report.iterations_run = t;
    if (std::abs(step.total_bound - prev) < config.tolerance) {
      report.converged = true;
      break;
    }
  }

  report.tc_bound_per_factor.resize(m);
  double total = 0.0;
  for (int j = 0; j < m; ++j) {
    report.tc_bound_per_factor[j] = std::max(step.factor_bound(j), 0.0);
    total += report.tc_bound_per_factor[j];
  }
  report.total_bound = total;
  return {std::move(model), std::move(report)};
}

PosteriorBaseline posterior_baseline(const DiscreteFactorModel& model) {
  const EvalTables t = build_eval_tables(model);
  return PosteriorBaseline{t.baseline};
}

Eigen::MatrixXd posterior(const DiscreteFactorModel& model, const SparseDoc& doc,
                          const PosteriorBaseline& baseline) {
  const int m = model.n_factors();
  const int k = model.factor_cardinality();
  const int n = model.n_vars();
  for (int i : doc.ones)
    if (i < 0 || i >= n) throw input_error("document variable index out of range");
  for (int i : doc.missing)
    if (i < 0 || i >= n) throw input_error("document variable index out of range");

  Eigen::MatrixXd q(m, k);
  for (int j = 0; j < m; ++j) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int s = 0; s < k; ++s) {
      double v = baseline.log_score(j, s);
      for (int i : doc.ones) {
        const double a = model.alpha(i, j);
        v += a * (model.log_marginal(j, s, i, 1) - model.log_px(i, 1)) -
             a * (model.log_marginal(j, s, i, 0) - model.log_px(i, 0));
      }
      for (int i : doc.missing) {
        const double a = model.alpha(i, j);
        v -= a * (model.log_marginal(j, s, i, 0) - model.log_px(i, 0));
      }
      q(j, s) = v;
      mx = std::max(mx, v);
    }
    double z = 0.0;
    for (int s = 0; s < k; ++s) {
      q(j, s) = std::exp(q(j, s) - mx);
      z += q(j, s);
    }
    q.row(j) /= z;
  }
  return q;
}

Eigen::MatrixXd posterior(const DiscreteFactorModel& model, const SparseDoc& doc) {
  return posterior(model, doc, posterior_baseline(model));
}

Eigen::MatrixXd factor_mutual_informations(const DiscreteFactorModel& model,
                                           const SparseBinaryData& data) {
  data.validate();
  if (data.n_vars != model.n_vars())
    throw input_error("data has " + std::to_string(data.n_vars) +
                      " variables, model expects " + std::to_string(model.n_vars()));
  const int m = model.n_factors();
  const int k = model.factor_cardinality();
  const int n = model.n_vars();
  const SparseRows rows(data);
  const ColumnStats st = column_stats(data, rows);
  const EvalTables tables = build_eval_tables(model);
  Accumulators acc(m, k, n, !data.missing_entries.empty());
  for (int d = 0; d < data.n_docs; ++d) {
    const Eigen::MatrixXd q =
        posterior_from_tables(tables, m, k, n, rows.ones[d], rows.missing[d]);
    acc.add_doc(rows.ones[d], rows.missing[d], q, k, n);
  }
  return mi_from_counts(acc, st, m, k, n);
}

std::vector<int> top_words_from_mi(const Eigen::MatrixXd& mi, int factor, int k) {
  if (factor < 0 || factor >= mi.cols())
    throw input_error("factor index " + std::to_string(factor) + " out of range");
  std::vector<int> order(mi.rows());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return mi(a, factor) > mi(b, factor); });
  const int take = std::clamp<int>(k, 0, static_cast<int>(order.size()));
  order.resize(take);
  return order;
}

std::vector<int> top_words(const DiscreteFactorModel& model,
                           const SparseBinaryData& data, int factor, int k) {
  if (factor < 0 || factor >= model.n_factors())
    throw input_error("factor index " + std::to_string(factor) + " out of range");
  return top_words_from_mi(factor_mutual_informations(model, data), factor, k);
}

}  // namespace corex
