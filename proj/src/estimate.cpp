#include "colluder/estimate.hpp"

#include "colluder/identify.hpp"
#include "colluder/parallel.hpp"

#include <Eigen/Eigenvalues>
#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <random>

namespace colluder {

std::vector<TableVariable> observed_columns(const MissingDataGraph& g) {
  std::vector<TableVariable> out;
  for (int v : g.law_vertices()) {
    const auto& vx = g.vertex(v);
    if (!vx.categorical()) throw std::invalid_argument("vertex '" + vx.name + "' is continuous");
    if (vx.role == VertexRole::TrueVariable) {
      out.push_back({g.name(*g.proxy_of(v)), vx.levels + 1});
    } else {
      out.push_back({vx.name, vx.levels});
    }
  }
  return out;
}

std::optional<std::string> record_problem(const MissingDataGraph& g, std::span<const int> record) {
  const auto law = g.law_vertices();
  if (record.size() != law.size()) {
    return "expected " + std::to_string(law.size()) + " values, got " + std::to_string(record.size());
  }
  for (std::size_t k = 0; k < law.size(); ++k) {
    const auto& vx = g.vertex(law[k]);
    const int limit = vx.role == VertexRole::TrueVariable ? vx.levels + 1 : vx.levels;
    if (record[k] < 0 || record[k] >= limit) {
      return "value " + std::to_string(record[k]) + " out of range for '" + vx.name + "'";
    }
  }
  for (std::size_t k = 0; k < law.size(); ++k) {
    const auto& vx = g.vertex(law[k]);
    if (vx.role != VertexRole::TrueVariable) continue;
    const int r = *g.indicator_of(law[k]);
    const auto pos = static_cast<std::size_t>(std::find(law.begin(), law.end(), r) - law.begin());
    const bool na = record[k] == vx.levels;
    if (na != (record[pos] == 0)) {
      return na ? "'" + vx.name + "' is NA while " + g.name(r) + " = 1"
                : "'" + vx.name + "' is observed while " + g.name(r) + " = 0";
    }
  }
  return std::nullopt;
}

std::vector<std::vector<int>> completion_set(const MissingDataGraph& g, std::span<const int> record) {
  if (auto problem = record_problem(g, record)) throw InconsistentRecord(0, *problem);
  const auto law = g.law_vertices();
  std::vector<std::size_t> missing;
  std::vector<int> base(record.begin(), record.end());
  for (std::size_t k = 0; k < law.size(); ++k) {
    const auto& vx = g.vertex(law[k]);
    if (vx.role == VertexRole::TrueVariable && record[k] == vx.levels) {
      missing.push_back(k);
      base[k] = 0;
    }
  }
  std::vector<std::vector<int>> out;
  while (true) {
    out.push_back(base);
    std::size_t i = missing.size();
    while (i > 0) {
      const std::size_t k = missing[i - 1];
      if (++base[k] < g.vertex(law[k]).levels) break;
      base[k] = 0;
      --i;
    }
    if (i == 0) break;
  }
  return out;
}

Dataset Dataset::from_patterns(std::shared_ptr<const MissingDataGraph> graph, std::vector<std::vector<int>> patterns,
                               std::vector<double> counts) {
  if (patterns.size() != counts.size()) throw std::invalid_argument("one count per pattern expected");
  Dataset d;
  d.columns_ = observed_columns(*graph);
  std::map<std::vector<int>, double> merged;
  for (std::size_t i = 0; i < patterns.size(); ++i) {
    if (auto problem = record_problem(*graph, patterns[i])) throw InconsistentRecord(i, *problem);
    if (!(counts[i] > 0) || !std::isfinite(counts[i])) throw std::invalid_argument("pattern counts must be positive");
    merged[patterns[i]] += counts[i];
  }
  for (auto& [p, c] : merged) {
    d.patterns_.push_back(p);
    d.counts_.push_back(c);
    d.n_ += c;
  }
  d.graph_ = std::move(graph);
  return d;
}

Dataset Dataset::from_records(std::shared_ptr<const MissingDataGraph> graph,
                              const std::vector<std::vector<int>>& records) {
  return from_patterns(std::move(graph), records, std::vector<double>(records.size(), 1.0));
}

Dataset Dataset::from_observed_law(std::shared_ptr<const MissingDataGraph> graph,
                                   const ProbabilityTable<double>& observed, double n) {
  if (observed.variables() != observed_columns(*graph)) {
    throw std::invalid_argument("observed table does not match the graph's observed variables");
  }
  if (!(n > 0)) throw std::invalid_argument("population size must be positive");
  std::vector<std::vector<int>> patterns;
  std::vector<double> counts;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (observed[i] <= 0) continue;
    patterns.push_back(observed.config(i));
    counts.push_back(n * observed[i]);
  }
  return from_patterns(std::move(graph), std::move(patterns), std::move(counts));
}

ParameterLayout ParameterLayout::from_graph(const MissingDataGraph& g) {
  if (g.has_bidirected_edges()) throw GraphError("likelihood fitting supports DAGs only (no bidirected edges)");
  const auto report = validate_graph(g);
  if (!report.valid()) throw GraphError("invalid graph: " + report.violations.front().message);
  ParameterLayout layout;
  for (int v : g.law_vertices()) {
    const auto& vx = g.vertex(v);
    if (!vx.categorical()) throw GraphError("vertex '" + vx.name + "' is continuous");
    ParameterBlock b;
    b.vertex = v;
    b.name = vx.name;
    b.levels = vx.levels;
    for (int p : g.parents(v)) {
      b.parents.push_back(p);
      b.parent_levels.push_back(g.vertex(p).levels);
      b.rows *= g.vertex(p).levels;
    }
    b.offset = layout.dimension_;
    b.cell_offset = layout.cells_;
    layout.dimension_ += b.dimension();
    layout.cells_ += b.rows * b.levels;
    layout.blocks_.push_back(std::move(b));
  }
  return layout;
}

Vector<double> ParameterLayout::probabilities(const Vector<double>& theta) const {
  if (theta.size() != dimension_) throw std::invalid_argument("parameter vector has wrong dimension");
  Vector<double> p(cells_);
  for (const auto& b : blocks_) {
    for (int r = 0; r < b.rows; ++r) {
      const double* t = theta.data() + b.offset + r * (b.levels - 1);
      double* out = p.data() + b.cell_offset + r * b.levels;
      double top = 0;
      for (int l = 1; l < b.levels; ++l) top = std::max(top, t[l - 1]);
      double sum = out[0] = std::exp(-top);
      for (int l = 1; l < b.levels; ++l) sum += out[l] = std::exp(t[l - 1] - top);
      for (int l = 0; l < b.levels; ++l) out[l] /= sum;
    }
  }
  return p;
}

Vector<double> ParameterLayout::reported(const Vector<double>& theta) const {
  const auto p = probabilities(theta);
  Vector<double> out(dimension_);
  for (int k = 0; k < dimension_; ++k) out[k] = p[cell_of(k)];
  return out;
}

Vector<double> ParameterLayout::theta_from_probabilities(const Vector<double>& cells) const {
  if (cells.size() != cells_) throw std::invalid_argument("probability vector has wrong size");
  constexpr double floor = -700.0;
  Vector<double> theta(dimension_);
  for (const auto& b : blocks_) {
    for (int r = 0; r < b.rows; ++r) {
      const double* p = cells.data() + b.cell_offset + r * b.levels;
      for (int l = 1; l < b.levels; ++l) {
        theta[b.offset + r * (b.levels - 1) + l - 1] =
            std::clamp(std::log(p[l]) - std::log(p[0]), floor, -floor);
      }
    }
  }
  return theta;
}

Vector<double> ParameterLayout::theta_from_law(const CategoricalLaw& law) const {
  if (law.layout().variables.size() != blocks_.size()) {
    throw std::invalid_argument("law has latent variables or does not match the layout");
  }
  Vector<double> cells(cells_);
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const auto& t = law.cpts()[i].table;
    const auto& b = blocks_[i];
    if (t.rows() != b.rows || t.cols() != b.levels) throw std::invalid_argument("law CPT shape mismatch");
    for (int r = 0; r < b.rows; ++r)
      for (int l = 0; l < b.levels; ++l) cells[b.cell_offset + r * b.levels + l] = t(r, l);
  }
  return theta_from_probabilities(cells);
}

CategoricalLaw ParameterLayout::law(std::shared_ptr<const MissingDataGraph> graph, const Vector<double>& theta) const {
  const auto p = probabilities(theta);
  std::vector<RowMatrix<double>> tables;
  for (const auto& b : blocks_) {
    RowMatrix<double> t(b.rows, b.levels);
    for (int r = 0; r < b.rows; ++r)
      for (int l = 0; l < b.levels; ++l) t(r, l) = p[b.cell_offset + r * b.levels + l];
    tables.push_back(std::move(t));
  }
  return CategoricalLaw(std::move(graph), std::move(tables));
}

ParameterLayout::Coordinate ParameterLayout::coordinate(int k) const {
  if (k < 0 || k >= dimension_) throw std::out_of_range("parameter index out of range");
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const auto& b = blocks_[i];
    if (k < b.offset + b.dimension()) {
      const int local = k - b.offset;
      return {static_cast<int>(i), local / (b.levels - 1), local % (b.levels - 1) + 1};
    }
  }
  throw std::logic_error("unreachable parameter index");
}

int ParameterLayout::cell_of(int k) const {
  const auto c = coordinate(k);
  const auto& b = blocks_[static_cast<std::size_t>(c.block)];
  return b.cell_offset + c.row * b.levels + c.level;
}

std::vector<int> ParameterLayout::parent_values(const ParameterBlock& b, int row) const {
  std::vector<int> out(b.parents.size());
  for (std::size_t k = b.parents.size(); k-- > 0;) {
    out[k] = row % b.parent_levels[k];
    row /= b.parent_levels[k];
  }
  return out;
}

std::string ParameterLayout::label(const MissingDataGraph& g, int k, int base) const {
  const auto c = coordinate(k);
  const auto& b = blocks_[static_cast<std::size_t>(c.block)];
  auto shown = [&](int vertex, int value) {
    return g.vertex(vertex).role == VertexRole::ResponseIndicator ? value : value + base;
  };
  std::string out = "p(" + b.name + "=" + std::to_string(shown(b.vertex, c.level));
  const auto values = parent_values(b, c.row);
  for (std::size_t i = 0; i < b.parents.size(); ++i) {
    out += (i == 0 ? " | " : ", ") + g.name(b.parents[i]) + "=" + std::to_string(shown(b.parents[i], values[i]));
  }
  return out + ")";
}

LikelihoodModel::LikelihoodModel(const Dataset& data) : layout_(ParameterLayout::from_graph(data.graph())) {
  const auto& g = data.graph();
  const auto law = g.law_vertices();
  std::vector<int> position(g.size(), -1);
  for (std::size_t k = 0; k < law.size(); ++k) position[law[k]] = static_cast<int>(k);
  for (const auto& b : layout_.blocks())
    for (int r = 0; r < b.rows; ++r)
      for (int l = 0; l < b.levels; ++l) cell_block_.push_back(static_cast<int>(&b - layout_.blocks().data()));

  for (std::size_t j = 0; j < data.patterns().size(); ++j) {
    std::vector<std::vector<int>> compiled;
    for (const auto& full : completion_set(g, data.patterns()[j])) {
      std::vector<int> cells;
      for (std::size_t i = 0; i < layout_.blocks().size(); ++i) {
        const auto& b = layout_.blocks()[i];
        int row = 0;
        for (std::size_t k = 0; k < b.parents.size(); ++k) {
          row = row * b.parent_levels[k] + full[static_cast<std::size_t>(position[b.parents[k]])];
        }
        cells.push_back(b.cell_offset + row * b.levels + full[i]);
      }
      compiled.push_back(std::move(cells));
    }
    completions_.push_back(std::move(compiled));
    counts_.push_back(data.counts()[j]);
  }
  n_ = data.n();
}

double LikelihoodModel::log_likelihood(const Vector<double>& theta) const {
  const auto p = layout_.probabilities(theta);
  double total = 0;
  for (std::size_t j = 0; j < completions_.size(); ++j) {
    double mass = 0;
    for (const auto& cells : completions_[j]) {
      double f = 1;
      for (int c : cells) f *= p[c];
      mass += f;
    }
    if (!(mass > 0)) return -std::numeric_limits<double>::infinity();
    total += counts_[j] * std::log(mass);
  }
  return total;
}

double LikelihoodModel::log_likelihood(const Vector<double>& theta, Vector<double>& gradient) const {
  const auto p = layout_.probabilities(theta);
  Vector<double> expected = Vector<double>::Zero(layout_.cells());
  std::vector<double> f;
  double total = 0;
  for (std::size_t j = 0; j < completions_.size(); ++j) {
    f.assign(completions_[j].size(), 1.0);
    double mass = 0;
    for (std::size_t v = 0; v < f.size(); ++v) {
      for (int c : completions_[j][v]) f[v] *= p[c];
      mass += f[v];
    }
    if (!(mass > 0)) throw NonFiniteLikelihood("a data pattern has probability 0 under the parameters");
    total += counts_[j] * std::log(mass);
    for (std::size_t v = 0; v < f.size(); ++v) {
      const double w = counts_[j] * f[v] / mass;
      for (int c : completions_[j][v]) expected[c] += w;
    }
  }
  gradient.resize(layout_.dimension());
  for (const auto& b : layout_.blocks()) {
    for (int r = 0; r < b.rows; ++r) {
      const int cell = b.cell_offset + r * b.levels;
      const double row_total = expected.segment(cell, b.levels).sum();
      for (int l = 1; l < b.levels; ++l) {
        gradient[b.offset + r * (b.levels - 1) + l - 1] = expected[cell + l] - p[cell + l] * row_total;
      }
    }
  }
  return total;
}

Eigen::MatrixXd LikelihoodModel::hessian(const Vector<double>& theta) const {
  const int D = layout_.dimension();
  const auto p = layout_.probabilities(theta);
  const auto& blocks = layout_.blocks();
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(D, D);
  Vector<double> row_use = Vector<double>::Zero(layout_.cells());  // expected uses, at the row's first cell

  auto score = [&](const std::vector<int>& cells, Vector<double>& s) {
    s.setZero(D);
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      const auto& b = blocks[i];
      const int local = cells[i] - b.cell_offset;
      const int r = local / b.levels, k = local % b.levels;
      const int first = b.cell_offset + r * b.levels;
      for (int l = 1; l < b.levels; ++l) {
        s[b.offset + r * (b.levels - 1) + l - 1] = (k == l ? 1.0 : 0.0) - p[first + l];
      }
    }
  };

  std::vector<double> f;
  Vector<double> s(D), mean(D);
  for (std::size_t j = 0; j < completions_.size(); ++j) {
    const auto& comp = completions_[j];
    f.assign(comp.size(), 1.0);
    double mass = 0;
    for (std::size_t v = 0; v < comp.size(); ++v) {
      for (int c : comp[v]) f[v] *= p[c];
      mass += f[v];
    }
    if (!(mass > 0)) throw NonFiniteLikelihood("a data pattern has probability 0 under the parameters");
    mean.setZero(D);
    for (std::size_t v = 0; v < comp.size(); ++v) {
      const double w = f[v] / mass;
      score(comp[v], s);
      H.noalias() += (counts_[j] * w) * s * s.transpose();
      mean += w * s;
      for (std::size_t i = 0; i < blocks.size(); ++i) {
        const auto& b = blocks[i];
        const int local = comp[v][i] - b.cell_offset;
        row_use[b.cell_offset + (local / b.levels) * b.levels] += counts_[j] * w;
      }
    }
    H.noalias() -= counts_[j] * mean * mean.transpose();
  }
  for (const auto& b : blocks) {
    for (int r = 0; r < b.rows; ++r) {
      const int first = b.cell_offset + r * b.levels;
      const double use = row_use[first];
      if (use == 0) continue;
      const int o = b.offset + r * (b.levels - 1);
      for (int l = 1; l < b.levels; ++l) {
        for (int m = 1; m < b.levels; ++m) {
          const double curvature = (l == m ? p[first + l] : 0.0) - p[first + l] * p[first + m];
          H(o + l - 1, o + m - 1) -= use * curvature;
        }
      }
    }
  }
  return 0.5 * (H + H.transpose());
}

double log_likelihood(const Vector<double>& theta, const Dataset& data) {
  return LikelihoodModel(data).log_likelihood(theta);
}

Vector<double> grad_log_likelihood(const Vector<double>& theta, const Dataset& data) {
  Vector<double> g;
  LikelihoodModel(data).log_likelihood(theta, g);
  return g;
}

std::string_view to_string(FitStatus s) {
  switch (s) {
    case FitStatus::Converged: return "converged";
    case FitStatus::MaxIterations: return "max_iterations";
    case FitStatus::LineSearchFailed: return "line_search_failed";
  }
  return "?";
}

double normal_critical_value(double level) {
  if (!(level > 0 && level < 1)) throw std::invalid_argument("confidence level must be in (0,1)");
  return boost::math::quantile(boost::math::normal(), 0.5 + level / 2);
}

RestartSummary maximize(const LikelihoodModel& model, Vector<double>& theta, const FitConfig& config) {
  // Minimizes F = -loglik / n.
  const double scale = 1.0 / model.n();
  auto evaluate = [&](const Vector<double>& x, Vector<double>& grad) {
    double value;
    try {
      value = model.log_likelihood(x, grad);
    } catch (const NonFiniteLikelihood&) {
      return std::numeric_limits<double>::infinity();
    }
    grad *= -scale;
    return -value * scale;
  };

  RestartSummary out;
  Vector<double> g, g_new, x_new, d;
  double f = evaluate(theta, g);
  if (!std::isfinite(f)) throw NonFiniteLikelihood("starting point has zero likelihood");
  std::deque<std::pair<Vector<double>, Vector<double>>> memory;
  out.status = FitStatus::MaxIterations;
  int it = 0;
  for (; it < config.max_iterations; ++it) {
    const double gnorm = g.norm();
    if (gnorm <= config.gradient_tolerance) {
      out.status = FitStatus::Converged;
      break;
    }
    // Two-loop recursion.
    d = -g;
    std::vector<double> alpha(memory.size());
    for (std::size_t i = memory.size(); i-- > 0;) {
      const auto& [s, y] = memory[i];
      alpha[i] = s.dot(d) / y.dot(s);
      d -= alpha[i] * y;
    }
    if (!memory.empty()) {
      const auto& [s, y] = memory.back();
      d *= s.dot(y) / y.dot(y);
    }
    for (std::size_t i = 0; i < memory.size(); ++i) {
      const auto& [s, y] = memory[i];
      d += (alpha[i] - y.dot(d) / y.dot(s)) * s;
    }
    double slope = g.dot(d);
    if (!(slope < 0)) {
      memory.clear();
      d = -g;
      slope = -gnorm * gnorm;
    }
    double step = memory.empty() ? std::min(1.0, 1.0 / gnorm) : 1.0;
    bool accepted = false;
    double f_new = f;
    for (int trial = 0; trial < 60; ++trial) {
      x_new = theta + step * d;
      f_new = evaluate(x_new, g_new);
      if (std::isfinite(f_new)) {
        if (f_new <= f + 1e-4 * step * slope) {
          accepted = true;
          break;
        }
        // Near the optimum the decrease is below double resolution of F.
        const double noise = 16 * std::numeric_limits<double>::epsilon() * (1 + std::abs(f));
        if (f_new - f <= noise && g_new.norm() < gnorm) {
          accepted = true;
          break;
        }
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (!memory.empty()) {
        memory.clear();
        continue;
      }
      out.status = FitStatus::LineSearchFailed;
      break;
    }
    Vector<double> s = x_new - theta, y = g_new - g;
    if (s.dot(y) > 1e-16 * s.norm() * y.norm()) {
      memory.emplace_back(std::move(s), std::move(y));
      if (static_cast<int>(memory.size()) > config.memory) memory.pop_front();
    }
    theta.swap(x_new);
    g.swap(g_new);
    f = f_new;
  }
  if (out.status == FitStatus::MaxIterations && g.norm() <= config.gradient_tolerance) {
    out.status = FitStatus::Converged;
  }
  // Newton steps restricted to the well-conditioned curvature; each must
  // shrink the gradient without raising the objective beyond noise.
  for (int k = 0; out.status == FitStatus::Converged && k < config.polish_steps; ++k) {
    const double gnorm = g.norm();
    if (gnorm <= 1e-14) break;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(-scale * model.hessian(theta));
    const auto& lambda = eig.eigenvalues();
    const auto& V = eig.eigenvectors();
    const double top = lambda.maxCoeff();
    if (!(top > 0)) break;
    d = Vector<double>::Zero(theta.size());
    for (Eigen::Index i = 0; i < lambda.size(); ++i) {
      if (lambda[i] > 1e-12 * top) d -= V.col(i) * (V.col(i).dot(g) / lambda[i]);
    }
    const double noise = 16 * std::numeric_limits<double>::epsilon() * (1 + std::abs(f));
    bool accepted = false;
    double step = 1;
    double f_new = f;
    for (int trial = 0; trial < 10 && !accepted; ++trial, step *= 0.5) {
      x_new = theta + step * d;
      f_new = evaluate(x_new, g_new);
      accepted = std::isfinite(f_new) && f_new - f <= noise && g_new.norm() < gnorm;
    }
    if (!accepted) break;
    theta.swap(x_new);
    g.swap(g_new);
    f = f_new;
  }
  out.iterations = it;
  out.gradient_norm = g.norm();
  out.log_likelihood = -f / scale;
  return out;
}

namespace {

Vector<double> random_start(const ParameterLayout& layout, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Vector<double> cells(layout.cells());
  for (const auto& b : layout.blocks()) {
    for (int r = 0; r < b.rows; ++r) {
      double sum = 0;
      for (int l = 0; l < b.levels; ++l) sum += cells[b.cell_offset + r * b.levels + l] = -std::log1p(-uniform01(rng));
      for (int l = 0; l < b.levels; ++l) cells[b.cell_offset + r * b.levels + l] /= sum;
    }
  }
  return layout.theta_from_probabilities(cells);
}

}  // namespace

FitResult fit(const Dataset& data, const FitConfig& config, int label_base) {
  if (data.empty()) throw std::invalid_argument("empty dataset");
  if (config.restarts < 0 || (config.restarts == 0 && !config.initial)) {
    throw std::invalid_argument("need at least one starting point");
  }
  const auto& g = data.graph();
  if (!config.allow_nonidentifiable) {
    const auto verdict = decide_full_law(g);
    if (verdict.decision == Decision::NotIdentifiable) {
      throw NotIdentifiableError("full law is not identifiable: " + verdict.reasons.front().detail);
    }
  }
  const LikelihoodModel model(data);
  const auto& layout = model.layout();
  const int D = layout.dimension();

  std::vector<Vector<double>> starts;
  if (config.initial) {
    if (config.initial->size() != D) throw std::invalid_argument("initial parameter vector has wrong dimension");
    starts.push_back(*config.initial);
  }
  for (int r = 0; r < config.restarts; ++r) starts.push_back(random_start(layout, mix_seed(config.seed, r)));

  std::vector<RestartSummary> runs(starts.size());
  parallel_for(starts.size(), config.threads, [&](std::size_t i) {
    runs[i] = maximize(model, starts[i], config);
    runs[i].index = static_cast<int>(i);
  });

  std::size_t best = 0;
  for (std::size_t i = 1; i < runs.size(); ++i) {
    if (runs[i].log_likelihood > runs[best].log_likelihood) best = i;
  }

  FitResult out;
  out.theta = starts[best];
  out.probabilities = layout.probabilities(out.theta);
  out.log_likelihood = runs[best].log_likelihood;
  out.gradient_norm = runs[best].gradient_norm;
  out.iterations = runs[best].iterations;
  out.status = runs[best].status;
  out.best_restart = static_cast<int>(best);
  out.restarts = runs;
  out.n = data.n();

  const Eigen::MatrixXd information = -model.hessian(out.theta);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(information);
  const auto& lambda = eig.eigenvalues();
  const auto& V = eig.eigenvectors();
  const double top = D > 0 ? lambda.maxCoeff() : 0.0;
  Eigen::MatrixXd covariance = Eigen::MatrixXd::Zero(D, D);
  std::vector<int> weak;
  for (int i = 0; i < D; ++i) {
    out.information_eigenvalues.push_back(lambda[i]);
    if (top > 0 && lambda[i] > config.singular_ratio * top) {
      covariance.noalias() += V.col(i) * V.col(i).transpose() / lambda[i];
    } else {
      weak.push_back(i);
    }
  }

  const double z = normal_critical_value(config.ci_level);
  const auto& p = out.probabilities;
  for (int k = 0; k < D; ++k) {
    const auto c = layout.coordinate(k);
    const auto& b = layout.blocks()[static_cast<std::size_t>(c.block)];
    const int first = b.cell_offset + c.row * b.levels;
    const int o = b.offset + c.row * (b.levels - 1);
    Vector<double> J = Vector<double>::Zero(D);
    for (int m = 1; m < b.levels; ++m) J[o + m - 1] = p[first + c.level] * ((m == c.level ? 1.0 : 0.0) - p[first + m]);

    ParameterEstimate e;
    e.label = layout.label(g, k, label_base);
    e.block = c.block;
    e.row = c.row;
    e.level = c.level;
    e.estimate = p[first + c.level];
    e.standard_error = std::sqrt(std::max(0.0, J.dot(covariance * J)));
    double null_part = 0;
    for (int i : weak) null_part += std::pow(V.col(i).dot(J), 2);
    const double jn = J.norm();
    e.unreliable = !(jn > 0) || std::sqrt(null_part) > 1e-3 * jn;
    double row_min = 1;
    for (int l = 0; l < b.levels; ++l) row_min = std::min(row_min, p[first + l]);
    e.boundary = row_min < config.boundary_eps;
    if (!e.unreliable) {
      e.lower = std::clamp(e.estimate - z * e.standard_error, 0.0, 1.0);
      e.upper = std::clamp(e.estimate + z * e.standard_error, 0.0, 1.0);
    }
    out.estimates.push_back(std::move(e));
  }
  return out;
}

}  // namespace colluder
