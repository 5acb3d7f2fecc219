#include "colluder/simstudy.hpp"

#include "colluder/fixtures.hpp"
#include "colluder/identify.hpp"
#include "colluder/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <sstream>

namespace colluder {

namespace {

struct Sampler {
  std::vector<double> cumulative;
  std::vector<std::vector<int>> observed;

  explicit Sampler(const CategoricalLaw& law) {
    const auto full = law.full_table();
    const auto& g = law.graph();
    std::vector<int> vertices;
    for (const auto& v : full.variables()) vertices.push_back(g.index(v.name));
    double acc = 0;
    for (std::size_t i = 0; i < full.size(); ++i) {
      acc += full[i];
      cumulative.push_back(acc);
      observed.push_back(observe(g, vertices, full.config(i)));
    }
  }

  // Index of the full cell for u in [0, 1); zero-mass cells are never hit.
  std::size_t draw(double u) const {
    const double target = u * cumulative.back();
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
    if (it == cumulative.end()) {
      --it;
      while (it != cumulative.begin() && *it == *(it - 1)) --it;
    }
    return static_cast<std::size_t>(it - cumulative.begin());
  }
};

}  // namespace

std::vector<std::vector<int>> sample_records(const CategoricalLaw& law, std::size_t n, std::uint64_t seed) {
  const Sampler s(law);
  std::mt19937_64 rng(seed);
  std::vector<std::vector<int>> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(s.observed[s.draw(uniform01(rng))]);
  return out;
}

Dataset sample_dataset(const CategoricalLaw& law, std::size_t n, std::uint64_t seed) {
  const Sampler s(law);
  std::mt19937_64 rng(seed);
  std::vector<double> hits(s.cumulative.size(), 0.0);
  for (std::size_t i = 0; i < n; ++i) hits[s.draw(uniform01(rng))] += 1;
  std::vector<std::vector<int>> patterns;
  std::vector<double> counts;
  for (std::size_t i = 0; i < hits.size(); ++i) {
    if (hits[i] == 0) continue;
    patterns.push_back(s.observed[i]);
    counts.push_back(hits[i]);
  }
  return Dataset::from_patterns(law.graph_ptr(), std::move(patterns), std::move(counts));
}

SimConstraints SimScenario::default_constraints(int m) {
  SimConstraints c;
  c.fixed_response = {{"RX", 0.8}};
  c.response_low = 0.7;
  c.response_high = 0.9;
  c.dependency_gap = m == 2 ? 0.5 : 0.4;
  c.min_probability = m == 2 ? 0.1 : 0.05;
  return c;
}

void SimScenario::validate() const {
  if (m < 2 || q < 2) throw std::invalid_argument("m and q must be at least 2");
  if (m > q) throw std::invalid_argument("CCM(m,q) with m > q is not identifiable");
  if (sample_sizes.empty()) throw std::invalid_argument("no sample sizes");
  for (long n : sample_sizes)
    if (n <= 0) throw std::invalid_argument("sample sizes must be positive");
  if (replications < 1) throw std::invalid_argument("replications must be at least 1");
  if (restarts < 1) throw std::invalid_argument("restarts must be at least 1");
  if (max_iterations < 1) throw std::invalid_argument("max_iterations must be at least 1");
  if (!(max_failure_rate >= 0 && max_failure_rate <= 1)) throw std::invalid_argument("max_failure_rate outside [0,1]");
}

std::string_view to_string(ParameterGroup g) { return g == ParameterGroup::Colluder ? "colluder" : "other"; }

std::vector<ParameterGroup> parameter_groups(const MissingDataGraph& g, const ParameterLayout& layout) {
  const auto colluders = find_colluders(g);
  std::vector<ParameterGroup> out;
  for (const auto& b : layout.blocks()) {
    const bool target = std::any_of(colluders.begin(), colluders.end(),
                                    [&](const Colluder& c) { return c.target_indicator == b.vertex; });
    for (int k = 0; k < b.dimension(); ++k) out.push_back(target ? ParameterGroup::Colluder : ParameterGroup::Other);
  }
  return out;
}

namespace {

std::string block_description(const MissingDataGraph& g, const ParameterBlock& b) {
  std::string out = "p(" + b.name;
  if (g.vertex(b.vertex).role == VertexRole::ResponseIndicator) out += "=1";
  for (std::size_t i = 0; i < b.parents.size(); ++i) out += (i == 0 ? " | " : ", ") + g.name(b.parents[i]);
  return out + ")";
}

GroupSummary summarize(ParameterGroup group, const std::vector<ParameterSummary>& params, std::string description) {
  GroupSummary s;
  s.group = group;
  s.description = std::move(description);
  int count = 0;
  for (const auto& p : params) {
    if (p.group != group) continue;
    if (count == 0) {
      s.min_bias = s.max_bias = p.mean_bias;
      s.max_rmse = p.rmse;
    }
    s.min_bias = std::min(s.min_bias, p.mean_bias);
    s.max_bias = std::max(s.max_bias, p.mean_bias);
    s.max_rmse = std::max(s.max_rmse, p.rmse);
    s.mean_rmse += p.rmse;
    s.mean_abs_bias += std::abs(p.mean_bias);
    ++count;
  }
  if (count > 0) {
    s.mean_rmse /= count;
    s.mean_abs_bias /= count;
  }
  return s;
}

}  // namespace

SimReport run_scenario(const SimScenario& s) {
  s.validate();
  auto graph = std::make_shared<const MissingDataGraph>(fixtures::colluder_with_dependency(s.m, s.q));
  const auto layout = ParameterLayout::from_graph(*graph);
  const auto groups = parameter_groups(*graph, layout);
  const int D = layout.dimension();

  struct Outcome {
    bool ok = false;
    Vector<double> error;  // estimate - truth, reported probabilities
  };
  const std::size_t sizes = s.sample_sizes.size();
  const std::size_t reps = static_cast<std::size_t>(s.replications);
  std::vector<Outcome> outcomes(sizes * reps);

  parallel_for(reps, s.threads, [&](std::size_t rep) {
    const std::uint64_t law_seed = mix_seed(s.seed, rep);
    const auto law = random_law(graph, s.constraints, law_seed);
    const Vector<double> truth = layout.reported(layout.theta_from_law(law));
    for (std::size_t k = 0; k < sizes; ++k) {
      const auto n = static_cast<std::uint64_t>(s.sample_sizes[k]);
      const std::uint64_t sample_seed = mix_seed(law_seed, n);
      const auto data = sample_dataset(law, n, sample_seed);
      FitConfig config;
      config.restarts = s.restarts;
      config.max_iterations = s.max_iterations;
      config.seed = mix_seed(sample_seed, 0);
      Outcome& o = outcomes[rep * sizes + k];
      try {
        const auto result = fit(data, config);
        if (result.converged()) {
          o.ok = true;
          o.error = layout.reported(result.theta) - truth;
        }
      } catch (const NonFiniteLikelihood&) {
        o.ok = false;
      }
    }
  });

  SimReport report;
  report.scenario = s;
  std::string colluder_desc, other_desc;
  for (const auto& b : layout.blocks()) {
    const bool target = groups[static_cast<std::size_t>(b.offset)] == ParameterGroup::Colluder;
    auto& desc = target ? colluder_desc : other_desc;
    desc += (desc.empty() ? "" : ", ") + block_description(*graph, b);
  }
  for (std::size_t k = 0; k < sizes; ++k) {
    SampleSizeReport r;
    r.n = s.sample_sizes[k];
    Vector<double> sum = Vector<double>::Zero(D), sq = Vector<double>::Zero(D);
    for (std::size_t rep = 0; rep < reps; ++rep) {
      const Outcome& o = outcomes[rep * sizes + k];
      if (!o.ok) {
        ++r.failures;
        continue;
      }
      ++r.used;
      sum += o.error;
      sq += o.error.cwiseProduct(o.error);
    }
    for (int i = 0; i < D; ++i) {
      ParameterSummary p;
      p.label = layout.label(*graph, i);
      p.group = groups[static_cast<std::size_t>(i)];
      if (r.used > 0) {
        p.mean_bias = sum[i] / r.used;
        p.rmse = std::sqrt(sq[i] / r.used);
      }
      r.parameters.push_back(std::move(p));
    }
    r.colluder = summarize(ParameterGroup::Colluder, r.parameters, colluder_desc);
    r.other = summarize(ParameterGroup::Other, r.parameters, other_desc);
    if (r.failures > s.max_failure_rate * s.replications) report.failed = true;
    report.sizes.push_back(std::move(r));
  }
  return report;
}

CategoricalLaw survey_lookalike_law() {
  auto g = std::make_shared<const MissingDataGraph>(fixtures::colluder_with_dependency(3, 3));
  RowMatrix<double> x(1, 3), y(3, 3), rx(1, 2), ry(6, 2);
  x << 0.157, 0.446, 0.397;
  y << 0.366, 0.536, 0.098,  //
      0.451, 0.515, 0.034,   //
      0.497, 0.425, 0.078;
  rx << 0.147, 0.853;
  // rows (X, RX): (0,0) (0,1) (1,0) (1,1) (2,0) (2,1)
  ry << 0.5, 0.5,  //
      0.099, 0.901,  //
      0.35, 0.65,    //
      0.033, 0.967,  //
      0.4, 0.6,      //
      0.004, 0.996;
  return make_law<double>(g, {{"X", x}, {"Y", y}, {"RX", rx}, {"RY", ry}});
}

std::string format_report(const SimReport& r) {
  std::ostringstream out;
  char line[256];
  out << "Scenario m=" << r.scenario.m << ", q=" << r.scenario.q << " (" << r.scenario.replications
      << " replications, seed " << r.scenario.seed << ")\n";
  std::size_t width = 14;
  for (const auto& s : r.sizes) width = std::max({width, s.colluder.description.size(), s.other.description.size()});
  const int w = static_cast<int>(width);
  std::snprintf(line, sizeof line, "%-*s %8s  %9s %9s  %8s %8s  %8s\n", w, "", "", "Mean bias", "", "RMSE", "", "");
  out << line;
  std::snprintf(line, sizeof line, "%-*s %8s  %9s %9s  %8s %8s  %8s\n", w, "Parameters for", "n", "Min", "Max", "Mean",
                "Max", "Failures");
  out << line << std::string(width + 64, '-') << "\n";
  for (int pass = 0; pass < 2; ++pass) {
    for (const auto& s : r.sizes) {
      const auto& g = pass == 0 ? s.colluder : s.other;
      std::snprintf(line, sizeof line, "%-*s %8ld  %9.4f %9.4f  %8.4f %8.4f  %8d\n", w, g.description.c_str(), s.n,
                    g.min_bias, g.max_bias, g.mean_rmse, g.max_rmse, s.failures);
      out << line;
    }
  }
  if (r.failed) out << "FAILED: non-convergence above " << r.scenario.max_failure_rate * 100 << "% of replications\n";
  return out.str();
}

}  // namespace colluder
