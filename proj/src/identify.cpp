#include "colluder/identify.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>

namespace colluder {

std::string_view to_string(FindingKind kind) {
  switch (kind) {
    case FindingKind::SelfCensoring: return "self_censoring";
    case FindingKind::ConditionalIndependence: return "conditional_independence";
    case FindingKind::StructuralRank: return "structural_rank";
    case FindingKind::RankDeficient: return "rank_deficient";
    case FindingKind::Positivity: return "positivity";
    case FindingKind::DependencyAssumption: return "dependency_assumption";
    case FindingKind::MissingLevels: return "missing_levels";
  }
  return "?";
}

std::string_view to_string(Decision d) {
  return d == Decision::Identifiable ? "Identifiable" : "NotIdentifiable";
}

std::string to_string(const Stratum& z) {
  std::string out = "{";
  for (std::size_t k = 0; k < z.size(); ++k) {
    if (k > 0) out += ", ";
    out += z[k].first + "=" + std::to_string(z[k].second);
  }
  return out + "}";
}

namespace {

int partner(const MissingDataGraph& g, const Colluder& col) {
  const auto y = g.true_of_indicator(col.target_indicator);
  if (!y) throw GraphError("indicator '" + g.name(col.target_indicator) + "' has no true variable");
  return *y;
}

bool in_colluder(const MissingDataGraph& g, const Colluder& col, int v) {
  return v == col.true_variable || v == col.response_of_true || v == col.target_indicator || v == partner(g, col);
}

// Positions of the colluder's variables inside an observed-law table.
struct ObservedPositions {
  int x = -1, y = -1, rx = -1, ry = -1;
  int m = 0, q = 0;
  std::vector<int> z;       // aligned with stratum_variables()
  std::vector<int> others;  // remaining indicators, fixed at 1
};

template <typename Scalar>
ObservedPositions locate(const ProbabilityTable<Scalar>& obs, const MissingDataGraph& g, const Colluder& col) {
  ObservedPositions p;
  const int y = partner(g, col);
  auto proxy_position = [&](int v) { return obs.position(g.name(*g.proxy_of(v))); };
  p.x = proxy_position(col.true_variable);
  p.y = proxy_position(y);
  p.rx = obs.position(g.name(col.response_of_true));
  p.ry = obs.position(g.name(col.target_indicator));
  p.m = g.vertex(col.true_variable).levels;
  p.q = g.vertex(y).levels;
  for (int v : g.law_vertices()) {
    if (in_colluder(g, col, v)) continue;
    switch (g.vertex(v).role) {
      case VertexRole::FullyObserved: p.z.push_back(obs.position(g.name(v))); break;
      case VertexRole::TrueVariable: p.z.push_back(proxy_position(v)); break;
      case VertexRole::ResponseIndicator: p.others.push_back(obs.position(g.name(v))); break;
      case VertexRole::Proxy: break;
    }
  }
  return p;
}

std::vector<int> stratum_values(const MissingDataGraph& g, const Colluder& col, const Stratum& z) {
  const auto vars = stratum_variables(g, col);
  std::vector<int> out;
  for (const auto& v : vars) {
    auto it = std::find_if(z.begin(), z.end(), [&](const auto& e) { return e.first == v.name; });
    if (it == z.end()) throw std::invalid_argument("stratum lacks variable '" + v.name + "'");
    if (it->second < 0 || it->second >= v.levels) throw std::out_of_range("stratum level out of range for '" + v.name + "'");
    out.push_back(it->second);
  }
  if (z.size() != vars.size()) throw std::invalid_argument("stratum names a variable outside Z");
  return out;
}

std::string colluder_label(const MissingDataGraph& g, const Colluder& col) { return describe(g, col); }

}  // namespace

std::vector<TableVariable> stratum_variables(const MissingDataGraph& g, const Colluder& col) {
  std::vector<TableVariable> out;
  for (int v : g.law_vertices()) {
    if (in_colluder(g, col, v)) continue;
    const auto& vx = g.vertex(v);
    if (vx.role == VertexRole::ResponseIndicator) continue;
    if (!vx.categorical()) {
      throw IdentificationError(FindingKind::MissingLevels, "vertex '" + vx.name + "' is continuous");
    }
    out.push_back({vx.name, vx.levels});
  }
  return out;
}

std::vector<Stratum> colluder_strata(const MissingDataGraph& g, const Colluder& col) {
  const auto vars = stratum_variables(g, col);
  std::vector<Stratum> out;
  std::vector<int> cfg(vars.size(), 0);
  while (true) {
    Stratum z;
    for (std::size_t k = 0; k < vars.size(); ++k) z.emplace_back(vars[k].name, cfg[k]);
    out.push_back(std::move(z));
    int k = static_cast<int>(vars.size()) - 1;
    while (k >= 0 && ++cfg[k] == vars[k].levels) cfg[k--] = 0;
    if (k < 0) break;
  }
  return out;
}

std::optional<Walk> colluder_independence_violation(const MissingDataGraph& g, const Colluder& col) {
  const int y = partner(g, col);
  std::vector<int> z;
  for (int v : g.law_vertices()) {
    if (v != y && v != col.response_of_true) z.push_back(v);
  }
  const int a[] = {col.response_of_true};
  const int b[] = {y};
  return m_connecting_walk(g, a, b, z);
}

template <typename Scalar>
ColluderSystem<Scalar> build_colluder_system(const ProbabilityTable<Scalar>& obs, const MissingDataGraph& g,
                                             const Colluder& col, const Stratum& z, int r,
                                             const IdentifyOptions& opts) {
  if (r != 0 && r != 1) throw std::invalid_argument("r must be 0 or 1");
  if (auto walk = colluder_independence_violation(g, col)) {
    throw IdentificationError(FindingKind::ConditionalIndependence,
                              "conditional independence violated for " + colluder_label(g, col) +
                                  "; open path " + to_string(g, *walk));
  }
  const auto pos = locate(obs, g, col);
  const auto zval = stratum_values(g, col, z);

  Scalar pz = 0, pry = 0;
  RowMatrix<Scalar> joint = RowMatrix<Scalar>::Zero(pos.q, pos.m);
  Vector<Scalar> bz = Vector<Scalar>::Zero(pos.q);
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const auto cfg = obs.config(i);
    bool match = true;
    for (int o : pos.others) match = match && cfg[o] == 1;
    for (std::size_t k = 0; k < pos.z.size(); ++k) match = match && cfg[pos.z[k]] == zval[k];
    if (!match) continue;
    const Scalar& p = obs[i];
    if (p == 0) continue;
    if ((cfg[pos.rx] == 1) != (cfg[pos.x] < pos.m) || (cfg[pos.ry] == 1) != (cfg[pos.y] < pos.q)) {
      throw std::invalid_argument("observed table puts mass on an inconsistent missingness pattern");
    }
    pz += p;
    if (cfg[pos.ry] != 1) continue;
    pry += p;
    if (cfg[pos.rx] == 1) joint(cfg[pos.y], cfg[pos.x]) += p;
    if (cfg[pos.rx] == r) bz(cfg[pos.y]) += p;
  }
  if (to_double(pz) < opts.eps_pos || pz <= 0) {
    throw IdentificationError(FindingKind::Positivity, "positivity violated at stratum " + to_string(z) + " of " +
                                                           colluder_label(g, col) + ": p(Z) is null");
  }

  ColluderSystem<Scalar> sys;
  sys.colluder = col;
  sys.z = z;
  sys.r = r;
  sys.A.resize(pos.q, pos.m);
  const Scalar ry_given_z = pry / pz;
  for (int j = 0; j < pos.m; ++j) {
    Scalar column = 0;
    for (int i = 0; i < pos.q; ++i) column += joint(i, j);
    if (to_double(column) < opts.eps_pos || column <= 0) {
      throw IdentificationError(FindingKind::Positivity,
                                "positivity violated at stratum " + to_string(z) + " of " + colluder_label(g, col) +
                                    ": p(" + g.name(col.response_of_true) + "=1, " + g.name(col.true_variable) +
                                    "=" + std::to_string(j) + ", " + g.name(col.target_indicator) +
                                    "=1, Z) is null");
    }
    for (int i = 0; i < pos.q; ++i) sys.A(i, j) = joint(i, j) / column * ry_given_z;
  }
  sys.b = bz / pz;
  return sys;
}

template <typename Scalar>
RankReport rank_test(const ColluderSystem<Scalar>& sys, double tol) {
  Eigen::MatrixXd a(sys.A.rows(), sys.A.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) a(i, j) = to_double(sys.A(i, j));
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  RankReport out;
  const auto& sv = svd.singularValues();
  out.singular_values.assign(sv.data(), sv.data() + sv.size());
  if constexpr (is_exact_v<Scalar>) {
    Eigen::FullPivLU<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> lu(sys.A);
    lu.setThreshold(Scalar(0));
    out.rank = static_cast<int>(lu.rank());
  } else {
    const double cutoff = sv.size() > 0 ? tol * sv(0) : 0.0;
    out.rank = static_cast<int>(std::count_if(out.singular_values.begin(), out.singular_values.end(),
                                              [cutoff](double s) { return s > cutoff && s > 0; }));
  }
  return out;
}

template <typename Scalar>
ColluderSolution<Scalar> solve_colluder(ColluderSystem<Scalar>& sys, double tol) {
  const auto rank = rank_test(sys, tol);
  const auto m = sys.A.cols();
  if (rank.rank < m) {
    throw IdentificationError(FindingKind::RankDeficient,
                              "not identifiable at stratum " + to_string(sys.z) + ": rank(A) = " +
                                  std::to_string(rank.rank) + " < m = " + std::to_string(m),
                              rank.singular_values);
  }
  ColluderSolution<Scalar> out;
  if constexpr (is_exact_v<Scalar>) {
    using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    const Mat at = sys.A.transpose();
    const Mat normal = at * sys.A;
    Eigen::FullPivLU<Mat> lu(normal);
    out.s = lu.solve(Vector<Scalar>(at * sys.b));
  } else {
    Eigen::MatrixXd a = sys.A;
    out.s = a.jacobiSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(sys.b);
  }
  const Vector<Scalar> resid = sys.A * out.s - sys.b;
  for (Eigen::Index i = 0; i < resid.size(); ++i) out.residual = std::max(out.residual, std::abs(to_double(resid[i])));
  for (Eigen::Index j = 0; j < out.s.size(); ++j) {
    const double v = to_double(out.s[j]);
    if (v < -1e-8 || v > 1 + 1e-8) out.outside_unit = true;
  }
  sys.s = out.s;
  return out;
}

template <typename Scalar>
ProbabilityTable<Scalar> colluder_mechanism(const ProbabilityTable<Scalar>& obs, const MissingDataGraph& g,
                                            const Colluder& col, const IdentifyOptions& opts) {
  auto vars = stratum_variables(g, col);
  const int m = g.vertex(col.true_variable).levels;
  const auto strata = colluder_strata(g, col);
  vars.push_back({g.name(col.true_variable), m});
  vars.push_back({g.name(col.response_of_true), 2});
  auto out = ProbabilityTable<Scalar>::zeros(vars);

  std::vector<int> cfg(vars.size(), 0);
  for (const auto& z : strata) {
    std::array<Vector<Scalar>, 2> s;
    for (int r = 0; r < 2; ++r) {
      auto sys = build_colluder_system(obs, g, col, z, r, opts);
      s[r] = solve_colluder(sys, opts.rank_tol).s;
    }
    for (std::size_t k = 0; k < z.size(); ++k) cfg[k] = z[k].second;
    for (int j = 0; j < m; ++j) {
      const Scalar den = s[0][j] + s[1][j];
      if (to_double(den) <= 0) {
        throw IdentificationError(FindingKind::Positivity, "solution mass vanishes at stratum " + to_string(z) +
                                                               " for " + g.name(col.true_variable) + "=" +
                                                               std::to_string(j));
      }
      cfg[z.size()] = j;
      for (int r = 0; r < 2; ++r) {
        cfg[z.size() + 1] = r;
        out.at(cfg) = s[r][j] / den;
      }
    }
  }
  return out;
}

template <typename Scalar>
BinaryColluderQuantities<Scalar> binary_quantities(const ProbabilityTable<Scalar>& obs, const MissingDataGraph& g,
                                                   const Colluder& col, double eps_pos) {
  const auto pos = locate(obs, g, col);
  if (pos.m != 2 || pos.q != 2 || !pos.z.empty() || !pos.others.empty()) {
    throw std::invalid_argument("binary closed form needs a binary model with no variables beyond the colluder");
  }
  auto prob = [&](auto&& pred) {
    Scalar total = 0;
    for (std::size_t i = 0; i < obs.size(); ++i) {
      const auto cfg = obs.config(i);
      if (pred(cfg)) total += obs[i];
    }
    return total;
  };
  auto ratio = [&](const Scalar& num, const Scalar& den) {
    if (to_double(den) < eps_pos || den <= 0) throw NullEventError("binary quantities: conditioning on a null event");
    return Scalar(num / den);
  };
  BinaryColluderQuantities<Scalar> q;
  q.a = prob([&](const auto& c) { return c[pos.rx] == 0; });
  q.b = ratio(prob([&](const auto& c) { return c[pos.rx] == 1 && c[pos.x] == 0; }),
              prob([&](const auto& c) { return c[pos.rx] == 1; }));
  auto y0_given = [&](int x) {
    return ratio(prob([&](const auto& c) { return c[pos.rx] == 1 && c[pos.ry] == 1 && c[pos.x] == x && c[pos.y] == 0; }),
                 prob([&](const auto& c) { return c[pos.rx] == 1 && c[pos.ry] == 1 && c[pos.x] == x; }));
  };
  q.c = y0_given(0);
  q.h = y0_given(1);
  q.r = prob([&](const auto& c) { return c[pos.rx] == 0 && c[pos.ry] == 1 && c[pos.y] == 0; });
  q.s = prob([&](const auto& c) { return c[pos.rx] == 0 && c[pos.ry] == 1 && c[pos.y] == 1; });
  return q;
}

namespace {

template <typename Scalar>
void require_dependency(const BinaryColluderQuantities<Scalar>& q) {
  if (q.c == q.h) {
    throw IdentificationError(FindingKind::DependencyAssumption,
                              "dependency assumption violated: p(Y=0 | X=0) equals p(Y=0 | X=1)");
  }
}

}  // namespace

template <typename Scalar>
std::array<Scalar, 2> binary_closed_form(const BinaryColluderQuantities<Scalar>& q) {
  require_dependency(q);
  const Scalar ch = q.c - q.h;
  return {Scalar((q.r - q.h * q.r - q.h * q.s) / (q.a * q.b * ch)),
          Scalar((q.r - q.c * q.r - q.c * q.s) / (q.a * (q.b - 1) * ch))};
}

template <typename Scalar>
std::array<Scalar, 2> binary_matrix_form(const BinaryColluderQuantities<Scalar>& q) {
  require_dependency(q);
  using Mat = Eigen::Matrix<Scalar, 2, 2>;
  Mat a;
  a << q.a * q.b * q.c, q.a * (1 - q.b) * q.h, q.a * q.b * (1 - q.c), q.a * (1 - q.b) * (1 - q.h);
  Eigen::Matrix<Scalar, 2, 1> rhs(q.r, q.s);
  const Eigen::Matrix<Scalar, 2, 1> x = Eigen::FullPivLU<Mat>(a).solve(rhs);
  return {x[0], x[1]};
}

template <typename Scalar>
double or_factorization_check(const BasicLaw<Scalar>& law, const std::vector<std::string>& ordering,
                              double eps_pos) {
  if (!law.strictly_positive(eps_pos)) {
    throw IdentificationError(FindingKind::Positivity, "odds-ratio check needs a strictly positive law");
  }
  const auto& g = law.graph();
  const auto full = law.full_table();
  const int arity = full.arity();
  const auto& vars = full.variables();

  std::vector<int> rpos;
  for (const auto& name : ordering) {
    const int p = full.position(name);
    if (g.vertex(g.index(name)).role != VertexRole::ResponseIndicator) {
      throw std::invalid_argument("'" + name + "' is not a response indicator");
    }
    if (std::find(rpos.begin(), rpos.end(), p) != rpos.end()) throw std::invalid_argument("indicator listed twice");
    rpos.push_back(p);
  }
  std::vector<int> wpos;
  for (int p = 0; p < arity; ++p) {
    const bool is_r = g.vertex(g.index(vars[p].name)).role == VertexRole::ResponseIndicator;
    if (is_r && std::find(rpos.begin(), rpos.end(), p) == rpos.end()) {
      throw std::invalid_argument("ordering misses indicator '" + vars[p].name + "'");
    }
    if (!is_r) wpos.push_back(p);
  }
  const int K = static_cast<int>(rpos.size());
  const std::size_t patterns = std::size_t{1} << K;

  // cells[w][bits] with bit k = value of ordering[k].
  std::size_t wcount = 1;
  for (int p : wpos) wcount *= static_cast<std::size_t>(vars[p].levels);
  std::vector<std::vector<Scalar>> cells(wcount, std::vector<Scalar>(patterns, Scalar(0)));
  for (std::size_t i = 0; i < full.size(); ++i) {
    const auto cfg = full.config(i);
    std::size_t w = 0;
    for (int p : wpos) w = w * static_cast<std::size_t>(vars[p].levels) + static_cast<std::size_t>(cfg[p]);
    std::size_t bits = 0;
    for (int k = 0; k < K; ++k) bits |= static_cast<std::size_t>(cfg[rpos[k]]) << k;
    cells[w][bits] += full[i];
  }

  const std::size_t ones = patterns - 1;
  auto with_bit = [](std::size_t bits, int k, int value) {
    return value ? (bits | (std::size_t{1} << k)) : (bits & ~(std::size_t{1} << k));
  };
  double worst = 0;
  for (const auto& p : cells) {
    // p(R_k = value of `bits` | R_-k as in `bits`, w)
    auto cond = [&](int k, std::size_t bits) {
      return Scalar(p[bits] / (p[with_bit(bits, k, 0)] + p[with_bit(bits, k, 1)]));
    };
    Scalar total = 0;
    for (const auto& v : p) total += v;
    std::vector<Scalar> u(patterns);
    Scalar norm = 0;
    for (std::size_t bits = 0; bits < patterns; ++bits) {
      Scalar prod = 1;
      for (int k = 0; k < K; ++k) prod *= cond(k, with_bit(ones, k, (bits >> k) & 1));
      for (int k = 1; k < K; ++k) {
        const int rk = (bits >> k) & 1;
        // R_{<k} from bits, R_{>k} = 1.
        std::size_t mixed = ones;
        for (int l = 0; l <= k; ++l) mixed = with_bit(mixed, l, (bits >> l) & 1);
        const Scalar num = cond(k, mixed) / cond(k, with_bit(mixed, k, 1));
        const Scalar ref = cond(k, ones) / cond(k, with_bit(ones, k, rk));
        prod *= num * ref;
      }
      u[bits] = prod;
      norm += prod;
    }
    for (std::size_t bits = 0; bits < patterns; ++bits) {
      const Scalar diff = p[bits] / total - u[bits] / norm;
      worst = std::max(worst, std::abs(to_double(diff)));
    }
  }
  return worst;
}

IdentifiabilityVerdict decide_full_law(const MissingDataGraph& g) {
  const auto report = validate_graph(g);
  if (!report.valid()) throw GraphError("invalid missing-data graph: " + report.violations.front().message);

  IdentifiabilityVerdict verdict;
  for (const auto& e : find_self_censoring(g)) {
    verdict.reasons.push_back(
        {FindingKind::SelfCensoring, std::nullopt, "self-censoring edge " + g.name(e.from) + " -> " + g.name(e.to), {}});
  }
  const auto colluders = find_colluders(g);
  for (const auto& col : colluders) {
    const int y = partner(g, col);
    for (int v : {col.true_variable, y}) {
      if (!g.vertex(v).categorical()) {
        throw IdentificationError(FindingKind::MissingLevels,
                                  "colluder variable '" + g.name(v) + "' needs a category count");
      }
    }
    if (auto walk = colluder_independence_violation(g, col)) {
      verdict.reasons.push_back({FindingKind::ConditionalIndependence, col,
                                 g.name(col.response_of_true) + " and " + g.name(y) +
                                     " are not m-separated given the remaining variables; open path " +
                                     to_string(g, *walk),
                                 {}});
    }
    const int m = g.vertex(col.true_variable).levels;
    const int q = g.vertex(y).levels;
    if (q < m) {
      verdict.reasons.push_back({FindingKind::StructuralRank, col,
                                 "rank(A_r) <= q = " + std::to_string(q) + " < m = " + std::to_string(m), {}});
    }
  }
  if (verdict.reasons.empty()) {
    verdict.decision = Decision::Identifiable;
    verdict.rank_condition_pending = !colluders.empty();
  } else {
    verdict.decision = Decision::NotIdentifiable;
  }
  return verdict;
}

#define COLLUDER_IDENTIFY_INSTANTIATE(S)                                                                           \
  template ColluderSystem<S> build_colluder_system(const ProbabilityTable<S>&, const MissingDataGraph&,           \
                                                   const Colluder&, const Stratum&, int, const IdentifyOptions&); \
  template RankReport rank_test(const ColluderSystem<S>&, double);                                                 \
  template ColluderSolution<S> solve_colluder(ColluderSystem<S>&, double);                                         \
  template ProbabilityTable<S> colluder_mechanism(const ProbabilityTable<S>&, const MissingDataGraph&,            \
                                                  const Colluder&, const IdentifyOptions&);                        \
  template BinaryColluderQuantities<S> binary_quantities(const ProbabilityTable<S>&, const MissingDataGraph&,      \
                                                         const Colluder&, double);                                 \
  template std::array<S, 2> binary_closed_form(const BinaryColluderQuantities<S>&);                               \
  template std::array<S, 2> binary_matrix_form(const BinaryColluderQuantities<S>&);                               \
  template double or_factorization_check(const BasicLaw<S>&, const std::vector<std::string>&, double);

COLLUDER_IDENTIFY_INSTANTIATE(double)
COLLUDER_IDENTIFY_INSTANTIATE(Rational)

}  // namespace colluder
