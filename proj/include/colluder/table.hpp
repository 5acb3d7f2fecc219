#pragma once

#include "colluder/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace colluder {

struct TableVariable {
  std::string name;
  int levels = 2;

  friend bool operator==(const TableVariable&, const TableVariable&) = default;
};

/// Assignment of values to named variables.
using Evidence = std::vector<std::pair<std::string, int>>;

class NullEventError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dense table over the Cartesian product of categorical variables, stored in
/// row-major level order (the first variable varies slowest).
template <typename Scalar>
class ProbabilityTable {
 public:
  ProbabilityTable() = default;

  ProbabilityTable(std::vector<TableVariable> variables, Vector<Scalar> values)
      : variables_(std::move(variables)), values_(std::move(values)) {
    init_strides();
    if (static_cast<std::size_t>(values_.size()) != size_) {
      throw std::invalid_argument("table value count does not match variable levels");
    }
  }

  static ProbabilityTable zeros(std::vector<TableVariable> variables) {
    ProbabilityTable t;
    t.variables_ = std::move(variables);
    t.init_strides();
    t.values_ = Vector<Scalar>::Zero(static_cast<Eigen::Index>(t.size_));
    return t;
  }

  int arity() const { return static_cast<int>(variables_.size()); }
  std::size_t size() const { return size_; }
  const std::vector<TableVariable>& variables() const { return variables_; }
  const Vector<Scalar>& values() const { return values_; }

  int position(std::string_view name) const {
    for (int i = 0; i < arity(); ++i) {
      if (variables_[i].name == name) return i;
    }
    throw std::invalid_argument("table has no variable '" + std::string(name) + "'");
  }

  std::size_t index(std::span<const int> config) const {
    if (static_cast<int>(config.size()) != arity()) {
      throw std::invalid_argument("configuration has wrong arity");
    }
    std::size_t idx = 0;
    for (int i = 0; i < arity(); ++i) {
      if (config[i] < 0 || config[i] >= variables_[i].levels) {
        throw std::out_of_range("level " + std::to_string(config[i]) + " out of range for '" +
                                variables_[i].name + "'");
      }
      idx += strides_[i] * static_cast<std::size_t>(config[i]);
    }
    return idx;
  }

  std::vector<int> config(std::size_t idx) const {
    std::vector<int> out(variables_.size());
    for (int i = 0; i < arity(); ++i) {
      out[i] = static_cast<int>(idx / strides_[i]);
      idx %= strides_[i];
    }
    return out;
  }

  const Scalar& operator[](std::size_t i) const { return values_[static_cast<Eigen::Index>(i)]; }
  Scalar& operator[](std::size_t i) { return values_[static_cast<Eigen::Index>(i)]; }
  const Scalar& at(std::span<const int> config) const { return (*this)[index(config)]; }
  Scalar& at(std::span<const int> config) { return (*this)[index(config)]; }

  Scalar total() const { return compensated_sum<Scalar>(values_); }

  /// Marginal over `keep`, in the order given.
  ProbabilityTable marginal(const std::vector<std::string>& keep) const {
    std::vector<int> pos;
    std::vector<TableVariable> vars;
    for (const auto& name : keep) {
      pos.push_back(position(name));
      vars.push_back(variables_[pos.back()]);
    }
    auto out = ProbabilityTable::zeros(std::move(vars));
    std::vector<int> sub(pos.size());
    for (std::size_t i = 0; i < size_; ++i) {
      const auto full = config(i);
      for (std::size_t k = 0; k < pos.size(); ++k) sub[k] = full[pos[k]];
      out[out.index(sub)] += (*this)[i];
    }
    return out;
  }

  template <typename To>
  ProbabilityTable<To> cast() const {
    Vector<To> v(values_.size());
    for (Eigen::Index i = 0; i < values_.size(); ++i) v[i] = scalar_cast<To>(values_[i]);
    return ProbabilityTable<To>(variables_, std::move(v));
  }

  friend bool operator==(const ProbabilityTable& a, const ProbabilityTable& b) {
    return a.variables_ == b.variables_ && a.values_ == b.values_;
  }

 private:
  void init_strides() {
    strides_.assign(variables_.size(), 1);
    size_ = 1;
    for (int i = arity() - 1; i >= 0; --i) {
      if (variables_[i].levels < 1) throw std::invalid_argument("table variable without levels");
      strides_[i] = size_;
      size_ *= static_cast<std::size_t>(variables_[i].levels);
    }
  }

  std::vector<TableVariable> variables_;
  std::vector<std::size_t> strides_;
  std::size_t size_ = 1;
  Vector<Scalar> values_ = Vector<Scalar>::Ones(1);
};

/// p(targets | evidence) by ratio of marginals. Throws NullEventError when
/// the evidence has probability below `eps_pos`.
template <typename Scalar>
ProbabilityTable<Scalar> conditional(const ProbabilityTable<Scalar>& table,
                                     const std::vector<std::string>& targets,
                                     const Evidence& evidence, double eps_pos = 1e-12) {
  std::vector<std::pair<int, int>> fixed;
  for (const auto& [name, value] : evidence) fixed.emplace_back(table.position(name), value);

  std::vector<int> pos;
  std::vector<TableVariable> vars;
  for (const auto& name : targets) {
    pos.push_back(table.position(name));
    vars.push_back(table.variables()[pos.back()]);
  }
  auto out = ProbabilityTable<Scalar>::zeros(std::move(vars));
  std::vector<int> sub(pos.size());
  Scalar mass = 0;
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto full = table.config(i);
    const bool match = std::all_of(fixed.begin(), fixed.end(),
                                   [&full](const auto& f) { return full[f.first] == f.second; });
    if (!match) continue;
    for (std::size_t k = 0; k < pos.size(); ++k) sub[k] = full[pos[k]];
    out[out.index(sub)] += table[i];
    mass += table[i];
  }
  if (to_double(mass) < eps_pos || mass <= 0) {
    std::string what = "conditioning on a null event:";
    for (const auto& [name, value] : evidence) what += " " + name + "=" + std::to_string(value);
    throw NullEventError(what);
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i] /= mass;
  return out;
}

template <typename Scalar>
double max_abs_difference(const ProbabilityTable<Scalar>& a, const ProbabilityTable<Scalar>& b) {
  if (a.variables() != b.variables()) throw std::invalid_argument("tables have different variables");
  double worst = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(to_double(Scalar(a[i] - b[i]))));
  }
  return worst;
}

}  // namespace colluder
