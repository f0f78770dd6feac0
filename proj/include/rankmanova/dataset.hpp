#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "rankmanova/common.hpp"

namespace rankmanova {

using Subject = std::vector<double>;
using RawGroup = std::vector<Subject>;

// Grouped multivariate observations: a groups, group i an (n_i x d) block of
// finite reals. Ordinal outcomes enter as numeric level codes; all downstream
// computation uses only order and tie structure, so the coding is free.
// Immutable after construction.
class Dataset {
 public:
  explicit Dataset(std::vector<Eigen::MatrixXd> groups,
                   std::vector<std::string> component_labels = {})
      : groups_(std::move(groups)), labels_(std::move(component_labels)) {
    if (groups_.empty()) throw EmptyGroup("dataset needs at least one group");
    d_ = static_cast<int>(groups_.front().cols());
    if (d_ < 1) throw MismatchedDimension("component count must be >= 1");
    for (const auto& g : groups_) {
      if (g.rows() < 1) throw EmptyGroup("every group needs at least one subject");
      if (g.cols() != d_)
        throw MismatchedDimension("groups disagree on the component count");
      if (!g.allFinite()) throw NonFiniteValue("observations must be finite");
      N_ += static_cast<int>(g.rows());
    }
    if (!labels_.empty() && static_cast<int>(labels_.size()) != d_)
      throw MismatchedDimension("component label count must match d");
  }

  int group_count() const { return static_cast<int>(groups_.size()); }
  int dim() const { return d_; }
  int size(int group) const { return static_cast<int>(groups_[group].rows()); }
  int total() const { return N_; }

  const Eigen::MatrixXd& group(int i) const { return groups_[i]; }
  double value(int i, int k, int j) const { return groups_[i](k, j); }

  std::vector<double> column(int i, int j) const {
    const auto& g = groups_[i];
    std::vector<double> out(g.rows());
    for (int k = 0; k < g.rows(); ++k) out[k] = g(k, j);
    return out;
  }

  std::vector<int> sizes() const {
    std::vector<int> out(groups_.size());
    for (std::size_t i = 0; i < groups_.size(); ++i)
      out[i] = static_cast<int>(groups_[i].rows());
    return out;
  }

  const std::vector<std::string>& component_labels() const { return labels_; }

  friend bool operator==(const Dataset& x, const Dataset& y) {
    if (x.group_count() != y.group_count() || x.d_ != y.d_) return false;
    for (int i = 0; i < x.group_count(); ++i)
      if (x.groups_[i].rows() != y.groups_[i].rows() || x.groups_[i] != y.groups_[i])
        return false;
    return x.labels_ == y.labels_;
  }

 private:
  std::vector<Eigen::MatrixXd> groups_;
  std::vector<std::string> labels_;
  int d_ = 0;
  int N_ = 0;
};

// Builds a Dataset from raw per-group subject vectors, checking every
// invariant (shared d, n_i >= 1, finite values).
inline Dataset validate(const std::vector<RawGroup>& raw,
                        std::vector<std::string> component_labels = {}) {
  if (raw.empty()) throw EmptyGroup("dataset needs at least one group");
  std::vector<Eigen::MatrixXd> groups;
  groups.reserve(raw.size());
  for (const auto& g : raw) {
    if (g.empty()) throw EmptyGroup("every group needs at least one subject");
    const std::size_t d = g.front().size();
    Eigen::MatrixXd m(g.size(), d);
    for (std::size_t k = 0; k < g.size(); ++k) {
      if (g[k].size() != d)
        throw MismatchedDimension("subjects disagree on the component count");
      for (std::size_t j = 0; j < d; ++j) m(static_cast<int>(k), static_cast<int>(j)) = g[k][j];
    }
    groups.push_back(std::move(m));
  }
  return Dataset(std::move(groups), std::move(component_labels));
}

// Idempotent counterpart: re-runs all invariant checks on an existing Dataset.
inline Dataset revalidate(const Dataset& data) {
  std::vector<Eigen::MatrixXd> groups;
  groups.reserve(data.group_count());
  for (int i = 0; i < data.group_count(); ++i) groups.push_back(data.group(i));
  return Dataset(std::move(groups), data.component_labels());
}

// Position of effect (group, component) in the ad-vector, components varying
// fastest within each group block. Indices are 1-based (the statistical
// convention); the result is the 0-based storage position.
inline int flat_index(int group, int component, int a, int d) {
  if (group < 1 || group > a || component < 1 || component > d)
    throw OutOfRange("flat_index: index outside 1..a x 1..d");
  return (group - 1) * d + (component - 1);
}

// Factor structure on top of the flat group index. The flat index enumerates
// level combinations with the last factor varying fastest, matching the
// Kronecker order of the design-matrix builders.
class FactorialLayout {
 public:
  static FactorialLayout one_way(int a, std::string name = "group") {
    if (a < 1) throw LayoutMismatch("need at least one group");
    FactorialLayout out;
    out.levels_ = {a};
    out.names_ = {std::move(name)};
    return out;
  }

  static FactorialLayout crossed(std::vector<int> levels,
                                 std::vector<std::string> names = {}) {
    if (levels.empty()) throw LayoutMismatch("need at least one factor");
    for (int l : levels)
      if (l < 1) throw LayoutMismatch("factor levels must be >= 1");
    FactorialLayout out;
    out.levels_ = std::move(levels);
    if (names.empty()) {
      for (std::size_t f = 0; f < out.levels_.size(); ++f)
        out.names_.push_back("factor" + std::to_string(f + 1));
    } else {
      if (names.size() != out.levels_.size())
        throw LayoutMismatch("factor name count must match level count");
      out.names_ = std::move(names);
    }
    return out;
  }

  int factor_count() const { return static_cast<int>(levels_.size()); }

  int groups() const {
    int p = 1;
    for (int l : levels_) p *= l;
    return p;
  }

  const std::vector<int>& levels() const { return levels_; }
  const std::vector<std::string>& names() const { return names_; }

  // flat group index -> per-factor levels (0-based), last factor fastest
  std::vector<int> combination(int group) const {
    if (group < 0 || group >= groups()) throw OutOfRange("group index out of range");
    std::vector<int> combo(levels_.size());
    for (int f = factor_count() - 1; f >= 0; --f) {
      combo[f] = group % levels_[f];
      group /= levels_[f];
    }
    return combo;
  }

  int group_of(const std::vector<int>& combo) const {
    if (static_cast<int>(combo.size()) != factor_count())
      throw OutOfRange("combination length must match factor count");
    int g = 0;
    for (int f = 0; f < factor_count(); ++f) {
      if (combo[f] < 0 || combo[f] >= levels_[f])
        throw OutOfRange("factor level out of range");
      g = g * levels_[f] + combo[f];
    }
    return g;
  }

 private:
  std::vector<int> levels_;
  std::vector<std::string> names_;
};

}  // namespace rankmanova
