#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <utility>
#include <vector>

#include "rankmanova/dataset.hpp"

namespace rankmanova {

// Counting kernel c(u) = 1{u > 0} + 1/2 * 1{u = 0}. Together with mid-ranks
// this realizes the normalized (mid) version of every distribution function,
// so tie handling is exact: values are compared with ==, never an epsilon.
inline double count_kernel(double u) {
  if (u > 0.0) return 1.0;
  if (u == 0.0) return 0.5;
  return 0.0;
}

// Normalized empirical distribution function F^(x) = (1/n) sum_k c(x - X_k).
inline double ecdf(const std::vector<double>& sample, double x) {
  if (sample.empty()) throw EmptySample("ecdf of an empty sample");
  double s = 0.0;
  for (double v : sample) s += count_kernel(x - v);
  return s / static_cast<double>(sample.size());
}

// Mid-ranks of a pooled sample, returned in input order. Tied runs share the
// average of the rank positions they occupy; the rank sum is always
// M(M+1)/2 for M = pooled size.
inline std::vector<double> midranks(const std::vector<double>& pooled) {
  if (pooled.empty()) throw EmptySample("midranks of an empty sample");
  const std::size_t m = pooled.size();
  std::vector<std::size_t> order(m);
  for (std::size_t t = 0; t < m; ++t) order[t] = t;
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return pooled[x] < pooled[y]; });
  std::vector<double> ranks(m);
  std::size_t t = 0;
  while (t < m) {
    std::size_t run = t + 1;
    while (run < m && pooled[order[run]] == pooled[order[t]]) ++run;
    // positions t+1 .. run (1-based), average = t + 1 + (run - t - 1)/2
    const double mid = static_cast<double>(t + 1) + static_cast<double>(run - t - 1) / 2.0;
    for (std::size_t s = t; s < run; ++s) ranks[order[s]] = mid;
    t = run;
  }
  return ranks;
}

namespace detail {

// Sum of pooled mid-ranks over the elements of `second`; both inputs sorted
// ascending. Equivalent to summing midranks(first ++ second) over the second
// block, in O(n + m).
inline double midrank_sum_second(const std::vector<double>& first,
                                 const std::vector<double>& second) {
  std::size_t ia = 0, ib = 0;
  double pos = 1.0;  // next rank position
  double sum = 0.0;
  while (ia < first.size() || ib < second.size()) {
    double v;
    if (ia < first.size() && (ib >= second.size() || first[ia] <= second[ib]))
      v = first[ia];
    else
      v = second[ib];
    std::size_t ca = 0, cb = 0;
    while (ia + ca < first.size() && first[ia + ca] == v) ++ca;
    while (ib + cb < second.size() && second[ib + cb] == v) ++cb;
    const double c = static_cast<double>(ca + cb);
    const double mid = pos + (c - 1.0) / 2.0;
    sum += mid * static_cast<double>(cb);
    pos += c;
    ia += ca;
    ib += cb;
  }
  return sum;
}

// Weighted variant: entry t of either sample stands for weight[t] copies of
// its value (weights may be zero). Used by the group-wise bootstrap, where a
// resampled column is the original sorted column with multiplicities.
inline double midrank_sum_second_weighted(const std::vector<double>& first,
                                          const std::vector<int>& wfirst,
                                          const std::vector<double>& second,
                                          const std::vector<int>& wsecond) {
  std::size_t ia = 0, ib = 0;
  double pos = 1.0;
  double sum = 0.0;
  while (ia < first.size() || ib < second.size()) {
    double v;
    if (ia < first.size() && (ib >= second.size() || first[ia] <= second[ib]))
      v = first[ia];
    else
      v = second[ib];
    long ca = 0, cb = 0;
    while (ia < first.size() && first[ia] == v) ca += wfirst[ia], ++ia;
    while (ib < second.size() && second[ib] == v) cb += wsecond[ib], ++ib;
    const double c = static_cast<double>(ca + cb);
    if (c == 0.0) continue;
    const double mid = pos + (c - 1.0) / 2.0;
    sum += mid * static_cast<double>(cb);
    pos += c;
  }
  return sum;
}

// w from the mid-rank representation: (mean pooled rank of the i-sample
// minus (n_i+1)/2) / n_l. Shared by every code path so results agree
// bit for bit.
inline double w_from_rank_sum(double rank_sum, int n_i, int n_l) {
  const double rbar = rank_sum / static_cast<double>(n_i);
  return (rbar - (static_cast<double>(n_i) + 1.0) / 2.0) / static_cast<double>(n_l);
}

// normalized ECDF on a sorted sample
inline double ecdf_sorted(const std::vector<double>& sorted, double x) {
  const auto lb = std::lower_bound(sorted.begin(), sorted.end(), x) - sorted.begin();
  const auto ub = std::upper_bound(sorted.begin(), sorted.end(), x) - sorted.begin();
  return (static_cast<double>(lb) + 0.5 * static_cast<double>(ub - lb)) /
         static_cast<double>(sorted.size());
}

// sorted copies of every (group, component) column
inline std::vector<std::vector<double>> sorted_columns(const Dataset& data) {
  const int a = data.group_count(), d = data.dim();
  std::vector<std::vector<double>> cols(static_cast<std::size_t>(a) * d);
  for (int i = 0; i < a; ++i)
    for (int j = 0; j < d; ++j) {
      auto v = data.column(i, j);
      std::sort(v.begin(), v.end());
      cols[static_cast<std::size_t>(i) * d + j] = std::move(v);
    }
  return cols;
}

}  // namespace detail

// Mann-Whitney effect estimate w^_lij = int F^_lj dF^_ij for two samples of
// the same component, computed from mid-ranks over the pooled sample.
inline double pairwise_effect(const std::vector<double>& sample_l,
                              const std::vector<double>& sample_i) {
  if (sample_l.empty() || sample_i.empty())
    throw EmptySample("pairwise_effect of an empty sample");
  std::vector<double> sl = sample_l;
  std::vector<double> si = sample_i;
  std::sort(sl.begin(), sl.end());
  std::sort(si.begin(), si.end());
  const double rsum = detail::midrank_sum_second(sl, si);
  return detail::w_from_rank_sum(rsum, static_cast<int>(si.size()),
                                 static_cast<int>(sl.size()));
}

// All pairwise effects w^_lij. Only l < i is stored; the diagonal is exactly
// 1/2 and the mirror entry is produced as 1 - w, which keeps the
// complementarity identity w_lij + w_ilj = 1 exact in floating point.
class PairwiseEffects {
 public:
  PairwiseEffects(int a, int d)
      : a_(a), d_(d), store_(static_cast<std::size_t>(a) * (a - 1) / 2 * d, 0.0) {}

  int groups() const { return a_; }
  int dim() const { return d_; }

  double w(int l, int i, int j) const {
    check(l, i, j);
    if (l == i) return 0.5;
    if (l < i) return store_[slot(l, i, j)];
    return 1.0 - store_[slot(i, l, j)];
  }

  void set_lower(int l, int i, int j, double value) {
    check(l, i, j);
    store_[slot(l, i, j)] = value;
  }

 private:
  void check(int l, int i, int j) const {
    if (l < 0 || l >= a_ || i < 0 || i >= a_ || j < 0 || j >= d_)
      throw OutOfRange("pairwise effect index out of range");
  }
  std::size_t slot(int l, int i, int j) const {
    // triangular index of (l, i) with l < i
    const std::size_t pair = static_cast<std::size_t>(l) * a_ -
                             static_cast<std::size_t>(l) * (l + 1) / 2 + (i - l - 1);
    return pair * d_ + j;
  }
  int a_, d_;
  std::vector<double> store_;
};

// The ad-vector of unweighted relative effects p^_ij = (1/a) sum_l w^_lij,
// laid out groups-outer / components-inner.
struct EffectVector {
  Eigen::VectorXd p;
  int a = 0;
  int d = 0;
  int N = 0;
  std::vector<int> n;
};

struct Effects {
  EffectVector p_hat;
  PairwiseEffects w_hat;
};

inline Effects effects(const Dataset& data) {
  const int a = data.group_count(), d = data.dim();
  PairwiseEffects w(a, d);
  const auto cols = detail::sorted_columns(data);
  for (int j = 0; j < d; ++j)
    for (int l = 0; l < a; ++l)
      for (int i = l + 1; i < a; ++i) {
        const auto& sl = cols[static_cast<std::size_t>(l) * d + j];
        const auto& si = cols[static_cast<std::size_t>(i) * d + j];
        const double rsum = detail::midrank_sum_second(sl, si);
        w.set_lower(l, i, j,
                    detail::w_from_rank_sum(rsum, static_cast<int>(si.size()),
                                            static_cast<int>(sl.size())));
      }
  EffectVector pv;
  pv.a = a;
  pv.d = d;
  pv.N = data.total();
  pv.n = data.sizes();
  pv.p = Eigen::VectorXd(a * d);
  for (int i = 0; i < a; ++i)
    for (int j = 0; j < d; ++j) {
      double s = 0.5;  // self term w_iij
      for (int l = 0; l < a; ++l)
        if (l != i) s += w.w(l, i, j);
      pv.p[i * d + j] = s / static_cast<double>(a);
    }
  return Effects{std::move(pv), std::move(w)};
}

}  // namespace rankmanova
