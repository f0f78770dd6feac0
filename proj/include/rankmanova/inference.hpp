#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "rankmanova/design.hpp"
#include "rankmanova/parallel.hpp"
#include "rankmanova/ranks.hpp"
#include "rankmanova/rng.hpp"

namespace rankmanova {

enum class Engine { wild, classical };

inline const char* engine_name(Engine e) {
  return e == Engine::wild ? "wild" : "classical";
}

inline const char* multiplier_name(MultiplierKind m) {
  return m == MultiplierKind::rademacher ? "rademacher" : "normal";
}

// ANOVA-type statistic T_N = N p^' T p^.
inline double ats(const EffectVector& p_hat, const Eigen::MatrixXd& T, int N) {
  const int ad = static_cast<int>(p_hat.p.size());
  if (T.rows() != ad || T.cols() != ad)
    throw DimensionMismatch("ats: T must be (ad x ad)");
  const double q = p_hat.p.dot(T * p_hat.p);
  return std::max(0.0, static_cast<double>(N) * q);
}

// F*_lj(x) = (1/n_l) sum_k D_lk [ c(x - X_ljk) - F^_lj(x) ], the multiplier
// bootstrap version of F^_lj - F_lj. Direct evaluation; the test engine below
// computes the same quantity through precomputed rank indices.
inline double wild_residual_process(const Dataset& data, int l, int j,
                                    const std::vector<double>& multipliers,
                                    double x) {
  const int nl = data.size(l);
  if (static_cast<int>(multipliers.size()) != nl)
    throw DimensionMismatch("one multiplier per subject of the group");
  const auto col = data.column(l, j);
  const double fhat = ecdf(col, x);
  double s = 0.0;
  for (int k = 0; k < nl; ++k)
    s += multipliers[k] * (count_kernel(x - col[k]) - fhat);
  return s / static_cast<double>(nl);
}

// Wild bootstrap engine. One construction precomputes, for every component j
// and ordered group pair (l, i), the positions of group i's observations
// within group l's sorted column. A replicate then only needs prefix sums of
// the permuted multipliers, O(a N d) per replicate.
//
// The replicate returns sqrt(N) (p*_11, ..., p*_ad)' with
//   p*_ij = int G*_j dF^_ij - int F*_ij dG^_j,
// both integrals being finite sums over observed points with the c-kernel
// (mid) convention at ties. In that form
//   p*_ij = (1/a) sum_{l != i} (M_li - M_il),
// where M_li is the mean of F*_lj over group i's observations; the self term
// M_ii cancels.
class WildEngine {
 public:
  explicit WildEngine(const Dataset& data)
      : a_(data.group_count()), d_(data.dim()), N_(data.total()), n_(data.sizes()) {
    cols_.resize(static_cast<std::size_t>(a_) * d_);
    perm_.resize(static_cast<std::size_t>(a_) * d_);
    for (int l = 0; l < a_; ++l)
      for (int j = 0; j < d_; ++j) {
        auto v = data.column(l, j);
        std::vector<int> perm(v.size());
        for (std::size_t t = 0; t < perm.size(); ++t) perm[t] = static_cast<int>(t);
        std::sort(perm.begin(), perm.end(),
                  [&](int x, int y) { return v[x] < v[y]; });
        std::vector<double> sorted(v.size());
        for (std::size_t t = 0; t < perm.size(); ++t) sorted[t] = v[perm[t]];
        cols_[idx(l, j)] = std::move(sorted);
        perm_[idx(l, j)] = std::move(perm);
      }
    pairs_.resize(static_cast<std::size_t>(a_) * a_ * d_);
    for (int j = 0; j < d_; ++j)
      for (int l = 0; l < a_; ++l) {
        const auto& sl = cols_[idx(l, j)];
        for (int i = 0; i < a_; ++i) {
          if (i == l) continue;
          PairIndex pi;
          const auto xi = data.column(i, j);
          pi.lb.resize(xi.size());
          pi.ub.resize(xi.size());
          double rawsum = 0.0;
          for (std::size_t k = 0; k < xi.size(); ++k) {
            const int lb = static_cast<int>(
                std::lower_bound(sl.begin(), sl.end(), xi[k]) - sl.begin());
            const int ub = static_cast<int>(
                std::upper_bound(sl.begin(), sl.end(), xi[k]) - sl.begin());
            pi.lb[k] = lb;
            pi.ub[k] = ub;
            rawsum += static_cast<double>(lb) + 0.5 * static_cast<double>(ub - lb);
          }
          pi.rawsum = rawsum;
          pairs_[pidx(j, l, i)] = std::move(pi);
        }
      }
  }

  int groups() const { return a_; }
  int dim() const { return d_; }
  int total() const { return N_; }
  const std::vector<int>& sizes() const { return n_; }

  // multipliers[l][k]: one per subject, shared across components
  Eigen::VectorXd replicate(const std::vector<std::vector<double>>& multipliers) const {
    if (static_cast<int>(multipliers.size()) != a_)
      throw DimensionMismatch("one multiplier vector per group");
    for (int l = 0; l < a_; ++l)
      if (static_cast<int>(multipliers[l].size()) != n_[l])
        throw DimensionMismatch("one multiplier per subject");
    std::vector<double> dbar(a_);
    for (int l = 0; l < a_; ++l) {
      double s = 0.0;
      for (double v : multipliers[l]) s += v;
      dbar[l] = s / static_cast<double>(n_[l]);
    }
    const double scale =
        std::sqrt(static_cast<double>(N_)) / static_cast<double>(a_);
    Eigen::VectorXd p = Eigen::VectorXd::Zero(a_ * d_);
    Eigen::MatrixXd M(a_, a_);
    std::vector<double> pref;
    for (int j = 0; j < d_; ++j) {
      for (int l = 0; l < a_; ++l) {
        const auto& perm = perm_[idx(l, j)];
        pref.assign(n_[l] + 1, 0.0);
        for (int t = 0; t < n_[l]; ++t)
          pref[t + 1] = pref[t] + multipliers[l][perm[t]];
        for (int i = 0; i < a_; ++i) {
          if (i == l) continue;
          const auto& pi = pairs_[pidx(j, l, i)];
          double ssum = 0.0;
          for (std::size_t k = 0; k < pi.lb.size(); ++k)
            ssum += pref[pi.lb[k]] + 0.5 * (pref[pi.ub[k]] - pref[pi.lb[k]]);
          M(l, i) = (ssum - dbar[l] * pi.rawsum) /
                    (static_cast<double>(n_[l]) * static_cast<double>(n_[i]));
        }
      }
      for (int i = 0; i < a_; ++i) {
        double s = 0.0;
        for (int l = 0; l < a_; ++l)
          if (l != i) s += M(l, i) - M(i, l);
        p[i * d_ + j] = scale * s;
      }
    }
    return p;
  }

  std::vector<std::vector<double>> draw_multipliers(Rng& rng, MultiplierKind kind) const {
    std::vector<std::vector<double>> D(a_);
    for (int l = 0; l < a_; ++l) {
      D[l].resize(n_[l]);
      for (int k = 0; k < n_[l]; ++k) D[l][k] = rng.multiplier(kind);
    }
    return D;
  }

 private:
  struct PairIndex {
    std::vector<int> lb, ub;
    double rawsum = 0.0;  // sum over group i's points of n_l * F^_lj
  };
  std::size_t idx(int l, int j) const { return static_cast<std::size_t>(l) * d_ + j; }
  std::size_t pidx(int j, int l, int i) const {
    return (static_cast<std::size_t>(j) * a_ + l) * a_ + i;
  }
  int a_, d_, N_;
  std::vector<int> n_;
  std::vector<std::vector<double>> cols_;
  std::vector<std::vector<int>> perm_;
  std::vector<PairIndex> pairs_;
};

// Convenience wrapper: one wild replicate from explicit multipliers.
inline Eigen::VectorXd wild_replicate(const Dataset& data,
                                      const std::vector<std::vector<double>>& multipliers) {
  return WildEngine(data).replicate(multipliers);
}

// Group-wise resampling: n_i whole d-vectors with replacement, per group.
inline std::vector<std::vector<int>> classical_indices(const Dataset& data, Rng& rng) {
  std::vector<std::vector<int>> idx(data.group_count());
  for (int i = 0; i < data.group_count(); ++i) {
    idx[i].resize(data.size(i));
    for (int k = 0; k < data.size(i); ++k) idx[i][k] = rng.uniform_int(data.size(i));
  }
  return idx;
}

// Reference path of the classical bootstrap: materialize the resampled
// dataset and rerun the effects estimator.
inline EffectVector classical_replicate(const Dataset& data,
                                        const std::vector<std::vector<int>>& indices) {
  if (static_cast<int>(indices.size()) != data.group_count())
    throw DimensionMismatch("one index vector per group");
  std::vector<Eigen::MatrixXd> groups;
  groups.reserve(indices.size());
  for (int i = 0; i < data.group_count(); ++i) {
    if (static_cast<int>(indices[i].size()) != data.size(i))
      throw DimensionMismatch("resample size must equal the group size");
    Eigen::MatrixXd g(data.size(i), data.dim());
    for (int k = 0; k < data.size(i); ++k) {
      if (indices[i][k] < 0 || indices[i][k] >= data.size(i))
        throw OutOfRange("resample index out of range");
      g.row(k) = data.group(i).row(indices[i][k]);
    }
    groups.push_back(std::move(g));
  }
  return effects(Dataset(std::move(groups))).p_hat;
}

// Fast path for the classical bootstrap: a resampled column is the original
// sorted column with per-subject multiplicities, so the rank sums come from a
// weighted merge with no re-sorting.
class ClassicalEngine {
 public:
  explicit ClassicalEngine(const Dataset& data)
      : a_(data.group_count()), d_(data.dim()), N_(data.total()), n_(data.sizes()) {
    cols_.resize(static_cast<std::size_t>(a_) * d_);
    perm_.resize(static_cast<std::size_t>(a_) * d_);
    for (int i = 0; i < a_; ++i)
      for (int j = 0; j < d_; ++j) {
        auto v = data.column(i, j);
        std::vector<int> perm(v.size());
        for (std::size_t t = 0; t < perm.size(); ++t) perm[t] = static_cast<int>(t);
        std::sort(perm.begin(), perm.end(),
                  [&](int x, int y) { return v[x] < v[y]; });
        std::vector<double> sorted(v.size());
        for (std::size_t t = 0; t < perm.size(); ++t) sorted[t] = v[perm[t]];
        cols_[idx(i, j)] = std::move(sorted);
        perm_[idx(i, j)] = std::move(perm);
      }
  }

  std::vector<std::vector<int>> counts_from_indices(
      const std::vector<std::vector<int>>& indices) const {
    std::vector<std::vector<int>> counts(a_);
    for (int i = 0; i < a_; ++i) {
      counts[i].assign(n_[i], 0);
      for (int k : indices[i]) ++counts[i][k];
    }
    return counts;
  }

  // counts[i][k] = how often subject k of group i appears in the resample
  EffectVector replicate(const std::vector<std::vector<int>>& counts) const {
    PairwiseEffects w(a_, d_);
    std::vector<int> wl, wi;
    for (int j = 0; j < d_; ++j)
      for (int l = 0; l < a_; ++l)
        for (int i = l + 1; i < a_; ++i) {
          sorted_weights(l, j, counts[l], wl);
          sorted_weights(i, j, counts[i], wi);
          const double rsum = detail::midrank_sum_second_weighted(
              cols_[idx(l, j)], wl, cols_[idx(i, j)], wi);
          w.set_lower(l, i, j, detail::w_from_rank_sum(rsum, n_[i], n_[l]));
        }
    EffectVector pv;
    pv.a = a_;
    pv.d = d_;
    pv.N = N_;
    pv.n = n_;
    pv.p = Eigen::VectorXd(a_ * d_);
    for (int i = 0; i < a_; ++i)
      for (int j = 0; j < d_; ++j) {
        double s = 0.5;
        for (int l = 0; l < a_; ++l)
          if (l != i) s += w.w(l, i, j);
        pv.p[i * d_ + j] = s / static_cast<double>(a_);
      }
    return pv;
  }

 private:
  void sorted_weights(int g, int j, const std::vector<int>& counts,
                      std::vector<int>& out) const {
    const auto& perm = perm_[idx(g, j)];
    out.resize(perm.size());
    for (std::size_t t = 0; t < perm.size(); ++t) out[t] = counts[perm[t]];
  }
  std::size_t idx(int i, int j) const { return static_cast<std::size_t>(i) * d_ + j; }
  int a_, d_, N_;
  std::vector<int> n_;
  std::vector<std::vector<double>> cols_;
  std::vector<std::vector<int>> perm_;
};

struct BootstrapResult {
  double observed = 0.0;           // T_N
  std::vector<double> replicates;  // bootstrap statistic values, all >= 0
  double critical_value = 0.0;     // ceil((1-alpha) B)-th order statistic
  double p_value = 1.0;            // (1 + #{replicates >= T_N}) / (B + 1)
  int B = 0;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  Engine method = Engine::wild;
  MultiplierKind multipliers = MultiplierKind::rademacher;
};

namespace detail {

inline constexpr std::uint64_t kWildStream = 0x57494C44ULL;       // "WILD"
inline constexpr std::uint64_t kClassicalStream = 0x434C4153ULL;  // "CLAS"

inline void summarize(BootstrapResult& r) {
  std::size_t count = 0;
  for (double v : r.replicates)
    if (v >= r.observed) ++count;
  r.p_value = (1.0 + static_cast<double>(count)) / (static_cast<double>(r.B) + 1.0);
  std::vector<double> sorted = r.replicates;
  std::sort(sorted.begin(), sorted.end());
  int k = static_cast<int>(std::ceil((1.0 - r.alpha) * r.B));
  k = std::min(std::max(k, 1), r.B);
  r.critical_value = sorted[k - 1];
}

inline void check_test_args(const EffectVector& p_hat, const HypothesisDesign& design,
                            int B, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidAlpha("alpha must be in (0,1)");
  if (B < 1) throw InvalidAlpha("bootstrap replicate count must be >= 1");
  const int ad = static_cast<int>(p_hat.p.size());
  if (design.T.rows() != ad || design.T.cols() != ad)
    throw DimensionMismatch("design matrix does not match the ad-vector");
}

}  // namespace detail

// phi*_N = 1{T_N > c*(alpha)} with c*(alpha) from wild bootstrap replicates
// T*_N = p*' T p* (p* already carries the sqrt(N) scaling). Replicate r draws
// its multipliers from an independent stream derived from (seed, r), so the
// result is identical for any thread count.
inline BootstrapResult wild_test(const Dataset& data, const HypothesisDesign& design,
                                 int B, double alpha,
                                 MultiplierKind kind = MultiplierKind::rademacher,
                                 std::uint64_t seed = 0, int threads = 1) {
  const Effects eff = effects(data);
  detail::check_test_args(eff.p_hat, design, B, alpha);
  BootstrapResult r;
  r.observed = ats(eff.p_hat, design.T, data.total());
  r.B = B;
  r.alpha = alpha;
  r.seed = seed;
  r.method = Engine::wild;
  r.multipliers = kind;
  r.replicates.assign(B, 0.0);
  const WildEngine engine(data);
  const Eigen::MatrixXd& T = design.T;
  parallel_for(static_cast<std::size_t>(B), threads, [&](std::size_t rep) {
    Rng rng(derive_seed(seed, detail::kWildStream, rep));
    const auto D = engine.draw_multipliers(rng, kind);
    const Eigen::VectorXd p = engine.replicate(D);
    r.replicates[rep] = std::max(0.0, p.dot(T * p));
  });
  detail::summarize(r);
  return r;
}

// Classical group-wise bootstrap test with
// T*_N = N (p* - p^)' T (p* - p^), centered at p^ so the approximation is
// valid under both the null and the alternative.
inline BootstrapResult classical_test(const Dataset& data, const HypothesisDesign& design,
                                      int B, double alpha, std::uint64_t seed = 0,
                                      int threads = 1) {
  const Effects eff = effects(data);
  detail::check_test_args(eff.p_hat, design, B, alpha);
  BootstrapResult r;
  r.observed = ats(eff.p_hat, design.T, data.total());
  r.B = B;
  r.alpha = alpha;
  r.seed = seed;
  r.method = Engine::classical;
  r.replicates.assign(B, 0.0);
  const ClassicalEngine engine(data);
  const Eigen::MatrixXd& T = design.T;
  const Eigen::VectorXd& p_hat = eff.p_hat.p;
  const double N = static_cast<double>(data.total());
  const auto sizes = data.sizes();
  parallel_for(static_cast<std::size_t>(B), threads, [&](std::size_t rep) {
    Rng rng(derive_seed(seed, detail::kClassicalStream, rep));
    std::vector<std::vector<int>> counts(sizes.size());
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      counts[i].assign(sizes[i], 0);
      for (int k = 0; k < sizes[i]; ++k) ++counts[i][rng.uniform_int(sizes[i])];
    }
    const EffectVector p_star = engine.replicate(counts);
    const Eigen::VectorXd diff = p_star.p - p_hat;
    r.replicates[rep] = std::max(0.0, N * diff.dot(T * diff));
  });
  detail::summarize(r);
  return r;
}

inline BootstrapResult run_test(const Dataset& data, const HypothesisDesign& design,
                                Engine engine, int B, double alpha, MultiplierKind kind,
                                std::uint64_t seed, int threads = 1) {
  return engine == Engine::wild
             ? wild_test(data, design, B, alpha, kind, seed, threads)
             : classical_test(data, design, B, alpha, seed, threads);
}

}  // namespace rankmanova
