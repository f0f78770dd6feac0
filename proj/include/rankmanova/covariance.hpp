#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <vector>

#include "rankmanova/ranks.hpp"

namespace rankmanova {

// Plug-in ingredients and estimate of the asymptotic covariance of
// sqrt(N)(p^ - p). Diagnostic only: the bootstrap engines never consume it,
// so no bias correction or shrinkage is applied.
class CovarianceEstimate {
 public:
  CovarianceEstimate(int a, int d, std::vector<int> n, int N, PairwiseEffects w,
                     std::vector<Eigen::MatrixXd> gram, Eigen::MatrixXd sigma)
      : a_(a), d_(d), n_(std::move(n)), N_(N), w_(std::move(w)),
        gram_(std::move(gram)), sigma_(std::move(sigma)) {}

  int groups() const { return a_; }
  int dim() const { return d_; }
  int total() const { return N_; }
  const std::vector<int>& sizes() const { return n_; }
  const PairwiseEffects& w() const { return w_; }
  const Eigen::MatrixXd& sigma() const { return sigma_; }

  // tau^_{i i' l j} = (1/n_l) sum_k F^_ij(X_ljk) F^_i'j(X_ljk)
  double tau(int i, int i2, int l, int j) const {
    check(i, i2, l, j, j);
    return gram_[l](i * d_ + j, i2 * d_ + j);
  }

  // rho^_{i i' l j j'} = (1/n_l) sum_k F^_ij(X_ljk) F^_i'j'(X_lj'k), j != j'
  double rho(int i, int i2, int l, int j, int j2) const {
    check(i, i2, l, j, j2);
    if (j == j2) throw SameComponent("rho requires two distinct components");
    return gram_[l](i * d_ + j, i2 * d_ + j2);
  }

  void set_sigma(Eigen::MatrixXd sigma) { sigma_ = std::move(sigma); }

 private:
  void check(int i, int i2, int l, int j, int j2) const {
    if (i < 0 || i >= a_ || i2 < 0 || i2 >= a_ || l < 0 || l >= a_ || j < 0 ||
        j >= d_ || j2 < 0 || j2 >= d_)
      throw OutOfRange("covariance ingredient index out of range");
  }
  int a_, d_;
  std::vector<int> n_;
  int N_;
  PairwiseEffects w_;
  std::vector<Eigen::MatrixXd> gram_;
  Eigen::MatrixXd sigma_;
};

// Direct evaluations of the two ingredient functionals (used standalone and
// in tests; sigma_hat computes them in bulk).
inline double tau_hat(const Dataset& data, int i, int i2, int l, int j) {
  const auto si = data.column(i, j);
  const auto si2 = data.column(i2, j);
  const auto xl = data.column(l, j);
  double s = 0.0;
  for (double x : xl) s += ecdf(si, x) * ecdf(si2, x);
  return s / static_cast<double>(xl.size());
}

inline double rho_hat(const Dataset& data, int i, int i2, int l, int j, int j2) {
  if (j == j2) throw SameComponent("rho requires two distinct components");
  const auto si = data.column(i, j);
  const auto si2 = data.column(i2, j2);
  const int nl = data.size(l);
  double s = 0.0;
  for (int k = 0; k < nl; ++k)
    s += ecdf(si, data.value(l, k, j)) * ecdf(si2, data.value(l, k, j2));
  return s / static_cast<double>(nl);
}

// Covariance entry at the w^-level: the four-delta-term expansion of
// N cov(w^_lij, w^_l'i'j'). Entries whose index pairs are disjoint are
// exactly zero, as are fully coincident indices (the terms cancel).
inline double w_covariance(const CovarianceEstimate& est, int l, int i, int j,
                           int l2, int i2, int j2) {
  const auto& w = est.w();
  const auto& n = est.sizes();
  const double N = static_cast<double>(est.total());
  // cov(F_pj(X_q j .), F_p'j'(X_q j' .)) with plug-ins
  auto cv = [&](int p, int p2, int q) {
    if (j == j2) return est.tau(p, p2, q, j) - w.w(p, q, j) * w.w(p2, q, j);
    return est.rho(p, p2, q, j, j2) - w.w(p, q, j) * w.w(p2, q, j2);
  };
  double s = 0.0;
  if (l == l2) s += N / n[l] * cv(i, i2, l);
  if (l == i2) s -= N / n[l] * cv(i, l2, l);
  if (i == i2) s += N / n[i] * cv(l, l2, i);
  if (i == l2) s -= N / n[i] * cv(l, i2, i);
  return s;
}

// Plug-in estimate of the limit covariance of sqrt(N)(p^ - p):
// Sigma^ = (1/a^2) sum_{l,l'} Sigma^_{ll'}, assembled from the general
// four-term w^-level formula.
inline CovarianceEstimate sigma_hat(const Dataset& data) {
  const int a = data.group_count(), d = data.dim();
  for (int i = 0; i < a; ++i)
    if (data.size(i) < 2)
      throw DegenerateGroup("sigma_hat needs n_i >= 2 in every group");

  auto eff = effects(data);
  const auto cols = detail::sorted_columns(data);

  // E_l(i*d+j, k) = F^_ij(X_ljk); gram_l = E_l E_l' / n_l
  std::vector<Eigen::MatrixXd> gram(a);
  for (int l = 0; l < a; ++l) {
    const int nl = data.size(l);
    Eigen::MatrixXd E(a * d, nl);
    for (int i = 0; i < a; ++i)
      for (int j = 0; j < d; ++j) {
        const auto& sij = cols[static_cast<std::size_t>(i) * d + j];
        for (int k = 0; k < nl; ++k)
          E(i * d + j, k) = detail::ecdf_sorted(sij, data.value(l, k, j));
      }
    gram[l] = (E * E.transpose()) / static_cast<double>(nl);
  }

  CovarianceEstimate est(a, d, data.sizes(), data.total(), std::move(eff.w_hat),
                         std::move(gram),
                         Eigen::MatrixXd::Zero(a * d, a * d));

  Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(a * d, a * d);
  for (int i = 0; i < a; ++i)
    for (int j = 0; j < d; ++j)
      for (int i2 = 0; i2 < a; ++i2)
        for (int j2 = 0; j2 < d; ++j2) {
          double s = 0.0;
          for (int l = 0; l < a; ++l)
            for (int l2 = 0; l2 < a; ++l2)
              s += w_covariance(est, l, i, j, l2, i2, j2);
          sigma(i * d + j, i2 * d + j2) = s / (static_cast<double>(a) * a);
        }
  sigma = 0.5 * (sigma + sigma.transpose()).eval();

  est.set_sigma(std::move(sigma));
  return est;
}

// Eigenvalues nu_1 >= ... >= nu_ad of Sigma^{1/2} T Sigma^{1/2}; reported for
// diagnostics only. Negative Sigma eigenvalues are clipped at zero before the
// square root.
inline Eigen::VectorXd eigen_diagnostic(const Eigen::MatrixXd& sigma,
                                        const Eigen::MatrixXd& T) {
  if (sigma.rows() != sigma.cols() || T.rows() != T.cols() ||
      sigma.rows() != T.rows())
    throw DimensionMismatch("eigen_diagnostic: incompatible shapes");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma);
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Eigen::MatrixXd root =
      es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  Eigen::MatrixXd m = root * T * root;
  m = 0.5 * (m + m.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es2(m);
  Eigen::VectorXd nu = es2.eigenvalues().cwiseMax(0.0);
  std::sort(nu.data(), nu.data() + nu.size(), std::greater<double>());
  return nu;
}

}  // namespace rankmanova
