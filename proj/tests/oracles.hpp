#pragma once

// Test-only oracles. Each one re-derives a quantity from its definition with
// plain loops, independent of the library's computation paths.

#include <cstdint>
#include <random>
#include <vector>

#include "rankmanova/covariance.hpp"
#include "rankmanova/dataset.hpp"

namespace oracle {

inline double ckernel(double u) { return u > 0.0 ? 1.0 : (u == 0.0 ? 0.5 : 0.0); }

inline double fhat(const std::vector<double>& sample, double x) {
  double s = 0.0;
  for (double v : sample) s += ckernel(x - v);
  return s / static_cast<double>(sample.size());
}

// w^_lij by the double-sum counting kernel (integrand sample_l, integrator sample_i)
inline double pairwise_w(const std::vector<double>& sample_l,
                         const std::vector<double>& sample_i) {
  double s = 0.0;
  for (double xi : sample_i)
    for (double xl : sample_l) s += ckernel(xi - xl);
  return s / (static_cast<double>(sample_l.size()) * static_cast<double>(sample_i.size()));
}

// Eq-style wild bootstrap replicate by direct tabulation of F*, G*, F^, G^
// on the observed points and Stieltjes summation.
inline Eigen::VectorXd wild_replicate(const rankmanova::Dataset& data,
                                      const std::vector<std::vector<double>>& mult) {
  const int a = data.group_count(), d = data.dim();
  auto fstar = [&](int l, int j, double x) {
    const auto col = data.column(l, j);
    const double fh = fhat(col, x);
    double s = 0.0;
    for (std::size_t k = 0; k < col.size(); ++k)
      s += mult[l][k] * (ckernel(x - col[k]) - fh);
    return s / static_cast<double>(col.size());
  };
  auto gstar = [&](int j, double x) {
    double s = 0.0;
    for (int l = 0; l < a; ++l) s += fstar(l, j, x);
    return s / static_cast<double>(a);
  };
  Eigen::VectorXd p(a * d);
  for (int i = 0; i < a; ++i)
    for (int j = 0; j < d; ++j) {
      // term1 = int G*_j dF^_ij: mass 1/n_i at each observation of group i
      const auto xi = data.column(i, j);
      double term1 = 0.0;
      for (double x : xi) term1 += gstar(j, x);
      term1 /= static_cast<double>(xi.size());
      // term2 = int F*_ij dG^_j: G^_j puts mass 1/(a n_l) at group l's points
      double term2 = 0.0;
      for (int l = 0; l < a; ++l) {
        const auto xl = data.column(l, j);
        double m = 0.0;
        for (double x : xl) m += fstar(i, j, x);
        term2 += m / static_cast<double>(xl.size());
      }
      term2 /= static_cast<double>(a);
      p[i * d + j] = std::sqrt(static_cast<double>(data.total())) * (term1 - term2);
    }
  return p;
}

// ---- Appendix-style covariance case list ----

inline double tau_direct(const rankmanova::Dataset& data, int i, int i2, int l, int j) {
  const auto si = data.column(i, j);
  const auto si2 = data.column(i2, j);
  const auto xl = data.column(l, j);
  double s = 0.0;
  for (double x : xl) s += fhat(si, x) * fhat(si2, x);
  return s / static_cast<double>(xl.size());
}

inline double rho_direct(const rankmanova::Dataset& data, int i, int i2, int l, int j,
                         int j2) {
  const auto si = data.column(i, j);
  const auto si2 = data.column(i2, j2);
  double s = 0.0;
  for (int k = 0; k < data.size(l); ++k)
    s += fhat(si, data.value(l, k, j)) * fhat(si2, data.value(l, k, j2));
  return s / static_cast<double>(data.size(l));
}

inline double w_direct(const rankmanova::Dataset& data, int l, int i, int j) {
  if (l == i) return 0.5;
  return pairwise_w(data.column(l, j), data.column(i, j));
}

// Verbatim transcription of the simplified covariance case list. Returns
// false when the index configuration is not one of the printed rows.
inline bool sigma_case_list(const rankmanova::Dataset& data, int l, int i, int j,
                            int l2, int i2, int j2, double& out) {
  const double N = data.total();
  auto n = [&](int g) { return static_cast<double>(data.size(g)); };
  auto tau = [&](int p, int p2, int q) { return tau_direct(data, p, p2, q, j); };
  auto rho = [&](int p, int p2, int q) { return rho_direct(data, p, p2, q, j, j2); };
  auto w = [&](int p, int q, int jj) { return w_direct(data, p, q, jj); };
  const bool disjoint = i != i2 && i != l2 && l != i2 && l != l2;
  if (disjoint || (i == l && l == i2 && i2 == l2) ||
      (i == i2 && i2 == l && l != l2) || (i != i2 && i2 == l && l == l2)) {
    out = 0.0;
    return true;
  }
  if (j == j2) {
    if (i == i2 && i != l && l == l2) {
      out = N / n(l) * (tau(i, i, l) - w(i, l, j) * w(i, l, j)) +
            N / n(i) * (tau(l, l, i) - w(l, i, j) * w(l, i, j));
      return true;
    }
    if (i == l2 && i2 == l && i != i2) {
      out = -N / n(l) * (tau(i, i, l) - w(i, l, j) * w(i, l, j)) -
            N / n(i) * (tau(l, l, i) - w(l, i, j) * w(l, i, j));
      return true;
    }
    if (i == i2 && i != l && l != l2 && l2 != i) {
      out = N / n(i) * (tau(l, l2, i) - w(l, i, j) * w(l2, i, j));
      return true;
    }
    if (i == l2 && i != i2 && i2 != l && l != i) {
      out = -N / n(i) * (tau(l, i2, i) - w(l, i, j) * w(i2, i, j));
      return true;
    }
    return false;
  }
  if (i == i2 && i != l && l == l2) {
    out = N / n(l) * (rho(i, i, l) - w(i, l, j) * w(i, l, j2)) +
          N / n(i) * (rho(l, l, i) - w(l, i, j) * w(l, i, j2));
    return true;
  }
  if (i == l2 && i2 == l && i != i2) {
    out = -N / n(l) * (rho(i, i, l) - w(i, l, j) * w(i, l, j2)) -
          N / n(i) * (rho(l, l, i) - w(l, i, j) * w(l, i, j2));
    return true;
  }
  if (i == i2 && i != l && l != l2 && l2 != i) {
    out = N / n(i) * (rho(l, l2, i) - w(l, i, j) * w(l2, i, j2));
    return true;
  }
  if (i == l2 && i != i2 && i2 != l && l != i) {
    out = -N / n(i) * (rho(l, i2, i) - w(l, i, j) * w(i2, i, j2));
    return true;
  }
  return false;
}

// The case list printed in the source text omits configurations it leaves to
// symmetry: the covariance is symmetric under swapping the two tuples, and
// w^_ilj = 1 - w^_lij flips the sign when one tuple's (l, i) pair is
// exchanged. Closing the verbatim list under those two identities covers
// every index configuration.
inline double sigma_w(const rankmanova::Dataset& data, int l, int i, int j, int l2,
                      int i2, int j2) {
  double v;
  if (sigma_case_list(data, l, i, j, l2, i2, j2, v)) return v;
  if (sigma_case_list(data, l2, i2, j2, l, i, j, v)) return v;
  if (sigma_case_list(data, i, l, j, l2, i2, j2, v)) return -v;
  if (sigma_case_list(data, l2, i2, j2, i, l, j, v)) return -v;
  if (sigma_case_list(data, l, i, j, i2, l2, j2, v)) return -v;
  if (sigma_case_list(data, i2, l2, j2, l, i, j, v)) return -v;
  if (sigma_case_list(data, i, l, j, i2, l2, j2, v)) return v;
  if (sigma_case_list(data, i2, l2, j2, i, l, j, v)) return v;
  throw std::logic_error("covariance case list oracle: configuration not covered");
}

inline Eigen::MatrixXd sigma_p(const rankmanova::Dataset& data) {
  const int a = data.group_count(), d = data.dim();
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(a * d, a * d);
  for (int i = 0; i < a; ++i)
    for (int j = 0; j < d; ++j)
      for (int i2 = 0; i2 < a; ++i2)
        for (int j2 = 0; j2 < d; ++j2) {
          double acc = 0.0;
          for (int l = 0; l < a; ++l)
            for (int l2 = 0; l2 < a; ++l2) acc += sigma_w(data, l, i, j, l2, i2, j2);
          s(i * d + j, i2 * d + j2) = acc / (static_cast<double>(a) * a);
        }
  return s;
}

// ---- random tied datasets for property tests ----

inline rankmanova::Dataset random_tied_dataset(std::mt19937_64& gen, int max_a = 4,
                                               int max_d = 3, int max_n = 8,
                                               int levels = 3) {
  std::uniform_int_distribution<int> da(2, max_a), dd(1, max_d), dn(1, max_n),
      dv(1, levels);
  const int a = da(gen), d = dd(gen);
  std::vector<Eigen::MatrixXd> groups;
  for (int i = 0; i < a; ++i) {
    const int n = dn(gen);
    Eigen::MatrixXd g(n, d);
    for (int k = 0; k < n; ++k)
      for (int j = 0; j < d; ++j) g(k, j) = static_cast<double>(dv(gen));
    groups.push_back(std::move(g));
  }
  return rankmanova::Dataset(std::move(groups));
}

}  // namespace oracle
