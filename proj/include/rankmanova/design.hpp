#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include "rankmanova/common.hpp"

namespace rankmanova {

inline Eigen::MatrixXd kron(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  Eigen::MatrixXd out(x.rows() * y.rows(), x.cols() * y.cols());
  for (int r = 0; r < x.rows(); ++r)
    for (int c = 0; c < x.cols(); ++c)
      out.block(r * y.rows(), c * y.cols(), y.rows(), y.cols()) = x(r, c) * y;
  return out;
}

// P_d = I_d - J_d / d, symmetric and idempotent with zero row sums.
inline Eigen::MatrixXd centering_matrix(int d) {
  return Eigen::MatrixXd::Identity(d, d) -
         Eigen::MatrixXd::Constant(d, d, 1.0 / static_cast<double>(d));
}

// J_d / d, the averaging matrix (also idempotent).
inline Eigen::MatrixXd averaging_matrix(int d) {
  return Eigen::MatrixXd::Constant(d, d, 1.0 / static_cast<double>(d));
}

// Unique projection matrix T = H'(HH')^+ H of a contrast matrix H. The
// pseudoinverse goes through the symmetric eigendecomposition of HH' with a
// relative eigenvalue cutoff, which makes T stable under row scaling of H.
inline Eigen::MatrixXd projection(const Eigen::MatrixXd& H, double rel_tol = 1e-10) {
  const Eigen::MatrixXd HHt = H * H.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(HHt);
  const Eigen::VectorXd ev = es.eigenvalues();
  const double cutoff = rel_tol * std::max(ev.cwiseAbs().maxCoeff(), 0.0);
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(ev.size());
  for (int r = 0; r < ev.size(); ++r)
    if (ev[r] > cutoff && ev[r] > 0.0) inv[r] = 1.0 / ev[r];
  const Eigen::MatrixXd pinv =
      es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
  Eigen::MatrixXd T = H.transpose() * pinv * H;
  T = 0.5 * (T + T.transpose());
  return T;
}

// A linear null hypothesis T p = 0 with its generating contrast matrix.
struct HypothesisDesign {
  std::string label;
  Eigen::MatrixXd H;
  Eigen::MatrixXd T;
};

inline HypothesisDesign make_design(std::string label, Eigen::MatrixXd H) {
  Eigen::MatrixXd T = projection(H);
  return HypothesisDesign{std::move(label), std::move(H), std::move(T)};
}

// One-way null hypothesis p_1 = ... = p_a; T = P_a (x) I_d is itself a
// projection matrix.
inline HypothesisDesign one_way(int a, int d) {
  if (a < 2) throw LayoutMismatch("one-way design needs at least two groups");
  if (d < 1) throw LayoutMismatch("need at least one component");
  Eigen::MatrixXd T = kron(centering_matrix(a), Eigen::MatrixXd::Identity(d, d));
  return HypothesisDesign{"p_1 = ... = p_" + std::to_string(a), T, T};
}

struct TwoWayDesigns {
  HypothesisDesign main_a;
  HypothesisDesign main_b;
  HypothesisDesign interaction;
};

// Crossed two-way layout with the flat group index running over (A, B) cells,
// factor B fastest. The three T matrices are mutually orthogonal projections.
inline TwoWayDesigns two_way(int a, int b, int d) {
  if (a < 2 || b < 2) throw LayoutMismatch("two-way design needs >= 2 levels per factor");
  if (d < 1) throw LayoutMismatch("need at least one component");
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(d, d);
  Eigen::MatrixXd ta = kron(kron(centering_matrix(a), averaging_matrix(b)), id);
  Eigen::MatrixXd tb = kron(kron(averaging_matrix(a), centering_matrix(b)), id);
  Eigen::MatrixXd tab = kron(kron(centering_matrix(a), centering_matrix(b)), id);
  return TwoWayDesigns{HypothesisDesign{"main effect A", ta, ta},
                       HypothesisDesign{"main effect B", tb, tb},
                       HypothesisDesign{"interaction AB", tab, tab}};
}

// General crossed layout: one Kronecker factor per experimental factor,
// P (centering) where the factor is tested and J/levels where it is averaged
// out, followed by I_d.
inline HypothesisDesign crossed_design(const std::vector<int>& levels,
                                       const std::vector<bool>& tested, int d,
                                       std::string label) {
  if (levels.size() != tested.size() || levels.empty())
    throw LayoutMismatch("levels/tested size mismatch");
  Eigen::MatrixXd T = Eigen::MatrixXd::Identity(1, 1);
  for (std::size_t f = 0; f < levels.size(); ++f)
    T = kron(T, tested[f] ? centering_matrix(levels[f]) : averaging_matrix(levels[f]));
  T = kron(T, Eigen::MatrixXd::Identity(d, d));
  return HypothesisDesign{std::move(label), T, T};
}

namespace detail {

inline Eigen::MatrixXd component_equality_rows(int a, int d, int j) {
  // rows p_{1j} - p_{rj}, r = 2..a
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(a - 1, a * d);
  for (int r = 1; r < a; ++r) {
    H(r - 1, j) = 1.0;
    H(r - 1, r * d + j) = -1.0;
  }
  return H;
}

inline Eigen::MatrixXd pair_equality_rows(int a, int d, int i, int l) {
  // rows p_{ij} - p_{lj}, j = 1..d
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(d, a * d);
  for (int j = 0; j < d; ++j) {
    H(j, i * d + j) = 1.0;
    H(j, l * d + j) = -1.0;
  }
  return H;
}

inline Eigen::MatrixXd vstack(const std::vector<Eigen::MatrixXd>& blocks) {
  int rows = 0;
  for (const auto& b : blocks) rows += static_cast<int>(b.rows());
  Eigen::MatrixXd H(rows, blocks.front().cols());
  int at = 0;
  for (const auto& b : blocks) {
    H.middleRows(at, static_cast<int>(b.rows())) = b;
    at += static_cast<int>(b.rows());
  }
  return H;
}

}  // namespace detail

// H_0j: p_{1j} = ... = p_{aj} for every component j in the subset
// (0-based component indices).
inline HypothesisDesign component_subset(int a, int d, const std::vector<int>& components) {
  if (components.empty()) throw OutOfRange("component subset must be nonempty");
  std::vector<Eigen::MatrixXd> blocks;
  std::string label = "components {";
  for (std::size_t t = 0; t < components.size(); ++t) {
    const int j = components[t];
    if (j < 0 || j >= d) throw OutOfRange("component index out of range");
    blocks.push_back(detail::component_equality_rows(a, d, j));
    label += (t ? "," : "") + std::to_string(j + 1);
  }
  label += "} equal across groups";
  return make_design(std::move(label), detail::vstack(blocks));
}

// H_0il: p_i = p_l (all components) for one group pair, 0-based indices.
inline HypothesisDesign group_pair(int a, int d, int i, int l) {
  if (i < 0 || i >= a || l < 0 || l >= a || i == l)
    throw OutOfRange("invalid group pair");
  return make_design("p_" + std::to_string(i + 1) + " = p_" + std::to_string(l + 1),
                     detail::pair_equality_rows(a, d, i, l));
}

// Intersection of pairwise hypotheses over a subset of group pairs.
inline HypothesisDesign pair_subset(int a, int d,
                                    const std::vector<std::pair<int, int>>& pairs) {
  if (pairs.empty()) throw OutOfRange("pair subset must be nonempty");
  std::vector<Eigen::MatrixXd> blocks;
  std::string label = "pairs {";
  for (std::size_t t = 0; t < pairs.size(); ++t) {
    const auto [i, l] = pairs[t];
    if (i < 0 || i >= a || l < 0 || l >= a || i == l)
      throw OutOfRange("invalid group pair");
    blocks.push_back(detail::pair_equality_rows(a, d, i, l));
    label += (t ? "," : "") + std::to_string(i + 1) + "-" + std::to_string(l + 1);
  }
  label += "} equal";
  return make_design(std::move(label), detail::vstack(blocks));
}

}  // namespace rankmanova
