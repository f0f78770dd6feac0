#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "rankmanova/inference.hpp"
#include "rankmanova/parallel.hpp"

namespace rankmanova {

enum class DataModel { normal, lognormal, heteroscedastic_normal, ordinal };
enum class CovSetting { compound_symmetry, autoregressive, scaled_identity };

inline const char* model_name(DataModel m) {
  switch (m) {
    case DataModel::normal: return "normal";
    case DataModel::lognormal: return "lognormal";
    case DataModel::heteroscedastic_normal: return "heteroscedastic";
    default: return "ordinal";
  }
}

// V = I_d + rho (J_d - I_d): compound symmetry with unit variances.
inline Eigen::MatrixXd cs_cov(int d, double rho = 0.5) {
  if (d < 1) throw InvalidCorrelation("dimension must be >= 1");
  if (!(rho < 1.0) || (d > 1 && !(rho > -1.0 / (d - 1))))
    throw InvalidCorrelation("compound symmetry needs rho in (-1/(d-1), 1)");
  Eigen::MatrixXd v = Eigen::MatrixXd::Constant(d, d, rho);
  v.diagonal().setOnes();
  return v;
}

// V = (rho^{|r-s|}): AR(1) correlation.
inline Eigen::MatrixXd ar_cov(int d, double rho = 0.6) {
  if (d < 1) throw InvalidCorrelation("dimension must be >= 1");
  if (!(std::abs(rho) < 1.0)) throw InvalidCorrelation("AR needs |rho| < 1");
  Eigen::MatrixXd v(d, d);
  for (int r = 0; r < d; ++r)
    for (int s = 0; s < d; ++s) v(r, s) = std::pow(rho, std::abs(r - s));
  return v;
}

// Symmetric PSD square root via eigendecomposition.
inline Eigen::MatrixXd matrix_sqrt(const Eigen::MatrixXd& v) {
  if (v.rows() != v.cols()) throw NotPsd("matrix_sqrt needs a square matrix");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(v);
  const Eigen::VectorXd ev = es.eigenvalues();
  const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
  if (ev.minCoeff() < -1e-8 * scale) throw NotPsd("matrix is not positive semidefinite");
  const Eigen::VectorXd root = ev.cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

enum class ErrorDist { normal, lognormal };

// i.i.d. standardized errors, count x d, independent components with mean 0
// and variance 1. Lognormal standardization: (Y - e^{1/2}) / sqrt((e-1) e).
inline Eigen::MatrixXd gen_errors(ErrorDist dist, int count, int d, Rng& rng) {
  if (count < 1 || d < 1) throw OutOfRange("gen_errors needs count >= 1, d >= 1");
  Eigen::MatrixXd e(count, d);
  if (dist == ErrorDist::normal) {
    for (int k = 0; k < count; ++k)
      for (int j = 0; j < d; ++j) e(k, j) = rng.normal();
  } else {
    const double mean = std::exp(0.5);
    const double sd = std::sqrt((std::exp(1.0) - 1.0) * std::exp(1.0));
    for (int k = 0; k < count; ++k)
      for (int j = 0; j < d; ++j) e(k, j) = (std::exp(rng.normal()) - mean) / sd;
  }
  return e;
}

// X_k = mu + V^{1/2} eps_k, returned as rows.
inline Eigen::MatrixXd gen_continuous(const Eigen::MatrixXd& sqrt_v,
                                      const Eigen::VectorXd& mu, ErrorDist dist,
                                      int count, Rng& rng) {
  const int d = static_cast<int>(sqrt_v.rows());
  Eigen::MatrixXd x = gen_errors(dist, count, d, rng) * sqrt_v;  // sqrt_v symmetric
  x.rowwise() += mu.transpose();
  return x;
}

// Latent Gaussian copula discretized to uniform marginals: component j
// (0-based) has j+2 equiprobable categories 1..j+2, cut at standard normal
// quantiles. The latent correlation is used directly, so the category-level
// correlation is attenuated relative to it.
inline Eigen::MatrixXd gen_ordinal(int d, const Eigen::MatrixXd& latent_sqrt,
                                   int count, Rng& rng) {
  if (count < 1 || d < 1) throw OutOfRange("gen_ordinal needs count >= 1, d >= 1");
  std::vector<std::vector<double>> cuts(d);
  for (int j = 0; j < d; ++j) {
    const int cats = j + 2;
    for (int t = 1; t < cats; ++t)
      cuts[j].push_back(norm_quantile(static_cast<double>(t) / cats));
  }
  Eigen::MatrixXd z = gen_errors(ErrorDist::normal, count, d, rng) * latent_sqrt;
  Eigen::MatrixXd x(count, d);
  for (int k = 0; k < count; ++k)
    for (int j = 0; j < d; ++j) {
      int level = 1;
      for (double q : cuts[j])
        if (z(k, j) > q) ++level;
      x(k, j) = static_cast<double>(level);
    }
  return x;
}

// One scenario of the Monte-Carlo studies. The shift delta is added to every
// component of the second group (the alternative of the power study); 0 keeps
// the null.
struct SimScenario {
  std::string name = "custom";
  DataModel model = DataModel::normal;
  CovSetting cov = CovSetting::compound_symmetry;
  double cs_rho = 0.5;
  double ar_rho = 0.6;
  std::vector<double> sigma2;  // heteroscedastic: per-group variances
  int d = 4;
  std::vector<int> n_base = {10, 10};
  double delta = 0.0;
  int runs = 1000;
  int B = 500;
  double alpha = 0.05;
  MultiplierKind multipliers = MultiplierKind::rademacher;
  std::uint64_t seed = 0;
  bool run_wild = true;
  bool run_classical = false;
};

namespace detail {

inline constexpr std::uint64_t kDataStream = 0x44415441ULL;  // "DATA"
inline constexpr std::uint64_t kTestStream = 0x54455354ULL;  // "TEST"

inline Eigen::MatrixXd scenario_root(const SimScenario& sc) {
  // shared latent/error covariance root; heteroscedastic handled per group
  switch (sc.cov) {
    case CovSetting::compound_symmetry: return matrix_sqrt(cs_cov(sc.d, sc.cs_rho));
    case CovSetting::autoregressive: return matrix_sqrt(ar_cov(sc.d, sc.ar_rho));
    default: return Eigen::MatrixXd::Identity(sc.d, sc.d);
  }
}

inline Dataset generate_dataset(const SimScenario& sc, const std::vector<int>& n,
                                const Eigen::MatrixXd& root, Rng& rng) {
  const int a = static_cast<int>(n.size());
  std::vector<Eigen::MatrixXd> groups(a);
  for (int i = 0; i < a; ++i) {
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(sc.d);
    if (i == 1) mu.setConstant(sc.delta);
    switch (sc.model) {
      case DataModel::normal:
        groups[i] = gen_continuous(root, mu, ErrorDist::normal, n[i], rng);
        break;
      case DataModel::lognormal:
        groups[i] = gen_continuous(root, mu, ErrorDist::lognormal, n[i], rng);
        break;
      case DataModel::heteroscedastic_normal: {
        if (sc.sigma2.size() != static_cast<std::size_t>(a))
          throw LayoutMismatch("heteroscedastic scenario needs one sigma^2 per group");
        const Eigen::MatrixXd gr =
            std::sqrt(sc.sigma2[i]) * Eigen::MatrixXd::Identity(sc.d, sc.d);
        groups[i] = gen_continuous(gr, mu, ErrorDist::normal, n[i], rng);
        break;
      }
      case DataModel::ordinal: {
        groups[i] = gen_ordinal(sc.d, root, n[i], rng);
        if (sc.delta != 0.0 && i == 1) groups[i].array() += sc.delta;
        break;
      }
    }
  }
  return Dataset(std::move(groups));
}

struct CellOutcome {
  double wild = std::numeric_limits<double>::quiet_NaN();
  double classical = std::numeric_limits<double>::quiet_NaN();
};

// Rejection rates for one (n, delta) cell; both engines see the same
// simulated datasets. Run r derives every stream from (seed, cell_id, r).
inline CellOutcome run_cell(const SimScenario& sc, const std::vector<int>& n,
                            std::uint64_t cell_id, int threads) {
  const Eigen::MatrixXd root = scenario_root(sc);
  const HypothesisDesign design = one_way(static_cast<int>(n.size()), sc.d);
  std::vector<unsigned char> rej_wild(sc.runs, 0), rej_classical(sc.runs, 0);
  parallel_for(static_cast<std::size_t>(sc.runs), threads, [&](std::size_t run) {
    Rng data_rng(derive_seed(sc.seed, kDataStream, cell_id, run));
    const Dataset data = generate_dataset(sc, n, root, data_rng);
    const std::uint64_t test_seed = derive_seed(sc.seed, kTestStream, cell_id, run);
    if (sc.run_wild) {
      const auto r = wild_test(data, design, sc.B, sc.alpha, sc.multipliers, test_seed, 1);
      rej_wild[run] = r.p_value <= sc.alpha ? 1 : 0;
    }
    if (sc.run_classical) {
      const auto r = classical_test(data, design, sc.B, sc.alpha, test_seed, 1);
      rej_classical[run] = r.p_value <= sc.alpha ? 1 : 0;
    }
  });
  CellOutcome out;
  auto rate = [&](const std::vector<unsigned char>& v) {
    long s = 0;
    for (unsigned char b : v) s += b;
    return static_cast<double>(s) / static_cast<double>(sc.runs);
  };
  if (sc.run_wild) out.wild = rate(rej_wild);
  if (sc.run_classical) out.classical = rate(rej_classical);
  return out;
}

}  // namespace detail

struct RateCell {
  std::vector<int> n_base;
  int m = 0;
  double wild = std::numeric_limits<double>::quiet_NaN();
  double classical = std::numeric_limits<double>::quiet_NaN();
};

struct RateTable {
  SimScenario scenario;
  std::vector<RateCell> cells;
};

// Type-I error study over the (n, m) grid, keyed like the paper's tables.
// m is added to each element of the base sample-size vector.
inline RateTable type1_study(const SimScenario& base,
                             const std::vector<std::vector<int>>& n_vectors,
                             const std::vector<int>& m_grid, int threads = 0) {
  RateTable table;
  table.scenario = base;
  std::uint64_t cell_id = 0;
  for (const auto& n_base : n_vectors)
    for (int m : m_grid) {
      std::vector<int> n = n_base;
      for (int& v : n) v += m;
      const auto rates = detail::run_cell(base, n, cell_id++, threads);
      table.cells.push_back({n_base, m, rates.wild, rates.classical});
    }
  return table;
}

struct PowerPoint {
  double delta = 0.0;
  double wild = std::numeric_limits<double>::quiet_NaN();
  double classical = std::numeric_limits<double>::quiet_NaN();
};

// Power along a shift grid at the scenario's base sample sizes; the delta = 0
// point reproduces the type-I error rate of the same configuration.
inline std::vector<PowerPoint> power_study(const SimScenario& base,
                                           const std::vector<double>& deltas,
                                           int threads = 0) {
  std::vector<PowerPoint> out;
  std::uint64_t cell_id = 0;
  for (double delta : deltas) {
    SimScenario sc = base;
    sc.delta = delta;
    const auto rates = detail::run_cell(sc, sc.n_base, cell_id++, threads);
    out.push_back({delta, rates.wild, rates.classical});
  }
  return out;
}

}  // namespace rankmanova
