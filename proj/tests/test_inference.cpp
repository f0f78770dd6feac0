#include <catch2/catch_amalgamated.hpp>
#include <random>

#include "oracles.hpp"
#include "rankmanova/inference.hpp"
#include "rankmanova/simulation.hpp"

using namespace rankmanova;

namespace {

Dataset normal_dataset(int a, int n, int d, std::uint64_t seed, double shift = 0.0) {
  Rng rng(seed);
  std::vector<Eigen::MatrixXd> groups;
  for (int i = 0; i < a; ++i) {
    Eigen::VectorXd mu = Eigen::VectorXd::Constant(d, i == 1 ? shift : 0.0);
    groups.push_back(gen_continuous(Eigen::MatrixXd::Identity(d, d), mu,
                                    ErrorDist::normal, n, rng));
  }
  return Dataset(std::move(groups));
}

std::vector<std::vector<double>> draw_multipliers(const Dataset& data, Rng& rng,
                                                  MultiplierKind kind) {
  std::vector<std::vector<double>> D(data.group_count());
  for (int l = 0; l < data.group_count(); ++l) {
    D[l].resize(data.size(l));
    for (auto& v : D[l]) v = rng.multiplier(kind);
  }
  return D;
}

}  // namespace

TEST_CASE("ANOVA-type statistic") {
  EffectVector p;
  p.a = 2;
  p.d = 1;
  p.N = 4;
  p.p = Eigen::VectorXd(2);
  p.p << 0.25, 0.75;
  const Eigen::MatrixXd t = centering_matrix(2);
  CHECK_THAT(ats(p, t, 4), Catch::Matchers::WithinAbs(0.5, 1e-15));

  p.p << 0.5, 0.5;
  CHECK(ats(p, t, 4) == 0.0);

  EffectVector flat;
  flat.p = Eigen::VectorXd::Constant(6, 0.5);
  CHECK(ats(flat, one_way(3, 2).T, 12) <= 1e-12);

  CHECK_THROWS_AS(ats(p, Eigen::MatrixXd::Identity(3, 3), 4), DimensionMismatch);
}

TEST_CASE("wild residual process") {
  const Dataset d = validate({{{1}, {2}}, {{3}, {4}}});
  SECTION("unit multipliers annihilate the residuals") {
    for (double x : {0.5, 1.0, 1.5, 2.0, 7.0})
      CHECK(wild_residual_process(d, 0, 0, {1.0, 1.0}, x) == 0.0);
  }
  SECTION("a single-subject group has vanishing residuals") {
    const Dataset single = validate({{{5}}, {{1}, {2}}});
    for (double x : {0.0, 5.0, 9.0})
      CHECK(wild_residual_process(single, 0, 0, {-1.3}, x) == 0.0);
  }
  SECTION("two-point evaluation against the c-kernel sum") {
    // (1/2)[(c(0.5) - 0.5)*1 + (c(-0.5) - 0.5)*(-1)] = (1/2)[0.5 + 0.5]
    CHECK(wild_residual_process(d, 0, 0, {1.0, -1.0}, 1.5) == 0.5);
  }
  CHECK_THROWS_AS(wild_residual_process(d, 0, 0, {1.0}, 0.0), DimensionMismatch);
}

TEST_CASE("wild replicate degeneracies") {
  const Dataset d = validate({{{1, 4}, {2, 2}, {3, 1}}, {{3, 3}, {4, 4}}});
  SECTION("all multipliers one") {
    const auto p = wild_replicate(d, {{1, 1, 1}, {1, 1}});
    for (int t = 0; t < p.size(); ++t) CHECK(p[t] == 0.0);
  }
  SECTION("single-subject groups") {
    const Dataset singles = validate({{{1, 2}}, {{3, 1}}, {{2, 2}}});
    const auto p = wild_replicate(singles, {{1}, {-1}, {1}});
    for (int t = 0; t < p.size(); ++t) CHECK(p[t] == 0.0);
  }
}

TEST_CASE("wild replicate equals the brute-force functional oracle") {
  std::mt19937_64 gen(99);
  for (int rep = 0; rep < 60; ++rep) {
    const Dataset data = oracle::random_tied_dataset(gen);
    const WildEngine engine(data);
    Rng rng(derive_seed(4, rep));
    for (auto kind : {MultiplierKind::rademacher, MultiplierKind::standard_normal}) {
      const auto D = draw_multipliers(data, rng, kind);
      const Eigen::VectorXd fast = engine.replicate(D);
      const Eigen::VectorXd slow = oracle::wild_replicate(data, D);
      REQUIRE(fast.size() == slow.size());
      for (int t = 0; t < fast.size(); ++t)
        REQUIRE_THAT(fast[t], Catch::Matchers::WithinAbs(slow[t], 1e-12));
    }
  }
}

TEST_CASE("multiplier schemes have mean zero and unit variance") {
  const int n = 100000;
  for (auto kind : {MultiplierKind::rademacher, MultiplierKind::standard_normal}) {
    Rng rng(2024);
    double s = 0, s2 = 0;
    for (int t = 0; t < n; ++t) {
      const double v = rng.multiplier(kind);
      s += v;
      s2 += v * v;
    }
    const double mean = s / n;
    const double var = s2 / n - mean * mean;
    CHECK(std::abs(mean) <= 3.0 / std::sqrt(static_cast<double>(n)));
    // Var of the variance estimate is (mu4 - 1)/n <= 2/n for these schemes
    CHECK(std::abs(var - 1.0) <= 3.0 * std::sqrt(3.0 / n));
  }
}

TEST_CASE("wild test basics") {
  SECTION("null statistic gives p-value one") {
    const Dataset d = validate({{{1}, {2}, {3}}, {{1}, {2}, {3}}});
    const auto r = wild_test(d, one_way(2, 1), 200, 0.05, MultiplierKind::rademacher, 3);
    CHECK(r.observed == 0.0);
    CHECK(r.p_value == 1.0);
    for (double v : r.replicates) CHECK(v >= 0.0);
  }
  SECTION("separated groups are rejected") {
    RawGroup g1, g2;
    for (int k = 1; k <= 10; ++k) {
      g1.push_back({static_cast<double>(k)});
      g2.push_back({static_cast<double>(k + 100)});
    }
    const auto r =
        wild_test(validate({g1, g2}), one_way(2, 1), 1000, 0.05,
                  MultiplierKind::rademacher, 5);
    CHECK(r.p_value <= 0.01);
    CHECK(r.observed > r.critical_value);
  }
  SECTION("argument validation") {
    const Dataset d = validate({{{1}, {2}}, {{3}, {4}}});
    CHECK_THROWS_AS(wild_test(d, one_way(2, 1), 100, 0.0), InvalidAlpha);
    CHECK_THROWS_AS(wild_test(d, one_way(2, 1), 100, 1.0), InvalidAlpha);
    CHECK_THROWS_AS(wild_test(d, one_way(2, 1), 0, 0.05), InvalidAlpha);
    CHECK_THROWS_AS(wild_test(d, one_way(3, 1), 100, 0.05), DimensionMismatch);
  }
}

TEST_CASE("bootstrap conventions") {
  const Dataset d = normal_dataset(2, 12, 2, 81);
  const auto r = wild_test(d, one_way(2, 2), 99, 0.05, MultiplierKind::rademacher, 17);
  // p-value convention
  std::size_t count = 0;
  for (double v : r.replicates)
    if (v >= r.observed) ++count;
  CHECK(r.p_value == (1.0 + count) / (99 + 1.0));
  // critical value is the ceil((1-alpha) B)-th order statistic
  std::vector<double> sorted = r.replicates;
  std::sort(sorted.begin(), sorted.end());
  CHECK(r.critical_value == sorted[static_cast<int>(std::ceil(0.95 * 99)) - 1]);
}

TEST_CASE("classical replicate") {
  const Dataset d = validate({{{1, 4}, {2, 2}, {3, 1}}, {{3, 3}, {4, 4}}});
  SECTION("identity resample reproduces the estimator") {
    const auto p = classical_replicate(d, {{0, 1, 2}, {0, 1}});
    REQUIRE(p.p == effects(d).p_hat.p);
  }
  SECTION("collapsed group keeps a valid effect vector") {
    const auto p = classical_replicate(d, {{1, 1, 1}, {0, 0}});
    for (int t = 0; t < p.p.size(); ++t) {
      CHECK(p.p[t] >= 0.0);
      CHECK(p.p[t] <= 1.0);
    }
    // the collapsed dataset's own effects agree
    const Dataset collapsed = validate({{{2, 2}, {2, 2}, {2, 2}}, {{3, 3}, {3, 3}}});
    REQUIRE(p.p == effects(collapsed).p_hat.p);
  }
  SECTION("fast engine path equals the materialized recompute") {
    std::mt19937_64 gen(123);
    for (int rep = 0; rep < 60; ++rep) {
      const Dataset data = oracle::random_tied_dataset(gen);
      const ClassicalEngine engine(data);
      Rng rng(derive_seed(9, rep));
      const auto idx = classical_indices(data, rng);
      const auto fast = engine.replicate(engine.counts_from_indices(idx));
      const auto slow = classical_replicate(data, idx);
      REQUIRE(fast.p == slow.p);
    }
  }
}

TEST_CASE("classical test basics") {
  SECTION("identical groups give p-value one") {
    const Dataset d = validate({{{1}, {2}, {3}}, {{1}, {2}, {3}}});
    const auto r = classical_test(d, one_way(2, 1), 200, 0.05, 3);
    CHECK(r.observed == 0.0);
    CHECK(r.p_value == 1.0);
  }
  SECTION("separated groups are rejected") {
    RawGroup g1, g2;
    for (int k = 1; k <= 10; ++k) {
      g1.push_back({static_cast<double>(k)});
      g2.push_back({static_cast<double>(k + 100)});
    }
    const auto r = classical_test(validate({g1, g2}), one_way(2, 1), 1000, 0.05, 5);
    CHECK(r.p_value <= 0.01);
  }
}

TEST_CASE("bootstrap determinism across thread counts") {
  const Dataset d = normal_dataset(2, 15, 3, 4711);
  const auto design = one_way(2, 3);
  for (auto engine : {Engine::wild, Engine::classical}) {
    const auto r1 = run_test(d, design, engine, 250, 0.05,
                             MultiplierKind::rademacher, 2027, 1);
    const auto r4 = run_test(d, design, engine, 250, 0.05,
                             MultiplierKind::rademacher, 2027, 4);
    const auto r8 = run_test(d, design, engine, 250, 0.05,
                             MultiplierKind::rademacher, 2027, 8);
    REQUIRE(r1.replicates == r4.replicates);
    REQUIRE(r1.replicates == r8.replicates);
    REQUIRE(r1.p_value == r4.p_value);
    REQUIRE(r1.critical_value == r8.critical_value);
  }
}

TEST_CASE("the whole procedure is rank-based: monotone transform invariance") {
  std::mt19937_64 gen(321);
  for (int rep = 0; rep < 10; ++rep) {
    const Dataset data = oracle::random_tied_dataset(gen);
    std::vector<RawGroup> raw(data.group_count());
    for (int i = 0; i < data.group_count(); ++i)
      for (int k = 0; k < data.size(i); ++k) {
        Subject s(data.dim());
        for (int j = 0; j < data.dim(); ++j) {
          const double x = data.value(i, k, j);
          s[j] = x * x * x + 2.0;
        }
        raw[i].push_back(std::move(s));
      }
    const Dataset transformed = validate(raw);
    const auto design = one_way(data.group_count(), data.dim());
    for (auto engine : {Engine::wild, Engine::classical}) {
      const auto r0 = run_test(data, design, engine, 60, 0.05,
                               MultiplierKind::rademacher, 31, 1);
      const auto r1 = run_test(transformed, design, engine, 60, 0.05,
                               MultiplierKind::rademacher, 31, 1);
      REQUIRE(r0.observed == r1.observed);
      REQUIRE(r0.replicates == r1.replicates);
    }
  }
}

TEST_CASE("wild and classical critical values share the limit", "[slow]") {
  const Dataset d = normal_dataset(2, 200, 2, 9090);
  const auto design = one_way(2, 2);
  const auto rw = wild_test(d, design, 2000, 0.05, MultiplierKind::rademacher, 7, 2);
  const auto rc = classical_test(d, design, 2000, 0.05, 7, 2);
  CHECK(std::abs(rw.critical_value - rc.critical_value) <=
        0.10 * std::max(rw.critical_value, rc.critical_value));
}
