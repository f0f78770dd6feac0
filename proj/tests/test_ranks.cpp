#include <catch2/catch_amalgamated.hpp>
#include <random>

#include "oracles.hpp"
#include "rankmanova/ranks.hpp"

using namespace rankmanova;

TEST_CASE("counting kernel") {
  CHECK(count_kernel(3.2) == 1.0);
  CHECK(count_kernel(0.0) == 0.5);
  CHECK(count_kernel(-1.0) == 0.0);
}

TEST_CASE("normalized empirical distribution function") {
  CHECK(ecdf({1, 2, 3}, 2.0) == 0.5);  // (1 + 0.5 + 0)/3
  CHECK(ecdf({5}, 5.0) == 0.5);
  CHECK(ecdf({1, 2, 3}, 10.0) == 1.0);
  CHECK(ecdf({1, 2, 3}, -10.0) == 0.0);
  CHECK_THROWS_AS(ecdf({}, 1.0), EmptySample);
}

TEST_CASE("midranks") {
  CHECK(midranks({1, 2, 3, 4}) == std::vector<double>{1, 2, 3, 4});
  CHECK(midranks({1, 1, 2}) == std::vector<double>{1.5, 1.5, 3});
  CHECK(midranks({5, 5, 5}) == std::vector<double>{2, 2, 2});
  CHECK(midranks({3, 1, 2}) == std::vector<double>{3, 1, 2});
  CHECK_THROWS_AS(midranks({}), EmptySample);

  SECTION("rank sum is always M(M+1)/2") {
    std::mt19937_64 gen(7);
    std::uniform_int_distribution<int> dn(1, 30), dv(1, 4);
    for (int rep = 0; rep < 200; ++rep) {
      std::vector<double> pool(dn(gen));
      for (auto& v : pool) v = dv(gen);
      const auto r = midranks(pool);
      double s = 0;
      for (double v : r) s += v;
      const double m = static_cast<double>(pool.size());
      REQUIRE(s == m * (m + 1) / 2);
    }
  }
}

TEST_CASE("pairwise Mann-Whitney effect") {
  CHECK(pairwise_effect({1, 2}, {3, 4}) == 1.0);
  CHECK(pairwise_effect({1, 2, 3}, {1, 2, 3}) == 0.5);
  CHECK(pairwise_effect({1, 1}, {1, 2}) == 0.75);  // (0.5+0.5+1+1)/4
  CHECK(pairwise_effect({1, 1}, {1, 2}) == oracle::pairwise_w({1, 1}, {1, 2}));
  CHECK_THROWS_AS(pairwise_effect({}, {1.0}), EmptySample);
  CHECK_THROWS_AS(pairwise_effect({1.0}, {}), EmptySample);
}

TEST_CASE("effect vector on worked examples") {
  SECTION("two separated groups") {
    const auto eff = effects(validate({{{1}, {2}}, {{3}, {4}}}));
    CHECK(eff.p_hat.p[0] == 0.25);
    CHECK(eff.p_hat.p[1] == 0.75);
  }
  SECTION("identical groups give 1/2 everywhere") {
    const auto eff = effects(validate({{{1, 7}, {2, 5}}, {{1, 7}, {2, 5}}}));
    for (int t = 0; t < eff.p_hat.p.size(); ++t) CHECK(eff.p_hat.p[t] == 0.5);
  }
  SECTION("tied groups") {
    const auto eff = effects(validate({{{1}, {1}}, {{1}, {2}}}));
    CHECK(eff.p_hat.p[0] == 0.375);
    CHECK(eff.p_hat.p[1] == 0.625);
    CHECK(eff.w_hat.w(0, 1, 0) == 0.75);
    CHECK(eff.w_hat.w(1, 0, 0) == 0.25);
  }
}

TEST_CASE("mid-rank effects equal the double-sum kernel oracle") {
  std::mt19937_64 gen(42);
  for (int rep = 0; rep < 300; ++rep) {
    const Dataset data = oracle::random_tied_dataset(gen);
    const auto eff = effects(data);
    const int a = data.group_count(), d = data.dim();
    for (int j = 0; j < d; ++j)
      for (int l = 0; l < a; ++l)
        for (int i = 0; i < a; ++i) {
          const double got = eff.w_hat.w(l, i, j);
          const double want =
              l == i ? 0.5 : oracle::pairwise_w(data.column(l, j), data.column(i, j));
          REQUIRE_THAT(got, Catch::Matchers::WithinAbs(want, 1e-12));
          REQUIRE(got >= 0.0);
          REQUIRE(got <= 1.0);
          // complementarity is exact by construction
          REQUIRE(eff.w_hat.w(l, i, j) + eff.w_hat.w(i, l, j) == 1.0);
        }
    for (int j = 0; j < d; ++j) {
      double colsum = 0.0;
      for (int i = 0; i < a; ++i) colsum += eff.p_hat.p[i * d + j];
      REQUIRE_THAT(colsum, Catch::Matchers::WithinAbs(a / 2.0, 1e-13));
    }
  }
}

TEST_CASE("effects are invariant under strictly increasing transforms") {
  std::mt19937_64 gen(43);
  for (int rep = 0; rep < 50; ++rep) {
    const Dataset data = oracle::random_tied_dataset(gen);
    const auto base = effects(data);
    auto transform = [&](double (*f)(double)) {
      std::vector<RawGroup> raw(data.group_count());
      for (int i = 0; i < data.group_count(); ++i)
        for (int k = 0; k < data.size(i); ++k) {
          Subject s(data.dim());
          for (int j = 0; j < data.dim(); ++j) s[j] = f(data.value(i, k, j));
          raw[i].push_back(std::move(s));
        }
      return validate(raw);
    };
    const auto affine = effects(transform([](double x) { return 2.0 * x + 1.0; }));
    const auto cubic = effects(transform([](double x) { return x * x * x; }));
    REQUIRE(base.p_hat.p == affine.p_hat.p);
    REQUIRE(base.p_hat.p == cubic.p_hat.p);
  }
}
