#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "rankmanova/inference.hpp"

namespace rankmanova {

enum class FamilyKind { per_component, pairwise_groups };
enum class Adjustment { closed_testing, holm, bonferroni };

inline const char* adjustment_name(Adjustment m) {
  switch (m) {
    case Adjustment::closed_testing: return "closed-testing";
    case Adjustment::holm: return "holm";
    default: return "bonferroni";
  }
}

struct ElementaryHypothesis {
  std::string label;
  Eigen::MatrixXd H;  // contrast rows, a*d columns
};

// A family of elementary hypotheses whose joint intersection is the global
// one-way null; intersections over subsets are formed by stacking contrasts.
struct HypothesisFamily {
  FamilyKind kind = FamilyKind::per_component;
  int a = 0;
  int d = 0;
  std::vector<ElementaryHypothesis> elems;

  int size() const { return static_cast<int>(elems.size()); }

  HypothesisDesign intersection(std::uint32_t mask) const {
    std::vector<Eigen::MatrixXd> blocks;
    std::string label;
    for (int e = 0; e < size(); ++e)
      if (mask & (1u << e)) {
        blocks.push_back(elems[e].H);
        if (!label.empty()) label += " & ";
        label += elems[e].label;
      }
    if (blocks.empty()) throw OutOfRange("empty intersection mask");
    return make_design(std::move(label), detail::vstack(blocks));
  }
};

// H_0j: p_{1j} = ... = p_{aj}, one hypothesis per component.
inline HypothesisFamily per_component_family(int a, int d) {
  HypothesisFamily f{FamilyKind::per_component, a, d, {}};
  for (int j = 0; j < d; ++j)
    f.elems.push_back({"component " + std::to_string(j + 1),
                       detail::component_equality_rows(a, d, j)});
  return f;
}

// H_0il: p_i = p_l, one hypothesis per group pair i < l.
inline HypothesisFamily pairwise_family(int a, int d) {
  HypothesisFamily f{FamilyKind::pairwise_groups, a, d, {}};
  for (int i = 0; i < a; ++i)
    for (int l = i + 1; l < a; ++l)
      f.elems.push_back({"group " + std::to_string(i + 1) + " vs " + std::to_string(l + 1),
                         detail::pair_equality_rows(a, d, i, l)});
  return f;
}

// Stage-2 families of the hierarchical plans: pairwise comparisons restricted
// to a single component, and per-component comparisons restricted to a pair.
inline HypothesisFamily pairwise_family_for_component(int a, int d, int j) {
  if (j < 0 || j >= d) throw OutOfRange("component index out of range");
  HypothesisFamily f{FamilyKind::pairwise_groups, a, d, {}};
  for (int i = 0; i < a; ++i)
    for (int l = i + 1; l < a; ++l) {
      Eigen::MatrixXd H = Eigen::MatrixXd::Zero(1, a * d);
      H(0, i * d + j) = 1.0;
      H(0, l * d + j) = -1.0;
      f.elems.push_back({"group " + std::to_string(i + 1) + " vs " + std::to_string(l + 1),
                         std::move(H)});
    }
  return f;
}

inline HypothesisFamily component_family_for_pair(int a, int d, int i, int l) {
  if (i < 0 || i >= a || l < 0 || l >= a || i == l) throw OutOfRange("invalid group pair");
  HypothesisFamily f{FamilyKind::per_component, a, d, {}};
  for (int j = 0; j < d; ++j) {
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(1, a * d);
    H(0, i * d + j) = 1.0;
    H(0, l * d + j) = -1.0;
    f.elems.push_back({"component " + std::to_string(j + 1), std::move(H)});
  }
  return f;
}

// Holm's step-down adjustment: monotone, capped at 1, order-equivariant.
inline std::vector<double> holm(const std::vector<double>& raw) {
  const int m = static_cast<int>(raw.size());
  for (double p : raw)
    if (!(p >= 0.0 && p <= 1.0)) throw OutOfRange("p-values must lie in [0,1]");
  std::vector<int> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int x, int y) { return raw[x] < raw[y]; });
  std::vector<double> adjusted(m);
  double running = 0.0;
  for (int r = 0; r < m; ++r) {
    const double scaled = std::min(1.0, static_cast<double>(m - r) * raw[order[r]]);
    running = std::max(running, scaled);
    adjusted[order[r]] = running;
  }
  return adjusted;
}

inline std::vector<double> bonferroni(const std::vector<double>& raw) {
  const int m = static_cast<int>(raw.size());
  std::vector<double> adjusted(m);
  for (int e = 0; e < m; ++e) {
    if (!(raw[e] >= 0.0 && raw[e] <= 1.0)) throw OutOfRange("p-values must lie in [0,1]");
    adjusted[e] = std::min(1.0, static_cast<double>(m) * raw[e]);
  }
  return adjusted;
}

// Closure step of the closed testing principle: adjusted p of an elementary
// hypothesis is the max raw p over all intersections containing it.
// raw_by_mask has size 2^m; entry 0 is ignored.
inline std::vector<double> closure_adjust(int m, const std::vector<double>& raw_by_mask) {
  if (static_cast<std::size_t>(1u << m) != raw_by_mask.size())
    throw DimensionMismatch("raw_by_mask must have 2^m entries");
  std::vector<double> adjusted(m, 0.0);
  for (std::uint32_t mask = 1; mask < (1u << m); ++mask)
    for (int e = 0; e < m; ++e)
      if (mask & (1u << e)) adjusted[e] = std::max(adjusted[e], raw_by_mask[mask]);
  return adjusted;
}

struct PosthocResult {
  FamilyKind kind = FamilyKind::per_component;
  Adjustment method = Adjustment::closed_testing;
  double alpha = 0.05;
  std::vector<std::string> labels;
  std::vector<double> raw;       // elementary raw p-values
  std::vector<double> adjusted;  // multiplicity-adjusted p-values
  std::vector<bool> rejected;    // adjusted <= alpha
  std::vector<double> raw_by_mask;  // closed testing only; size 2^m, entry 0 unused
};

inline constexpr std::size_t kDefaultClosureCap = 4096;  // intersections

// Closed testing over the family: every subset intersection is tested with
// the same bootstrap seed so the closure shares one multiplier schedule.
inline PosthocResult closed_test(const Dataset& data, const HypothesisFamily& family,
                                 int B, double alpha, Engine engine,
                                 MultiplierKind kind, std::uint64_t seed,
                                 int threads = 1,
                                 std::size_t cap = kDefaultClosureCap) {
  const int m = family.size();
  if (m < 1) throw OutOfRange("family must be nonempty");
  if (m >= 31 || ((1ull << m) - 1) > cap)
    throw FamilyTooLarge("closure of " + std::to_string(m) +
                         " hypotheses exceeds the cap; fall back to holm");
  PosthocResult out;
  out.kind = family.kind;
  out.method = Adjustment::closed_testing;
  out.alpha = alpha;
  for (const auto& e : family.elems) out.labels.push_back(e.label);
  out.raw_by_mask.assign(std::size_t{1} << m, 1.0);
  parallel_for((std::size_t{1} << m) - 1, threads, [&](std::size_t t) {
    const std::uint32_t mask = static_cast<std::uint32_t>(t + 1);
    const HypothesisDesign design = family.intersection(mask);
    out.raw_by_mask[mask] =
        run_test(data, design, engine, B, alpha, kind, seed, 1).p_value;
  });
  out.adjusted = closure_adjust(m, out.raw_by_mask);
  for (int e = 0; e < m; ++e) {
    out.raw.push_back(out.raw_by_mask[std::size_t{1} << e]);
    out.rejected.push_back(out.adjusted[e] <= alpha);
  }
  return out;
}

// Elementary tests with Holm or Bonferroni adjustment (the fallback when the
// closure is too large).
inline PosthocResult adjusted_test(const Dataset& data, const HypothesisFamily& family,
                                   Adjustment method, int B, double alpha, Engine engine,
                                   MultiplierKind kind, std::uint64_t seed,
                                   int threads = 1) {
  const int m = family.size();
  if (m < 1) throw OutOfRange("family must be nonempty");
  PosthocResult out;
  out.kind = family.kind;
  out.method = method;
  out.alpha = alpha;
  out.raw.assign(m, 1.0);
  for (const auto& e : family.elems) out.labels.push_back(e.label);
  parallel_for(static_cast<std::size_t>(m), threads, [&](std::size_t e) {
    const HypothesisDesign design = make_design(family.elems[e].label, family.elems[e].H);
    out.raw[e] = run_test(data, design, engine, B, alpha, kind, seed, 1).p_value;
  });
  out.adjusted = method == Adjustment::holm ? holm(out.raw) : bonferroni(out.raw);
  for (int e = 0; e < m; ++e) out.rejected.push_back(out.adjusted[e] <= alpha);
  return out;
}

// Default policy: closed testing when the closure fits the cap, Holm
// otherwise.
inline PosthocResult family_test(const Dataset& data, const HypothesisFamily& family,
                                 int B, double alpha, Engine engine, MultiplierKind kind,
                                 std::uint64_t seed, int threads = 1,
                                 std::size_t cap = kDefaultClosureCap) {
  const int m = family.size();
  if (m < 31 && ((1ull << m) - 1) <= cap)
    return closed_test(data, family, B, alpha, engine, kind, seed, threads, cap);
  return adjusted_test(data, family, Adjustment::holm, B, alpha, engine, kind, seed,
                       threads);
}

enum class HierarchicalOrder { components_first, pairs_first };

struct HierarchicalStage2 {
  int parent_index = -1;      // stage-1 elementary that triggered this family
  std::string parent_label;
  PosthocResult result;
};

// Staged testing per the hierarchy on the two question families. Stage 2 is
// run only for stage-1 rejections and reported as conditional/exploratory;
// only stage 1 carries the family-wise guarantee.
struct HierarchicalReport {
  HierarchicalOrder order = HierarchicalOrder::components_first;
  PosthocResult stage1;
  std::vector<HierarchicalStage2> stage2;
};

inline HierarchicalReport hierarchical_plan(const Dataset& data, HierarchicalOrder order,
                                            int B, double alpha, Engine engine,
                                            MultiplierKind kind, std::uint64_t seed,
                                            int threads = 1,
                                            std::size_t cap = kDefaultClosureCap) {
  const int a = data.group_count(), d = data.dim();
  if (a < 2) throw SingleGroup("post-hoc comparisons need at least two groups");
  HierarchicalReport report;
  report.order = order;
  const HypothesisFamily stage1_family = order == HierarchicalOrder::components_first
                                             ? per_component_family(a, d)
                                             : pairwise_family(a, d);
  report.stage1 =
      family_test(data, stage1_family, B, alpha, engine, kind, seed, threads, cap);
  for (int e = 0; e < stage1_family.size(); ++e) {
    if (!report.stage1.rejected[e]) continue;
    HypothesisFamily stage2_family;
    if (order == HierarchicalOrder::components_first) {
      stage2_family = pairwise_family_for_component(a, d, e);
    } else {
      // enumerate pairs in the same order as pairwise_family
      int t = 0, pi = 0, pl = 1;
      for (int i = 0; i < a && t <= e; ++i)
        for (int l = i + 1; l < a && t <= e; ++l, ++t) {
          pi = i;
          pl = l;
        }
      stage2_family = component_family_for_pair(a, d, pi, pl);
    }
    HierarchicalStage2 s2;
    s2.parent_index = e;
    s2.parent_label = report.stage1.labels[e];
    s2.result =
        family_test(data, stage2_family, B, alpha, engine, kind, seed, threads, cap);
    report.stage2.push_back(std::move(s2));
  }
  return report;
}

}  // namespace rankmanova
