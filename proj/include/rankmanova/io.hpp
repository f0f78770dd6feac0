#pragma once

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rankmanova/covariance.hpp"
#include "rankmanova/posthoc.hpp"
#include "rankmanova/simulation.hpp"

namespace rankmanova {

struct IngestOptions {
  std::vector<std::string> factors;   // 1 or 2 factor columns
  std::vector<std::string> outcomes;  // d outcome columns, numeric
};

struct IngestResult {
  Dataset dataset;
  FactorialLayout layout;
  std::vector<std::string> factor_names;
  std::vector<std::vector<std::string>> factor_levels;  // per factor, sorted
  std::vector<std::string> group_labels;                // combo strings, last factor fastest
  std::vector<std::string> outcome_labels;
  int dropped_rows = 0;
};

namespace detail {

inline std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, delim)) out.push_back(field);
  if (!line.empty() && line.back() == delim) out.push_back("");
  return out;
}

inline std::string strip(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t'))
    s.pop_back();
  std::size_t b = 0;
  while (b < s.size() && (s[b] == ' ' || s[b] == '\t')) ++b;
  return s.substr(b);
}

inline bool is_missing_token(const std::string& s) {
  return s.empty() || s == "NA" || s == "na" || s == "NaN" || s == "nan" || s == ".";
}

inline bool parse_double(const std::string& s, double& out) {
  if (is_missing_token(s)) return false;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) return false;
  return std::isfinite(out);
}

}  // namespace detail

// Delimited ingestion (comma or tab, header row required). Rows with a
// missing value in any selected column are dropped and counted. Groups are
// ordered by the sorted factor-level combinations, last factor fastest.
inline IngestResult ingest(const std::string& path, const IngestOptions& opt) {
  if (opt.factors.empty() || opt.factors.size() > 2)
    throw MissingColumn("select one or two factor columns");
  if (opt.outcomes.empty()) throw MissingColumn("select at least one outcome column");
  std::ifstream in(path);
  if (!in) throw FileNotFound("cannot open " + path);
  std::string header;
  if (!std::getline(in, header)) throw NoCompleteRows("empty file: " + path);
  const char delim =
      std::count(header.begin(), header.end(), '\t') > 0 ? '\t' : ',';
  auto names = detail::split_line(header, delim);
  for (auto& n : names) n = detail::strip(n);
  auto find_col = [&](const std::string& want) {
    for (std::size_t c = 0; c < names.size(); ++c)
      if (names[c] == want) return static_cast<int>(c);
    throw MissingColumn("no column named '" + want + "'");
  };
  std::vector<int> fcols, ocols;
  for (const auto& f : opt.factors) fcols.push_back(find_col(f));
  for (const auto& o : opt.outcomes) ocols.push_back(find_col(o));

  const int nf = static_cast<int>(fcols.size());
  const int d = static_cast<int>(ocols.size());
  std::vector<std::vector<std::string>> keys;  // factor combo per kept row
  std::vector<std::vector<double>> values;     // outcomes per kept row
  int dropped = 0;
  std::string line;
  while (std::getline(in, line)) {
    line = detail::strip(line);
    if (line.empty()) continue;
    const auto fields = detail::split_line(line, delim);
    std::vector<std::string> key(nf);
    std::vector<double> row(d);
    bool ok = true;
    for (int f = 0; f < nf && ok; ++f) {
      if (fcols[f] >= static_cast<int>(fields.size())) { ok = false; break; }
      key[f] = detail::strip(fields[fcols[f]]);
      if (detail::is_missing_token(key[f])) ok = false;
    }
    for (int j = 0; j < d && ok; ++j) {
      if (ocols[j] >= static_cast<int>(fields.size())) { ok = false; break; }
      ok = detail::parse_double(detail::strip(fields[ocols[j]]), row[j]);
    }
    if (!ok) {
      ++dropped;
      continue;
    }
    keys.push_back(std::move(key));
    values.push_back(std::move(row));
  }
  if (keys.empty()) throw NoCompleteRows("no complete rows in " + path);

  std::vector<std::vector<std::string>> levels(nf);
  for (int f = 0; f < nf; ++f) {
    std::set<std::string> uniq;
    for (const auto& k : keys) uniq.insert(k[f]);
    levels[f].assign(uniq.begin(), uniq.end());
  }
  std::vector<int> level_counts;
  for (const auto& l : levels) level_counts.push_back(static_cast<int>(l.size()));
  FactorialLayout layout = FactorialLayout::crossed(level_counts, opt.factors);
  const int a = layout.groups();
  if (a < 2) throw SingleGroup("need at least two groups");

  auto level_index = [&](int f, const std::string& v) {
    return static_cast<int>(std::lower_bound(levels[f].begin(), levels[f].end(), v) -
                            levels[f].begin());
  };
  std::vector<RawGroup> raw(a);
  for (std::size_t r = 0; r < keys.size(); ++r) {
    std::vector<int> combo(nf);
    for (int f = 0; f < nf; ++f) combo[f] = level_index(f, keys[r][f]);
    raw[layout.group_of(combo)].push_back(values[r]);
  }
  std::vector<std::string> group_labels(a);
  for (int g = 0; g < a; ++g) {
    const auto combo = layout.combination(g);
    std::string label;
    for (int f = 0; f < nf; ++f) label += (f ? ":" : "") + levels[f][combo[f]];
    group_labels[g] = label;
    if (raw[g].empty())
      throw EmptyGroup("factor-level combination '" + label + "' has no rows");
  }
  return IngestResult{validate(raw, opt.outcomes), std::move(layout), opt.factors,
                      std::move(levels),           std::move(group_labels),
                      opt.outcomes,                dropped};
}

// Whitespace/comma/tab delimited numeric matrix (user-supplied H).
inline Eigen::MatrixXd read_matrix_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileNotFound("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    line = detail::strip(line);
    if (line.empty() || line[0] == '#') continue;
    for (char& c : line)
      if (c == ',' || c == '\t') c = ' ';
    std::istringstream ss(line);
    std::vector<double> row;
    double v;
    while (ss >> v) row.push_back(v);
    if (!row.empty()) rows.push_back(std::move(row));
  }
  if (rows.empty()) throw NoCompleteRows("no numeric rows in " + path);
  Eigen::MatrixXd H(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != rows.front().size())
      throw DimensionMismatch("ragged matrix in " + path);
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      H(static_cast<int>(r), static_cast<int>(c)) = rows[r][c];
  }
  return H;
}

struct TestLine {
  std::string label;
  double observed = 0.0;
  double p_value = 1.0;
  double critical_value = 0.0;
  int B = 0;
  double alpha = 0.05;
  std::string engine;
  std::string multipliers;
  std::uint64_t seed = 0;
};

struct AnalysisReport {
  std::string input_path;
  std::vector<std::string> factor_names;
  std::vector<std::string> outcome_labels;
  std::vector<std::string> group_labels;
  std::vector<int> group_sizes;
  int dropped_rows = 0;
  Eigen::MatrixXd effect_table;  // a x d
  std::vector<TestLine> tests;
  std::optional<PosthocResult> posthoc;
  std::optional<HierarchicalReport> hierarchical;
  std::vector<double> eigenvalues;  // diagnostics, empty unless requested
};

namespace detail {

inline std::string fmt(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

inline std::string fmt_full(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void render_posthoc_text(std::ostringstream& os, const PosthocResult& r,
                                const std::string& indent) {
  os << indent << "adjustment: " << adjustment_name(r.method) << "\n";
  for (std::size_t e = 0; e < r.labels.size(); ++e)
    os << indent << "  " << r.labels[e] << ": raw p = " << fmt(r.raw[e], 4)
       << ", adjusted p = " << fmt(r.adjusted[e], 4)
       << (r.rejected[e] ? "  [rejected]" : "") << "\n";
}

}  // namespace detail

inline std::string render_text(const AnalysisReport& rep) {
  std::ostringstream os;
  os << "rank-based MANOVA analysis\n";
  os << "input: " << rep.input_path << " (dropped incomplete rows: " << rep.dropped_rows
     << ")\n\n";
  os << "estimated relative effects (p-hat)\n";
  os << "group";
  for (const auto& o : rep.outcome_labels) os << "\t" << o;
  os << "\tn\n";
  for (std::size_t g = 0; g < rep.group_labels.size(); ++g) {
    os << rep.group_labels[g];
    for (int j = 0; j < rep.effect_table.cols(); ++j)
      os << "\t" << detail::fmt(rep.effect_table(static_cast<int>(g), j), 3);
    os << "\t" << rep.group_sizes[g] << "\n";
  }
  os << "\nhypothesis tests\n";
  for (const auto& t : rep.tests) {
    os << t.label << ": T_N = " << detail::fmt(t.observed, 4)
       << ", p = " << detail::fmt(t.p_value, 4)
       << " (c(alpha) = " << detail::fmt(t.critical_value, 4) << ", B = " << t.B
       << ", engine = " << t.engine << ", multipliers = " << t.multipliers
       << ", seed = " << t.seed << ")\n";
  }
  if (rep.posthoc) {
    os << "\npost-hoc comparisons\n";
    detail::render_posthoc_text(os, *rep.posthoc, "");
  }
  if (rep.hierarchical) {
    os << "\nhierarchical post-hoc ("
       << (rep.hierarchical->order == HierarchicalOrder::components_first
               ? "components first"
               : "pairs first")
       << ")\nstage 1:\n";
    detail::render_posthoc_text(os, rep.hierarchical->stage1, "  ");
    os << "stage 2 (conditional on stage-1 rejections, exploratory):\n";
    for (const auto& s2 : rep.hierarchical->stage2) {
      os << "  within " << s2.parent_label << ":\n";
      detail::render_posthoc_text(os, s2.result, "    ");
    }
    if (rep.hierarchical->stage2.empty()) os << "  (no stage-1 rejections)\n";
  }
  if (!rep.eigenvalues.empty()) {
    os << "\ndiagnostic eigenvalues of Sigma^(1/2) T Sigma^(1/2):";
    for (double v : rep.eigenvalues) os << " " << detail::fmt(v, 4);
    os << "\n";
  }
  return os.str();
}

inline std::string render_csv(const AnalysisReport& rep) {
  std::ostringstream os;
  os << "section,key,value\n";
  os << "meta,input," << rep.input_path << "\n";
  os << "meta,dropped_rows," << rep.dropped_rows << "\n";
  for (std::size_t g = 0; g < rep.group_labels.size(); ++g)
    for (int j = 0; j < rep.effect_table.cols(); ++j)
      os << "effect," << rep.group_labels[g] << ":" << rep.outcome_labels[j] << ","
         << detail::fmt_full(rep.effect_table(static_cast<int>(g), j)) << "\n";
  for (const auto& t : rep.tests) {
    os << "test," << t.label << ":statistic," << detail::fmt_full(t.observed) << "\n";
    os << "test," << t.label << ":p," << detail::fmt_full(t.p_value) << "\n";
  }
  if (rep.posthoc)
    for (std::size_t e = 0; e < rep.posthoc->labels.size(); ++e)
      os << "posthoc," << rep.posthoc->labels[e] << ":adjusted_p,"
         << detail::fmt_full(rep.posthoc->adjusted[e]) << "\n";
  return os.str();
}

inline nlohmann::ordered_json posthoc_json(const PosthocResult& r) {
  nlohmann::ordered_json j;
  j["adjustment"] = adjustment_name(r.method);
  j["alpha"] = r.alpha;
  auto arr = nlohmann::ordered_json::array();
  for (std::size_t e = 0; e < r.labels.size(); ++e) {
    nlohmann::ordered_json h;
    h["hypothesis"] = r.labels[e];
    h["raw_p"] = r.raw[e];
    h["adjusted_p"] = r.adjusted[e];
    h["rejected"] = static_cast<bool>(r.rejected[e]);
    arr.push_back(std::move(h));
  }
  j["hypotheses"] = std::move(arr);
  return j;
}

inline std::string render_json(const AnalysisReport& rep) {
  nlohmann::ordered_json j;
  j["version"] = version;
  j["input"] = rep.input_path;
  j["dropped_rows"] = rep.dropped_rows;
  j["factors"] = rep.factor_names;
  j["outcomes"] = rep.outcome_labels;
  auto effects = nlohmann::ordered_json::array();
  for (std::size_t g = 0; g < rep.group_labels.size(); ++g) {
    nlohmann::ordered_json row;
    row["group"] = rep.group_labels[g];
    row["n"] = rep.group_sizes[g];
    auto vals = nlohmann::ordered_json::array();
    for (int c = 0; c < rep.effect_table.cols(); ++c)
      vals.push_back(rep.effect_table(static_cast<int>(g), c));
    row["p_hat"] = std::move(vals);
    effects.push_back(std::move(row));
  }
  j["effects"] = std::move(effects);
  auto tests = nlohmann::ordered_json::array();
  for (const auto& t : rep.tests) {
    nlohmann::ordered_json tj;
    tj["hypothesis"] = t.label;
    tj["statistic"] = t.observed;
    tj["p_value"] = t.p_value;
    tj["critical_value"] = t.critical_value;
    tj["B"] = t.B;
    tj["alpha"] = t.alpha;
    tj["engine"] = t.engine;
    tj["multipliers"] = t.multipliers;
    tj["seed"] = t.seed;
    tests.push_back(std::move(tj));
  }
  j["tests"] = std::move(tests);
  if (rep.posthoc) j["posthoc"] = posthoc_json(*rep.posthoc);
  if (rep.hierarchical) {
    nlohmann::ordered_json h;
    h["order"] = rep.hierarchical->order == HierarchicalOrder::components_first
                     ? "components-first"
                     : "pairs-first";
    h["stage1"] = posthoc_json(rep.hierarchical->stage1);
    auto s2 = nlohmann::ordered_json::array();
    for (const auto& s : rep.hierarchical->stage2) {
      nlohmann::ordered_json e;
      e["within"] = s.parent_label;
      e["note"] = "conditional on stage-1 rejection; exploratory";
      e["result"] = posthoc_json(s.result);
      s2.push_back(std::move(e));
    }
    h["stage2"] = std::move(s2);
    j["hierarchical"] = std::move(h);
  }
  if (!rep.eigenvalues.empty()) j["diagnostic_eigenvalues"] = rep.eigenvalues;
  return j.dump(2) + "\n";
}

// Simulation tables: '#' metadata header, then one CSV row per cell.
inline std::string render_rate_table(const RateTable& table) {
  std::ostringstream os;
  const auto& sc = table.scenario;
  os << "# rankmanova " << version << " type-I error study\n";
  os << "# scenario=" << sc.name << " model=" << model_name(sc.model)
     << " d=" << sc.d << " alpha=" << detail::fmt(sc.alpha, 3) << "\n";
  os << "# runs=" << sc.runs << " B=" << sc.B << " seed=" << sc.seed << "\n";
  os << "distribution,covariance,n,m,engine,rejection_rate\n";
  const std::string cov = sc.cov == CovSetting::compound_symmetry ? "S1"
                          : sc.cov == CovSetting::autoregressive  ? "S2"
                                                                  : "identity";
  for (const auto& cell : table.cells) {
    std::string nstr;
    for (std::size_t i = 0; i < cell.n_base.size(); ++i)
      nstr += (i ? "|" : "") + std::to_string(cell.n_base[i]);
    if (!std::isnan(cell.wild))
      os << model_name(sc.model) << "," << cov << "," << nstr << "," << cell.m
         << ",wild," << detail::fmt(cell.wild, 4) << "\n";
    if (!std::isnan(cell.classical))
      os << model_name(sc.model) << "," << cov << "," << nstr << "," << cell.m
         << ",classical," << detail::fmt(cell.classical, 4) << "\n";
  }
  return os.str();
}

inline std::string render_power_table(const SimScenario& sc,
                                      const std::vector<PowerPoint>& points) {
  std::ostringstream os;
  os << "# rankmanova " << version << " power study\n";
  os << "# scenario=" << sc.name << " model=" << model_name(sc.model)
     << " d=" << sc.d << " alpha=" << detail::fmt(sc.alpha, 3) << "\n";
  os << "# runs=" << sc.runs << " B=" << sc.B << " seed=" << sc.seed << "\n";
  os << "delta,engine,rejection_rate\n";
  for (const auto& pt : points) {
    if (!std::isnan(pt.wild))
      os << detail::fmt(pt.delta, 2) << ",wild," << detail::fmt(pt.wild, 4) << "\n";
    if (!std::isnan(pt.classical))
      os << detail::fmt(pt.delta, 2) << ",classical," << detail::fmt(pt.classical, 4)
         << "\n";
  }
  return os.str();
}

}  // namespace rankmanova
