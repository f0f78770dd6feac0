// Command-line front end: data ingestion, hypothesis tests, post-hoc
// pipelines and the Monte-Carlo study harness.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rankmanova/io.hpp"

namespace rmv = rankmanova;

namespace {

struct AnalyzeOptions {
  std::string input;
  std::vector<std::string> factors;
  std::vector<std::string> outcomes;
  std::string hypothesis = "auto";
  std::string engine = "wild";
  int B = 1000;
  double alpha = 0.05;
  std::uint64_t seed = 42;
  std::string multipliers = "rademacher";
  std::string posthoc;
  std::string adjust = "auto";
  std::string format = "text";
  int threads = 0;
  bool diagnostics = false;
  std::string output;
};

struct SimulateOptions {
  std::string scenario;
  int d = 4;
  std::string n_spec;
  std::vector<int> m_grid = {0, 10, 30, 50};
  int runs = 1000;
  int B = 500;
  double alpha = 0.05;
  std::uint64_t seed = 42;
  std::string engine = "both";
  std::string multipliers = "rademacher";
  int threads = 0;
  bool power = false;
  std::vector<double> delta_grid = {0.0, 0.5, 1.0, 1.5, 2.0, 3.0};
  std::string output;
};

rmv::Engine parse_engine(const std::string& s) {
  if (s == "wild") return rmv::Engine::wild;
  if (s == "classical") return rmv::Engine::classical;
  throw rmv::LayoutMismatch("unknown engine '" + s + "'");
}

rmv::MultiplierKind parse_multipliers(const std::string& s) {
  if (s == "rademacher") return rmv::MultiplierKind::rademacher;
  if (s == "normal") return rmv::MultiplierKind::standard_normal;
  throw rmv::LayoutMismatch("unknown multiplier scheme '" + s + "'");
}

void emit(const std::string& text, const std::string& output) {
  if (output.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(output, std::ios::binary);
  if (!out) throw rmv::FileNotFound("cannot write " + output);
  out << text;
}

rmv::TestLine to_line(const std::string& label, const rmv::BootstrapResult& r) {
  rmv::TestLine t;
  t.label = label;
  t.observed = r.observed;
  t.p_value = r.p_value;
  t.critical_value = r.critical_value;
  t.B = r.B;
  t.alpha = r.alpha;
  t.engine = rmv::engine_name(r.method);
  t.multipliers = r.method == rmv::Engine::wild ? rmv::multiplier_name(r.multipliers)
                                                : std::string("-");
  t.seed = r.seed;
  return t;
}

int run_analyze(const AnalyzeOptions& opt) {
  if (opt.B < 1) throw rmv::InvalidAlpha("--B must be >= 1");
  if (!(opt.alpha > 0.0 && opt.alpha < 1.0))
    throw rmv::InvalidAlpha("--alpha must be in (0,1)");
  const rmv::Engine engine = parse_engine(opt.engine);
  const rmv::MultiplierKind kind = parse_multipliers(opt.multipliers);

  rmv::IngestResult ing = rmv::ingest(opt.input, {opt.factors, opt.outcomes});
  const rmv::Dataset& data = ing.dataset;
  const int a = data.group_count(), d = data.dim();
  if (ing.layout.groups() != a)
    throw rmv::LayoutMismatch("factor layout does not match the group count");

  std::vector<rmv::HypothesisDesign> designs;
  const int nf = ing.layout.factor_count();
  std::string hyp = opt.hypothesis;
  if (hyp == "auto") hyp = nf == 1 ? "one-way" : "all";
  if (hyp == "one-way") {
    designs.push_back(rmv::one_way(a, d));
  } else if (hyp == "A" || hyp == "B" || hyp == "AB" || hyp == "all") {
    if (nf != 2)
      throw rmv::LayoutMismatch("two-way hypotheses need exactly two factor columns");
    const auto tw = rmv::two_way(ing.layout.levels()[0], ing.layout.levels()[1], d);
    if (hyp == "A" || hyp == "all") designs.push_back(tw.main_a);
    if (hyp == "B" || hyp == "all") designs.push_back(tw.main_b);
    if (hyp == "AB" || hyp == "all") designs.push_back(tw.interaction);
  } else if (hyp.rfind("file:", 0) == 0) {
    Eigen::MatrixXd H = rmv::read_matrix_file(hyp.substr(5));
    if (H.cols() != a * d)
      throw rmv::DimensionMismatch("H matrix must have a*d = " + std::to_string(a * d) +
                                   " columns");
    designs.push_back(rmv::make_design("custom contrast", std::move(H)));
  } else {
    throw rmv::LayoutMismatch("unknown hypothesis '" + hyp + "'");
  }

  rmv::AnalysisReport rep;
  rep.input_path = opt.input;
  rep.factor_names = ing.factor_names;
  rep.outcome_labels = ing.outcome_labels;
  rep.group_labels = ing.group_labels;
  rep.group_sizes = data.sizes();
  rep.dropped_rows = ing.dropped_rows;

  const auto eff = rmv::effects(data);
  rep.effect_table = Eigen::MatrixXd(a, d);
  for (int i = 0; i < a; ++i)
    for (int j = 0; j < d; ++j) rep.effect_table(i, j) = eff.p_hat.p[i * d + j];

  for (const auto& design : designs)
    rep.tests.push_back(to_line(
        design.label, rmv::run_test(data, design, engine, opt.B, opt.alpha, kind,
                                    opt.seed, opt.threads)));

  if (!opt.posthoc.empty()) {
    auto run_family = [&](const rmv::HypothesisFamily& family) {
      if (opt.adjust == "auto")
        return rmv::family_test(data, family, opt.B, opt.alpha, engine, kind, opt.seed,
                                opt.threads);
      if (opt.adjust == "closed")
        return rmv::closed_test(data, family, opt.B, opt.alpha, engine, kind, opt.seed,
                                opt.threads);
      if (opt.adjust == "holm")
        return rmv::adjusted_test(data, family, rmv::Adjustment::holm, opt.B, opt.alpha,
                                  engine, kind, opt.seed, opt.threads);
      if (opt.adjust == "bonferroni")
        return rmv::adjusted_test(data, family, rmv::Adjustment::bonferroni, opt.B,
                                  opt.alpha, engine, kind, opt.seed, opt.threads);
      throw rmv::LayoutMismatch("unknown adjustment '" + opt.adjust + "'");
    };
    if (opt.posthoc == "components") {
      rep.posthoc = run_family(rmv::per_component_family(a, d));
    } else if (opt.posthoc == "pairs") {
      rep.posthoc = run_family(rmv::pairwise_family(a, d));
    } else if (opt.posthoc == "hierarchical:components-first") {
      rep.hierarchical = rmv::hierarchical_plan(
          data, rmv::HierarchicalOrder::components_first, opt.B, opt.alpha, engine,
          kind, opt.seed, opt.threads);
    } else if (opt.posthoc == "hierarchical:pairs-first") {
      rep.hierarchical =
          rmv::hierarchical_plan(data, rmv::HierarchicalOrder::pairs_first, opt.B,
                                 opt.alpha, engine, kind, opt.seed, opt.threads);
    } else {
      throw rmv::LayoutMismatch("unknown post-hoc mode '" + opt.posthoc + "'");
    }
  }

  if (opt.diagnostics) {
    const auto est = rmv::sigma_hat(data);
    const auto nu = rmv::eigen_diagnostic(est.sigma(), designs.front().T);
    rep.eigenvalues.assign(nu.data(), nu.data() + nu.size());
  }

  if (opt.format == "text")
    emit(rmv::render_text(rep), opt.output);
  else if (opt.format == "csv")
    emit(rmv::render_csv(rep), opt.output);
  else if (opt.format == "json")
    emit(rmv::render_json(rep), opt.output);
  else
    throw rmv::LayoutMismatch("unknown format '" + opt.format + "'");
  return 0;
}

std::vector<std::vector<int>> parse_n_spec(const std::string& spec) {
  std::vector<std::vector<int>> out;
  std::istringstream groups(spec);
  std::string part;
  while (std::getline(groups, part, ';')) {
    std::vector<int> n;
    std::istringstream entries(part);
    std::string tok;
    while (std::getline(entries, tok, ',')) n.push_back(std::stoi(tok));
    if (!n.empty()) out.push_back(std::move(n));
  }
  if (out.empty()) throw rmv::LayoutMismatch("empty --n specification");
  return out;
}

rmv::SimScenario parse_scenario(const SimulateOptions& opt) {
  rmv::SimScenario sc;
  sc.name = opt.scenario;
  sc.d = opt.d;
  sc.runs = opt.runs;
  sc.B = opt.B;
  sc.alpha = opt.alpha;
  sc.seed = opt.seed;
  sc.multipliers = parse_multipliers(opt.multipliers);
  sc.run_wild = opt.engine == "wild" || opt.engine == "both";
  sc.run_classical = opt.engine == "classical" || opt.engine == "both";
  if (!sc.run_wild && !sc.run_classical)
    throw rmv::LayoutMismatch("unknown engine '" + opt.engine + "'");

  const std::string& s = opt.scenario;
  auto cov_from = [&](const std::string& tag) {
    if (tag == "S1") return rmv::CovSetting::compound_symmetry;
    if (tag == "S2") return rmv::CovSetting::autoregressive;
    throw rmv::LayoutMismatch("unknown covariance setting '" + tag + "'");
  };
  if (s.rfind("table1-", 0) == 0) {
    const auto rest = s.substr(7);
    const auto dash = rest.find('-');
    if (dash == std::string::npos)
      throw rmv::LayoutMismatch("expected table1-<distribution>-<S1|S2>");
    const auto dist = rest.substr(0, dash);
    if (dist == "normal")
      sc.model = rmv::DataModel::normal;
    else if (dist == "lognormal")
      sc.model = rmv::DataModel::lognormal;
    else
      throw rmv::LayoutMismatch("unknown distribution '" + dist + "'");
    sc.cov = cov_from(rest.substr(dash + 1));
  } else if (s.rfind("table2-", 0) == 0) {
    const auto rest = s.substr(7);
    const auto dash = rest.find('-');
    if (dash == std::string::npos)
      throw rmv::LayoutMismatch("expected table2-<sigma1^2>-<sigma2^2>");
    sc.model = rmv::DataModel::heteroscedastic_normal;
    sc.cov = rmv::CovSetting::scaled_identity;
    sc.sigma2 = {std::stod(rest.substr(0, dash)), std::stod(rest.substr(dash + 1))};
  } else if (s.rfind("table3-", 0) == 0) {
    sc.model = rmv::DataModel::ordinal;
    sc.cov = cov_from(s.substr(7));
  } else {
    throw rmv::LayoutMismatch(
        "unknown scenario '" + s +
        "' (expected table1-<dist>-<cov>, table2-<v1>-<v2> or table3-<cov>)");
  }
  return sc;
}

int run_simulate(const SimulateOptions& opt) {
  if (opt.runs < 1 || opt.B < 1) throw rmv::InvalidAlpha("--runs and --B must be >= 1");
  if (!(opt.alpha > 0.0 && opt.alpha < 1.0))
    throw rmv::InvalidAlpha("--alpha must be in (0,1)");
  rmv::SimScenario sc = parse_scenario(opt);
  const std::string n_spec = opt.n_spec.empty() ? "10,10;10,20;20,10" : opt.n_spec;
  const auto n_vectors = parse_n_spec(n_spec);
  if (opt.power) {
    sc.n_base = n_vectors.front();
    const auto points = rmv::power_study(sc, opt.delta_grid, opt.threads);
    emit(rmv::render_power_table(sc, points), opt.output);
  } else {
    const auto table = rmv::type1_study(sc, n_vectors, opt.m_grid, opt.threads);
    emit(rmv::render_rate_table(table), opt.output);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rank-based nonparametric MANOVA in Mann-Whitney-type effects"};
  app.require_subcommand(1);

  AnalyzeOptions an;
  auto* analyze = app.add_subcommand("analyze", "test hypotheses on a delimited dataset");
  analyze->add_option("--input", an.input, "delimited input file (header row required)")
      ->required();
  analyze->add_option("--factors", an.factors, "factor column names (1 or 2)")
      ->required()
      ->delimiter(',');
  analyze->add_option("--outcomes", an.outcomes, "outcome column names")
      ->required()
      ->delimiter(',');
  analyze->add_option("--hypothesis", an.hypothesis,
                      "one-way | A | B | AB | all | file:<H-matrix path>");
  analyze->add_option("--engine", an.engine, "wild | classical");
  analyze->add_option("--B", an.B, "bootstrap replicates");
  analyze->add_option("--alpha", an.alpha, "test level");
  analyze->add_option("--seed", an.seed, "RNG seed");
  analyze->add_option("--multipliers", an.multipliers, "rademacher | normal");
  analyze->add_option("--posthoc", an.posthoc,
                      "components | pairs | hierarchical:components-first | "
                      "hierarchical:pairs-first");
  analyze->add_option("--adjust", an.adjust, "auto | closed | holm | bonferroni");
  analyze->add_option("--format", an.format, "text | csv | json");
  analyze->add_option("--threads", an.threads, "worker threads (0 = hardware)");
  analyze->add_flag("--diagnostics", an.diagnostics,
                    "report eigenvalues of Sigma^(1/2) T Sigma^(1/2)");
  analyze->add_option("--output", an.output, "output file (default stdout)");

  SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "Monte-Carlo type-I error / power studies");
  simulate->add_option("--scenario", sim.scenario,
                       "table1-<normal|lognormal>-<S1|S2> | table2-<v1>-<v2> | "
                       "table3-<S1|S2>")
      ->required();
  simulate->add_option("--d", sim.d, "components");
  simulate->add_option("--n", sim.n_spec, "sample sizes, e.g. '10,10;10,20;20,10'");
  simulate->add_option("--m-grid", sim.m_grid, "sample size increments")->delimiter(',');
  simulate->add_option("--runs", sim.runs, "Monte-Carlo runs per cell");
  simulate->add_option("--B", sim.B, "bootstrap replicates per run");
  simulate->add_option("--alpha", sim.alpha, "test level");
  simulate->add_option("--seed", sim.seed, "RNG seed");
  simulate->add_option("--engine", sim.engine, "wild | classical | both");
  simulate->add_option("--multipliers", sim.multipliers, "rademacher | normal");
  simulate->add_option("--threads", sim.threads, "worker threads (0 = hardware)");
  simulate->add_flag("--power", sim.power, "power study over --delta-grid");
  simulate->add_option("--delta-grid", sim.delta_grid, "shift grid")->delimiter(',');
  simulate->add_option("--output", sim.output, "output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 3;
  }

  try {
    if (*analyze) return run_analyze(an);
    if (*simulate) return run_simulate(sim);
  } catch (const rmv::FileNotFound& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const rmv::MissingColumn& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const rmv::NoCompleteRows& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const rmv::SingleGroup& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const rmv::EmptyGroup& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const rmv::MismatchedDimension& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const rmv::NonFiniteValue& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const rmv::InvalidAlpha& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 3;
  } catch (const rmv::LayoutMismatch& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 3;
  } catch (const rmv::DimensionMismatch& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 3;
  } catch (const rmv::OutOfRange& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 3;
  } catch (const rmv::FamilyTooLarge& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 3;
  } catch (const rmv::InvalidCorrelation& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 3;
  } catch (const rmv::Error& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
