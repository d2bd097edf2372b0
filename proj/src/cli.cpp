#include "alignlab/cli.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include "CLI11.hpp"
#include "alignlab/errors.hpp"
#include "alignlab/experiment.hpp"
#include "alignlab/theory_oracle.hpp"

namespace alignlab {

namespace {

std::vector<double> parse_etas(const std::string& text) {
  std::vector<double> etas;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) {
      throw InvalidInput("--etas: cannot parse '" + item + "'");
    }
    etas.push_back(v);
  }
  if (etas.empty()) {
    throw InvalidInput("--etas: empty list");
  }
  return etas;
}

struct OracleArgs {
  std::string spec_path;
  std::size_t random_families = 0;
  std::uint64_t seed = 7;
  std::size_t slate_size = 2;
  double eta = 1.0;
  std::size_t trials = 10;
  std::string report_path;
};

struct Tally {
  std::size_t passed = 0;
  std::size_t total = 0;
  void add(bool ok) {
    ++total;
    passed += ok ? 1 : 0;
  }
  bool ok() const { return passed == total; }
};

int run_oracle(const OracleArgs& args, std::ostream& out) {
  std::vector<FiniteClassSpec> specs;
  if (!args.spec_path.empty()) {
    std::ifstream in(args.spec_path);
    if (!in) {
      throw InvalidInput("cannot open spec file " + args.spec_path);
    }
    nlohmann::json doc;
    try {
      in >> doc;
    } catch (const nlohmann::json::exception& e) {
      throw InvalidInput(args.spec_path + ": " + e.what());
    }
    specs.push_back(FiniteClassSpec::from_json(doc));
  }
  Rng family_rng = make_stream(args.seed, StreamRole::kOracle, 0);
  for (std::size_t i = 0; i < args.random_families; ++i) {
    specs.push_back(random_family(family_rng));
  }
  if (specs.empty()) {
    throw InvalidInput("oracle: give --spec or --random-families");
  }

  Tally isolation, identification, sandwich, domination, witness;
  double kl_error = 0.0;
  nlohmann::json report = nlohmann::json::array();
  for (std::size_t i = 0; i < specs.size(); ++i) {
    Rng rng = make_stream(args.seed, StreamRole::kOracle, 1, i);
    const OracleOutcome o = run_oracle_checks(specs[i], args.slate_size, args.eta, args.trials, rng);
    isolation.add(o.isolation);
    identification.add(o.zero_loss_identification);
    sandwich.add(o.regret_disagreement_sandwich);
    domination.add(o.slate_domination);
    witness.add(o.loss_gap_witness());
    kl_error = std::max(kl_error, o.excess_loss_kl_max_error);
    if (!args.report_path.empty()) {
      const double gap = o.min_loss_gap_at_isolation;
      report.push_back({{"family", i},
                        {"structure", to_json(compute_structure(specs[i], args.slate_size))},
                        {"isolation", o.isolation},
                        {"zero_loss_identification", o.zero_loss_identification},
                        {"regret_disagreement_sandwich", o.regret_disagreement_sandwich},
                        {"slate_domination", o.slate_domination},
                        {"excess_loss_kl_max_error", o.excess_loss_kl_max_error},
                        {"min_loss_gap_at_isolation",
                         std::isfinite(gap) ? nlohmann::json(gap) : nlohmann::json(nullptr)}});
    }
  }
  const bool kl_ok = kl_error <= 1e-12;

  const auto line = [&](const char* name, const Tally& t) {
    out << (t.ok() ? "PASS" : "FAIL") << "  " << name << "  " << t.passed << "/" << t.total
        << "\n";
  };
  line("isolation", isolation);
  line("zero_loss_identification", identification);
  line("regret_disagreement_sandwich", sandwich);
  line("slate_domination", domination);
  line("loss_gap_witness", witness);
  out << (kl_ok ? "PASS" : "FAIL") << "  excess_loss_is_kl  max_error=" << kl_error << " over "
      << specs.size() * args.trials << " trials\n";

  if (!args.report_path.empty()) {
    std::ofstream rep(args.report_path);
    if (!rep) {
      throw std::runtime_error("cannot open " + args.report_path + " for writing");
    }
    rep << report.dump(2) << "\n";
  }
  const bool all = isolation.ok() && identification.ok() && sandwich.ok() && domination.ok() &&
                   witness.ok() && kl_ok;
  return all ? 0 : 1;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Greedy online preference alignment testbed"};
  app.require_subcommand(1);

  ExperimentConfig cfg;
  std::string output_dir;
  std::string etas_text = "1,2,3";
  std::string protocol_text = to_string(cfg.protocol);
  auto* run = app.add_subcommand("run", "Run the full experiment");
  run->add_option("--output-dir", output_dir, "Directory for CSVs and manifest.json");
  run->add_option("--seed", cfg.base_seed, "Base seed");
  run->add_option("--dimension", cfg.dimension, "Context/action dimension");
  run->add_option("--num-actions", cfg.num_actions, "Number of actions");
  run->add_option("--horizon", cfg.horizon, "Rounds per trajectory");
  run->add_option("--repeats", cfg.repeats, "Trajectories per eta");
  run->add_option("--eval-contexts", cfg.eval_contexts, "Evaluation contexts per round");
  run->add_option("--mle-maxiter", cfg.mle_maxiter, "Solver iteration cap");
  run->add_option("--mle-ftol", cfg.mle_ftol, "Solver relative decrease tolerance");
  run->add_option("--min-probe-gap", cfg.min_probe_gap, "Required minimum probe-bank gap");
  run->add_option("--gap-probe-contexts", cfg.gap_probe_contexts, "Probe bank size");
  run->add_option("--problem-search-limit", cfg.problem_search_limit, "Candidate seeds to try");
  run->add_option("--etas", etas_text, "Comma-separated regularization levels");
  run->add_option("--protocol", protocol_text, "mixed-reference or iid-on-policy");
  run->add_flag("--kl-regret", cfg.compute_kl_regret, "Also record KL-regularized regret");
  run->add_flag("--verify-dpo-all", cfg.verify_dpo_all, "DPO check on every repeat");
  run->add_option("--threads", cfg.threads, "Worker count (0 = auto)");

  OracleArgs oracle_args;
  auto* oracle = app.add_subcommand("oracle", "Numerical checks on finite reward classes");
  oracle->add_option("--spec", oracle_args.spec_path, "FiniteClassSpec JSON file");
  oracle->add_option("--random-families", oracle_args.random_families, "Random families to check");
  oracle->add_option("--seed", oracle_args.seed, "Seed for families and trials");
  oracle->add_option("--slate-size", oracle_args.slate_size, "Slate size K");
  oracle->add_option("--eta", oracle_args.eta, "Tilt strength for the domination check");
  oracle->add_option("--trials", oracle_args.trials, "Random trials per family");
  oracle->add_option("--report", oracle_args.report_path, "Write per-family JSON report");

  ExperimentConfig scan;
  auto* gap_scan = app.add_subcommand("gap-scan", "Instance search only");
  gap_scan->add_option("--seed", scan.base_seed, "Base seed");
  gap_scan->add_option("--dimension", scan.dimension, "Context/action dimension");
  gap_scan->add_option("--num-actions", scan.num_actions, "Number of actions");
  gap_scan->add_option("--min-probe-gap", scan.min_probe_gap, "Required minimum probe-bank gap");
  gap_scan->add_option("--gap-probe-contexts", scan.gap_probe_contexts, "Probe bank size");
  gap_scan->add_option("--problem-search-limit", scan.problem_search_limit,
                       "Candidate seeds to try");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n" << app.help();
    return 2;
  }

  try {
    if (run->parsed()) {
      cfg.output_dir = output_dir;
      cfg.etas = parse_etas(etas_text);
      cfg.protocol = parse_slate_protocol(protocol_text);
      const ExperimentResult result = run_experiment(cfg);
      out << "accepted seed " << result.instance.accepted_seed << " (candidate "
          << result.instance.candidate_number << "), min probe gap "
          << result.instance.report.min_gap << "\n";
      out << summary_table(result);
      return 0;
    }
    if (oracle->parsed()) {
      return run_oracle(oracle_args, out);
    }
    const InstanceSearch found =
        search_instance(scan.base_seed, scan.dimension, scan.num_actions, scan.min_probe_gap,
                        scan.gap_probe_contexts, scan.problem_search_limit);
    out << to_json(found).dump(2) << "\n";
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

int cli_main(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) {
    args.emplace_back(argv[i]);
  }
  return cli_main(args, std::cout, std::cerr);
}

}  // namespace alignlab
