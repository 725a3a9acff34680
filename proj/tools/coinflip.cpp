// coinflip: run attack experiments, normalize protocols, run the property
// batteries.
//
//   coinflip run --config exp.json [--mode monte-carlo --trials N --seed S --workers W]
//   coinflip normalize --config exp.json [--out report.json]
//   coinflip verify [--seed S]
//
// Exit codes: 0 ok, 1 failed invariant or attack error, 2 bad config or
// usage, 3 node budget exceeded.

#include "coinflip/error.hpp"
#include "coinflip/experiment.hpp"
#include "coinflip/verify.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>

namespace {

using coinflip::ExperimentConfig;
using coinflip::RunMode;
using coinflip::RunOutcome;

constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitBudget = 3;

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  std::optional<std::size_t> workers;
  std::string out;
  std::string csv;
  std::string mode;
  bool print_json = false;
  bool inject_fault = false;
};

ExperimentConfig configure(const Flags& f) {
  ExperimentConfig cfg = coinflip::load_config(f.config);
  if (f.seed) cfg.seed = *f.seed;
  if (f.trials) cfg.trials = *f.trials;
  if (f.workers) cfg.workers = *f.workers;
  if (!f.out.empty()) cfg.report_path = f.out;
  if (!f.csv.empty()) cfg.csv_path = f.csv;
  if (f.mode == "exact") cfg.mode = RunMode::Exact;
  if (f.mode == "monte-carlo") cfg.mode = RunMode::MonteCarlo;
  return cfg;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw coinflip::ConfigError(path, "cannot write output file");
  out << text;
}

void emit(const ExperimentConfig& cfg, const RunOutcome& r, bool print_json) {
  std::string doc = coinflip::report_document(r).dump(2) + "\n";
  if (!cfg.report_path.empty()) write_file(cfg.report_path, doc);
  if (!cfg.csv_path.empty() && cfg.mode == RunMode::MonteCarlo) {
    write_file(cfg.csv_path, coinflip::trials_csv(r.rows));
  }
  if (print_json) std::cout << doc;
}

std::string fmt(const nlohmann::json& v) {
  if (v.is_number_float()) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v.get<double>());
    return buf;
  }
  return v.dump();
}

int cmd_run(const Flags& f) {
  ExperimentConfig cfg = configure(f);
  RunOutcome r = coinflip::run_experiment(cfg);
  emit(cfg, r, f.print_json);
  const auto& s = r.body["summary"];
  std::cout << "protocol    " << r.body["protocol"]["name"].get<std::string>() << "\n"
            << "adversary   " << r.body["adversary"]["kind"].get<std::string>() << " ("
            << coinflip::to_string(cfg.mode) << ")\n"
            << "E honest    " << fmt(s["honest_expectation"]) << "\n"
            << "E attacked  " << fmt(s["attacked_expectation"]) << "\n"
            << "corruptions " << fmt(s["corruptions"]) << "\n"
            << "direction   " << fmt(s["direction"]) << "\n";
  for (const auto& m : r.body["soft_metrics"]) {
    std::cout << "info       " << m["name"].get<std::string>() << " " << fmt(m["measured"])
              << " vs bound " << fmt(m["bound"]) << " (" << m["status"].get<std::string>()
              << ")\n";
  }
  if (r.hard_failure) std::cerr << "error: chain-rule and joint KL disagree\n";
  return r.hard_failure ? kExitFailure : 0;
}

int cmd_normalize(const Flags& f) {
  ExperimentConfig cfg = configure(f);
  RunOutcome r = coinflip::normalize_experiment(cfg);
  emit(cfg, r, f.print_json);
  const auto& m = r.body["mapping"];
  std::cout << "protocol   " << r.body["protocol"]["name"].get<std::string>() << "\n"
            << "pseudo-parties reachable " << m["reachable_pseudo_parties"] << " of "
            << m["declared_pseudo_parties"] << "\n";
  for (const char* stage : {"before", "after"}) {
    for (const auto& c : r.body[stage]["conditions"]) {
      std::cout << stage << (std::string(stage) == "after" ? "  " : " ") << " "
                << (c["passed"].get<bool>() ? "PASS " : "FAIL ") << c["name"].get<std::string>();
      if (!c["witness"].is_null()) std::cout << " witness " << c["witness"].dump();
      std::cout << "\n";
    }
  }
  std::cout << "semantics  " << (r.body["semantics_preserved"].get<bool>() ? "preserved" : "CHANGED")
            << "\n";
  return r.hard_failure ? kExitFailure : 0;
}

int cmd_verify(const Flags& f) {
  std::uint64_t seed = 1;
  if (!f.config.empty()) seed = coinflip::load_config(f.config).seed;
  if (f.seed) seed = *f.seed;
  coinflip::VerifyReport r = coinflip::verify_suite(seed, f.inject_fault);
  for (const auto& c : r.checks) {
    std::cout << (c.passed() ? "PASS " : "FAIL ") << c.name << " (" << c.cases << " cases";
    if (!c.passed()) std::cout << ", " << c.failures << " failed; first: " << c.detail;
    std::cout << ")\n";
  }
  std::cout << "seed " << seed << ": " << (r.passed() ? "all checks passed" : "FAILURES") << "\n";
  return r.passed() ? 0 : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Collective coin-flipping attack simulator"};
  app.require_subcommand(1);
  Flags f;

  auto add_common = [&](CLI::App* sub, bool need_config) {
    auto* opt = sub->add_option("--config", f.config, "experiment config (JSON)");
    if (need_config) opt->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", f.seed, "base seed");
    sub->add_option("--out", f.out, "report path");
    sub->add_flag("--json", f.print_json, "also print the report on stdout");
  };

  CLI::App* run = app.add_subcommand("run", "run an experiment");
  add_common(run, true);
  run->add_option("--trials", f.trials, "Monte Carlo trials")->check(CLI::PositiveNumber);
  run->add_option("--workers", f.workers, "worker threads (does not change results)")
      ->check(CLI::PositiveNumber);
  run->add_option("--mode", f.mode, "exact | monte-carlo")
      ->check(CLI::IsMember({"exact", "monte-carlo"}));
  run->add_option("--csv", f.csv, "per-trial CSV path (monte-carlo mode)");

  CLI::App* norm = app.add_subcommand("normalize", "normalize a protocol and validate it");
  add_common(norm, true);

  CLI::App* verify = app.add_subcommand("verify", "run the randomized property batteries");
  verify->add_option("--config", f.config, "take the seed from a config")->check(CLI::ExistingFile);
  verify->add_option("--seed", f.seed, "seed");
  verify->add_flag("--inject-fault", f.inject_fault)->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) return cmd_run(f);
    if (*norm) return cmd_normalize(f);
    return cmd_verify(f);
  } catch (const coinflip::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const coinflip::InvalidParameters& e) {
    std::cerr << "invalid parameters: " << e.what() << "\n";
    return kExitConfig;
  } catch (const coinflip::BudgetExceeded& e) {
    std::string msg = e.what();
    std::cerr << "budget exceeded: " << msg;
    if (msg.find("monte-carlo") == std::string::npos) {
      std::cerr << "; rerun with --mode monte-carlo";
    }
    std::cerr << "\n";
    return kExitBudget;
  } catch (const coinflip::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}
