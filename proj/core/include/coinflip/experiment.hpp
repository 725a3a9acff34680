#pragma once

#include "coinflip/adversary.hpp"
#include "coinflip/monte_carlo.hpp"
#include "coinflip/params.hpp"

#include "json.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace coinflip {

inline constexpr int kConfigSchemaVersion = 1;
inline constexpr int kReportSchemaVersion = 1;
inline constexpr std::size_t kDefaultTrials = 100'000;
inline constexpr std::size_t kDefaultRobustnessTrials = 10'000;

enum class AdversaryKind { None, Normal, OneShot, Iterated, Full };
enum class RunMode { Exact, MonteCarlo };

const char* to_string(AdversaryKind k);
const char* to_string(RunMode m);

struct AdversaryConfig {
  AdversaryKind kind = AdversaryKind::None;
  ParameterOverrides overrides;
  std::optional<std::size_t> budget;
  bool strict_halt = false;
  // Defaults: off for "normal", on for "full".
  std::optional<bool> normalize;
  std::optional<Direction> derandomize;

  bool operator==(const AdversaryConfig&) const = default;
};

// One experiment. `protocol` is either a zoo spec ({generator, params}), a
// declarative protocol document, or {"file": path}; a relative path is
// resolved against `base_dir`.
struct ExperimentConfig {
  nlohmann::json protocol;
  AdversaryConfig adversary;
  RunMode mode = RunMode::Exact;
  std::optional<std::size_t> trials;  // required in monte-carlo mode
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  std::size_t node_budget = kDefaultNodeBudget;
  std::size_t robustness_trials = kDefaultRobustnessTrials;
  std::string report_path;
  std::string csv_path;
  std::string base_dir;  // not serialized

  bool operator==(const ExperimentConfig& o) const;
};

// Throws ConfigError naming the offending field.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::string& file);
// Canonical form: every field present, defaults spelled out.
nlohmann::json config_to_json(const ExperimentConfig& cfg);
// Mode-dependent checks (trials in monte-carlo mode, no derandomization
// outside exact mode).
void validate_config(const ExperimentConfig& cfg);

ProtocolPtr<double> config_protocol(const ExperimentConfig& cfg);

// Attack constants for the configured protocol. Runs without an adversary
// fall back to unclassified parameters (every round small-jumps) when the
// default formulas are undefined; `derived` is then false.
struct ResolvedParameters {
  AttackParameters params;
  bool derived = true;
};
ResolvedParameters resolve_parameters(const ExperimentConfig& cfg, const Protocol<double>& p);

nlohmann::json parameters_to_json(const AttackParameters& p);
// Formula defaults, node budget and trial count, printed into every report.
nlohmann::json defaults_provenance();

// A report has a deterministic body and a metadata block for timestamps,
// runtimes and the worker count.
struct RunOutcome {
  nlohmann::json body;
  nlohmann::json metadata;
  std::vector<TrialRow> rows;  // monte-carlo mode only
  bool hard_failure = false;   // a hard invariant failed
};

RunOutcome run_experiment(const ExperimentConfig& cfg);

// Mapping summary plus validate_normal verdicts before and after
// normalization.
RunOutcome normalize_experiment(const ExperimentConfig& cfg);

nlohmann::json report_document(const RunOutcome& r);
std::string trials_csv(const std::vector<TrialRow>& rows);

}  // namespace coinflip
