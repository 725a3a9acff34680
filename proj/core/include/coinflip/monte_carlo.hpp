#pragma once

#include "coinflip/adversary.hpp"
#include "coinflip/analyzer.hpp"

#include <cstdint>
#include <map>
#include <vector>

namespace coinflip {

// splitmix64 finalizer. Trial i of a run with base seed s is seeded with
// splitmix64(s ^ i), so results do not depend on which worker ran it.
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t trial_seed(std::uint64_t base_seed, std::uint64_t index);

// One round of an attacked execution. S_{k-1} = s_before, S_k = s_after,
// X_k = s_after - s_before. Y_k is the honest increment coupled to the
// sent message: equal to X_k on honest rounds, drawn from the coupling
// preimage on Biased rounds, and an independent honest draw when a message
// was forced.
struct RoundRecord {
  std::size_t round = 0;
  PartyId party = 0;
  RoundClass cls = RoundClass::SmallJump;
  double variance = 0;
  bool corrupted = false;  // speaker controlled by the adversary
  bool altered = false;    // message law differed from honest
  bool coupled = false;    // Y drawn through the monotone coupling
  Message message = 0;
  double s_before = 0;
  double s_after = 0;
  double x = 0;
  double y = 0;
};

struct ExecutionTrace {
  Transcript transcript;
  std::vector<RoundRecord> rounds;  // empty unless requested
  std::vector<std::pair<std::size_t, PartyId>> corruption_events;  // (round, party)
  int outcome = 0;
  std::size_t corruptions = 0;
  bool clamped = false;
  bool nonrobust_hit = false;
  VarianceSums variance;
};

// Runs one execution from the root of a (reset) session.
ExecutionTrace run_execution(AttackSession& session, const AttackParameters& params,
                             std::uint64_t seed, bool record_rounds = false);

struct TrialRow {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  int outcome = 0;
  std::size_t corruptions = 0;
  bool clamped = false;
  bool nonrobust_hit = false;
};

struct ExperimentReport {
  std::size_t trials = 0;
  std::uint64_t base_seed = 0;
  double outcome_frequency = 0;
  double outcome_stderr = 0;
  double mean_corruptions = 0;
  double corruptions_stderr = 0;
  std::size_t max_corruptions = 0;
  std::map<std::size_t, std::size_t> corruption_histogram;
  VarianceSums mean_variance;
  std::size_t clamped_trials = 0;
  std::size_t nonrobust_trials = 0;
  std::vector<TrialRow> rows;
};

// Throws InvalidParameters for zero trials. `workers` threads each own a
// session; reduction runs in trial order.
ExperimentReport monte_carlo(const Adversary& adv, const AttackParameters& params,
                             std::size_t trials, std::uint64_t base_seed, std::size_t workers = 1,
                             bool keep_rows = true);

}  // namespace coinflip
