#pragma once

#include "coinflip/adversary.hpp"

#include <map>
#include <vector>

namespace coinflip {

// Expected summed conditional variances of the coupled honest increments
// Y_i along attacked executions. Var[Y_i | prefix] is the honest jump
// variance v_i of the round.
struct VarianceSums {
  double small = 0;
  double large = 0;
  double nonrobust = 0;

  double robust() const { return small + large; }
  double total() const { return small + large + nonrobust; }
};

// Everything one exact walk of the joint (transcript x adversary
// randomness) tree yields.
struct ExactAnalysis {
  double prob_one = 0;
  double expected_corruptions = 0;
  std::map<Transcript, double> attacked;  // marginal attacked transcript law
  std::map<Transcript, double> honest;    // honest probability of the same transcripts
  VarianceSums variance;
  double kl_direct = 0;
  double kl_chain = 0;
  std::size_t nodes = 0;
};

ExactAnalysis analyze_exact(const Adversary& adv, const AttackParameters& params,
                            std::size_t node_budget = kDefaultNodeBudget);

struct ExactAttackResult {
  double prob_one = 0;
  double expected_corruptions = 0;
  std::map<Transcript, double> transcript_dist;
};

ExactAttackResult exact_attacked_distribution(const Adversary& adv,
                                              std::size_t node_budget = kDefaultNodeBudget);

// Soft comparison against the asymptotic bound 2/lambda.
struct VarianceReport {
  VarianceSums sums;
  double bound = 0;
  bool within_bound = false;
};

VarianceReport variance_accounting(const Adversary& adv, const AttackParameters& params,
                                   std::size_t node_budget = kDefaultNodeBudget);

// KL(attacked || honest) in bits, directly on transcripts and by the chain
// rule over per-prefix attacked conditionals. `agree` is the hard check
// (|direct - chain| <= 1e-9); the 16^3 lambda^3 bound is informational.
struct KlReport {
  double direct = 0;
  double chain_rule = 0;
  bool agree = false;
  double bound = 0;
  bool within_bound = false;
};

inline constexpr double kKlAgreementTolerance = 1e-9;

KlReport kl_attacked_vs_honest(const Adversary& adv, const AttackParameters& params,
                               std::size_t node_budget = kDefaultNodeBudget);

// Brute-force Pr[party corrupted | transcript starts with prefix] from the
// joint tree, without the Bayes recursion.
double exact_corruption_posterior(const Adversary& adv, TranscriptView prefix, PartyId party,
                                  std::size_t node_budget = kDefaultNodeBudget);

template <class T>
struct DoobRow {
  double c = 0;
  T lhs = 0;  // Pr[max_k Z_k >= c]
  T rhs = 0;  // E[Z_last] / c
  bool passed = false;
};

// Honest-execution martingale checks on an enumerable protocol.
template <class T>
struct MartingaleReport {
  bool tower = true;           // sum_m Q(m) E[t m] == E[t] at every prefix
  T max_tower_error = 0;
  T output_variance = 0;       // Var[sum_k X_k] = Var[output]
  T conditional_variance = 0;  // sum_k E[Var[X_k | prefix]]
  bool orthogonality = false;
  std::vector<DoobRow<T>> doob;          // Z_k = S_k
  std::vector<DoobRow<T>> doob_squared;  // Z_k = S_k^2 (a nonnegative submartingale)
  std::size_t prefixes = 0;

  bool passed() const {
    if (!tower || !orthogonality) return false;
    for (const auto& r : doob) {
      if (!r.passed) return false;
    }
    for (const auto& r : doob_squared) {
      if (!r.passed) return false;
    }
    return true;
  }
};

// Exact for rationals; 1e-9 tolerance for doubles.
template <class T>
MartingaleReport<T> martingale_diagnostics(const Protocol<T>& p, const std::vector<double>& grid,
                                           std::size_t node_budget = kDefaultNodeBudget);

}  // namespace coinflip
