#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>

namespace coinflip {

// Field-by-field overrides of AttackParameters. Unset fields take their
// formula defaults.
struct ParameterOverrides {
  std::optional<std::size_t> n;
  std::optional<double> epsilon;
  std::optional<double> lambda;
  std::optional<double> delta;
  std::optional<double> neg_jump_threshold;
  std::optional<double> large_var_threshold;
  std::optional<double> posterior_cap;
  std::optional<double> small_corrupt_prob;
  std::optional<std::size_t> max_iterations;

  bool operator==(const ParameterOverrides&) const = default;
};

// Constants of the attack. Defaults:
//   epsilon = (log log n)^(-1/50), lambda = 100 / epsilon^5,
//   delta = 1 / log^2 n                        (logs base 2)
//   neg_jump_threshold  = 1 / (lambda sqrt n)
//   large_var_threshold = 1 / (lambda n)
//   posterior_cap       = 16 lambda^2 / sqrt n
//   small_corrupt_prob  = lambda^2 / sqrt n
//   max_iterations      = ceil(sqrt n * lambda / delta), capped at 10000
struct AttackParameters {
  std::size_t n = 0;
  double epsilon = 0;
  double lambda = 0;
  double delta = 0;
  double neg_jump_threshold = 0;
  double large_var_threshold = 0;
  double posterior_cap = 0;
  double small_corrupt_prob = 0;
  std::size_t max_iterations = 0;
  // Names of fields that were set explicitly rather than derived.
  std::set<std::string> overridden;

  static constexpr std::size_t kIterationHardCap = 10000;

  // Throws InvalidParameters when a formula leaves its domain (n <= 4 for
  // epsilon, n <= 2 for delta) and no override is given.
  static AttackParameters make(std::size_t protocol_parties,
                               const ParameterOverrides& overrides = {});

  // Corruption probability lambda^2 sqrt(v) clamped to [0,1].
  double large_jump_corrupt_prob(double variance, bool* clamped = nullptr) const;
  // lambda^2 / sqrt(n) clamped to [0,1].
  double small_jump_corrupt_prob(bool* clamped = nullptr) const;

  bool operator==(const AttackParameters&) const = default;
};

}  // namespace coinflip
