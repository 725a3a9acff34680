#pragma once

#include "coinflip/distribution.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace coinflip {

// Random exact Biased instance: probabilities with denominators bounded by
// the weight range, integer-valued f re-centered under X, and alpha chosen
// so that f >= -1/(2 alpha) holds.
struct RandomInstance {
  FiniteDistribution<Rational> x;
  std::vector<Rational> f;
  Rational alpha;
};

RandomInstance random_instance(Rng& rng, std::size_t max_support = 8);

// Random distribution on {0, .., support-1} with positive rational masses.
FiniteDistribution<Rational> random_distribution(Rng& rng, std::size_t support);

struct VerifyCheck {
  std::string name;
  std::size_t cases = 0;
  std::size_t failures = 0;
  std::string detail;  // first failure

  bool passed() const { return failures == 0; }
};

struct VerifyReport {
  std::uint64_t seed = 0;
  std::vector<VerifyCheck> checks;

  bool passed() const {
    for (const auto& c : checks) {
      if (!c.passed()) return false;
    }
    return true;
  }
};

// Randomized property batteries: Biased mean shift, mixture identity, KL
// bound, Pinsker, coupling marginals and dominance, KL chain rule, and
// martingale diagnostics on small zoo protocols. `inject_fault` perturbs
// one identity so the harness can prove it fails loudly.
VerifyReport verify_suite(std::uint64_t seed, bool inject_fault = false);

}  // namespace coinflip
