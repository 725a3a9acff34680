#pragma once

#include "coinflip/protocol.hpp"

#include <optional>
#include <vector>

namespace coinflip {

// Message forced by the one-shot attacker at a qualifying round: the
// smallest jump, ties broken by message order. nullopt when the round has
// no jump <= -neg_jump_threshold.
template <class T>
std::optional<Message> one_shot_target(const RoundView<T>& view, const AttackParameters& params);

// Pi_B: along every path, the first round offering a jump
// <= -neg_jump_threshold is replaced by a point mass on the minimizing
// message; every other round is honest. At most one round per path changes.
template <class T>
class OneShotProtocol final : public Protocol<T> {
 public:
  OneShotProtocol(ProtocolPtr<T> base, AttackParameters params);

  std::size_t num_parties() const override { return base_->num_parties(); }
  std::size_t num_rounds() const override { return base_->num_rounds(); }
  std::string name() const override { return "one_shot(" + base_->name() + ")"; }
  std::unique_ptr<Cursor<T>> cursor() const override;

  const Protocol<T>& base() const { return *base_; }
  const ProtocolPtr<T>& base_ptr() const { return base_; }
  const AttackParameters& params() const { return params_; }

 private:
  ProtocolPtr<T> base_;
  AttackParameters params_;
};

template <class T>
using OneShotPtr = std::shared_ptr<const OneShotProtocol<T>>;

template <class T>
OneShotPtr<T> one_shot_attacker(ProtocolPtr<T> p, const AttackParameters& params);

enum class StopReason { BiasedToZero, Robust, Budget };

const char* to_string(StopReason r);

// Pi^0 = p, Pi^{i+1} = (Pi^i)_B.
template <class T>
struct OneShotIteration {
  std::vector<ProtocolPtr<T>> protocols;  // Pi^0 .. Pi^k
  std::vector<OneShotPtr<T>> steps;       // steps[i] is Pi^{i+1}
  std::vector<T> expectations;            // E[Pi^i] for every computed i
  std::vector<T> reach_probabilities;     // Pr[qualifying round reached] in Pi^i
  StopReason stop_reason = StopReason::Budget;

  std::size_t iterations() const { return steps.size(); }
  const ProtocolPtr<T>& final_protocol() const { return protocols.back(); }
};

// Stops at the first i with, in order: E[Pi^i] < epsilon (biased-to-zero),
// reach probability <= delta (robust), i == max_rounds (budget).
template <class T>
OneShotIteration<T> iterate_one_shot(ProtocolPtr<T> p, const AttackParameters& params,
                                     std::size_t max_rounds,
                                     std::size_t node_budget = kDefaultNodeBudget);

}  // namespace coinflip
