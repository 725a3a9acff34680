#pragma once

#include "coinflip/normalizer.hpp"
#include "coinflip/one_shot.hpp"
#include "coinflip/protocol.hpp"

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

namespace coinflip {

// Public and hidden state of one attacked execution.
struct AdversaryState {
  std::set<PartyId> corrupted_parties;
  // Equals |corrupted_parties| for a single adversary; a composition adds
  // the counts of its parts.
  std::size_t corruption_count = 0;
  std::optional<std::size_t> budget;
  // Pr[party corrupted | transcript], for parties whose lottery happened.
  std::map<PartyId, double> posterior;
  bool halted = false;   // strict mode met a NonRobust round
  bool aborted = false;  // budget exhausted; play is honest from here on
};

// One random choice of the adversary at a round. `law` replaces the honest
// message distribution when set.
struct Branch {
  double prob = 1;
  bool corrupt_now = false;  // the speaker joins corrupted_parties
  bool controlled = false;   // the speaker is corrupted and active
  bool abort = false;        // this branch exhausts the budget
  double alpha = 0;          // bias of `law` when it is a Biased distribution
  std::optional<FiniteDistribution<double>> law;
};

// What the adversary does at the current round. Branch probabilities sum
// to one.
struct RoundPlan {
  const RoundView<double>* view = nullptr;  // of the adversary's target
  RoundClass cls = RoundClass::SmallJump;
  bool clamped = false;    // a corruption probability was clamped to [0,1]
  bool nonrobust = false;  // NonRobust round passed through honestly
  std::vector<Branch> branches;
};

// Step-by-step execution of an adversary against its target protocol.
// Sessions are single-threaded and keep an undo log, so exact enumeration
// can walk the joint (transcript x adversary randomness) tree.
class AttackSession {
 public:
  virtual ~AttackSession() = default;

  // Cursor of the target protocol at the current prefix.
  virtual Cursor<double>& cursor() = 0;
  // Valid until the next advance/retreat.
  virtual const RoundPlan& plan() = 0;
  // Takes branch `branch` of plan() and appends message m, which must lie
  // in the support of the branch law (or the honest law).
  virtual void advance(std::size_t branch, Message m) = 0;
  virtual void retreat() = 0;
  virtual const AdversaryState& state() const = 0;

  void reset() {
    while (cursor().depth() > 0) retreat();
  }
};

class Adversary {
 public:
  virtual ~Adversary() = default;

  virtual ProtocolPtr<double> target() const = 0;
  virtual std::string kind() const = 0;
  virtual bool is_deterministic() const { return false; }
  virtual std::unique_ptr<AttackSession> start() const = 0;
};

using AdversaryPtr = std::shared_ptr<const Adversary>;

// An adversary without internal randomness. Its effect on the target is a
// protocol Pi_A in its own right (same speakers, forced messages as point
// masses), which is what an outer adversary attacks under composition.
class DeterministicAdversary : public Adversary {
 public:
  bool is_deterministic() const override { return true; }
  virtual ProtocolPtr<double> attacked_protocol() const = 0;
};

using DeterministicPtr = std::shared_ptr<const DeterministicAdversary>;

class IdentityAdversary final : public DeterministicAdversary {
 public:
  explicit IdentityAdversary(ProtocolPtr<double> target);

  ProtocolPtr<double> target() const override { return target_; }
  std::string kind() const override { return "none"; }
  std::unique_ptr<AttackSession> start() const override;
  ProtocolPtr<double> attacked_protocol() const override { return target_; }

 private:
  ProtocolPtr<double> target_;
};

struct NormalAttackerOptions {
  // Attack the n-normal refinement of the target. Corrupted identities are
  // then pseudo-parties.
  bool normalize = false;
  // Halt the attack (honest play from then on) at the first NonRobust round.
  bool strict = false;
  std::optional<std::size_t> budget;
};

// The adaptive attacker on robust protocols. At a party's first
// non-NonRobust round it runs the corruption lottery (lambda^2 sqrt(v) on a
// large-jump round, small_corrupt_prob otherwise, both clamped). A
// corrupted speaker draws from Biased(Q, jump, 1/sqrt(v)) on large-jump
// rounds and from Biased(Q, jump, sqrt(n)) on small-jumps rounds while its
// posterior is <= posterior_cap, honestly otherwise. NonRobust rounds are
// played honestly.
class NormalAttacker final : public Adversary {
 public:
  NormalAttacker(ProtocolPtr<double> target, AttackParameters params,
                 NormalAttackerOptions options = {});

  ProtocolPtr<double> target() const override { return target_; }
  std::string kind() const override { return "normal"; }
  std::unique_ptr<AttackSession> start() const override;

  const AttackParameters& params() const { return params_; }
  const NormalAttackerOptions& options() const { return options_; }
  // The protocol whose speakers the attacker sees: the target or its
  // normalization.
  const Protocol<double>& view_protocol() const { return *view_; }

  // Pr[party corrupted | prefix] by forward Bayes updates. Defined once the
  // party's lottery is due: it spoke in prefix or speaks next.
  double posterior(TranscriptView prefix, PartyId party) const;

 private:
  ProtocolPtr<double> target_;
  ProtocolPtr<double> view_;
  AttackParameters params_;
  NormalAttackerOptions options_;
};

// Forces the minimizing message at the first qualifying round of each path.
class OneShotAdversary final : public DeterministicAdversary {
 public:
  explicit OneShotAdversary(OneShotPtr<double> attacked);
  OneShotAdversary(ProtocolPtr<double> target, const AttackParameters& params);

  ProtocolPtr<double> target() const override { return attacked_->base_ptr(); }
  std::string kind() const override { return "one-shot"; }
  std::unique_ptr<AttackSession> start() const override;
  ProtocolPtr<double> attacked_protocol() const override { return attacked_; }

  const AttackParameters& params() const { return attacked_->params(); }

 private:
  OneShotPtr<double> attacked_;
};

// A deterministic decision at one prefix.
struct Decision {
  bool corrupt = false;
  std::optional<Message> forced;
  bool operator==(const Decision&) const = default;
};

using DecisionTable = std::unordered_map<Transcript, Decision, TranscriptHash>;

// Pi_A of a table-driven adversary.
class DeterministicAttackedProtocol final : public Protocol<double> {
 public:
  DeterministicAttackedProtocol(ProtocolPtr<double> base, std::shared_ptr<const DecisionTable> table);

  std::size_t num_parties() const override { return base_->num_parties(); }
  std::size_t num_rounds() const override { return base_->num_rounds(); }
  std::string name() const override { return "attacked(" + base_->name() + ")"; }
  std::unique_ptr<Cursor<double>> cursor() const override;

  const Protocol<double>& base() const { return *base_; }
  const DecisionTable& table() const { return *table_; }

 private:
  ProtocolPtr<double> base_;
  std::shared_ptr<const DecisionTable> table_;
};

// Deterministic adversary given by a prefix -> Decision table.
class TableAdversary final : public DeterministicAdversary {
 public:
  TableAdversary(ProtocolPtr<double> target, DecisionTable table, std::string kind = "table");

  ProtocolPtr<double> target() const override { return target_; }
  std::string kind() const override { return kind_; }
  std::unique_ptr<AttackSession> start() const override;
  ProtocolPtr<double> attacked_protocol() const override { return attacked_; }

  const DecisionTable& table() const { return *table_; }

 private:
  ProtocolPtr<double> target_;
  std::shared_ptr<const DecisionTable> table_;
  std::shared_ptr<const DeterministicAttackedProtocol> attacked_;
  std::string kind_;
};

// B o A: A (deterministic) attacks the target; B attacks Pi_A. A forced
// message of A is a point mass in Pi_A, so B never touches it. Corruption
// counts add up.
class ComposedAdversary final : public DeterministicAdversary {
 public:
  ComposedAdversary(AdversaryPtr outer, DeterministicPtr inner);

  ProtocolPtr<double> target() const override { return inner_->target(); }
  std::string kind() const override { return "composed"; }
  bool is_deterministic() const override { return outer_->is_deterministic(); }
  std::unique_ptr<AttackSession> start() const override;
  // Throws CompositionContract when the outer adversary is randomized.
  ProtocolPtr<double> attacked_protocol() const override;

  const Adversary& outer() const { return *outer_; }
  const DeterministicAdversary& inner() const { return *inner_; }

 private:
  AdversaryPtr outer_;
  DeterministicPtr inner_;
};

// Throws CompositionContract unless inner is deterministic and outer
// targets inner's attacked protocol.
AdversaryPtr compose(AdversaryPtr outer, AdversaryPtr inner);

// B_k o ... o B_1 for an iteration; the identity adversary when empty.
AdversaryPtr one_shot_chain(const OneShotIteration<double>& iteration);

enum class Direction { Minimize, Maximize };

// Method of conditional expectations: at each prefix, fix the lottery
// branch and (for a controlled speaker) the message that is best for the
// exact conditional expected outcome.
std::shared_ptr<const TableAdversary> derandomize(const Adversary& adv, Direction direction,
                                                  std::size_t node_budget = kDefaultNodeBudget);

double corruption_posterior(ProtocolPtr<double> p, const AttackParameters& params, PartyId party,
                            TranscriptView prefix);

struct FullAttackOptions {
  std::optional<std::size_t> budget;
  bool strict = false;
  bool normalize = true;
  // Monte Carlo mode: robustness of the input is estimated by honest
  // sampling so large protocols can be attacked without enumeration.
  bool monte_carlo = false;
  std::size_t robustness_trials = 10000;
  std::uint64_t seed = 0;
  std::size_t node_budget = kDefaultNodeBudget;
};

struct FullAttack {
  AdversaryPtr adversary;
  int direction = 1;  // 0: biased toward 0 by one-shot steps; 1: toward 1
  OneShotIteration<double> iteration;
  bool trivial = false;  // E = 1 already, nothing to attack
};

FullAttack full_attack(ProtocolPtr<double> p, const AttackParameters& params,
                       const FullAttackOptions& options = {});

}  // namespace coinflip
