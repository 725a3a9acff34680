#pragma once

#include "coinflip/distribution.hpp"
#include "coinflip/params.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace coinflip {

using PartyId = std::int64_t;
using Transcript = std::vector<Message>;
using TranscriptView = std::span<const Message>;

struct TranscriptHash {
  std::size_t operator()(const Transcript& t) const noexcept;
};

inline constexpr std::size_t kDefaultNodeBudget = 1'000'000;

enum class RoundClass { NonRobustJump, LargeJump, SmallJump };

const char* to_string(RoundClass c);

// Transcript-conditional data of one round: who speaks, the honest law Q_i,
// the jump of every supported message and the variance of the jump.
template <class T>
struct RoundView {
  std::size_t round_index = 0;  // 1-based
  PartyId party = 0;
  FiniteDistribution<T> honest_dist;
  std::vector<T> jumps;  // aligned with honest_dist.entries()
  T variance = 0;
  T min_jump = 0;
  T expected_before = 0;

  T jump_of(Message m) const;
};

template <class T>
class Protocol;

// A position in the protocol tree. Cursors walk one path with push/pop and
// answer transcript-conditional queries at the current prefix. Protocols
// with sufficient statistics (majority counts, normalizer counters) keep
// them incrementally so long executions stay linear.
template <class T>
class Cursor {
 public:
  virtual ~Cursor() = default;

  std::size_t depth() const { return prefix_.size(); }
  std::size_t rounds() const { return rounds_; }
  bool at_end() const { return prefix_.size() == rounds_; }
  TranscriptView prefix() const { return prefix_; }

  // Throws InvalidPrefix if m is outside the support of dist().
  void push(Message m);
  void pop();

  virtual PartyId party() = 0;
  virtual const FiniteDistribution<T>& dist() = 0;
  virtual int output() = 0;
  virtual T expected_outcome() = 0;

  // Cached until the cursor moves below or away from this depth.
  const RoundView<T>& view();

 protected:
  explicit Cursor(std::size_t rounds) : rounds_(rounds) {}

  virtual void on_push(Message m) = 0;
  virtual void on_pop(Message m) = 0;
  // Default: evaluate every child through push/expected_outcome/pop.
  virtual void compute_view(RoundView<T>& out);

 private:
  Transcript prefix_;
  std::size_t rounds_;
  std::vector<std::unique_ptr<RoundView<T>>> views_;
  std::vector<char> view_valid_;
};

// A stateless full-information coin-flipping protocol: speaker, message law
// and output are functions of the public transcript only. Instances are
// immutable apart from the internal expectation memo, which is guarded.
template <class T>
class Protocol {
 public:
  virtual ~Protocol() = default;

  virtual std::size_t num_parties() const = 0;
  virtual std::size_t num_rounds() const = 0;
  virtual std::string name() const = 0;
  virtual std::unique_ptr<Cursor<T>> cursor() const = 0;

  // Replays `prefix`; throws InvalidPrefix if it is not reachable.
  std::unique_ptr<Cursor<T>> cursor_at(TranscriptView prefix) const;

  PartyId next_party(TranscriptView prefix) const;
  FiniteDistribution<T> next_message_dist(TranscriptView prefix) const;
  int output(TranscriptView full) const;
  T expected_outcome(TranscriptView prefix) const;

  std::size_t node_budget() const { return node_budget_; }
  void set_node_budget(std::size_t budget) { node_budget_ = budget; }

  // Backward induction with a per-protocol memo keyed by prefix. Used by
  // cursors without a closed form. Throws BudgetExceeded once the memo
  // would exceed node_budget().
  T memoized_expectation(Cursor<T>& at) const;

 private:
  std::size_t node_budget_ = kDefaultNodeBudget;
  mutable std::shared_mutex memo_mutex_;
  mutable std::unordered_map<Transcript, T, TranscriptHash> memo_;
};

template <class T>
using ProtocolPtr = std::shared_ptr<const Protocol<T>>;

// Protocol given by three rule functions over prefixes, with an optional
// closed form for the conditional expectation.
template <class T>
class RuleProtocol : public Protocol<T> {
 public:
  struct Rules {
    std::function<PartyId(TranscriptView)> party;
    std::function<FiniteDistribution<T>(TranscriptView)> dist;
    std::function<int(TranscriptView)> output;
    std::function<std::optional<T>(TranscriptView)> closed_form;
  };

  RuleProtocol(std::string name, std::size_t parties, std::size_t rounds, Rules rules);

  std::size_t num_parties() const override { return parties_; }
  std::size_t num_rounds() const override { return rounds_; }
  std::string name() const override { return name_; }
  std::unique_ptr<Cursor<T>> cursor() const override;

  const Rules& rules() const { return rules_; }

 private:
  std::string name_;
  std::size_t parties_;
  std::size_t rounds_;
  Rules rules_;
};

template <class T>
T expected_outcome(const Protocol<T>& p, TranscriptView prefix);

// Throws NoNextRound for a full transcript.
template <class T>
RoundView<T> round_view(const Protocol<T>& p, TranscriptView prefix);

template <class T>
RoundClass classify_round(const RoundView<T>& view, const AttackParameters& params);

// True when some supported message has jump <= -neg_jump_threshold.
template <class T>
bool has_negative_jump(const RoundView<T>& view, const AttackParameters& params);

template <class T>
struct RobustnessResult {
  bool robust = false;
  // Probability that an honest execution reaches a NonRobustJump round.
  T nonrobust_probability = 0;
};

// Exact; throws BudgetExceeded past `node_budget` visited nodes.
template <class T>
RobustnessResult<T> is_robust(const Protocol<T>& p, const AttackParameters& params,
                              std::size_t node_budget = kDefaultNodeBudget);

// Honest-sampling estimate of the same probability for large protocols.
double estimate_nonrobust_probability(const Protocol<double>& p,
                                      const AttackParameters& params, std::size_t trials,
                                      std::uint64_t seed);

// Visits every reachable full transcript with its honest probability.
template <class T>
void for_each_transcript(const Protocol<T>& p,
                         const std::function<void(TranscriptView, const T&)>& visit,
                         std::size_t node_budget = kDefaultNodeBudget);

}  // namespace coinflip
