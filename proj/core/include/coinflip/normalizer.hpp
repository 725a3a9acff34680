#pragma once

#include "coinflip/protocol.hpp"

#include <array>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace coinflip {

// Pseudo-party of the normalized protocol.
struct PseudoParty {
  enum class Kind { NonRobust, Small, Large };
  Kind kind = Kind::NonRobust;
  PartyId original = -1;  // -1 for NonRobust
  std::size_t index = 0;  // 1-based counter value (L_P or S_P)

  bool operator==(const PseudoParty&) const = default;
};

const char* to_string(PseudoParty::Kind k);

// Dense ids for the 2*rounds*parties + 1 pseudo-parties:
//   NonRobust          -> 0
//   P^small_k of P     -> 1 + 2 * (P * rounds + k - 1)
//   P^large_k of P     -> 2 + 2 * (P * rounds + k - 1)
class PartyMapping {
 public:
  PartyMapping(std::size_t rounds, std::size_t parties) : rounds_(rounds), parties_(parties) {}

  static constexpr PartyId kNonRobust = 0;

  std::size_t total() const { return 2 * rounds_ * parties_ + 1; }
  PartyId encode(const PseudoParty& p) const;
  PseudoParty decode(PartyId id) const;
  // The original party owning a pseudo-party; nullopt for NonRobust.
  std::optional<PartyId> original(PartyId id) const;
  std::string label(PartyId id) const;

 private:
  std::size_t rounds_;
  std::size_t parties_;
};

// The n-normal refinement: same transcripts, messages and output as the
// base protocol; only speakers are replaced by pseudo-parties driven by
// per-party counters L_P, S_P (start at 1) and A_P (starts at 0):
//   negative jump available        -> NonRobust
//   v >= large_var_threshold       -> P^large_{L_P}, then L_P += 1
//   otherwise                      -> P^small_{S_P}, A_P += v, and when
//                                     A_P > large_var_threshold (strict)
//                                     S_P += 1, A_P = 0
// Counters are maintained incrementally by the cursor.
template <class T>
class NormalizedProtocol final : public Protocol<T> {
 public:
  NormalizedProtocol(ProtocolPtr<T> base, AttackParameters params);

  std::size_t num_parties() const override { return mapping_.total(); }
  std::size_t num_rounds() const override { return base_->num_rounds(); }
  std::string name() const override { return "normalized(" + base_->name() + ")"; }
  std::unique_ptr<Cursor<T>> cursor() const override;

  const Protocol<T>& base() const { return *base_; }
  const ProtocolPtr<T>& base_ptr() const { return base_; }
  const AttackParameters& params() const { return params_; }
  const PartyMapping& mapping() const { return mapping_; }

 private:
  ProtocolPtr<T> base_;
  AttackParameters params_;
  PartyMapping mapping_;
};

template <class T>
std::shared_ptr<const NormalizedProtocol<T>> normalize(ProtocolPtr<T> p,
                                                       const AttackParameters& params);

// Verdicts of the four normality conditions, each with a witness
// transcript on failure.
struct NormalityCondition {
  std::string name;
  bool passed = true;
  std::optional<Transcript> witness;
  std::string detail;
};

struct NormalityReport {
  std::array<NormalityCondition, 4> conditions{
      NormalityCondition{"single_nonrobust_party", true, std::nullopt, ""},
      NormalityCondition{"large_jump_single_message", true, std::nullopt, ""},
      NormalityCondition{"small_jumps_bounded_variance", true, std::nullopt, ""},
      NormalityCondition{"at_most_n_unfulfilled", true, std::nullopt, ""}};
  std::size_t transcripts_checked = 0;

  bool all_passed() const {
    for (const auto& c : conditions) {
      if (!c.passed) return false;
    }
    return true;
  }
};

// Exhaustive check over reachable transcripts. Party roles are read off the
// protocol's own speaker labels: the NonRobust party is whoever owns the
// negative-jump rounds, a large-jump party owns a round with
// v >= large_var_threshold, every other speaker is a small-jumps party.
template <class T>
NormalityReport validate_normal(const Protocol<T>& p, const AttackParameters& params,
                                std::size_t node_budget = kDefaultNodeBudget);

// Which pseudo-parties each original party uses over all reachable
// transcripts.
struct MappingSummary {
  std::size_t declared_pseudo_parties = 0;
  std::size_t reachable_pseudo_parties = 0;
  std::size_t nonrobust_rounds = 0;  // reachable (prefix) nodes owned by NonRobust
  std::map<PartyId, std::set<PartyId>> by_original;
};

template <class T>
MappingSummary summarize_mapping(const NormalizedProtocol<T>& p,
                                 std::size_t node_budget = kDefaultNodeBudget);

}  // namespace coinflip
