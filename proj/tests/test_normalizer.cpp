#include "coinflip/error.hpp"
#include "coinflip/normalizer.hpp"
#include "coinflip/protocol_file.hpp"
#include "coinflip/zoo.hpp"

#include "support.hpp"

#include "doctest.h"

#include <map>

using namespace coinflip;
using testing::fixture;
using testing::honest_transcripts;
using testing::make_params;
using testing::reachable_prefixes;

namespace {

using Kind = PseudoParty::Kind;

std::vector<ProtocolPtr<Rational>> enumerable_zoo() {
  return {majority_single_turn<Rational>(1), majority_single_turn<Rational>(3),
          majority_single_turn<Rational>(5), majority_many_turn<Rational>(1, 3),
          majority_many_turn<Rational>(3, 3), biased_and<Rational>(3),
          punishing_majority<Rational>(3, 3, 2), constant_protocol<Rational>(3, 1),
          load_protocol_file<Rational>(fixture("toy2.json")),
          load_protocol_file<Rational>(fixture("two_large_jumps.json"))};
}

std::vector<AttackParameters> parameter_grid(std::size_t n) {
  return {make_params(n, 0.01, 0.01), make_params(n, 0.6, 0.01), make_params(n, 0.3, 0.05),
          make_params(n, 1.0, 0.2), make_params(n, 1.0, 1.0), make_params(n, 0, 0, 2)};
}

// Speakers along one transcript.
template <class T>
std::vector<PartyId> speakers(const Protocol<T>& p, const Transcript& t) {
  std::vector<PartyId> out;
  for (std::size_t i = 0; i < t.size(); ++i) {
    out.push_back(p.next_party(TranscriptView(t.data(), i)));
  }
  return out;
}

// Which rounds share a speaker, as a canonical relabeling.
std::vector<std::size_t> partition(const std::vector<PartyId>& who) {
  std::map<PartyId, std::size_t> first;
  std::vector<std::size_t> out;
  for (PartyId p : who) out.push_back(first.emplace(p, first.size()).first->second);
  return out;
}

}  // namespace

TEST_SUITE("normalizer") {

TEST_CASE("party mapping encodes and decodes") {
  PartyMapping m(3, 2);
  CHECK(m.total() == 13);
  for (PartyId id = 0; id < static_cast<PartyId>(m.total()); ++id) {
    CHECK(m.encode(m.decode(id)) == id);
  }
  CHECK(m.encode({Kind::Small, 0, 1}) == 1);
  CHECK(m.encode({Kind::Large, 0, 1}) == 2);
  CHECK(m.encode({Kind::Large, 1, 3}) == 12);
  CHECK_FALSE(m.original(PartyMapping::kNonRobust).has_value());
  CHECK(*m.original(12) == 1);
  CHECK(m.label(0) == "NonRobust");
  CHECK(m.label(2) == "P0.large1");
}

TEST_CASE("constant protocol maps to small pseudo-party one") {
  auto p = constant_protocol<Rational>(3, 1);
  AttackParameters params = make_params(3, 0.1, 0.01);
  auto np = normalize(p, params);
  for (const auto& prefix : reachable_prefixes(*p)) {
    PartyId base = p->next_party(prefix);
    CHECK(np->next_party(prefix) == np->mapping().encode({Kind::Small, base, 1}));
  }
  CHECK(validate_normal(*p, params).all_passed());
  CHECK(validate_normal(*np, params).all_passed());
}

// After (0,0) or (1,1) the majority is settled and the last round has no jump.
bool settled(const Transcript& prefix) {
  return prefix.size() == 2 && prefix[0] == prefix[1];
}

TEST_CASE("majority 3 with a tiny threshold is NonRobust wherever it can drop") {
  auto p = majority_single_turn<Rational>(3);
  auto np = normalize(p, make_params(3, 0.01, 0.01));
  for (const auto& prefix : reachable_prefixes(*p)) {
    CAPTURE(prefix.size());
    if (settled(prefix)) {
      CHECK(np->next_party(prefix) == np->mapping().encode({Kind::Small, 2, 1}));
    } else {
      CHECK(np->next_party(prefix) == PartyMapping::kNonRobust);
    }
  }
}

TEST_CASE("majority 3 with large thresholds uses large pseudo-parties") {
  auto p = majority_single_turn<Rational>(3);
  auto np = normalize(p, make_params(3, 0.6, 0.01));
  for (const auto& prefix : reachable_prefixes(*p)) {
    auto who = np->mapping().decode(np->next_party(prefix));
    CHECK(who.kind == (settled(prefix) ? Kind::Small : Kind::Large));
    CHECK(who.index == 1);
    CHECK(who.original == static_cast<PartyId>(prefix.size()));
  }
}

TEST_CASE("small counter resets only on strict excess") {
  // One party, three bits: v = 1/16 at rounds 1 and 2, then 0 after (1,1).
  auto p = majority_many_turn<Rational>(1, 3);
  const PartyMapping m(3, 1);
  Transcript one = {1};
  Transcript ones = {1, 1};
  SUBCASE("accumulator equal to the threshold does not reset") {
    auto np = normalize(p, make_params(1, 1.0, 0.125));
    CHECK(np->next_party({}) == m.encode({Kind::Small, 0, 1}));
    CHECK(np->next_party(one) == m.encode({Kind::Small, 0, 1}));
    CHECK(np->next_party(ones) == m.encode({Kind::Small, 0, 1}));
  }
  SUBCASE("strict excess moves to the next small pseudo-party") {
    auto np = normalize(p, make_params(1, 1.0, 0.1));
    CHECK(np->next_party({}) == m.encode({Kind::Small, 0, 1}));
    CHECK(np->next_party(one) == m.encode({Kind::Small, 0, 1}));
    CHECK(np->next_party(ones) == m.encode({Kind::Small, 0, 2}));
    Transcript split = {1, 0};
    CHECK(np->next_party(split) == m.encode({Kind::Large, 0, 1}));
  }
  SUBCASE("variance equal to the threshold is a large jump") {
    auto np = normalize(p, make_params(1, 1.0, 0.0625));
    CHECK(np->next_party({}) == m.encode({Kind::Large, 0, 1}));
    CHECK(np->next_party(one) == m.encode({Kind::Large, 0, 2}));
  }
}

TEST_CASE("two large jumps by one party fail condition two with a witness") {
  auto p = load_protocol_file<Rational>(fixture("two_large_jumps.json"));
  AttackParameters params = make_params(2, 1.0, 0.01);
  NormalityReport before = validate_normal(*p, params);
  CHECK(before.conditions[0].passed);
  CHECK_FALSE(before.conditions[1].passed);
  REQUIRE(before.conditions[1].witness.has_value());
  CHECK(before.conditions[1].witness->size() == 3);
  CHECK(validate_normal(*normalize(p, params), params).all_passed());
}

TEST_CASE("normalized zoo protocols are normal and keep their semantics") {
  for (const auto& p : enumerable_zoo()) {
    for (const auto& params : parameter_grid(p->num_parties())) {
      CAPTURE(p->name());
      CAPTURE(params.neg_jump_threshold);
      CAPTURE(params.large_var_threshold);
      auto np = normalize(p, params);
      NormalityReport r = validate_normal(*np, params);
      for (const auto& c : r.conditions) {
        CAPTURE(c.name);
        CHECK(c.passed);
      }
      CHECK(np->num_parties() == 2 * p->num_rounds() * p->num_parties() + 1);
      for (const auto& prefix : reachable_prefixes(*p)) {
        CHECK(np->next_message_dist(prefix) == p->next_message_dist(prefix));
        CHECK(expected_outcome<Rational>(*np, prefix) == expected_outcome<Rational>(*p, prefix));
        PartyId pseudo = np->next_party(prefix);
        auto original = np->mapping().original(pseudo);
        if (original) CHECK(*original == p->next_party(prefix));
      }
      auto law = honest_transcripts(*p);
      CHECK(honest_transcripts(*np) == law);
      for (const auto& [t, prob] : law) CHECK(np->output(t) == p->output(t));
    }
  }
}

TEST_CASE("double mode normalization agrees with rational mode") {
  auto pr = majority_many_turn<Rational>(3, 3);
  auto pd = majority_many_turn<double>(3, 3);
  AttackParameters params = make_params(3, 0.3, 0.02);
  auto nr = normalize(pr, params);
  auto nd = normalize(pd, params);
  for (const auto& prefix : reachable_prefixes(*pr)) {
    CHECK(nr->next_party(prefix) == nd->next_party(prefix));
  }
  CHECK(validate_normal(*nd, params).all_passed());
}

TEST_CASE("pseudo-parties translate to at most as many original parties") {
  auto p = majority_many_turn<Rational>(3, 3);
  AttackParameters params = make_params(3, 0.3, 0.02);
  auto np = normalize(p, params);
  for (const auto& [t, prob] : honest_transcripts(*p)) {
    auto pseudo = speakers(*np, t);
    auto base = speakers(*p, t);
    std::map<PartyId, PartyId> owner;
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (pseudo[i] == PartyMapping::kNonRobust) continue;
      auto [it, fresh] = owner.emplace(pseudo[i], base[i]);
      CHECK(it->second == base[i]);
    }
  }
}

TEST_CASE("normalizing twice keeps the round partition") {
  for (const auto& p : enumerable_zoo()) {
    for (const auto& params : parameter_grid(p->num_parties())) {
      auto once = normalize(p, params);
      auto twice = normalize<Rational>(once, params);
      for (const auto& [t, prob] : honest_transcripts(*p)) {
        CHECK(partition(speakers(*once, t)) == partition(speakers(*twice, t)));
      }
    }
  }
}

TEST_CASE("mapping summary counts reachable pseudo-parties") {
  auto p = majority_single_turn<Rational>(3);
  auto np = normalize(p, make_params(3, 0.6, 0.01));
  MappingSummary s = summarize_mapping(*np);
  CHECK(s.declared_pseudo_parties == 19);
  // Three large pseudo-parties plus party 2's small one on settled prefixes.
  CHECK(s.reachable_pseudo_parties == 4);
  CHECK(s.nonrobust_rounds == 0);
  CHECK(s.by_original.size() == 3);
  auto all_nonrobust = summarize_mapping(*normalize(p, make_params(3, 0.01, 0.01)));
  // Seven reachable prefixes, two of them settled.
  CHECK(all_nonrobust.nonrobust_rounds == 5);
}

TEST_CASE("validation respects the node budget") {
  auto p = majority_many_turn<Rational>(3, 3);
  CHECK_THROWS_AS(validate_normal(*p, make_params(3, 0.3, 0.02), 20), BudgetExceeded);
}

}  // TEST_SUITE
