#include "coinflip/error.hpp"
#include "coinflip/protocol.hpp"
#include "coinflip/protocol_file.hpp"
#include "coinflip/zoo.hpp"

#include "support.hpp"

#include "doctest.h"

#include <cmath>

using namespace coinflip;
using testing::brute_expectation;
using testing::fixture;
using testing::honest_transcripts;
using testing::reachable_prefixes;

namespace {

std::vector<ProtocolPtr<Rational>> small_zoo() {
  return {majority_single_turn<Rational>(1),   majority_single_turn<Rational>(3),
          majority_single_turn<Rational>(5),   majority_many_turn<Rational>(1, 3),
          majority_many_turn<Rational>(3, 3),  biased_and<Rational>(2),
          biased_and<Rational>(4),             punishing_majority<Rational>(3, 3, 2),
          punishing_majority<Rational>(1, 2, 2), constant_protocol<Rational>(3, 1),
          constant_protocol<Rational>(2, 0)};
}

AttackParameters thresholds(double neg, double large) {
  ParameterOverrides o;
  o.epsilon = 0.5;
  o.lambda = 1;
  o.delta = 0.1;
  o.neg_jump_threshold = neg;
  o.large_var_threshold = large;
  return AttackParameters::make(3, o);
}

}  // namespace

TEST_SUITE("protocol-core") {

TEST_CASE("expected outcome examples") {
  auto maj3 = majority_single_turn<Rational>(3);
  CHECK(expected_outcome<Rational>(*maj3, {}) == Rational(1, 2));
  Transcript ones = {1, 1};
  CHECK(expected_outcome<Rational>(*maj3, ones) == 1);
  CHECK(expected_outcome<Rational>(*biased_and<Rational>(2), {}) == Rational(1, 4));
  Transcript full = {0, 1, 1};
  CHECK(expected_outcome<Rational>(*maj3, full) == 1);
  CHECK(maj3->output(full) == 1);
}

TEST_CASE("invalid prefixes are rejected") {
  auto maj3 = majority_single_turn<Rational>(3);
  Transcript bad = {2};
  CHECK_THROWS_AS(expected_outcome<Rational>(*maj3, bad), InvalidPrefix);
  Transcript too_long = {0, 0, 0, 0};
  CHECK_THROWS_AS(expected_outcome<Rational>(*maj3, too_long), InvalidPrefix);
  Transcript full = {0, 0, 0};
  CHECK_THROWS_AS(round_view<Rational>(*maj3, full), NoNextRound);
  // Zero-mass messages are outside the support.
  auto and1 = biased_and<Rational>(1);
  Transcript one = {1};
  CHECK_THROWS_AS(expected_outcome<Rational>(*and1, one), InvalidPrefix);
}

TEST_CASE("round view examples") {
  auto maj3 = majority_single_turn<Rational>(3);
  RoundView<Rational> v = round_view<Rational>(*maj3, {});
  CHECK(v.round_index == 1);
  CHECK(v.party == 0);
  CHECK(v.jump_of(1) == Rational(1, 4));
  CHECK(v.jump_of(0) == Rational(-1, 4));
  CHECK(v.variance == Rational(1, 16));
  Transcript t = {1, 0};
  RoundView<Rational> w = round_view<Rational>(*maj3, t);
  CHECK(w.party == 2);
  CHECK(w.jump_of(1) == Rational(1, 2));
  CHECK(w.jump_of(0) == Rational(-1, 2));
  CHECK(w.variance == Rational(1, 4));
  auto c = constant_protocol<Rational>(3, 1);
  for (const auto& prefix : reachable_prefixes(*c)) {
    RoundView<Rational> z = round_view<Rational>(*c, prefix);
    CHECK(z.variance == 0);
    for (const auto& j : z.jumps) CHECK(j == 0);
  }
}

TEST_CASE("views agree with brute-force enumeration on the zoo") {
  for (const auto& p : small_zoo()) {
    CAPTURE(p->name());
    CHECK(expected_outcome<Rational>(*p, {}) == brute_expectation(*p, {}));
    for (const auto& prefix : reachable_prefixes(*p)) {
      RoundView<Rational> v = round_view<Rational>(*p, prefix);
      Rational before = brute_expectation(*p, prefix);
      CHECK(v.expected_before == before);
      CHECK(v.party == p->next_party(prefix));
      Rational mean = 0;
      Rational var = 0;
      for (std::size_t i = 0; i < v.honest_dist.size(); ++i) {
        Transcript next = prefix;
        next.push_back(v.honest_dist[i].value);
        Rational jump = brute_expectation(*p, next) - before;
        CHECK(v.jumps[i] == jump);
        mean += v.honest_dist[i].prob * jump;
        var += v.honest_dist[i].prob * jump * jump;
      }
      // Tower property and jump centering, exactly.
      CHECK(mean == 0);
      CHECK(v.variance == var);
    }
  }
}

TEST_CASE("double mode tracks rational mode") {
  auto pr = majority_many_turn<Rational>(3, 3);
  auto pd = majority_many_turn<double>(3, 3);
  for (const auto& prefix : reachable_prefixes(*pr)) {
    RoundView<Rational> a = round_view<Rational>(*pr, prefix);
    RoundView<double> b = round_view<double>(*pd, prefix);
    CHECK(std::fabs(to_double(a.variance) - b.variance) <= 1e-12);
    CHECK(std::fabs(to_double(a.expected_before) - b.expected_before) <= 1e-12);
  }
}

TEST_CASE("cursor push and pop restore views") {
  auto p = majority_many_turn<double>(3, 3);
  auto c = p->cursor();
  RoundView<double> root = c->view();
  c->push(1);
  c->push(0);
  CHECK(c->depth() == 2);
  c->pop();
  c->pop();
  CHECK(c->view().variance == root.variance);
  CHECK(c->view().expected_before == root.expected_before);
  CHECK_THROWS_AS(c->push(5), InvalidPrefix);
}

TEST_CASE("classify round examples") {
  AttackParameters params = thresholds(0.1, 0.01);
  RoundView<double> v;
  v.honest_dist = FiniteDistribution<double>::from_entries({{0, 0.5}, {1, 0.5}});
  v.jumps = {-0.25, 0.25};
  v.variance = 1.0 / 16;
  v.min_jump = -0.25;
  CHECK(classify_round(v, params) == RoundClass::NonRobustJump);
  v.jumps = {-0.05, 0.05};
  v.min_jump = -0.05;
  CHECK(classify_round(v, params) == RoundClass::LargeJump);
  v.variance = 0.005;
  CHECK(classify_round(v, params) == RoundClass::SmallJump);
}

TEST_CASE("robustness examples") {
  auto maj3 = majority_single_turn<Rational>(3);
  auto r1 = is_robust(*maj3, thresholds(0.01, 0.01));
  CHECK(r1.nonrobust_probability == 1);
  CHECK_FALSE(r1.robust);
  auto r2 = is_robust(*maj3, thresholds(0.6, 0.01));
  CHECK(r2.nonrobust_probability == 0);
  CHECK(r2.robust);
  auto r3 = is_robust(*constant_protocol<Rational>(4, 1), thresholds(0.01, 0.01));
  CHECK(r3.nonrobust_probability == 0);
  CHECK(r3.robust);
}

TEST_CASE("robustness estimate tracks the exact value") {
  // Threshold 0.3: only rounds 2 and 3 after a split can drop by 0.5.
  auto pd = majority_single_turn<double>(3);
  AttackParameters params = thresholds(0.3, 0.01);
  double exact = to_double(is_robust(*majority_single_turn<Rational>(3), params).nonrobust_probability);
  CHECK(exact == doctest::Approx(0.5));
  double est = estimate_nonrobust_probability(*pd, params, 100000, 3);
  CHECK(std::fabs(est - exact) <= 3 * std::sqrt(exact * (1 - exact) / 100000));
}

TEST_CASE("node budget is enforced") {
  auto p = majority_many_turn<Rational>(3, 3);
  CHECK_THROWS_AS(is_robust(*p, thresholds(0.9, 0.01), 50), BudgetExceeded);
  CHECK_THROWS_AS(for_each_transcript<Rational>(
                      *p, [](TranscriptView, const Rational&) {}, 10),
                  BudgetExceeded);
}

TEST_CASE("transcripts are prefix closed and carry the honest law") {
  auto p = punishing_majority<Rational>(3, 3, 2);
  std::map<Transcript, Rational> seen;
  for_each_transcript<Rational>(
      *p, [&](TranscriptView t, const Rational& prob) { seen[Transcript(t.begin(), t.end())] = prob; });
  CHECK(seen == honest_transcripts(*p));
  Rational total = 0;
  for (const auto& [t, prob] : seen) total += prob;
  CHECK(total == 1);
}

}  // TEST_SUITE

TEST_SUITE("protocol-zoo") {

TEST_CASE("majority single turn") {
  auto m1 = majority_single_turn<Rational>(1);
  Transcript one = {1};
  CHECK(m1->output(one) == 1);
  CHECK(expected_outcome<Rational>(*m1, {}) == Rational(1, 2));
  CHECK(expected_outcome<Rational>(*majority_single_turn<Rational>(5), {}) == Rational(1, 2));
  CHECK(round_view<Rational>(*majority_single_turn<Rational>(3), {}).jump_of(1) == Rational(1, 4));
  CHECK_THROWS_AS(majority_single_turn<Rational>(4), InvalidParameters);
}

TEST_CASE("majority many turn") {
  CHECK(expected_outcome<Rational>(*majority_many_turn<Rational>(1, 3), {}) == Rational(1, 2));
  auto m33 = majority_many_turn<Rational>(3, 3);
  CHECK(expected_outcome<Rational>(*m33, {}) == Rational(1, 2));
  CHECK(m33->num_rounds() == 9);
  Transcript three = {0, 0, 0};
  CHECK(m33->next_party(three) == 0);  // round 4
  Transcript four = {0, 0, 0, 0};
  CHECK(m33->next_party(four) == 1);
  CHECK(honest_transcripts(*m33).size() == 512);
  CHECK_THROWS_AS(majority_many_turn<Rational>(2, 3), InvalidParameters);
}

TEST_CASE("biased and") {
  CHECK(expected_outcome<Rational>(*biased_and<Rational>(1), {}) == 0);
  CHECK(expected_outcome<Rational>(*biased_and<Rational>(2), {}) == Rational(1, 4));
  double e100 = expected_outcome<double>(*biased_and<double>(100), {});
  CHECK(std::fabs(e100 - std::exp(-1.0)) <= 0.01);
  CHECK(e100 == doctest::Approx(std::pow(0.99, 100)).epsilon(1e-12));
}

TEST_CASE("punishing majority") {
  // run_len > k: punishment unreachable.
  auto plain = majority_many_turn<Rational>(3, 3);
  auto lenient = punishing_majority<Rational>(3, 3, 4);
  auto a = honest_transcripts(*plain);
  for (const auto& [t, prob] : a) CHECK(lenient->output(t) == plain->output(t));
  auto p12 = punishing_majority<Rational>(1, 2, 2);
  Transcript ones = {1, 1};
  CHECK(p12->output(ones) == 0);
  // Regression value from an independent 512-leaf enumeration.
  CHECK(expected_outcome<Rational>(*punishing_majority<Rational>(3, 3, 2), {}) == Rational(23, 256));
}

TEST_CASE("majority is symmetric under party relabeling") {
  // Permuting who speaks when does not change the outcome law: reversing a
  // transcript keeps the majority.
  auto m5 = majority_single_turn<Rational>(5);
  for (const auto& [t, prob] : honest_transcripts(*m5)) {
    Transcript r(t.rbegin(), t.rend());
    CHECK(m5->output(r) == m5->output(t));
    CHECK(prob == Rational(1, 32));
  }
}

TEST_CASE("make_zoo_protocol covers every generator") {
  for (const auto& g : zoo_generators()) {
    ZooSpec s;
    s.generator = g;
    s.n = 3;
    s.k = 1;
    s.run_len = 2;
    CHECK(make_zoo_protocol<double>(s)->num_parties() == 3);
  }
  ZooSpec bad;
  bad.generator = "nope";
  CHECK_THROWS(make_zoo_protocol<double>(bad));
}

}  // TEST_SUITE

TEST_SUITE("protocol-file") {

TEST_CASE("zoo spec documents") {
  nlohmann::json doc = {{"generator", "majority_many_turn"}, {"params", {{"n", 3}, {"k", 3}}}};
  ZooSpec s = zoo_spec_from_json(doc);
  CHECK(s.k == 3);
  CHECK(zoo_spec_to_json(s) == doc);
  auto p = protocol_from_json<Rational>(doc);
  CHECK(p->num_rounds() == 9);
}

TEST_CASE("zoo spec errors name the field") {
  auto field_of = [](const nlohmann::json& doc) {
    try {
      zoo_spec_from_json(doc);
    } catch (const ConfigError& e) {
      return e.field();
    }
    return std::string("none");
  };
  CHECK(field_of({{"generator", "x"}, {"params", {{"n", 3}}}}) == "protocol.generator");
  CHECK(field_of({{"generator", "majority_single_turn"}, {"params", {{"m", 3}}}}) ==
        "protocol.params.m");
  CHECK(field_of({{"generator", "majority_single_turn"}, {"params", nlohmann::json::object()}}) ==
        "protocol.params.n");
  CHECK(field_of({{"params", {{"n", 3}}}}) == "protocol.generator");
}

TEST_CASE("declarative toy protocol") {
  auto p = load_protocol_file<Rational>(fixture("toy2.json"));
  CHECK(p->name() == "toy2");
  CHECK(p->num_rounds() == 2);
  CHECK(expected_outcome<Rational>(*p, {}) == Rational(3, 4));
  RoundView<Rational> v = round_view<Rational>(*p, {});
  CHECK(v.jump_of(0) == Rational(-1, 4));
  CHECK(v.variance == Rational(1, 16));
}

TEST_CASE("declarative overrides and output rules") {
  nlohmann::json doc = {
      {"format", kProtocolFormat},
      {"parties", 2},
      {"rounds", 2},
      {"schedule",
       {{{"party", 0}, {"dist", {{"0", "1/3"}, {"1", "2/3"}}}},
        {{"party", 0}, {"dist", nlohmann::json::array({{0, 0.5}, {1, 0.5}})}}}},
      {"overrides", {{{"prefix", {1}}, {"party", 1}, {"dist", {{"0", 0.25}, {"1", 0.75}}}}}},
      {"output", {{"rule", "table"}, {"ones", {{1, 1}, {0, 0}}}}}};
  auto p = protocol_from_json<Rational>(doc);
  Transcript one = {1};
  CHECK(p->next_party(one) == 1);
  CHECK(p->next_message_dist(one).prob(1) == Rational(3, 4));
  // 1/3 * 1/2 + 2/3 * 3/4
  CHECK(expected_outcome<Rational>(*p, {}) == Rational(2, 3));
  for (const char* rule : {"majority", "and", "or", "parity", "last"}) {
    doc["output"] = {{"rule", rule}};
    CHECK_NOTHROW(protocol_from_json<double>(doc));
  }
  doc["output"] = {{"rule", "constant"}, {"value", 1}};
  CHECK(expected_outcome<Rational>(*protocol_from_json<Rational>(doc), {}) == 1);
}

TEST_CASE("declarative errors carry field paths") {
  nlohmann::json doc = {{"format", kProtocolFormat},
                        {"parties", 1},
                        {"rounds", 1},
                        {"schedule", {{{"party", 3}, {"dist", {{"0", 1}}}}}},
                        {"output", {{"rule", "or"}}}};
  try {
    protocol_from_json<double>(doc);
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "protocol.schedule[0].party");
  }
  doc["schedule"] = {{{"party", 0}, {"dist", {{"0", "1/3"}}}}};
  CHECK_THROWS_AS(protocol_from_json<double>(doc), ConfigError);
  doc["schedule"] = {{{"party", 0}, {"dist", {{"0", 1}}}}};
  doc["output"] = {{"rule", "median"}};
  CHECK_THROWS_AS(protocol_from_json<double>(doc), ConfigError);
  CHECK_THROWS_AS(load_protocol_file<double>(fixture("missing.json")), ConfigError);
}

}  // TEST_SUITE
