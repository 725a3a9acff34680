#pragma once

// Independent oracles for tests: plain recursion over the public protocol
// interface, with none of the cursor caching or closed forms.

#include "coinflip/params.hpp"
#include "coinflip/protocol.hpp"

#include <functional>
#include <map>
#include <string>

namespace testing {

using coinflip::Message;
using coinflip::Protocol;
using coinflip::Rational;
using coinflip::Transcript;

inline std::string fixture(const std::string& name) {
  return std::string(COINFLIP_FIXTURE_DIR) + "/" + name;
}

// Constants with the formula defaults bypassed; thresholds <= 0 keep their
// formulas.
inline coinflip::AttackParameters make_params(std::size_t n, double neg, double large,
                                              double lambda = 1, double epsilon = 0.5,
                                              double delta = 0.1) {
  coinflip::ParameterOverrides o;
  o.epsilon = epsilon;
  o.lambda = lambda;
  o.delta = delta;
  if (neg > 0) o.neg_jump_threshold = neg;
  if (large > 0) o.large_var_threshold = large;
  return coinflip::AttackParameters::make(n, o);
}

// Honest law of full transcripts.
template <class T>
std::map<Transcript, T> honest_transcripts(const Protocol<T>& p) {
  std::map<Transcript, T> out;
  Transcript t;
  std::function<void(const T&)> rec = [&](const T& prob) {
    if (t.size() == p.num_rounds()) {
      out[t] += prob;
      return;
    }
    auto dist = p.next_message_dist(t);
    for (const auto& e : dist.entries()) {
      t.push_back(e.value);
      rec(T(prob * e.prob));
      t.pop_back();
    }
  };
  rec(T(1));
  return out;
}

// E[output | prefix] by summing over completions.
template <class T>
T brute_expectation(const Protocol<T>& p, Transcript prefix) {
  T total = 0;
  std::function<void(const T&)> rec = [&](const T& prob) {
    if (prefix.size() == p.num_rounds()) {
      total += prob * T(p.output(prefix));
      return;
    }
    auto dist = p.next_message_dist(prefix);
    for (const auto& e : dist.entries()) {
      prefix.push_back(e.value);
      rec(T(prob * e.prob));
      prefix.pop_back();
    }
  };
  rec(T(1));
  return total;
}

// Every reachable proper prefix, in depth-first order.
template <class T>
std::vector<Transcript> reachable_prefixes(const Protocol<T>& p) {
  std::vector<Transcript> out;
  Transcript t;
  std::function<void()> rec = [&]() {
    if (t.size() == p.num_rounds()) return;
    out.push_back(t);
    auto dist = p.next_message_dist(t);
    for (const auto& e : dist.entries()) {
      t.push_back(e.value);
      rec();
      t.pop_back();
    }
  };
  rec();
  return out;
}

}  // namespace testing
