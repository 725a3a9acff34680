#pragma once

#include "coinflip/numeric.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <utility>
#include <vector>

namespace coinflip {

// Messages are opaque tokens; their integer order is the canonical order
// used for tie-breaking and for serialization.
using Message = std::int64_t;

using Rng = std::mt19937_64;

// Uniform draw in [0,1). Kept here so every sampler shares one convention.
inline double uniform01(Rng& rng) {
  return std::generate_canonical<double, 64>(rng);
}

// Exact finite distribution. Entries are sorted by message and only carry
// positive mass, so `entries()` is the support.
template <class T>
class FiniteDistribution {
 public:
  struct Entry {
    Message value;
    T prob;
    bool operator==(const Entry&) const = default;
  };

  FiniteDistribution() = default;

  // Validates nonnegativity, distinctness and total mass (exact for
  // rationals, 1e-12 for doubles). Zero-mass entries are dropped.
  static FiniteDistribution from_entries(std::vector<Entry> entries);
  // Trusts the caller about total mass; still sorts and drops zeros.
  static FiniteDistribution unchecked(std::vector<Entry> entries);

  static FiniteDistribution point(Message m);
  static FiniteDistribution uniform(std::span<const Message> values);
  static FiniteDistribution bernoulli(const T& prob_one);

  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const Entry& operator[](std::size_t i) const { return entries_[i]; }

  std::optional<std::size_t> index_of(Message m) const;
  bool contains(Message m) const { return index_of(m).has_value(); }
  T prob(Message m) const;

  // Inverse-CDF draw; uses double precision for the comparison.
  Message sample(Rng& rng) const;
  std::size_t sample_index(Rng& rng) const;

  template <class U>
  FiniteDistribution<U> cast() const {
    std::vector<typename FiniteDistribution<U>::Entry> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.push_back({e.value, convert<U>(e.prob)});
    return FiniteDistribution<U>::unchecked(std::move(out));
  }

  bool operator==(const FiniteDistribution&) const = default;

 private:
  template <class U>
  static U convert(const T& x) {
    if constexpr (std::is_same_v<U, T>) {
      return x;
    } else if constexpr (std::is_same_v<U, double>) {
      return to_double(x);
    } else {
      return U(x);
    }
  }

  std::vector<Entry> entries_;
};

// The utility f of the Biased construction, evaluated on support values.
template <class T>
using UtilityFn = std::function<T(Message)>;

template <class T>
std::vector<T> evaluate(const FiniteDistribution<T>& x, const UtilityFn<T>& f);

template <class T>
T expectation(const FiniteDistribution<T>& x, std::span<const T> f);

template <class T>
T variance(const FiniteDistribution<T>& x, std::span<const T> f);

// Biased distribution: mass P(x) * (1 + alpha * f(x)). `f` is aligned with
// `x.entries()`. Throws InvalidUtility when f is not centered and InvalidBias
// when some f(x) < -1/alpha or alpha < 0.
template <class T>
FiniteDistribution<T> biased(const FiniteDistribution<T>& x,
                             std::span<const T> f, const T& alpha);

template <class T>
FiniteDistribution<T> biased(const FiniteDistribution<T>& x,
                             const UtilityFn<T>& f, const T& alpha);

// E[f(biased(X, f, alpha))]; equals alpha * Var[f(X)].
template <class T>
T biased_mean_shift(const FiniteDistribution<T>& x, const UtilityFn<T>& f,
                    const T& alpha);

// p * P + (1 - p) * Q on the union of supports.
template <class T>
FiniteDistribution<T> mixture(const FiniteDistribution<T>& p_dist,
                              const FiniteDistribution<T>& q_dist,
                              const T& p);

// Relative entropy in bits. +infinity when supp(P) is not inside supp(Q).
template <class T>
double kl_divergence(const FiniteDistribution<T>& p,
                     const FiniteDistribution<T>& q);

template <class T>
T statistical_distance(const FiniteDistribution<T>& p,
                       const FiniteDistribution<T>& q);

template <class T>
bool pinsker_check(const FiniteDistribution<T>& p,
                   const FiniteDistribution<T>& q);

// p * biased(X, f, alpha) + (1 - p) * X == biased(X, f, p * alpha),
// pointwise (exact for rationals, 1e-12 for doubles).
template <class T>
bool mixture_identity_check(const FiniteDistribution<T>& x,
                            const UtilityFn<T>& f, const T& alpha,
                            const T& p);

// One cell of the joint law of the monotone coupling.
template <class T>
struct CouplingCell {
  Message a;
  Message b;
  T prob;
};

// Exact joint of (A, B) with A ~ X, B ~ biased(X, f, alpha), f(B) >= f(A).
// Cells are sorted by (a, b).
template <class T>
std::vector<CouplingCell<T>> coupling_joint(const FiniteDistribution<T>& x,
                                            const UtilityFn<T>& f,
                                            const T& alpha);

// Draws one pair from the coupling: a ~ X; keep b = a when f(a) >= 0, or
// with probability 1 + alpha f(a); otherwise b ~ X+ (mass proportional to
// P(x) f(x) on f > 0).
std::pair<Message, Message> monotone_coupling(
    const FiniteDistribution<double>& x, std::span<const double> f,
    double alpha, Rng& rng);

std::pair<Message, Message> monotone_coupling(
    const FiniteDistribution<double>& x, const UtilityFn<double>& f,
    double alpha, std::uint64_t seed);

// Given b, draws a from the conditional law A | B = b of the coupling.
Message coupling_preimage(const FiniteDistribution<double>& x,
                          std::span<const double> f, double alpha, Message b,
                          Rng& rng);

}  // namespace coinflip
