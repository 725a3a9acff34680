#include "coinflip/distribution.hpp"

#include "coinflip/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace coinflip {

namespace {

constexpr double kMassTolerance = 1e-12;
constexpr double kCenteringTolerance = 1e-9;
// Slack for 1 + alpha f(x) landing a hair below zero in double mode.
constexpr double kBoundarySlack = 1e-9;

template <class T>
void sort_and_check_distinct(std::vector<typename FiniteDistribution<T>::Entry>& entries) {
  std::sort(entries.begin(), entries.end(),
            [](const auto& l, const auto& r) { return l.value < r.value; });
  for (std::size_t i = 1; i < entries.size(); ++i) {
    if (entries[i].value == entries[i - 1].value) {
      throw InvalidDistribution("duplicate support value " +
                                std::to_string(entries[i].value));
    }
  }
}

template <class T>
T clamp_boundary(const T& weight) {
  if constexpr (is_exact_v<T>) {
    return weight;
  } else {
    return weight < 0 && weight > -kBoundarySlack ? T(0) : weight;
  }
}

}  // namespace

template <class T>
FiniteDistribution<T> FiniteDistribution<T>::from_entries(std::vector<Entry> entries) {
  T total = 0;
  for (const auto& e : entries) {
    if (e.prob < 0) throw InvalidDistribution("negative probability");
    total += e.prob;
  }
  if (!near_zero(T(total - 1), kMassTolerance)) {
    throw InvalidDistribution("probabilities sum to " + to_string(total) + ", not 1");
  }
  return unchecked(std::move(entries));
}

template <class T>
FiniteDistribution<T> FiniteDistribution<T>::unchecked(std::vector<Entry> entries) {
  std::erase_if(entries, [](const Entry& e) { return !(e.prob > 0); });
  sort_and_check_distinct<T>(entries);
  FiniteDistribution d;
  d.entries_ = std::move(entries);
  return d;
}

template <class T>
FiniteDistribution<T> FiniteDistribution<T>::point(Message m) {
  FiniteDistribution d;
  d.entries_.push_back({m, T(1)});
  return d;
}

template <class T>
FiniteDistribution<T> FiniteDistribution<T>::uniform(std::span<const Message> values) {
  if (values.empty()) throw InvalidDistribution("uniform over empty set");
  std::vector<Entry> entries;
  T mass = T(1) / T(static_cast<long>(values.size()));
  for (Message v : values) entries.push_back({v, mass});
  return unchecked(std::move(entries));
}

template <class T>
FiniteDistribution<T> FiniteDistribution<T>::bernoulli(const T& prob_one) {
  if (prob_one < 0 || prob_one > 1) throw InvalidDistribution("bernoulli parameter outside [0,1]");
  return unchecked({{0, T(1 - prob_one)}, {1, prob_one}});
}

template <class T>
std::optional<std::size_t> FiniteDistribution<T>::index_of(Message m) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), m,
                             [](const Entry& e, Message v) { return e.value < v; });
  if (it == entries_.end() || it->value != m) return std::nullopt;
  return static_cast<std::size_t>(it - entries_.begin());
}

template <class T>
T FiniteDistribution<T>::prob(Message m) const {
  auto i = index_of(m);
  return i ? entries_[*i].prob : T(0);
}

template <class T>
std::size_t FiniteDistribution<T>::sample_index(Rng& rng) const {
  double u = uniform01(rng);
  double acc = 0;
  for (std::size_t i = 0; i + 1 < entries_.size(); ++i) {
    acc += to_double(entries_[i].prob);
    if (u < acc) return i;
  }
  return entries_.size() - 1;
}

template <class T>
Message FiniteDistribution<T>::sample(Rng& rng) const {
  return entries_[sample_index(rng)].value;
}

template <class T>
std::vector<T> evaluate(const FiniteDistribution<T>& x, const UtilityFn<T>& f) {
  std::vector<T> out;
  out.reserve(x.size());
  for (const auto& e : x.entries()) out.push_back(f(e.value));
  return out;
}

template <class T>
T expectation(const FiniteDistribution<T>& x, std::span<const T> f) {
  T acc = 0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += x[i].prob * f[i];
  return acc;
}

template <class T>
T variance(const FiniteDistribution<T>& x, std::span<const T> f) {
  T mean = expectation(x, f);
  T acc = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    T d = f[i] - mean;
    acc += x[i].prob * d * d;
  }
  return acc;
}

template <class T>
FiniteDistribution<T> biased(const FiniteDistribution<T>& x, std::span<const T> f,
                             const T& alpha) {
  if (f.size() != x.size()) throw InvalidUtility("utility not aligned with support");
  if (alpha < 0) throw InvalidBias("negative bias parameter");
  if (!near_zero(expectation(x, f), kCenteringTolerance)) {
    throw InvalidUtility("utility is not centered: E[f(X)] = " + to_string(expectation(x, f)));
  }
  std::vector<typename FiniteDistribution<T>::Entry> out;
  out.reserve(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    T weight = clamp_boundary(T(1 + alpha * f[i]));
    if (weight < 0) {
      throw InvalidBias("utility value " + to_string(f[i]) + " at message " +
                        std::to_string(x[i].value) + " is below -1/alpha");
    }
    out.push_back({x[i].value, x[i].prob * weight});
  }
  return FiniteDistribution<T>::unchecked(std::move(out));
}

template <class T>
FiniteDistribution<T> biased(const FiniteDistribution<T>& x, const UtilityFn<T>& f,
                             const T& alpha) {
  auto values = evaluate(x, f);
  return biased(x, std::span<const T>(values), alpha);
}

template <class T>
T biased_mean_shift(const FiniteDistribution<T>& x, const UtilityFn<T>& f, const T& alpha) {
  auto shifted = biased(x, f, alpha);
  auto values = evaluate(shifted, f);
  return expectation(shifted, std::span<const T>(values));
}

template <class T>
FiniteDistribution<T> mixture(const FiniteDistribution<T>& p_dist,
                              const FiniteDistribution<T>& q_dist, const T& p) {
  std::map<Message, T> mass;
  for (const auto& e : p_dist.entries()) mass[e.value] += p * e.prob;
  for (const auto& e : q_dist.entries()) mass[e.value] += (1 - p) * e.prob;
  std::vector<typename FiniteDistribution<T>::Entry> out;
  for (auto& [v, m] : mass) out.push_back({v, m});
  return FiniteDistribution<T>::unchecked(std::move(out));
}

template <class T>
double kl_divergence(const FiniteDistribution<T>& p, const FiniteDistribution<T>& q) {
  double acc = 0;
  for (const auto& e : p.entries()) {
    T qm = q.prob(e.value);
    if (!(qm > 0)) return std::numeric_limits<double>::infinity();
    if constexpr (is_exact_v<T>) {
      // Ratio is formed exactly before the logarithm.
      acc += to_double(e.prob) * std::log2(to_double(T(e.prob / qm)));
    } else {
      acc += e.prob * std::log2(e.prob / qm);
    }
  }
  return acc;
}

template <class T>
T statistical_distance(const FiniteDistribution<T>& p, const FiniteDistribution<T>& q) {
  T acc = 0;
  for (const auto& e : p.entries()) acc += abs_value(T(e.prob - q.prob(e.value)));
  for (const auto& e : q.entries()) {
    if (!p.contains(e.value)) acc += e.prob;
  }
  return acc / 2;
}

template <class T>
bool pinsker_check(const FiniteDistribution<T>& p, const FiniteDistribution<T>& q) {
  double sd = to_double(statistical_distance(p, q));
  double kl = kl_divergence(p, q);
  return sd <= std::sqrt(kl / 2) + 1e-15;
}

template <class T>
bool mixture_identity_check(const FiniteDistribution<T>& x, const UtilityFn<T>& f,
                            const T& alpha, const T& p) {
  if (p < 0 || p > 1) throw InvalidParameters("mixture weight outside [0,1]");
  auto lhs = mixture(biased(x, f, alpha), x, p);
  auto rhs = biased(x, f, T(p * alpha));
  for (const auto& e : x.entries()) {
    if (!near_equal(lhs.prob(e.value), rhs.prob(e.value), kMassTolerance)) return false;
  }
  return lhs.size() <= x.size() && rhs.size() <= x.size();
}

template <class T>
std::vector<CouplingCell<T>> coupling_joint(const FiniteDistribution<T>& x,
                                            const UtilityFn<T>& f, const T& alpha) {
  auto fv = evaluate(x, f);
  // Validates centering and the lower bound.
  (void)biased(x, std::span<const T>(fv), alpha);

  T positive_mass = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (fv[i] > 0) positive_mass += x[i].prob * fv[i];
  }
  std::map<std::pair<Message, Message>, T> joint;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto& a = x[i];
    if (!(fv[i] < 0)) {
      joint[{a.value, a.value}] += a.prob;
      continue;
    }
    T stay = clamp_boundary(T(1 + alpha * fv[i]));
    if (stay > 0) joint[{a.value, a.value}] += a.prob * stay;
    T move = 1 - stay;
    if (!(move > 0)) continue;
    if (!(positive_mass > 0)) {
      joint[{a.value, a.value}] += a.prob * move;
      continue;
    }
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (fv[j] > 0) {
        joint[{a.value, x[j].value}] += a.prob * move * x[j].prob * fv[j] / positive_mass;
      }
    }
  }
  std::vector<CouplingCell<T>> out;
  for (auto& [key, mass] : joint) {
    if (mass > 0) out.push_back({key.first, key.second, mass});
  }
  return out;
}

namespace {

std::size_t sample_positive_part(const FiniteDistribution<double>& x,
                                 std::span<const double> f, Rng& rng) {
  double total = 0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (f[j] > 0) total += x[j].prob * f[j];
  }
  double u = uniform01(rng) * total;
  std::size_t last = x.size();
  double acc = 0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (!(f[j] > 0)) continue;
    last = j;
    acc += x[j].prob * f[j];
    if (u < acc) return j;
  }
  return last;
}

bool has_positive(std::span<const double> f) {
  return std::any_of(f.begin(), f.end(), [](double v) { return v > 0; });
}

}  // namespace

std::pair<Message, Message> monotone_coupling(const FiniteDistribution<double>& x,
                                              std::span<const double> f, double alpha,
                                              Rng& rng) {
  std::size_t ia = x.sample_index(rng);
  Message a = x[ia].value;
  if (f[ia] >= 0) return {a, a};
  double stay = std::max(0.0, 1 + alpha * f[ia]);
  if (uniform01(rng) < stay || !has_positive(f)) return {a, a};
  return {a, x[sample_positive_part(x, f, rng)].value};
}

std::pair<Message, Message> monotone_coupling(const FiniteDistribution<double>& x,
                                              const UtilityFn<double>& f, double alpha,
                                              std::uint64_t seed) {
  auto fv = evaluate(x, f);
  (void)biased(x, std::span<const double>(fv), alpha);
  Rng rng(seed);
  return monotone_coupling(x, std::span<const double>(fv), alpha, rng);
}

Message coupling_preimage(const FiniteDistribution<double>& x, std::span<const double> f,
                          double alpha, Message b, Rng& rng) {
  auto ib = x.index_of(b);
  if (!ib) throw InvalidPrefix("message outside the honest support");
  double fb = f[*ib];
  if (!(fb > 0) || alpha == 0) return b;
  // P(A = b | B = b) = P(b) / (P(b) (1 + alpha f(b))).
  if (uniform01(rng) < 1 / (1 + alpha * fb)) return b;
  double total = 0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (f[j] < 0) total += x[j].prob * std::min(1.0, -alpha * f[j]);
  }
  if (!(total > 0)) return b;
  double u = uniform01(rng) * total;
  double acc = 0;
  Message last = b;
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (!(f[j] < 0)) continue;
    last = x[j].value;
    acc += x[j].prob * std::min(1.0, -alpha * f[j]);
    if (u < acc) return last;
  }
  return last;
}

#define COINFLIP_INSTANTIATE(T)                                                              \
  template class FiniteDistribution<T>;                                                      \
  template std::vector<T> evaluate(const FiniteDistribution<T>&, const UtilityFn<T>&);       \
  template T expectation(const FiniteDistribution<T>&, std::span<const T>);                  \
  template T variance(const FiniteDistribution<T>&, std::span<const T>);                     \
  template FiniteDistribution<T> biased(const FiniteDistribution<T>&, std::span<const T>,    \
                                        const T&);                                           \
  template FiniteDistribution<T> biased(const FiniteDistribution<T>&, const UtilityFn<T>&,   \
                                        const T&);                                           \
  template T biased_mean_shift(const FiniteDistribution<T>&, const UtilityFn<T>&, const T&); \
  template FiniteDistribution<T> mixture(const FiniteDistribution<T>&,                       \
                                         const FiniteDistribution<T>&, const T&);            \
  template double kl_divergence(const FiniteDistribution<T>&, const FiniteDistribution<T>&); \
  template T statistical_distance(const FiniteDistribution<T>&,                              \
                                  const FiniteDistribution<T>&);                             \
  template bool pinsker_check(const FiniteDistribution<T>&, const FiniteDistribution<T>&);   \
  template bool mixture_identity_check(const FiniteDistribution<T>&, const UtilityFn<T>&,    \
                                       const T&, const T&);                                  \
  template std::vector<CouplingCell<T>> coupling_joint(const FiniteDistribution<T>&,         \
                                                       const UtilityFn<T>&, const T&);

COINFLIP_INSTANTIATE(double)
COINFLIP_INSTANTIATE(Rational)

#undef COINFLIP_INSTANTIATE

}  // namespace coinflip
