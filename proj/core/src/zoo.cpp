#include "coinflip/zoo.hpp"

#include "coinflip/error.hpp"

#include <algorithm>
#include <mutex>

namespace coinflip {

const std::vector<std::string>& zoo_generators() {
  static const std::vector<std::string> names = {
      "majority_single_turn", "majority_many_turn", "biased_and", "punishing_majority",
      "constant"};
  return names;
}

namespace {

template <class T>
FiniteDistribution<T> fair_bit() {
  return FiniteDistribution<T>::bernoulli(T(1) / T(2));
}

// Majority of n*k unbiased bits with round-robin speakers. The cursor keeps
// the running count of ones so conditional expectations are table lookups.
template <class T>
class MajorityProtocol final : public Protocol<T> {
 public:
  MajorityProtocol(std::size_t parties, std::size_t bits_per_party)
      : parties_(parties), bits_(bits_per_party), rounds_(parties * bits_per_party) {}

  std::size_t num_parties() const override { return parties_; }
  std::size_t num_rounds() const override { return rounds_; }
  std::string name() const override {
    return bits_ == 1 ? "majority_single_turn(" + std::to_string(parties_) + ")"
                      : "majority_many_turn(" + std::to_string(parties_) + "," +
                            std::to_string(bits_) + ")";
  }
  std::unique_ptr<Cursor<T>> cursor() const override;

  const FiniteDistribution<T>& bit() const { return bit_; }

  // P[Bin(remaining, 1/2) >= need].
  T tail(std::size_t remaining, long need) const {
    if (need <= 0) return T(1);
    if (static_cast<std::size_t>(need) > remaining) return T(0);
    std::call_once(table_once_, [this] { build_table(); });
    return table_[row_offset(remaining) + static_cast<std::size_t>(need)];
  }

 private:
  static std::size_t row_offset(std::size_t r) { return r * (r + 1) / 2; }

  void build_table() const {
    table_.assign(row_offset(rounds_ + 1), T(0));
    table_[0] = T(1);
    const T half = T(1) / T(2);
    for (std::size_t r = 1; r <= rounds_; ++r) {
      std::size_t off = row_offset(r);
      std::size_t prev = row_offset(r - 1);
      table_[off] = T(1);
      for (std::size_t k = 1; k <= r; ++k) {
        T same = k <= r - 1 ? table_[prev + k] : T(0);
        table_[off + k] = half * same + half * table_[prev + k - 1];
      }
    }
  }

  std::size_t parties_;
  std::size_t bits_;
  std::size_t rounds_;
  FiniteDistribution<T> bit_ = fair_bit<T>();
  mutable std::once_flag table_once_;
  mutable std::vector<T> table_;
};

template <class T>
class MajorityCursor final : public Cursor<T> {
 public:
  explicit MajorityCursor(const MajorityProtocol<T>& p) : Cursor<T>(p.num_rounds()), p_(p) {}

  PartyId party() override {
    return static_cast<PartyId>(this->depth() % p_.num_parties());
  }
  const FiniteDistribution<T>& dist() override { return p_.bit(); }
  int output() override {
    if (!this->at_end()) throw InvalidPrefix("output requires a full transcript");
    return 2 * ones_ > p_.num_rounds() ? 1 : 0;
  }
  T expected_outcome() override {
    std::size_t total = p_.num_rounds();
    long need = static_cast<long>((total + 1) / 2) - static_cast<long>(ones_);
    return p_.tail(total - this->depth(), need);
  }

 protected:
  void on_push(Message m) override { ones_ += m != 0; }
  void on_pop(Message m) override { ones_ -= m != 0; }

 private:
  const MajorityProtocol<T>& p_;
  std::size_t ones_ = 0;
};

template <class T>
std::unique_ptr<Cursor<T>> MajorityProtocol<T>::cursor() const {
  return std::make_unique<MajorityCursor<T>>(*this);
}

bool has_one_run(TranscriptView bits, std::size_t run_len) {
  std::size_t run = 0;
  for (Message b : bits) {
    run = b != 0 ? run + 1 : 0;
    if (run >= run_len) return true;
  }
  return false;
}

}  // namespace

template <class T>
ProtocolPtr<T> majority_single_turn(std::size_t n) {
  if (n == 0 || n % 2 == 0) throw InvalidParameters("majority_single_turn needs odd n");
  return std::make_shared<MajorityProtocol<T>>(n, 1);
}

template <class T>
ProtocolPtr<T> majority_many_turn(std::size_t n, std::size_t k) {
  if (n == 0 || k == 0 || (n * k) % 2 == 0) {
    throw InvalidParameters("majority_many_turn needs an odd number of bits n*k");
  }
  return std::make_shared<MajorityProtocol<T>>(n, k);
}

template <class T>
ProtocolPtr<T> biased_and(std::size_t n) {
  if (n == 0) throw InvalidParameters("biased_and needs n >= 1");
  const T zero_prob = T(1) / T(static_cast<long>(n));
  const T one_prob = T(1) - zero_prob;
  typename RuleProtocol<T>::Rules rules;
  rules.party = [](TranscriptView prefix) { return static_cast<PartyId>(prefix.size()); };
  rules.dist = [one_prob](TranscriptView) { return FiniteDistribution<T>::bernoulli(one_prob); };
  rules.output = [](TranscriptView t) {
    return std::all_of(t.begin(), t.end(), [](Message m) { return m != 0; }) ? 1 : 0;
  };
  rules.closed_form = [one_prob, n](TranscriptView prefix) -> std::optional<T> {
    for (Message m : prefix) {
      if (m == 0) return T(0);
    }
    T acc = 1;
    for (std::size_t i = prefix.size(); i < n; ++i) acc *= one_prob;
    return acc;
  };
  return std::make_shared<RuleProtocol<T>>("biased_and(" + std::to_string(n) + ")", n, n,
                                           std::move(rules));
}

template <class T>
ProtocolPtr<T> punishing_majority(std::size_t n, std::size_t k, std::size_t run_len) {
  if (n == 0 || k == 0) throw InvalidParameters("punishing_majority needs n, k >= 1");
  if (run_len == 0) throw InvalidParameters("punishing_majority needs run_len >= 1");
  typename RuleProtocol<T>::Rules rules;
  rules.party = [n](TranscriptView prefix) { return static_cast<PartyId>(prefix.size() % n); };
  rules.dist = [](TranscriptView) { return fair_bit<T>(); };
  rules.output = [n, run_len](TranscriptView t) {
    long ones = 0;
    long zeros = 0;
    std::vector<Message> bits;
    for (std::size_t p = 0; p < n; ++p) {
      bits.clear();
      for (std::size_t i = p; i < t.size(); i += n) bits.push_back(t[i]);
      if (has_one_run(bits, run_len)) continue;
      for (Message b : bits) (b != 0 ? ones : zeros) += 1;
    }
    return ones > zeros ? 1 : 0;
  };
  return std::make_shared<RuleProtocol<T>>("punishing_majority(" + std::to_string(n) + "," +
                                               std::to_string(k) + "," +
                                               std::to_string(run_len) + ")",
                                           n, n * k, std::move(rules));
}

template <class T>
ProtocolPtr<T> constant_protocol(std::size_t n, int value) {
  if (value != 0 && value != 1) throw InvalidParameters("constant output must be 0 or 1");
  typename RuleProtocol<T>::Rules rules;
  rules.party = [](TranscriptView prefix) { return static_cast<PartyId>(prefix.size()); };
  rules.dist = [](TranscriptView) { return fair_bit<T>(); };
  rules.output = [value](TranscriptView) { return value; };
  rules.closed_form = [value](TranscriptView) -> std::optional<T> { return T(value); };
  return std::make_shared<RuleProtocol<T>>(
      "constant(" + std::to_string(n) + "," + std::to_string(value) + ")", n, n,
      std::move(rules));
}

template <class T>
ProtocolPtr<T> make_zoo_protocol(const ZooSpec& spec) {
  const auto& g = spec.generator;
  if (g == "majority_single_turn") return majority_single_turn<T>(spec.n);
  if (g == "majority_many_turn") return majority_many_turn<T>(spec.n, spec.k);
  if (g == "biased_and") return biased_and<T>(spec.n);
  if (g == "punishing_majority") return punishing_majority<T>(spec.n, spec.k, spec.run_len);
  if (g == "constant") return constant_protocol<T>(spec.n, spec.value);
  throw InvalidParameters("unknown generator '" + g + "'");
}

#define COINFLIP_INSTANTIATE(T)                                                        \
  template ProtocolPtr<T> majority_single_turn<T>(std::size_t);                        \
  template ProtocolPtr<T> majority_many_turn<T>(std::size_t, std::size_t);             \
  template ProtocolPtr<T> biased_and<T>(std::size_t);                                  \
  template ProtocolPtr<T> punishing_majority<T>(std::size_t, std::size_t, std::size_t); \
  template ProtocolPtr<T> constant_protocol<T>(std::size_t, int);                      \
  template ProtocolPtr<T> make_zoo_protocol<T>(const ZooSpec&);

COINFLIP_INSTANTIATE(double)
COINFLIP_INSTANTIATE(Rational)

#undef COINFLIP_INSTANTIATE

}  // namespace coinflip
