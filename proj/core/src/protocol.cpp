#include "coinflip/protocol.hpp"

#include "coinflip/error.hpp"

#include <algorithm>
#include <mutex>

namespace coinflip {

std::size_t TranscriptHash::operator()(const Transcript& t) const noexcept {
  std::uint64_t h = 1469598103934665603ULL;
  for (Message m : t) {
    h ^= static_cast<std::uint64_t>(m) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    h *= 1099511628211ULL;
  }
  return static_cast<std::size_t>(h ^ t.size());
}

const char* to_string(RoundClass c) {
  switch (c) {
    case RoundClass::NonRobustJump:
      return "nonrobust";
    case RoundClass::LargeJump:
      return "large";
    case RoundClass::SmallJump:
      return "small";
  }
  return "unknown";
}

template <class T>
T RoundView<T>::jump_of(Message m) const {
  auto i = honest_dist.index_of(m);
  if (!i) throw InvalidPrefix("message " + std::to_string(m) + " outside the round support");
  return jumps[*i];
}

// ---------------------------------------------------------------- Cursor

template <class T>
void Cursor<T>::push(Message m) {
  if (at_end()) throw InvalidPrefix("transcript longer than the protocol");
  if (!dist().contains(m)) {
    throw InvalidPrefix("message " + std::to_string(m) + " has zero probability at round " +
                        std::to_string(depth() + 1));
  }
  prefix_.push_back(m);
  std::size_t d = prefix_.size();
  if (d < view_valid_.size()) view_valid_[d] = 0;
  on_push(m);
}

template <class T>
void Cursor<T>::pop() {
  if (prefix_.empty()) throw InvalidPrefix("pop at the root");
  Message m = prefix_.back();
  prefix_.pop_back();
  on_pop(m);
}

template <class T>
const RoundView<T>& Cursor<T>::view() {
  if (at_end()) throw NoNextRound("no round after a full transcript");
  std::size_t d = depth();
  if (views_.size() <= d) {
    views_.resize(d + 1);
    view_valid_.resize(d + 1, 0);
  }
  if (!views_[d]) views_[d] = std::make_unique<RoundView<T>>();
  if (!view_valid_[d]) {
    RoundView<T>& out = *views_[d];
    compute_view(out);
    view_valid_[d] = 1;
  }
  return *views_[d];
}

template <class T>
void Cursor<T>::compute_view(RoundView<T>& out) {
  out.round_index = depth() + 1;
  out.party = party();
  out.honest_dist = dist();
  out.expected_before = expected_outcome();
  const std::size_t k = out.honest_dist.size();
  out.jumps.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    push(out.honest_dist[i].value);
    out.jumps[i] = expected_outcome() - out.expected_before;
    pop();
  }
  out.variance = variance(out.honest_dist, std::span<const T>(out.jumps));
  out.min_jump = k == 0 ? T(0) : *std::min_element(out.jumps.begin(), out.jumps.end());
}

// -------------------------------------------------------------- Protocol

template <class T>
std::unique_ptr<Cursor<T>> Protocol<T>::cursor_at(TranscriptView prefix) const {
  if (prefix.size() > num_rounds()) throw InvalidPrefix("prefix longer than the protocol");
  auto c = cursor();
  for (Message m : prefix) c->push(m);
  return c;
}

template <class T>
PartyId Protocol<T>::next_party(TranscriptView prefix) const {
  auto c = cursor_at(prefix);
  if (c->at_end()) throw NoNextRound("no next party after a full transcript");
  return c->party();
}

template <class T>
FiniteDistribution<T> Protocol<T>::next_message_dist(TranscriptView prefix) const {
  auto c = cursor_at(prefix);
  if (c->at_end()) throw NoNextRound("no next message after a full transcript");
  return c->dist();
}

template <class T>
int Protocol<T>::output(TranscriptView full) const {
  auto c = cursor_at(full);
  if (!c->at_end()) throw InvalidPrefix("output requires a full transcript");
  return c->output();
}

template <class T>
T Protocol<T>::expected_outcome(TranscriptView prefix) const {
  return cursor_at(prefix)->expected_outcome();
}

template <class T>
T Protocol<T>::memoized_expectation(Cursor<T>& at) const {
  if (at.at_end()) return T(at.output());
  Transcript key(at.prefix().begin(), at.prefix().end());
  {
    std::shared_lock lock(memo_mutex_);
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
  }
  auto entries = at.dist().entries();
  T acc = 0;
  for (const auto& e : entries) {
    at.push(e.value);
    acc += e.prob * at.expected_outcome();
    at.pop();
  }
  std::unique_lock lock(memo_mutex_);
  if (memo_.size() >= node_budget_) {
    throw BudgetExceeded("protocol tree of '" + name() + "' exceeds the node budget of " +
                         std::to_string(node_budget_));
  }
  memo_.emplace(std::move(key), acc);
  return acc;
}

// ---------------------------------------------------------- RuleProtocol

namespace {

template <class T>
class RuleCursor final : public Cursor<T> {
 public:
  explicit RuleCursor(const RuleProtocol<T>& p) : Cursor<T>(p.num_rounds()), p_(p) {}

  PartyId party() override {
    auto& slot = slot_at();
    if (!slot.party) slot.party = p_.rules().party(this->prefix());
    return *slot.party;
  }

  const FiniteDistribution<T>& dist() override {
    auto& slot = slot_at();
    if (!slot.dist) {
      slot.dist = std::make_unique<FiniteDistribution<T>>(p_.rules().dist(this->prefix()));
      if (slot.dist->empty()) {
        throw InvalidDistribution("empty message distribution at round " +
                                  std::to_string(this->depth() + 1));
      }
    }
    return *slot.dist;
  }

  int output() override {
    if (!this->at_end()) throw InvalidPrefix("output requires a full transcript");
    int out = p_.rules().output(this->prefix());
    if (out != 0 && out != 1) throw InvalidPrefix("output function returned a non-bit");
    return out;
  }

  T expected_outcome() override {
    if (p_.rules().closed_form) {
      if (auto v = p_.rules().closed_form(this->prefix())) return *v;
    }
    return p_.memoized_expectation(*this);
  }

 protected:
  void on_push(Message) override {
    std::size_t d = this->depth();
    if (d < slots_.size()) slots_[d] = Slot{};
  }
  void on_pop(Message) override {}

 private:
  struct Slot {
    std::optional<PartyId> party;
    std::unique_ptr<FiniteDistribution<T>> dist;
  };

  Slot& slot_at() {
    std::size_t d = this->depth();
    if (slots_.size() <= d) slots_.resize(d + 1);
    return slots_[d];
  }

  const RuleProtocol<T>& p_;
  std::vector<Slot> slots_;
};

}  // namespace

template <class T>
RuleProtocol<T>::RuleProtocol(std::string name, std::size_t parties, std::size_t rounds,
                              Rules rules)
    : name_(std::move(name)), parties_(parties), rounds_(rounds), rules_(std::move(rules)) {
  if (!rules_.party || !rules_.dist || !rules_.output) {
    throw InvalidParameters("protocol rules must define party, dist and output");
  }
}

template <class T>
std::unique_ptr<Cursor<T>> RuleProtocol<T>::cursor() const {
  return std::make_unique<RuleCursor<T>>(*this);
}

// ------------------------------------------------------------ free ops

template <class T>
T expected_outcome(const Protocol<T>& p, TranscriptView prefix) {
  return p.expected_outcome(prefix);
}

template <class T>
RoundView<T> round_view(const Protocol<T>& p, TranscriptView prefix) {
  auto c = p.cursor_at(prefix);
  if (c->at_end()) throw NoNextRound("no round after a full transcript");
  return c->view();
}

template <class T>
bool has_negative_jump(const RoundView<T>& view, const AttackParameters& params) {
  return !view.jumps.empty() && view.min_jump <= -from_double<T>(params.neg_jump_threshold);
}

template <class T>
RoundClass classify_round(const RoundView<T>& view, const AttackParameters& params) {
  if (has_negative_jump(view, params)) return RoundClass::NonRobustJump;
  if (view.variance >= from_double<T>(params.large_var_threshold)) return RoundClass::LargeJump;
  return RoundClass::SmallJump;
}

template <class T>
RobustnessResult<T> is_robust(const Protocol<T>& p, const AttackParameters& params,
                              std::size_t node_budget) {
  RobustnessResult<T> result;
  std::size_t nodes = 0;
  auto cursor = p.cursor();
  std::function<void(const T&)> walk = [&](const T& prob) {
    if (cursor->at_end()) return;
    if (++nodes > node_budget) {
      throw BudgetExceeded("robustness check exceeds the node budget of " +
                           std::to_string(node_budget));
    }
    const RoundView<T>& v = cursor->view();
    if (has_negative_jump(v, params)) {
      result.nonrobust_probability += prob;
      return;
    }
    auto entries = v.honest_dist.entries();
    for (const auto& e : entries) {
      cursor->push(e.value);
      walk(T(prob * e.prob));
      cursor->pop();
    }
  };
  walk(T(1));
  result.robust = result.nonrobust_probability <= from_double<T>(params.delta);
  return result;
}

double estimate_nonrobust_probability(const Protocol<double>& p, const AttackParameters& params,
                                      std::size_t trials, std::uint64_t seed) {
  if (trials == 0) throw InvalidParameters("at least one trial is required");
  Rng rng(seed);
  std::size_t hits = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    auto cursor = p.cursor();
    while (!cursor->at_end()) {
      const auto& v = cursor->view();
      if (has_negative_jump(v, params)) {
        ++hits;
        break;
      }
      cursor->push(v.honest_dist.sample(rng));
    }
  }
  return static_cast<double>(hits) / static_cast<double>(trials);
}

template <class T>
void for_each_transcript(const Protocol<T>& p,
                         const std::function<void(TranscriptView, const T&)>& visit,
                         std::size_t node_budget) {
  std::size_t nodes = 0;
  auto cursor = p.cursor();
  std::function<void(const T&)> walk = [&](const T& prob) {
    if (++nodes > node_budget) {
      throw BudgetExceeded("transcript enumeration exceeds the node budget of " +
                           std::to_string(node_budget));
    }
    if (cursor->at_end()) {
      visit(cursor->prefix(), prob);
      return;
    }
    auto entries = cursor->dist().entries();
    for (const auto& e : entries) {
      cursor->push(e.value);
      walk(T(prob * e.prob));
      cursor->pop();
    }
  };
  walk(T(1));
}

#define COINFLIP_INSTANTIATE(T)                                                                \
  template struct RoundView<T>;                                                                \
  template class Cursor<T>;                                                                    \
  template class Protocol<T>;                                                                  \
  template class RuleProtocol<T>;                                                              \
  template T expected_outcome(const Protocol<T>&, TranscriptView);                             \
  template RoundView<T> round_view(const Protocol<T>&, TranscriptView);                        \
  template bool has_negative_jump(const RoundView<T>&, const AttackParameters&);               \
  template RoundClass classify_round(const RoundView<T>&, const AttackParameters&);            \
  template RobustnessResult<T> is_robust(const Protocol<T>&, const AttackParameters&,          \
                                         std::size_t);                                         \
  template void for_each_transcript(const Protocol<T>&,                                        \
                                    const std::function<void(TranscriptView, const T&)>&,      \
                                    std::size_t);

COINFLIP_INSTANTIATE(double)
COINFLIP_INSTANTIATE(Rational)

#undef COINFLIP_INSTANTIATE

}  // namespace coinflip
