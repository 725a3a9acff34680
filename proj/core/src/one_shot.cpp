#include "coinflip/one_shot.hpp"

#include "coinflip/error.hpp"

namespace coinflip {

const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::BiasedToZero:
      return "biased-to-zero";
    case StopReason::Robust:
      return "robust";
    case StopReason::Budget:
      return "budget";
  }
  return "unknown";
}

template <class T>
std::optional<Message> one_shot_target(const RoundView<T>& view, const AttackParameters& params) {
  if (!has_negative_jump(view, params)) return std::nullopt;
  // Entries are in message order, so the first minimum wins ties.
  std::size_t best = 0;
  for (std::size_t i = 1; i < view.jumps.size(); ++i) {
    if (view.jumps[i] < view.jumps[best]) best = i;
  }
  return view.honest_dist[best].value;
}

namespace {

constexpr std::size_t kNotFired = static_cast<std::size_t>(-1);

template <class T>
class OneShotCursor final : public Cursor<T> {
 public:
  explicit OneShotCursor(const OneShotProtocol<T>& p)
      : Cursor<T>(p.num_rounds()), p_(p), base_(p.base().cursor()) {}

  PartyId party() override { return base_->party(); }

  const FiniteDistribution<T>& dist() override {
    const Slot& s = slot();
    return s.forced ? s.point : base_->dist();
  }

  int output() override { return base_->output(); }

  T expected_outcome() override {
    if (fired_ != kNotFired || this->at_end()) return base_->expected_outcome();
    return p_.memoized_expectation(*this);
  }

 protected:
  void on_push(Message m) override {
    std::size_t d = this->depth() - 1;
    if (fired_ == kNotFired && slot_at(d).forced) fired_ = d;
    base_->push(m);
    if (this->depth() < slots_.size()) slots_[this->depth()].valid = false;
  }

  void on_pop(Message) override {
    base_->pop();
    if (fired_ == this->depth()) fired_ = kNotFired;
  }

 private:
  struct Slot {
    bool valid = false;
    bool forced = false;
    FiniteDistribution<T> point;
  };

  const Slot& slot() { return slot_at(this->depth()); }

  Slot& slot_at(std::size_t d) {
    if (slots_.size() <= d) slots_.resize(d + 1);
    Slot& s = slots_[d];
    if (!s.valid) {
      s.forced = false;
      if (fired_ == kNotFired) {
        if (auto m = one_shot_target(base_->view(), p_.params())) {
          s.forced = true;
          s.point = FiniteDistribution<T>::point(*m);
        }
      }
      s.valid = true;
    }
    return s;
  }

  const OneShotProtocol<T>& p_;
  std::unique_ptr<Cursor<T>> base_;
  std::size_t fired_ = kNotFired;
  std::vector<Slot> slots_;
};

}  // namespace

template <class T>
OneShotProtocol<T>::OneShotProtocol(ProtocolPtr<T> base, AttackParameters params)
    : base_(std::move(base)), params_(std::move(params)) {
  if (!base_) throw InvalidParameters("one-shot attacker needs a protocol");
  this->set_node_budget(base_->node_budget());
}

template <class T>
std::unique_ptr<Cursor<T>> OneShotProtocol<T>::cursor() const {
  return std::make_unique<OneShotCursor<T>>(*this);
}

template <class T>
OneShotPtr<T> one_shot_attacker(ProtocolPtr<T> p, const AttackParameters& params) {
  return std::make_shared<OneShotProtocol<T>>(std::move(p), params);
}

template <class T>
OneShotIteration<T> iterate_one_shot(ProtocolPtr<T> p, const AttackParameters& params,
                                     std::size_t max_rounds, std::size_t node_budget) {
  OneShotIteration<T> out;
  out.protocols.push_back(std::move(p));
  const T epsilon = from_double<T>(params.epsilon);
  for (std::size_t i = 0;; ++i) {
    const Protocol<T>& current = *out.protocols.back();
    out.expectations.push_back(current.expected_outcome({}));
    if (out.expectations.back() < epsilon) {
      out.stop_reason = StopReason::BiasedToZero;
      break;
    }
    auto robust = is_robust(current, params, node_budget);
    out.reach_probabilities.push_back(robust.nonrobust_probability);
    if (robust.robust) {
      out.stop_reason = StopReason::Robust;
      break;
    }
    if (i == max_rounds) {
      out.stop_reason = StopReason::Budget;
      break;
    }
    auto next = std::make_shared<OneShotProtocol<T>>(out.protocols.back(), params);
    next->set_node_budget(node_budget);
    out.steps.push_back(next);
    out.protocols.push_back(next);
  }
  return out;
}

#define COINFLIP_INSTANTIATE(T)                                                              \
  template std::optional<Message> one_shot_target(const RoundView<T>&,                       \
                                                  const AttackParameters&);                  \
  template class OneShotProtocol<T>;                                                         \
  template OneShotPtr<T> one_shot_attacker(ProtocolPtr<T>, const AttackParameters&);         \
  template OneShotIteration<T> iterate_one_shot(ProtocolPtr<T>, const AttackParameters&,     \
                                                std::size_t, std::size_t);

COINFLIP_INSTANTIATE(double)
COINFLIP_INSTANTIATE(Rational)

#undef COINFLIP_INSTANTIATE

}  // namespace coinflip
