#include "coinflip/adversary.hpp"

#include "coinflip/error.hpp"

#include <cmath>

namespace coinflip {

namespace {

Branch honest_branch(double prob = 1) {
  Branch b;
  b.prob = prob;
  return b;
}

// ------------------------------------------------------------ identity

class IdentitySession final : public AttackSession {
 public:
  explicit IdentitySession(const Protocol<double>& p) : cursor_(p.cursor()) {
    plan_.branches.push_back(honest_branch());
  }

  Cursor<double>& cursor() override { return *cursor_; }
  const RoundPlan& plan() override {
    plan_.view = &cursor_->view();
    plan_.cls = RoundClass::SmallJump;
    return plan_;
  }
  void advance(std::size_t branch, Message m) override {
    if (branch != 0) throw InvalidParameters("identity adversary has a single branch");
    cursor_->push(m);
  }
  void retreat() override { cursor_->pop(); }
  const AdversaryState& state() const override { return state_; }

 private:
  std::unique_ptr<Cursor<double>> cursor_;
  RoundPlan plan_;
  AdversaryState state_;
};

// -------------------------------------------------------------- normal

class NormalSession final : public AttackSession {
 public:
  explicit NormalSession(const NormalAttacker& a)
      : a_(a),
        p_(a.params()),
        cursor_(a.view_protocol().cursor()),
        sqrt_n_(std::sqrt(static_cast<double>(a.params().n))) {
    state_.budget = a.options().budget;
  }

  Cursor<double>& cursor() override { return *cursor_; }

  const RoundPlan& plan() override {
    if (!plan_valid_) build();
    return plan_;
  }

  void advance(std::size_t branch, Message m) override {
    const RoundPlan& pl = plan();
    if (branch >= pl.branches.size()) throw InvalidParameters("branch index out of range");
    const Branch& br = pl.branches[branch];
    const RoundView<double>& v = *pl.view;
    Undo u;
    u.party = v.party;
    u.halted = state_.halted;
    u.aborted = state_.aborted;
    if (pl.nonrobust) {
      if (a_.options().strict) state_.halted = true;
    } else if (!state_.halted && !state_.aborted) {
      auto it = state_.posterior.find(v.party);
      u.had_posterior = it != state_.posterior.end();
      u.old_posterior = u.had_posterior ? it->second : 0.0;
      double q = u.had_posterior ? u.old_posterior : lottery_prob(v, pl.cls, nullptr);
      state_.posterior[v.party] = updated_posterior(v, pl.cls, q, m);
      if (br.corrupt_now) {
        state_.corrupted_parties.insert(v.party);
        state_.corruption_count += 1;
        u.newly_corrupted = true;
      }
      if (br.abort) state_.aborted = true;
      u.touched_posterior = true;
    }
    undo_.push_back(u);
    cursor_->push(m);
    plan_valid_ = false;
  }

  void retreat() override {
    if (undo_.empty()) throw InvalidPrefix("retreat at the root");
    cursor_->pop();
    Undo u = undo_.back();
    undo_.pop_back();
    if (u.touched_posterior) {
      if (u.had_posterior) {
        state_.posterior[u.party] = u.old_posterior;
      } else {
        state_.posterior.erase(u.party);
      }
    }
    if (u.newly_corrupted) {
      state_.corrupted_parties.erase(u.party);
      state_.corruption_count -= 1;
    }
    state_.halted = u.halted;
    state_.aborted = u.aborted;
    plan_valid_ = false;
  }

  const AdversaryState& state() const override { return state_; }

  double lottery_prob(const RoundView<double>& v, RoundClass cls, bool* clamped) const {
    return cls == RoundClass::LargeJump ? p_.large_jump_corrupt_prob(v.variance, clamped)
                                        : p_.small_jump_corrupt_prob(clamped);
  }

  double bias(const RoundView<double>& v, RoundClass cls, double posterior) const {
    if (v.variance <= 0) return 0;
    if (cls == RoundClass::LargeJump) return 1.0 / std::sqrt(v.variance);
    return posterior <= p_.posterior_cap ? sqrt_n_ : 0.0;
  }

 private:
  struct Undo {
    PartyId party = 0;
    bool touched_posterior = false;
    bool had_posterior = false;
    double old_posterior = 0;
    bool newly_corrupted = false;
    bool halted = false;
    bool aborted = false;
  };

  // The attacked law of the speaker mixes Biased_alpha (prob q) with honest
  // play, which is Biased_{q alpha}; Bayes gives q (1 + alpha f) / (1 + q alpha f).
  double updated_posterior(const RoundView<double>& v, RoundClass cls, double q,
                           Message m) const {
    double alpha = bias(v, cls, q);
    if (alpha <= 0) return q;
    double f = v.jump_of(m);
    double denom = 1 + q * alpha * f;
    if (denom <= 0) return q;
    double out = q * (1 + alpha * f) / denom;
    return std::clamp(out, 0.0, 1.0);
  }

  std::optional<FiniteDistribution<double>> attacked_law(const RoundView<double>& v,
                                                         double alpha) const {
    if (alpha <= 0 || v.variance <= 0) return std::nullopt;
    try {
      return biased(v.honest_dist, std::span<const double>(v.jumps), alpha);
    } catch (const InvalidBias& e) {
      throw AttackInfeasible("round " + std::to_string(v.round_index) +
                                 ": biased message law is infeasible (" + e.what() + ")",
                             v.round_index);
    }
  }

  void build() {
    const RoundView<double>& v = cursor_->view();
    plan_.view = &v;
    plan_.cls = classify_round(v, p_);
    plan_.clamped = false;
    plan_.nonrobust = plan_.cls == RoundClass::NonRobustJump;
    plan_.branches.clear();
    plan_valid_ = true;
    if (plan_.nonrobust || state_.halted || state_.aborted) {
      plan_.branches.push_back(honest_branch());
      return;
    }
    auto it = state_.posterior.find(v.party);
    if (it != state_.posterior.end()) {
      Branch b;
      if (state_.corrupted_parties.count(v.party)) {
        b.controlled = true;
        b.alpha = bias(v, plan_.cls, it->second);
        b.law = attacked_law(v, b.alpha);
      }
      plan_.branches.push_back(std::move(b));
      return;
    }
    double q = lottery_prob(v, plan_.cls, &plan_.clamped);
    if (q > 0) {
      Branch win;
      win.prob = q;
      if (state_.budget && state_.corruption_count + 1 > *state_.budget) {
        win.abort = true;
      } else {
        win.corrupt_now = true;
        win.controlled = true;
        win.alpha = bias(v, plan_.cls, q);
        win.law = attacked_law(v, win.alpha);
      }
      plan_.branches.push_back(std::move(win));
    }
    if (q < 1) plan_.branches.push_back(honest_branch(1 - q));
  }

  const NormalAttacker& a_;
  const AttackParameters& p_;
  std::unique_ptr<Cursor<double>> cursor_;
  double sqrt_n_;
  AdversaryState state_;
  RoundPlan plan_;
  bool plan_valid_ = false;
  std::vector<Undo> undo_;
};

// ------------------------------------------------------------ one-shot

class OneShotSession final : public AttackSession {
 public:
  explicit OneShotSession(const OneShotAdversary& a)
      : params_(a.params()), cursor_(a.target()->cursor()) {}

  Cursor<double>& cursor() override { return *cursor_; }

  const RoundPlan& plan() override {
    if (plan_valid_) return plan_;
    const RoundView<double>& v = cursor_->view();
    plan_.view = &v;
    plan_.cls = classify_round(v, params_);
    plan_.branches.clear();
    Branch b;
    if (!fired_) {
      if (auto m = one_shot_target(v, params_)) {
        b.controlled = true;
        b.corrupt_now = !state_.corrupted_parties.count(v.party);
        b.law = FiniteDistribution<double>::point(*m);
      }
    }
    plan_.branches.push_back(std::move(b));
    plan_valid_ = true;
    return plan_;
  }

  void advance(std::size_t branch, Message m) override {
    const RoundPlan& pl = plan();
    if (branch != 0) throw InvalidParameters("one-shot adversary has a single branch");
    const Branch& b = pl.branches[0];
    Undo u{fired_, false, pl.view->party};
    if (b.law) fired_ = true;
    if (b.corrupt_now) {
      state_.corrupted_parties.insert(u.party);
      state_.corruption_count += 1;
      u.newly_corrupted = true;
    }
    undo_.push_back(u);
    cursor_->push(m);
    plan_valid_ = false;
  }

  void retreat() override {
    if (undo_.empty()) throw InvalidPrefix("retreat at the root");
    cursor_->pop();
    Undo u = undo_.back();
    undo_.pop_back();
    fired_ = u.fired;
    if (u.newly_corrupted) {
      state_.corrupted_parties.erase(u.party);
      state_.corruption_count -= 1;
    }
    plan_valid_ = false;
  }

  const AdversaryState& state() const override { return state_; }

 private:
  struct Undo {
    bool fired;
    bool newly_corrupted;
    PartyId party;
  };

  const AttackParameters& params_;
  std::unique_ptr<Cursor<double>> cursor_;
  bool fired_ = false;
  AdversaryState state_;
  RoundPlan plan_;
  bool plan_valid_ = false;
  std::vector<Undo> undo_;
};

// --------------------------------------------------------------- table

const Decision* lookup(const DecisionTable& table, TranscriptView prefix, Transcript& key) {
  key.assign(prefix.begin(), prefix.end());
  auto it = table.find(key);
  return it == table.end() ? nullptr : &it->second;
}

class TableCursor final : public Cursor<double> {
 public:
  explicit TableCursor(const DeterministicAttackedProtocol& p)
      : Cursor<double>(p.num_rounds()), p_(p), base_(p.base().cursor()) {}

  PartyId party() override { return base_->party(); }
  const FiniteDistribution<double>& dist() override {
    const Slot& s = slot();
    return s.forced ? s.point : base_->dist();
  }
  int output() override { return base_->output(); }
  double expected_outcome() override {
    if (at_end()) return base_->output();
    return p_.memoized_expectation(*this);
  }

 protected:
  void on_push(Message m) override {
    base_->push(m);
    if (depth() < slots_.size()) slots_[depth()].valid = false;
  }
  void on_pop(Message) override { base_->pop(); }

 private:
  struct Slot {
    bool valid = false;
    bool forced = false;
    FiniteDistribution<double> point;
  };

  const Slot& slot() {
    if (slots_.size() <= depth()) slots_.resize(depth() + 1);
    Slot& s = slots_[depth()];
    if (!s.valid) {
      const Decision* d = lookup(p_.table(), prefix(), key_);
      s.forced = d && d->forced;
      if (s.forced) {
        if (!base_->dist().contains(*d->forced)) {
          throw InvalidPrefix("forced message outside the honest support");
        }
        s.point = FiniteDistribution<double>::point(*d->forced);
      }
      s.valid = true;
    }
    return s;
  }

  const DeterministicAttackedProtocol& p_;
  std::unique_ptr<Cursor<double>> base_;
  std::vector<Slot> slots_;
  Transcript key_;
};

class TableSession final : public AttackSession {
 public:
  explicit TableSession(const TableAdversary& a) : a_(a), cursor_(a.target()->cursor()) {}

  Cursor<double>& cursor() override { return *cursor_; }

  const RoundPlan& plan() override {
    if (plan_valid_) return plan_;
    const RoundView<double>& v = cursor_->view();
    plan_.view = &v;
    plan_.cls = RoundClass::SmallJump;
    plan_.branches.clear();
    Branch b;
    bool corrupted = state_.corrupted_parties.count(v.party) > 0;
    if (const Decision* d = lookup(a_.table(), cursor_->prefix(), key_)) {
      b.corrupt_now = d->corrupt && !corrupted;
      if (d->forced) {
        b.controlled = true;
        b.law = FiniteDistribution<double>::point(*d->forced);
      }
    }
    plan_.branches.push_back(std::move(b));
    plan_valid_ = true;
    return plan_;
  }

  void advance(std::size_t branch, Message m) override {
    const RoundPlan& pl = plan();
    if (branch != 0) throw InvalidParameters("table adversary has a single branch");
    PartyId who = pl.view->party;
    bool fresh = pl.branches[0].corrupt_now;
    if (fresh) {
      state_.corrupted_parties.insert(who);
      state_.corruption_count += 1;
    }
    undo_.push_back({fresh, who});
    cursor_->push(m);
    plan_valid_ = false;
  }

  void retreat() override {
    if (undo_.empty()) throw InvalidPrefix("retreat at the root");
    cursor_->pop();
    auto [fresh, who] = undo_.back();
    undo_.pop_back();
    if (fresh) {
      state_.corrupted_parties.erase(who);
      state_.corruption_count -= 1;
    }
    plan_valid_ = false;
  }

  const AdversaryState& state() const override { return state_; }

 private:
  const TableAdversary& a_;
  std::unique_ptr<Cursor<double>> cursor_;
  AdversaryState state_;
  RoundPlan plan_;
  bool plan_valid_ = false;
  std::vector<std::pair<bool, PartyId>> undo_;
  Transcript key_;
};

// ------------------------------------------------------------ composed

class ComposedSession final : public AttackSession {
 public:
  ComposedSession(const Adversary& outer, const Adversary& inner)
      : inner_(inner.start()), outer_(outer.start()) {}

  Cursor<double>& cursor() override { return inner_->cursor(); }

  const RoundPlan& plan() override {
    if (plan_valid_) return plan_;
    const RoundPlan& ip = inner_->plan();
    if (ip.branches.size() != 1) {
      throw CompositionContract("inner adversary produced a randomized round");
    }
    const Branch& ib = ip.branches[0];
    const RoundPlan& op = outer_->plan();
    plan_.view = ip.view;
    plan_.cls = ip.cls;
    plan_.clamped = ip.clamped || op.clamped;
    plan_.nonrobust = op.nonrobust;
    plan_.branches.clear();
    for (const Branch& ob : op.branches) {
      Branch b = ob;
      b.corrupt_now = ob.corrupt_now || ib.corrupt_now;
      b.controlled = ob.controlled || ib.controlled;
      if (!b.law && ib.law) {
        b.law = ib.law;
        b.alpha = ib.alpha;
      }
      plan_.branches.push_back(std::move(b));
    }
    plan_valid_ = true;
    return plan_;
  }

  void advance(std::size_t branch, Message m) override {
    inner_->advance(0, m);
    outer_->advance(branch, m);
    plan_valid_ = false;
    state_valid_ = false;
  }

  void retreat() override {
    outer_->retreat();
    inner_->retreat();
    plan_valid_ = false;
    state_valid_ = false;
  }

  const AdversaryState& state() const override {
    if (!state_valid_) {
      const AdversaryState& i = inner_->state();
      const AdversaryState& o = outer_->state();
      state_ = o;
      state_.corrupted_parties.insert(i.corrupted_parties.begin(), i.corrupted_parties.end());
      state_.corruption_count = i.corruption_count + o.corruption_count;
      state_valid_ = true;
    }
    return state_;
  }

 private:
  std::unique_ptr<AttackSession> inner_;
  std::unique_ptr<AttackSession> outer_;
  RoundPlan plan_;
  bool plan_valid_ = false;
  mutable AdversaryState state_;
  mutable bool state_valid_ = false;
};

}  // namespace

// ------------------------------------------------------------ adversaries

IdentityAdversary::IdentityAdversary(ProtocolPtr<double> target) : target_(std::move(target)) {
  if (!target_) throw InvalidParameters("adversary needs a target protocol");
}

std::unique_ptr<AttackSession> IdentityAdversary::start() const {
  return std::make_unique<IdentitySession>(*target_);
}

NormalAttacker::NormalAttacker(ProtocolPtr<double> target, AttackParameters params,
                               NormalAttackerOptions options)
    : target_(std::move(target)), params_(std::move(params)), options_(options) {
  if (!target_) throw InvalidParameters("adversary needs a target protocol");
  view_ = options_.normalize ? ProtocolPtr<double>(normalize(target_, params_)) : target_;
}

std::unique_ptr<AttackSession> NormalAttacker::start() const {
  return std::make_unique<NormalSession>(*this);
}

double NormalAttacker::posterior(TranscriptView prefix, PartyId party) const {
  NormalSession s(*this);
  for (Message m : prefix) {
    if (s.cursor().at_end()) throw InvalidPrefix("prefix longer than the protocol");
    const RoundPlan& pl = s.plan();
    // The posterior is a function of the public transcript; any branch
    // works, the losing one avoids touching the budget.
    s.advance(pl.branches.size() - 1, m);
  }
  const auto& post = s.state().posterior;
  if (auto it = post.find(party); it != post.end()) return it->second;
  if (!s.cursor().at_end() && !s.state().halted) {
    const RoundPlan& pl = s.plan();
    if (pl.view->party == party && !pl.nonrobust) {
      return s.lottery_prob(*pl.view, pl.cls, nullptr);
    }
  }
  throw UndefinedPosterior("party " + std::to_string(party) +
                           " has not reached its corruption lottery");
}

OneShotAdversary::OneShotAdversary(OneShotPtr<double> attacked) : attacked_(std::move(attacked)) {
  if (!attacked_) throw InvalidParameters("one-shot adversary needs an attacked protocol");
}

OneShotAdversary::OneShotAdversary(ProtocolPtr<double> target, const AttackParameters& params)
    : OneShotAdversary(one_shot_attacker<double>(std::move(target), params)) {}

std::unique_ptr<AttackSession> OneShotAdversary::start() const {
  return std::make_unique<OneShotSession>(*this);
}

DeterministicAttackedProtocol::DeterministicAttackedProtocol(
    ProtocolPtr<double> base, std::shared_ptr<const DecisionTable> table)
    : base_(std::move(base)), table_(std::move(table)) {
  set_node_budget(base_->node_budget());
}

std::unique_ptr<Cursor<double>> DeterministicAttackedProtocol::cursor() const {
  return std::make_unique<TableCursor>(*this);
}

TableAdversary::TableAdversary(ProtocolPtr<double> target, DecisionTable table, std::string kind)
    : target_(std::move(target)),
      table_(std::make_shared<const DecisionTable>(std::move(table))),
      kind_(std::move(kind)) {
  if (!target_) throw InvalidParameters("adversary needs a target protocol");
  attacked_ = std::make_shared<DeterministicAttackedProtocol>(target_, table_);
}

std::unique_ptr<AttackSession> TableAdversary::start() const {
  return std::make_unique<TableSession>(*this);
}

ComposedAdversary::ComposedAdversary(AdversaryPtr outer, DeterministicPtr inner)
    : outer_(std::move(outer)), inner_(std::move(inner)) {
  if (!outer_ || !inner_) throw CompositionContract("composition needs two adversaries");
  if (!inner_->is_deterministic()) {
    throw CompositionContract("inner adversary must be deterministic");
  }
  if (outer_->target() != inner_->attacked_protocol()) {
    throw CompositionContract("outer adversary must target the inner adversary's attacked protocol");
  }
}

std::unique_ptr<AttackSession> ComposedAdversary::start() const {
  return std::make_unique<ComposedSession>(*outer_, *inner_);
}

ProtocolPtr<double> ComposedAdversary::attacked_protocol() const {
  auto det = std::dynamic_pointer_cast<const DeterministicAdversary>(outer_);
  if (!det || !det->is_deterministic()) {
    throw CompositionContract("composition with a randomized outer adversary is randomized");
  }
  return det->attacked_protocol();
}

AdversaryPtr compose(AdversaryPtr outer, AdversaryPtr inner) {
  auto det = std::dynamic_pointer_cast<const DeterministicAdversary>(inner);
  if (!det || !det->is_deterministic()) {
    throw CompositionContract("inner adversary must be deterministic");
  }
  return std::make_shared<ComposedAdversary>(std::move(outer), std::move(det));
}

AdversaryPtr one_shot_chain(const OneShotIteration<double>& iteration) {
  AdversaryPtr acc;
  for (const auto& step : iteration.steps) {
    AdversaryPtr b = std::make_shared<OneShotAdversary>(step);
    acc = acc ? compose(b, acc) : b;
  }
  if (!acc) acc = std::make_shared<IdentityAdversary>(iteration.protocols.front());
  return acc;
}

// ------------------------------------------------------- derandomization

namespace {

class Derandomizer {
 public:
  Derandomizer(AttackSession& s, Direction dir, std::size_t budget)
      : s_(s), dir_(dir), budget_(budget) {}

  double value() {
    if (++nodes_ > budget_) {
      throw BudgetExceeded("derandomization exceeds the node budget of " +
                           std::to_string(budget_));
    }
    if (s_.cursor().at_end()) return s_.cursor().output();
    return choose().value;
  }

  void build(DecisionTable& table) {
    if (s_.cursor().at_end()) return;
    Choice c = choose();
    Branch b = s_.plan().branches[c.branch];
    Decision d;
    d.corrupt = b.corrupt_now;
    if (b.controlled) d.forced = c.message;
    table[Transcript(s_.cursor().prefix().begin(), s_.cursor().prefix().end())] = d;
    if (b.controlled) {
      s_.advance(c.branch, c.message);
      build(table);
      s_.retreat();
      return;
    }
    const auto& law = b.law ? *b.law : s_.plan().view->honest_dist;
    auto entries = law.entries();
    for (const auto& e : entries) {
      s_.advance(c.branch, e.value);
      build(table);
      s_.retreat();
    }
  }

 private:
  struct Choice {
    double value = 0;
    std::size_t branch = 0;
    Message message = 0;
  };

  bool better(double a, double b) const {
    return dir_ == Direction::Maximize ? a > b : a < b;
  }

  Choice choose() {
    std::vector<Branch> branches = s_.plan().branches;
    auto honest = s_.plan().view->honest_dist.entries();
    Choice best;
    bool have = false;
    for (std::size_t i = 0; i < branches.size(); ++i) {
      Choice c;
      c.branch = i;
      if (branches[i].controlled) {
        bool first = true;
        for (const auto& e : honest) {
          s_.advance(i, e.value);
          double v = value();
          s_.retreat();
          if (first || better(v, c.value)) {
            c.value = v;
            c.message = e.value;
            first = false;
          }
        }
      } else {
        auto law = branches[i].law ? branches[i].law->entries() : honest;
        for (const auto& e : law) {
          s_.advance(i, e.value);
          c.value += e.prob * value();
          s_.retreat();
        }
      }
      if (!have || better(c.value, best.value)) {
        best = c;
        have = true;
      }
    }
    return best;
  }

  AttackSession& s_;
  Direction dir_;
  std::size_t budget_;
  std::size_t nodes_ = 0;
};

}  // namespace

std::shared_ptr<const TableAdversary> derandomize(const Adversary& adv, Direction direction,
                                                  std::size_t node_budget) {
  auto s = adv.start();
  Derandomizer d(*s, direction, node_budget);
  DecisionTable table;
  d.build(table);
  return std::make_shared<TableAdversary>(adv.target(), std::move(table), "derandomized");
}

double corruption_posterior(ProtocolPtr<double> p, const AttackParameters& params, PartyId party,
                            TranscriptView prefix) {
  NormalAttacker a(std::move(p), params);
  return a.posterior(prefix, party);
}

// ----------------------------------------------------------- full attack

FullAttack full_attack(ProtocolPtr<double> p, const AttackParameters& params,
                       const FullAttackOptions& options) {
  if (!p) throw InvalidParameters("full attack needs a protocol");
  FullAttack out;
  std::size_t rounds = params.max_iterations;
  if (options.budget) rounds = std::min(rounds, *options.budget);

  if (options.monte_carlo) {
    OneShotIteration<double> probe;
    probe.protocols.push_back(p);
    probe.expectations.push_back(p->expected_outcome({}));
    if (probe.expectations.back() < params.epsilon) {
      probe.stop_reason = StopReason::BiasedToZero;
      out.iteration = std::move(probe);
    } else {
      double reach = estimate_nonrobust_probability(*p, params, options.robustness_trials,
                                                    options.seed);
      probe.reach_probabilities.push_back(reach);
      if (reach <= params.delta) {
        probe.stop_reason = StopReason::Robust;
        out.iteration = std::move(probe);
      } else {
        out.iteration = iterate_one_shot<double>(p, params, rounds, options.node_budget);
      }
    }
  } else {
    out.iteration = iterate_one_shot<double>(p, params, rounds, options.node_budget);
  }

  AdversaryPtr chain = one_shot_chain(out.iteration);
  if (out.iteration.stop_reason == StopReason::BiasedToZero) {
    out.direction = 0;
    out.adversary = chain;
    return out;
  }
  out.direction = 1;
  if (out.iteration.expectations.back() >= 1.0) {
    out.trivial = true;
    out.adversary = chain;
    return out;
  }
  NormalAttackerOptions normal;
  normal.normalize = options.normalize;
  normal.strict = options.strict;
  if (options.budget) normal.budget = *options.budget - out.iteration.iterations();
  auto attacker = std::make_shared<NormalAttacker>(out.iteration.final_protocol(), params, normal);
  out.adversary = out.iteration.iterations() == 0 ? AdversaryPtr(attacker) : compose(attacker, chain);
  return out;
}

}  // namespace coinflip
