#include "coinflip/normalizer.hpp"

#include "coinflip/error.hpp"

namespace coinflip {

const char* to_string(PseudoParty::Kind k) {
  switch (k) {
    case PseudoParty::Kind::NonRobust:
      return "nonrobust";
    case PseudoParty::Kind::Small:
      return "small";
    case PseudoParty::Kind::Large:
      return "large";
  }
  return "unknown";
}

PartyId PartyMapping::encode(const PseudoParty& p) const {
  if (p.kind == PseudoParty::Kind::NonRobust) return kNonRobust;
  if (p.original < 0 || static_cast<std::size_t>(p.original) >= parties_ || p.index == 0 ||
      p.index > rounds_) {
    throw InvalidParameters("pseudo-party out of range");
  }
  auto slot = static_cast<PartyId>(static_cast<std::size_t>(p.original) * rounds_ + p.index - 1);
  return (p.kind == PseudoParty::Kind::Small ? 1 : 2) + 2 * slot;
}

PseudoParty PartyMapping::decode(PartyId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= total()) {
    throw InvalidParameters("pseudo-party id " + std::to_string(id) + " out of range");
  }
  if (id == kNonRobust) return {};
  auto slot = static_cast<std::size_t>((id - 1) / 2);
  PseudoParty p;
  p.kind = (id - 1) % 2 == 0 ? PseudoParty::Kind::Small : PseudoParty::Kind::Large;
  p.original = static_cast<PartyId>(slot / rounds_);
  p.index = slot % rounds_ + 1;
  return p;
}

std::optional<PartyId> PartyMapping::original(PartyId id) const {
  PseudoParty p = decode(id);
  if (p.kind == PseudoParty::Kind::NonRobust) return std::nullopt;
  return p.original;
}

std::string PartyMapping::label(PartyId id) const {
  PseudoParty p = decode(id);
  if (p.kind == PseudoParty::Kind::NonRobust) return "NonRobust";
  return "P" + std::to_string(p.original) + "." + to_string(p.kind) + std::to_string(p.index);
}

namespace {

template <class T>
class NormalizedCursor final : public Cursor<T> {
 public:
  explicit NormalizedCursor(const NormalizedProtocol<T>& p)
      : Cursor<T>(p.num_rounds()),
        p_(p),
        base_(p.base().cursor()),
        neg_thr_(from_double<T>(p.params().neg_jump_threshold)),
        var_thr_(from_double<T>(p.params().large_var_threshold)),
        large_(p.base().num_parties(), 1),
        small_(p.base().num_parties(), 1),
        acc_(p.base().num_parties(), T(0)) {}

  PartyId party() override { return assignment().pseudo; }
  const FiniteDistribution<T>& dist() override { return base_->dist(); }
  int output() override { return base_->output(); }
  T expected_outcome() override { return base_->expected_outcome(); }

 protected:
  void on_push(Message m) override {
    // The cursor prefix already holds m; the assignment belongs to the
    // round just spoken, one level up.
    std::size_t d = this->depth() - 1;
    const Assignment& a = assignment_at(d);
    Undo u{a.original, 0, 0, T(0)};
    if (a.original >= 0) {
      auto i = static_cast<std::size_t>(a.original);
      u.large = large_[i];
      u.small = small_[i];
      u.acc = acc_[i];
      if (a.kind == PseudoParty::Kind::Large) {
        large_[i] += 1;
      } else {
        acc_[i] += a.variance;
        if (acc_[i] > var_thr_) {
          small_[i] += 1;
          acc_[i] = T(0);
        }
      }
    }
    undo_.push_back(std::move(u));
    base_->push(m);
    if (this->depth() < slots_.size()) slots_[this->depth()].reset();
  }

  void on_pop(Message) override {
    base_->pop();
    Undo u = std::move(undo_.back());
    undo_.pop_back();
    if (u.original >= 0) {
      auto i = static_cast<std::size_t>(u.original);
      large_[i] = u.large;
      small_[i] = u.small;
      acc_[i] = std::move(u.acc);
    }
  }

  void compute_view(RoundView<T>& out) override {
    out = base_->view();
    out.party = party();
  }

 private:
  struct Assignment {
    PartyId pseudo = 0;
    PseudoParty::Kind kind = PseudoParty::Kind::NonRobust;
    PartyId original = -1;
    T variance = 0;
  };
  struct Undo {
    PartyId original;
    std::size_t large;
    std::size_t small;
    T acc;
  };

  const Assignment& assignment() { return assignment_at(this->depth()); }

  const Assignment& assignment_at(std::size_t d) {
    if (slots_.size() <= d) slots_.resize(d + 1);
    auto& slot = slots_[d];
    if (slot) return *slot;
    const RoundView<T>& v = base_->view();
    Assignment a;
    if (!v.jumps.empty() && v.min_jump <= -neg_thr_) {
      a.pseudo = PartyMapping::kNonRobust;
    } else {
      PartyId orig = v.party;
      if (orig < 0 || static_cast<std::size_t>(orig) >= large_.size()) {
        throw InvalidParameters("speaker " + std::to_string(orig) + " outside [0, parties)");
      }
      auto i = static_cast<std::size_t>(orig);
      a.original = orig;
      a.variance = v.variance;
      if (v.variance >= var_thr_) {
        a.kind = PseudoParty::Kind::Large;
        a.pseudo = p_.mapping().encode({a.kind, orig, large_[i]});
      } else {
        a.kind = PseudoParty::Kind::Small;
        a.pseudo = p_.mapping().encode({a.kind, orig, small_[i]});
      }
    }
    slot = std::move(a);
    return *slot;
  }

  const NormalizedProtocol<T>& p_;
  std::unique_ptr<Cursor<T>> base_;
  T neg_thr_;
  T var_thr_;
  std::vector<std::size_t> large_;
  std::vector<std::size_t> small_;
  std::vector<T> acc_;
  std::vector<Undo> undo_;
  std::vector<std::optional<Assignment>> slots_;
};

}  // namespace

template <class T>
NormalizedProtocol<T>::NormalizedProtocol(ProtocolPtr<T> base, AttackParameters params)
    : base_(std::move(base)),
      params_(std::move(params)),
      mapping_(base_->num_rounds(), base_->num_parties()) {}

template <class T>
std::unique_ptr<Cursor<T>> NormalizedProtocol<T>::cursor() const {
  return std::make_unique<NormalizedCursor<T>>(*this);
}

template <class T>
std::shared_ptr<const NormalizedProtocol<T>> normalize(ProtocolPtr<T> p,
                                                       const AttackParameters& params) {
  if (!p) throw InvalidParameters("normalize needs a protocol");
  return std::make_shared<NormalizedProtocol<T>>(std::move(p), params);
}

template <class T>
NormalityReport validate_normal(const Protocol<T>& p, const AttackParameters& params,
                                std::size_t node_budget) {
  NormalityReport report;
  auto& [single_nonrobust, large_once, small_bounded, unfulfilled] = report.conditions;
  const T var_thr = from_double<T>(params.large_var_threshold);
  const T small_cap = T(2) * var_thr;

  auto fail = [](NormalityCondition& c, TranscriptView t, std::string detail) {
    if (!c.passed) return;
    c.passed = false;
    c.witness = Transcript(t.begin(), t.end());
    c.detail = std::move(detail);
  };

  auto cursor = p.cursor();
  auto walk_tree = [&](const std::function<void(const RoundView<T>*)>& enter,
                       const std::function<void(const RoundView<T>&)>& leave) {
    std::size_t nodes = 0;
    std::function<void()> rec = [&]() {
      if (++nodes > node_budget) {
        throw BudgetExceeded("normality check exceeds the node budget of " +
                             std::to_string(node_budget));
      }
      if (cursor->at_end()) {
        enter(nullptr);
        return;
      }
      const RoundView<T>& v = cursor->view();
      enter(&v);
      auto entries = v.honest_dist.entries();
      for (const auto& e : entries) {
        cursor->push(e.value);
        rec();
        cursor->pop();
      }
      leave(cursor->view());
    };
    rec();
  };

  // Pass 1: party roles over the whole tree.
  std::set<PartyId> negative_owners;
  std::set<PartyId> large_owners;
  std::set<PartyId> ordinary_owners;
  walk_tree(
      [&](const RoundView<T>* v) {
        if (!v) return;
        if (has_negative_jump(*v, params)) {
          negative_owners.insert(v->party);
          if (negative_owners.size() > 1) {
            fail(single_nonrobust, cursor->prefix(), "negative-jump rounds have several owners");
          }
          if (ordinary_owners.count(v->party)) {
            fail(single_nonrobust, cursor->prefix(),
                 "party " + std::to_string(v->party) + " owns negative-jump and ordinary rounds");
          }
        } else {
          ordinary_owners.insert(v->party);
          if (negative_owners.count(v->party)) {
            fail(single_nonrobust, cursor->prefix(),
                 "party " + std::to_string(v->party) + " owns negative-jump and ordinary rounds");
          }
          if (v->variance >= var_thr) large_owners.insert(v->party);
        }
      },
      [](const RoundView<T>&) {});

  // Pass 2: per-transcript message counts and variance sums.
  std::map<PartyId, std::pair<std::size_t, T>> stats;
  walk_tree(
      [&](const RoundView<T>* v) {
        if (v) {
          if (negative_owners.count(v->party)) return;
          auto& s = stats[v->party];
          s.first += 1;
          s.second += v->variance;
          return;
        }
        ++report.transcripts_checked;
        std::size_t open = 0;
        for (const auto& [party, s] : stats) {
          if (s.first == 0) continue;
          if (large_owners.count(party)) {
            if (s.first > 1) {
              fail(large_once, cursor->prefix(),
                   "large-jump party " + std::to_string(party) + " sends " +
                       std::to_string(s.first) + " messages");
            }
            continue;
          }
          if (s.second > small_cap) {
            fail(small_bounded, cursor->prefix(),
                 "small-jumps party " + std::to_string(party) + " accumulates variance " +
                     to_string(s.second));
          }
          if (s.second < var_thr) ++open;
        }
        if (open > params.n) {
          fail(unfulfilled, cursor->prefix(),
               std::to_string(open) + " unfulfilled parties exceed n = " +
                   std::to_string(params.n));
        }
      },
      [&](const RoundView<T>& v) {
        if (negative_owners.count(v.party)) return;
        auto& s = stats[v.party];
        s.first -= 1;
        s.second -= v.variance;
      });
  return report;
}

template <class T>
MappingSummary summarize_mapping(const NormalizedProtocol<T>& p, std::size_t node_budget) {
  MappingSummary out;
  out.declared_pseudo_parties = p.mapping().total();
  std::set<PartyId> seen;
  std::size_t nodes = 0;
  auto cursor = p.cursor();
  std::function<void()> walk = [&]() {
    if (cursor->at_end()) return;
    if (++nodes > node_budget) {
      throw BudgetExceeded("mapping summary exceeds the node budget of " +
                           std::to_string(node_budget));
    }
    PartyId id = cursor->party();
    seen.insert(id);
    if (auto orig = p.mapping().original(id)) {
      out.by_original[*orig].insert(id);
    } else {
      out.nonrobust_rounds += 1;
    }
    auto entries = cursor->dist().entries();
    for (const auto& e : entries) {
      cursor->push(e.value);
      walk();
      cursor->pop();
    }
  };
  walk();
  out.reachable_pseudo_parties = seen.size();
  return out;
}

#define COINFLIP_INSTANTIATE(T)                                                             \
  template class NormalizedProtocol<T>;                                                     \
  template std::shared_ptr<const NormalizedProtocol<T>> normalize(ProtocolPtr<T>,           \
                                                                  const AttackParameters&); \
  template NormalityReport validate_normal(const Protocol<T>&, const AttackParameters&,     \
                                           std::size_t);                                    \
  template MappingSummary summarize_mapping(const NormalizedProtocol<T>&, std::size_t);

COINFLIP_INSTANTIATE(double)
COINFLIP_INSTANTIATE(Rational)

#undef COINFLIP_INSTANTIATE

}  // namespace coinflip
