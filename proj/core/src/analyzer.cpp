#include "coinflip/analyzer.hpp"

#include "coinflip/error.hpp"

#include <cmath>

namespace coinflip {

namespace {

struct PrefixMass {
  double mass = 0;
  std::map<Message, double> next;
  FiniteDistribution<double> honest;
};

class ExactWalk {
 public:
  ExactWalk(AttackSession& s, const AttackParameters& params, std::size_t budget)
      : s_(s), params_(params), budget_(budget) {}

  ExactAnalysis run() {
    rec(1.0, 1.0);
    for (const auto& [t, pa] : out_.attacked) {
      if (pa > 0) out_.kl_direct += pa * std::log2(pa / out_.honest.at(t));
    }
    for (const auto& [prefix, pm] : per_prefix_) {
      for (const auto& [m, mass] : pm.next) {
        if (mass <= 0) continue;
        double cond = mass / pm.mass;
        out_.kl_chain += mass * std::log2(cond / pm.honest.prob(m));
      }
    }
    return std::move(out_);
  }

 private:
  void rec(double prob, double honest_prob) {
    if (++out_.nodes > budget_) {
      throw BudgetExceeded("attacked tree exceeds the node budget of " + std::to_string(budget_) +
                           "; use monte-carlo mode");
    }
    Cursor<double>& c = s_.cursor();
    Transcript key(c.prefix().begin(), c.prefix().end());
    if (c.at_end()) {
      out_.prob_one += prob * c.output();
      out_.expected_corruptions += prob * static_cast<double>(s_.state().corruption_count);
      out_.attacked[key] += prob;
      out_.honest[key] = honest_prob;
      return;
    }
    const RoundPlan& plan = s_.plan();
    const RoundView<double> view = *plan.view;
    std::vector<Branch> branches = plan.branches;

    switch (classify_round(view, params_)) {
      case RoundClass::NonRobustJump:
        out_.variance.nonrobust += prob * view.variance;
        break;
      case RoundClass::LargeJump:
        out_.variance.large += prob * view.variance;
        break;
      case RoundClass::SmallJump:
        out_.variance.small += prob * view.variance;
        break;
    }

    PrefixMass& pm = per_prefix_[key];
    if (pm.mass == 0) pm.honest = view.honest_dist;
    pm.mass += prob;

    for (std::size_t i = 0; i < branches.size(); ++i) {
      const auto& law = branches[i].law ? *branches[i].law : view.honest_dist;
      for (const auto& e : law.entries()) {
        double p = prob * branches[i].prob * e.prob;
        if (p <= 0) continue;
        per_prefix_[key].next[e.value] += p;
        s_.advance(i, e.value);
        rec(p, honest_prob * view.honest_dist.prob(e.value));
        s_.retreat();
      }
    }
  }

  AttackSession& s_;
  const AttackParameters& params_;
  std::size_t budget_;
  ExactAnalysis out_;
  std::map<Transcript, PrefixMass> per_prefix_;
};

}  // namespace

ExactAnalysis analyze_exact(const Adversary& adv, const AttackParameters& params,
                            std::size_t node_budget) {
  auto s = adv.start();
  return ExactWalk(*s, params, node_budget).run();
}

ExactAttackResult exact_attacked_distribution(const Adversary& adv, std::size_t node_budget) {
  // Classification only feeds the variance split, which is dropped here.
  AttackParameters neutral;
  neutral.neg_jump_threshold = 1;
  neutral.large_var_threshold = 1;
  ExactAnalysis a = analyze_exact(adv, neutral, node_budget);
  return {a.prob_one, a.expected_corruptions, std::move(a.attacked)};
}

VarianceReport variance_accounting(const Adversary& adv, const AttackParameters& params,
                                   std::size_t node_budget) {
  VarianceReport r;
  r.sums = analyze_exact(adv, params, node_budget).variance;
  r.bound = 2.0 / params.lambda;
  r.within_bound = r.sums.robust() < r.bound;
  return r;
}

KlReport kl_attacked_vs_honest(const Adversary& adv, const AttackParameters& params,
                               std::size_t node_budget) {
  ExactAnalysis a = analyze_exact(adv, params, node_budget);
  KlReport r;
  r.direct = a.kl_direct;
  r.chain_rule = a.kl_chain;
  r.agree = std::fabs(a.kl_direct - a.kl_chain) <= kKlAgreementTolerance ||
            (std::isinf(a.kl_direct) && std::isinf(a.kl_chain));
  r.bound = 4096.0 * std::pow(params.lambda, 3);
  r.within_bound = r.direct <= r.bound;
  return r;
}

double exact_corruption_posterior(const Adversary& adv, TranscriptView prefix, PartyId party,
                                  std::size_t node_budget) {
  auto s = adv.start();
  if (prefix.size() > s->cursor().rounds()) throw InvalidPrefix("prefix longer than the protocol");
  double total = 0;
  double corrupted = 0;
  std::size_t nodes = 0;
  std::function<void(double)> rec = [&](double prob) {
    if (++nodes > node_budget) {
      throw BudgetExceeded("posterior enumeration exceeds the node budget of " +
                           std::to_string(node_budget));
    }
    std::size_t d = s->cursor().depth();
    if (d == prefix.size()) {
      total += prob;
      if (s->state().corrupted_parties.count(party)) {
        corrupted += prob;
      } else if (!s->cursor().at_end()) {
        // The party's lottery may be due at the next round.
        const RoundPlan& plan = s->plan();
        if (plan.view->party == party) {
          for (const auto& b : plan.branches) {
            if (b.corrupt_now) corrupted += prob * b.prob;
          }
        }
      }
      return;
    }
    const RoundPlan& plan = s->plan();
    std::vector<Branch> branches = plan.branches;
    FiniteDistribution<double> honest = plan.view->honest_dist;
    Message m = prefix[d];
    for (std::size_t i = 0; i < branches.size(); ++i) {
      const auto& law = branches[i].law ? *branches[i].law : honest;
      double p = prob * branches[i].prob * law.prob(m);
      if (p <= 0) continue;
      s->advance(i, m);
      rec(p);
      s->retreat();
    }
  };
  rec(1.0);
  if (total <= 0) throw InvalidPrefix("prefix has zero probability under the attack");
  return corrupted / total;
}

template <class T>
MartingaleReport<T> martingale_diagnostics(const Protocol<T>& p, const std::vector<double>& grid,
                                           std::size_t node_budget) {
  MartingaleReport<T> r;
  for (double c : grid) {
    if (!(c > 0)) throw InvalidParameters("Doob grid values must be positive");
  }
  std::vector<T> cs;
  for (double c : grid) cs.push_back(from_double<T>(c));
  std::vector<T> hit(grid.size(), T(0));
  std::vector<T> hit_sq(grid.size(), T(0));
  T mean_out = 0;
  std::size_t nodes = 0;
  auto cursor = p.cursor();

  std::function<void(const T&, const T&)> walk = [&](const T& prob, const T& running_max) {
    if (++nodes > node_budget) {
      throw BudgetExceeded("martingale diagnostics exceed the node budget of " +
                           std::to_string(node_budget));
    }
    if (cursor->at_end()) {
      T out = T(cursor->output());
      mean_out += prob * out;
      T top = running_max > out ? running_max : out;
      for (std::size_t i = 0; i < cs.size(); ++i) {
        if (top >= cs[i]) hit[i] += prob;
        if (T(top * top) >= cs[i]) hit_sq[i] += prob;
      }
      return;
    }
    ++r.prefixes;
    const RoundView<T>& v = cursor->view();
    T centered = 0;
    for (std::size_t i = 0; i < v.jumps.size(); ++i) centered += v.honest_dist[i].prob * v.jumps[i];
    T err = abs_value(centered);
    if (err > r.max_tower_error) r.max_tower_error = err;
    if (!near_zero(centered, 1e-9)) r.tower = false;
    r.conditional_variance += prob * v.variance;
    T here = v.expected_before;
    T top = running_max > here ? running_max : here;
    auto entries = v.honest_dist.entries();
    for (const auto& e : entries) {
      cursor->push(e.value);
      walk(T(prob * e.prob), top);
      cursor->pop();
    }
  };
  walk(T(1), T(0));

  r.output_variance = mean_out - mean_out * mean_out;
  r.orthogonality = near_equal(r.output_variance, r.conditional_variance, 1e-9);
  // S_l and S_l^2 coincide for a bit-valued output.
  const double slack = is_exact_v<T> ? 0.0 : 1e-12;
  for (std::size_t i = 0; i < cs.size(); ++i) {
    DoobRow<T> row;
    row.c = grid[i];
    row.lhs = hit[i];
    row.rhs = mean_out / cs[i];
    row.passed = row.lhs <= row.rhs + from_double<T>(slack);
    r.doob.push_back(row);
    row.lhs = hit_sq[i];
    row.passed = row.lhs <= row.rhs + from_double<T>(slack);
    r.doob_squared.push_back(row);
  }
  return r;
}

template MartingaleReport<double> martingale_diagnostics(const Protocol<double>&,
                                                         const std::vector<double>&, std::size_t);
template MartingaleReport<Rational> martingale_diagnostics(const Protocol<Rational>&,
                                                           const std::vector<double>&,
                                                           std::size_t);

}  // namespace coinflip
