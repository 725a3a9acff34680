#include "coinflip/monte_carlo.hpp"

#include "coinflip/error.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace coinflip {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t trial_seed(std::uint64_t base_seed, std::uint64_t index) {
  return splitmix64(base_seed ^ index);
}

namespace {

// Y draws use their own stream so recording a trace never changes the
// transcript of a trial.
constexpr std::uint64_t kCouplingStream = 0x5bd1e9955bd1e995ULL;

std::size_t pick_branch(const std::vector<Branch>& branches, Rng& rng) {
  if (branches.size() == 1) return 0;
  double u = uniform01(rng);
  double acc = 0;
  for (std::size_t i = 0; i + 1 < branches.size(); ++i) {
    acc += branches[i].prob;
    if (u < acc) return i;
  }
  return branches.size() - 1;
}

}  // namespace

ExecutionTrace run_execution(AttackSession& session, const AttackParameters& params,
                             std::uint64_t seed, bool record_rounds) {
  session.reset();
  Rng rng(seed);
  Rng y_rng(seed ^ kCouplingStream);
  ExecutionTrace trace;
  Cursor<double>& cursor = session.cursor();
  std::size_t corrupted_before = session.state().corruption_count;

  while (!cursor.at_end()) {
    const RoundPlan& plan = session.plan();
    const RoundView<double>& view = *plan.view;
    std::size_t bi = pick_branch(plan.branches, rng);
    const Branch& b = plan.branches[bi];
    const FiniteDistribution<double>& law = b.law ? *b.law : view.honest_dist;
    Message m = law[law.sample_index(rng)].value;

    RoundClass cls = classify_round(view, params);
    switch (cls) {
      case RoundClass::NonRobustJump:
        trace.variance.nonrobust += view.variance;
        break;
      case RoundClass::LargeJump:
        trace.variance.large += view.variance;
        break;
      case RoundClass::SmallJump:
        trace.variance.small += view.variance;
        break;
    }
    trace.clamped = trace.clamped || plan.clamped;
    trace.nonrobust_hit = trace.nonrobust_hit || plan.nonrobust;

    if (record_rounds) {
      RoundRecord r;
      r.round = view.round_index;
      r.party = view.party;
      r.cls = cls;
      r.variance = view.variance;
      r.corrupted = b.controlled;
      r.altered = b.law.has_value();
      r.message = m;
      r.s_before = view.expected_before;
      r.x = view.jump_of(m);
      r.s_after = r.s_before + r.x;
      if (!b.law) {
        r.y = r.x;
      } else if (b.alpha > 0) {
        r.coupled = true;
        Message a = coupling_preimage(view.honest_dist, std::span<const double>(view.jumps),
                                      b.alpha, m, y_rng);
        r.y = view.jump_of(a);
      } else {
        r.y = view.jumps[view.honest_dist.sample_index(y_rng)];
      }
      trace.rounds.push_back(r);
    }
    PartyId speaker = view.party;
    std::size_t round = view.round_index;
    session.advance(bi, m);
    std::size_t now = session.state().corruption_count;
    if (now > corrupted_before) trace.corruption_events.emplace_back(round, speaker);
    corrupted_before = now;
  }
  trace.transcript.assign(cursor.prefix().begin(), cursor.prefix().end());
  trace.outcome = cursor.output();
  trace.corruptions = session.state().corruption_count;
  return trace;
}

ExperimentReport monte_carlo(const Adversary& adv, const AttackParameters& params,
                             std::size_t trials, std::uint64_t base_seed, std::size_t workers,
                             bool keep_rows) {
  if (trials == 0) throw InvalidParameters("monte carlo needs at least one trial");
  workers = std::clamp<std::size_t>(workers, 1, trials);

  struct Result {
    int outcome = 0;
    std::size_t corruptions = 0;
    bool clamped = false;
    bool nonrobust = false;
    VarianceSums variance;
  };
  std::vector<Result> results(trials);
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto work = [&](std::size_t worker) {
    try {
      auto session = adv.start();
      for (std::size_t i = worker; i < trials; i += workers) {
        ExecutionTrace t = run_execution(*session, params, trial_seed(base_seed, i));
        results[i] = {t.outcome, t.corruptions, t.clamped, t.nonrobust_hit, t.variance};
      }
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  };

  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  ExperimentReport r;
  r.trials = trials;
  r.base_seed = base_seed;
  double ones = 0;
  double sum_c = 0;
  double sum_c2 = 0;
  for (std::size_t i = 0; i < trials; ++i) {
    const Result& x = results[i];
    ones += x.outcome;
    auto c = static_cast<double>(x.corruptions);
    sum_c += c;
    sum_c2 += c * c;
    r.max_corruptions = std::max(r.max_corruptions, x.corruptions);
    r.corruption_histogram[x.corruptions] += 1;
    r.mean_variance.small += x.variance.small;
    r.mean_variance.large += x.variance.large;
    r.mean_variance.nonrobust += x.variance.nonrobust;
    r.clamped_trials += x.clamped;
    r.nonrobust_trials += x.nonrobust;
    if (keep_rows) {
      r.rows.push_back({i, trial_seed(base_seed, i), x.outcome, x.corruptions, x.clamped,
                        x.nonrobust});
    }
  }
  auto n = static_cast<double>(trials);
  r.outcome_frequency = ones / n;
  r.outcome_stderr = std::sqrt(r.outcome_frequency * (1 - r.outcome_frequency) / n);
  r.mean_corruptions = sum_c / n;
  double var_c = std::max(0.0, sum_c2 / n - r.mean_corruptions * r.mean_corruptions);
  r.corruptions_stderr = std::sqrt(var_c / n);
  r.mean_variance.small /= n;
  r.mean_variance.large /= n;
  r.mean_variance.nonrobust /= n;
  return r;
}

}  // namespace coinflip
