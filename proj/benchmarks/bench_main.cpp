#include <benchmark/benchmark.h>

#include "coinflip/adversary.hpp"
#include "coinflip/analyzer.hpp"
#include "coinflip/distribution.hpp"
#include "coinflip/monte_carlo.hpp"
#include "coinflip/normalizer.hpp"
#include "coinflip/verify.hpp"
#include "coinflip/zoo.hpp"

namespace {

using namespace coinflip;

AttackParameters bench_params(std::size_t n, double lambda) {
  ParameterOverrides o;
  o.epsilon = 0.1;
  o.lambda = lambda;
  o.neg_jump_threshold = 1.0;
  return AttackParameters::make(n, o);
}

// One honest execution of majority(n): cursor pushes plus view lookups.
void BM_HonestExecution(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  auto p = majority_single_turn<double>(n);
  IdentityAdversary adv(p);
  AttackParameters params = bench_params(n, 4);
  auto session = adv.start();
  std::uint64_t seed = 0;
  for (auto _ : state) {
    session->reset();
    benchmark::DoNotOptimize(run_execution(*session, params, seed++).outcome);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

// One attacked execution of the normalized normal attacker.
void BM_AttackedExecution(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  auto p = majority_single_turn<double>(n);
  AttackParameters params = bench_params(n, 4);
  NormalAttackerOptions opt;
  opt.normalize = true;
  NormalAttacker adv(p, params, opt);
  auto session = adv.start();
  std::uint64_t seed = 0;
  for (auto _ : state) {
    session->reset();
    benchmark::DoNotOptimize(run_execution(*session, params, seed++).corruptions);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

// Exact walk of the joint tree for majority(n) under the normal attacker.
void BM_ExactAttack(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  auto p = majority_single_turn<double>(n);
  NormalAttacker adv(p, bench_params(n, 1.5));
  for (auto _ : state) {
    benchmark::DoNotOptimize(exact_attacked_distribution(adv).prob_one);
  }
}

// Exact rational expectation of a many-turn majority.
void BM_RationalExpectation(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    auto p = majority_many_turn<Rational>(3, k);
    benchmark::DoNotOptimize(expected_outcome<Rational>(*p, {}));
  }
}

void BM_BiasedRational(benchmark::State& state) {
  Rng rng(1);
  RandomInstance in = random_instance(rng, 8);
  std::span<const Rational> f(in.f);
  for (auto _ : state) {
    benchmark::DoNotOptimize(biased(in.x, f, in.alpha));
  }
}

void BM_BiasedDouble(benchmark::State& state) {
  Rng rng(1);
  RandomInstance in = random_instance(rng, 8);
  auto x = in.x.cast<double>();
  std::vector<double> f;
  for (const auto& v : in.f) f.push_back(to_double(v));
  double alpha = to_double(in.alpha);
  for (auto _ : state) {
    benchmark::DoNotOptimize(biased(x, std::span<const double>(f), alpha));
  }
}

void BM_ValidateNormal(benchmark::State& state) {
  auto p = majority_many_turn<double>(3, 3);
  AttackParameters params = bench_params(3, 2);
  auto np = normalize(p, params);
  for (auto _ : state) {
    benchmark::DoNotOptimize(validate_normal(*np, params).all_passed());
  }
}

}  // namespace

BENCHMARK(BM_HonestExecution)->Arg(101)->Arg(1001);
BENCHMARK(BM_AttackedExecution)->Arg(101)->Arg(1001);
BENCHMARK(BM_ExactAttack)->Arg(5)->Arg(9);
BENCHMARK(BM_RationalExpectation)->Arg(3)->Arg(5);
BENCHMARK(BM_BiasedRational);
BENCHMARK(BM_BiasedDouble);
BENCHMARK(BM_ValidateNormal);
BENCHMARK_MAIN();
