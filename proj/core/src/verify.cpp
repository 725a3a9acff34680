#include "coinflip/verify.hpp"

#include "coinflip/analyzer.hpp"
#include "coinflip/zoo.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace coinflip {

namespace {

long uniform_int(Rng& rng, long lo, long hi) {
  return std::uniform_int_distribution<long>(lo, hi)(rng);
}

UtilityFn<Rational> aligned(const FiniteDistribution<Rational>& x, std::vector<Rational> f) {
  return [&x, f = std::move(f)](Message m) { return f.at(*x.index_of(m)); };
}

VerifyCheck named(std::string name) {
  VerifyCheck c;
  c.name = std::move(name);
  return c;
}

void record(VerifyCheck& c, bool ok, const std::string& detail) {
  ++c.cases;
  if (!ok) {
    if (c.failures == 0) c.detail = detail;
    ++c.failures;
  }
}

std::string describe(const RandomInstance& in) {
  std::string s = "X={";
  for (std::size_t i = 0; i < in.x.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(in.x[i].value) + ":" + to_string(in.x[i].prob) + " f=" + to_string(in.f[i]);
  }
  return s + "} alpha=" + to_string(in.alpha);
}

}  // namespace

FiniteDistribution<Rational> random_distribution(Rng& rng, std::size_t support) {
  std::vector<long> w(support);
  long total = 0;
  for (auto& x : w) {
    x = uniform_int(rng, 1, 12);
    total += x;
  }
  std::vector<FiniteDistribution<Rational>::Entry> entries;
  for (std::size_t i = 0; i < support; ++i) {
    entries.push_back({static_cast<Message>(i), Rational(w[i], total)});
  }
  return FiniteDistribution<Rational>::from_entries(std::move(entries));
}

RandomInstance random_instance(Rng& rng, std::size_t max_support) {
  RandomInstance in;
  auto k = static_cast<std::size_t>(uniform_int(rng, 1, static_cast<long>(max_support)));
  in.x = random_distribution(rng, k);
  std::vector<Rational> g(k);
  for (auto& v : g) v = Rational(uniform_int(rng, -10, 10));
  Rational mean = expectation(in.x, std::span<const Rational>(g));
  Rational most_negative = 0;
  for (std::size_t i = 0; i < k; ++i) {
    in.f.push_back(g[i] - mean);
    if (-in.f.back() > most_negative) most_negative = -in.f.back();
  }
  Rational scale(uniform_int(rng, 1, 8), 8);
  in.alpha = most_negative > 0 ? Rational(scale / (2 * most_negative)) : scale;
  return in;
}

VerifyReport verify_suite(std::uint64_t seed, bool inject_fault) {
  VerifyReport report;
  report.seed = seed;
  Rng rng(seed);

  VerifyCheck shift = named("biased_mean_shift");
  VerifyCheck mix = named("mixture_identity");
  VerifyCheck kl_bound = named("biased_kl_bound");
  for (int i = 0; i < 100; ++i) {
    RandomInstance in = random_instance(rng);
    auto f = aligned(in.x, in.f);
    Rational var = variance(in.x, std::span<const Rational>(in.f));
    Rational measured = biased_mean_shift(in.x, f, in.alpha);
    if (inject_fault && i == 0) measured += Rational(1, 1000);
    record(shift, measured == in.alpha * var, describe(in));
    Rational p(uniform_int(rng, 0, 6), 6);
    record(mix, mixture_identity_check(in.x, f, in.alpha, p), describe(in));
    auto b = biased(in.x, std::span<const Rational>(in.f), in.alpha);
    double kl = kl_divergence(b, in.x);
    double bound = to_double(Rational(2 * in.alpha * in.alpha * var));
    record(kl_bound, kl <= bound, describe(in) + " kl=" + to_string(kl));
  }

  VerifyCheck pinsker = named("pinsker");
  for (int i = 0; i < 100; ++i) {
    auto k = static_cast<std::size_t>(uniform_int(rng, 1, 8));
    auto p = random_distribution(rng, k);
    auto q = random_distribution(rng, k);
    record(pinsker, pinsker_check(p, q), "support " + std::to_string(k));
  }

  VerifyCheck coupling = named("coupling_marginals_dominance");
  for (int i = 0; i < 20; ++i) {
    RandomInstance in = random_instance(rng);
    auto f = aligned(in.x, in.f);
    auto joint = coupling_joint(in.x, f, in.alpha);
    auto target = biased(in.x, std::span<const Rational>(in.f), in.alpha);
    std::map<Message, Rational> ma;
    std::map<Message, Rational> mb;
    bool dominant = true;
    for (const auto& c : joint) {
      ma[c.a] += c.prob;
      mb[c.b] += c.prob;
      if (f(c.b) < f(c.a)) dominant = false;
    }
    bool marginals = true;
    for (const auto& e : in.x.entries()) marginals = marginals && ma[e.value] == e.prob;
    for (const auto& e : target.entries()) marginals = marginals && mb[e.value] == e.prob;
    record(coupling, dominant && marginals, describe(in));
  }

  // Two-round product-structured pairs: joint KL equals KL of the first
  // round plus the expected conditional KL of the second.
  VerifyCheck chain = named("kl_chain_rule");
  for (int i = 0; i < 50; ++i) {
    auto k = static_cast<std::size_t>(uniform_int(rng, 1, 4));
    auto p1 = random_distribution(rng, k);
    auto q1 = random_distribution(rng, k);
    std::vector<FiniteDistribution<Rational>> p2;
    std::vector<FiniteDistribution<Rational>> q2;
    for (std::size_t a = 0; a < k; ++a) {
      p2.push_back(random_distribution(rng, k));
      q2.push_back(random_distribution(rng, k));
    }
    std::vector<FiniteDistribution<Rational>::Entry> pj;
    std::vector<FiniteDistribution<Rational>::Entry> qj;
    double conditional = kl_divergence(p1, q1);
    for (std::size_t a = 0; a < k; ++a) {
      conditional += to_double(p1[a].prob) * kl_divergence(p2[a], q2[a]);
      for (std::size_t b = 0; b < k; ++b) {
        auto code = static_cast<Message>(a * k + b);
        pj.push_back({code, p1[a].prob * p2[a][b].prob});
        qj.push_back({code, q1[a].prob * q2[a][b].prob});
      }
    }
    double joint = kl_divergence(FiniteDistribution<Rational>::from_entries(pj),
                                 FiniteDistribution<Rational>::from_entries(qj));
    record(chain, std::fabs(joint - conditional) <= 1e-9,
           "joint " + to_string(joint) + " vs chain " + to_string(conditional));
  }

  VerifyCheck martingale = named("martingale_diagnostics");
  std::vector<double> grid = {0.6, 0.8, 1.0};
  std::vector<ProtocolPtr<Rational>> zoo = {
      majority_single_turn<Rational>(3), majority_single_turn<Rational>(5),
      majority_many_turn<Rational>(3, 3), biased_and<Rational>(4),
      punishing_majority<Rational>(3, 3, 2), constant_protocol<Rational>(3, 1)};
  for (const auto& p : zoo) {
    auto r = martingale_diagnostics(*p, grid);
    record(martingale, r.passed(), p->name());
  }

  report.checks = {shift, mix, kl_bound, pinsker, coupling, chain, martingale};
  return report;
}

}  // namespace coinflip
