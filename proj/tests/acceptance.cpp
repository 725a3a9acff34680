// Acceptance suite: one PASS/FAIL line per criterion; exits nonzero when
// any criterion fails.

#include "coinflip/analyzer.hpp"
#include "coinflip/distribution.hpp"
#include "coinflip/experiment.hpp"
#include "coinflip/monte_carlo.hpp"
#include "coinflip/normalizer.hpp"
#include "coinflip/one_shot.hpp"
#include "coinflip/protocol_file.hpp"
#include "coinflip/verify.hpp"
#include "coinflip/zoo.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

using namespace coinflip;
using nlohmann::json;

namespace {

std::string fixture(const std::string& name) {
  return std::string(COINFLIP_FIXTURE_DIR) + "/" + name;
}

AttackParameters params_for(std::size_t n, double neg, double large, double lambda = 1,
                            double epsilon = 0.5, double delta = 0.1) {
  ParameterOverrides o;
  o.epsilon = epsilon;
  o.lambda = lambda;
  o.delta = delta;
  if (neg > 0) o.neg_jump_threshold = neg;
  if (large > 0) o.large_var_threshold = large;
  return AttackParameters::make(n, o);
}

template <class T>
std::vector<ProtocolPtr<T>> enumerable_zoo() {
  return {majority_single_turn<T>(1),      majority_single_turn<T>(3),
          majority_single_turn<T>(5),      majority_single_turn<T>(7),
          majority_many_turn<T>(1, 5),     majority_many_turn<T>(3, 3),
          biased_and<T>(3),                biased_and<T>(5),
          punishing_majority<T>(3, 3, 2),  constant_protocol<T>(3, 0),
          constant_protocol<T>(3, 1),      load_protocol_file<T>(fixture("toy2.json")),
          load_protocol_file<T>(fixture("two_large_jumps.json"))};
}

// Honest law of full transcripts by plain recursion.
template <class T>
std::map<Transcript, T> transcript_law(const Protocol<T>& p) {
  std::map<Transcript, T> out;
  Transcript t;
  std::function<void(const T&)> rec = [&](const T& prob) {
    if (t.size() == p.num_rounds()) {
      out[t] += prob;
      return;
    }
    auto dist = p.next_message_dist(t);
    for (const auto& e : dist.entries()) {
      t.push_back(e.value);
      rec(T(prob * e.prob));
      t.pop_back();
    }
  };
  rec(T(1));
  return out;
}

struct Outcome {
  bool passed = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && passed) detail = what;
    passed = passed && ok;
  }
};

std::string num(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

int failures = 0;

void criterion(int id, const std::string& title, double limit_seconds,
               const std::function<Outcome()>& body) {
  auto start = std::chrono::steady_clock::now();
  Outcome r;
  try {
    r = body();
  } catch (const std::exception& e) {
    r.passed = false;
    r.detail = std::string("exception: ") + e.what();
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (limit_seconds > 0 && secs > limit_seconds) {
    r.require(false, "runtime " + num(secs) + " s over the " + num(limit_seconds) + " s limit");
  }
  if (!r.passed) ++failures;
  std::printf("%s criterion %2d: %s [%.2f s] %s\n", r.passed ? "PASS" : "FAIL", id, title.c_str(),
              secs, r.detail.c_str());
  std::fflush(stdout);
}

Outcome biased_identities() {
  Outcome out;
  Rng rng(1001);
  std::size_t checked = 0;
  for (int i = 0; i < 100; ++i) {
    RandomInstance in = random_instance(rng, 8);
    out.require(in.x.size() <= 8, "support larger than 8");
    auto f = UtilityFn<Rational>([&](Message m) { return in.f[*in.x.index_of(m)]; });
    Rational var = 0;
    for (std::size_t j = 0; j < in.x.size(); ++j) var += in.x[j].prob * in.f[j] * in.f[j];
    out.require(biased_mean_shift(in.x, f, in.alpha) == in.alpha * var,
                "mean shift differs on instance " + std::to_string(i));
    for (Rational p : {Rational(0), Rational(1, 3), Rational(1, 2), Rational(7, 8), Rational(1)}) {
      out.require(mixture_identity_check(in.x, f, in.alpha, p),
                  "mixture identity fails on instance " + std::to_string(i));
      ++checked;
    }
  }
  out.detail = "100 instances, " + std::to_string(checked) + " mixture points" +
               (out.passed ? "" : "; " + out.detail);
  return out;
}

Outcome biased_kl_bound() {
  Outcome out;
  Rng rng(1001);
  double worst = 0;
  for (int i = 0; i < 100; ++i) {
    RandomInstance in = random_instance(rng, 8);
    bool in_regime = true;
    for (const auto& v : in.f) in_regime = in_regime && in.alpha * v >= Rational(-1, 2);
    out.require(in_regime, "instance outside f >= -1/(2 alpha)");
    Rational var = 0;
    for (std::size_t j = 0; j < in.x.size(); ++j) var += in.x[j].prob * in.f[j] * in.f[j];
    auto b = biased(in.x, std::span<const Rational>(in.f), in.alpha);
    double kl = kl_divergence(b, in.x);
    double bound = to_double(Rational(2 * in.alpha * in.alpha * var));
    out.require(kl <= bound, "KL above bound on instance " + std::to_string(i));
    if (bound > 0) worst = std::max(worst, kl / bound);
  }
  out.detail = "max KL/bound " + num(worst) + (out.passed ? "" : "; " + out.detail);
  return out;
}

Outcome coupling() {
  Outcome out;
  Rng rng(77);
  double float_error = 0;
  for (int i = 0; i < 20; ++i) {
    RandomInstance in = random_instance(rng, 8);
    auto f = UtilityFn<Rational>([&](Message m) { return in.f[*in.x.index_of(m)]; });
    auto target = biased(in.x, std::span<const Rational>(in.f), in.alpha);
    std::map<Message, Rational> ma;
    std::map<Message, Rational> mb;
    for (const auto& c : coupling_joint(in.x, f, in.alpha)) {
      if (c.prob > 0) out.require(f(c.b) >= f(c.a), "f(b) < f(a) in rational joint");
      ma[c.a] += c.prob;
      mb[c.b] += c.prob;
    }
    for (const auto& e : in.x.entries()) out.require(ma[e.value] == e.prob, "rational a-marginal");
    for (const auto& e : target.entries()) out.require(mb[e.value] == e.prob, "rational b-marginal");

    auto xd = in.x.cast<double>();
    std::vector<double> fd;
    for (const auto& v : in.f) fd.push_back(to_double(v));
    auto fdn = UtilityFn<double>([&](Message m) { return fd[*xd.index_of(m)]; });
    double alpha = to_double(in.alpha);
    auto td = biased(xd, std::span<const double>(fd), alpha);
    std::map<Message, double> da;
    std::map<Message, double> db;
    for (const auto& c : coupling_joint(xd, fdn, alpha)) {
      if (c.prob > 0) out.require(fdn(c.b) >= fdn(c.a), "f(b) < f(a) in float joint");
      da[c.a] += c.prob;
      db[c.b] += c.prob;
    }
    for (const auto& e : xd.entries()) float_error = std::max(float_error, std::fabs(da[e.value] - e.prob));
    for (const auto& e : td.entries()) float_error = std::max(float_error, std::fabs(db[e.value] - e.prob));
  }
  out.require(float_error <= 1e-12, "float marginal error " + num(float_error));
  out.detail = "20 instances, float marginal error " + num(float_error) +
               (out.passed ? "" : "; " + out.detail);
  return out;
}

Outcome one_shot_guarantee() {
  Outcome out;
  std::size_t cases = 0;
  for (const auto& p : enumerable_zoo<Rational>()) {
    for (double thr : {0.05, 0.1, 0.2, 0.3, 0.6}) {
      AttackParameters params = params_for(p->num_parties(), thr, 0.01);
      auto b = one_shot_attacker(p, params);
      Rational reach = is_robust(*p, params).nonrobust_probability;
      Rational before = expected_outcome<Rational>(*p, {});
      Rational after = expected_outcome<Rational>(*b, {});
      out.require(after <= before - Rational(thr) * reach, "guarantee fails on " + p->name());
      ++cases;
    }
  }
  auto m3 = majority_single_turn<Rational>(3);
  Rational e = expected_outcome<Rational>(*one_shot_attacker(m3, params_for(3, 0.1, 0.01)), {});
  out.require(e == Rational(1, 4), "majority(3) attacked expectation is " + e.str());
  out.detail = std::to_string(cases) + " protocol/threshold cases; majority(3) -> " + e.str() +
               (out.passed ? "" : "; " + out.detail);
  return out;
}

Outcome composition() {
  Outcome out;
  std::string values;
  auto record = [&](const std::string& name, double lhs, double rhs) {
    out.require(std::fabs(lhs - rhs) <= 1e-9, name + " differs");
    values += name + " " + num(lhs) + "=" + num(rhs) + "; ";
  };
  {
    auto p = majority_single_turn<double>(3);
    NormalAttackerOptions one;
    one.budget = 1;
    auto a = derandomize(NormalAttacker(p, params_for(3, 0.6, 0.01), one), Direction::Maximize);
    auto b = std::make_shared<OneShotAdversary>(a->attacked_protocol(), params_for(3, 0.1, 0.01));
    record("derand+one-shot", exact_attacked_distribution(*compose(b, a)).prob_one,
           expected_outcome<double>(*b->attacked_protocol(), {}));
  }
  {
    auto p = majority_single_turn<double>(5);
    auto a = std::make_shared<OneShotAdversary>(p, params_for(5, 0.1, 0.01));
    NormalAttackerOptions opt;
    opt.normalize = true;
    auto b = std::make_shared<NormalAttacker>(a->attacked_protocol(),
                                              params_for(5, 0.9, 0.01, 2), opt);
    record("one-shot+normal", exact_attacked_distribution(*compose(b, a)).prob_one,
           exact_attacked_distribution(*b).prob_one);
  }
  {
    auto it = iterate_one_shot(majority_many_turn<double>(3, 3), params_for(3, 0.2, 0.01, 1, 0.05), 3);
    auto b = std::make_shared<NormalAttacker>(it.final_protocol(), params_for(3, 0.9, 0.01));
    record("chain+normal", exact_attacked_distribution(*compose(b, one_shot_chain(it))).prob_one,
           exact_attacked_distribution(*b).prob_one);
  }
  out.detail = values + (out.passed ? "" : out.detail);
  return out;
}

Outcome normalization() {
  Outcome out;
  std::size_t cases = 0;
  for (const auto& p : enumerable_zoo<Rational>()) {
    const std::size_t n = p->num_parties();
    for (const auto& params :
         {params_for(n, 0.01, 0.01), params_for(n, 0.6, 0.01), params_for(n, 0.3, 0.05),
          params_for(n, 1.0, 0.2), params_for(n, 0, 0, 2)}) {
      auto np = normalize(p, params);
      NormalityReport r = validate_normal(*np, params);
      out.require(r.all_passed(), "validate_normal fails on normalized " + p->name());
      out.require(transcript_law(*np) == transcript_law(*p), "transcript law changed on " + p->name());
      for (const auto& [t, prob] : transcript_law(*p)) {
        out.require(np->output(t) == p->output(t), "output changed on " + p->name());
      }
      ++cases;
    }
  }
  out.detail = std::to_string(cases) + " protocol/parameter cases" + (out.passed ? "" : "; " + out.detail);
  return out;
}

Outcome derandomization() {
  Outcome out;
  auto p = majority_single_turn<double>(3);
  NormalAttacker adv(p, params_for(3, 0.6, 0.01));
  double randomized = exact_attacked_distribution(adv).prob_one;
  double derandomized = exact_attacked_distribution(*derandomize(adv, Direction::Maximize)).prob_one;
  out.require(derandomized >= randomized, "derandomized below randomized");
  out.detail = "randomized " + num(randomized) + ", derandomized " + num(derandomized);
  return out;
}

Outcome mc_agreement() {
  Outcome out;
  std::string values;
  auto check = [&](const std::string& name, ProtocolPtr<double> p, const AttackParameters& params) {
    NormalAttacker adv(p, params);
    ExactAttackResult exact = exact_attacked_distribution(adv);
    ExperimentReport mc = monte_carlo(adv, params, 1'000'000, 8, 1, false);
    double z_out = std::fabs(mc.outcome_frequency - exact.prob_one) / mc.outcome_stderr;
    double z_cor = std::fabs(mc.mean_corruptions - exact.expected_corruptions) / mc.corruptions_stderr;
    out.require(z_out <= 3, name + " outcome off by " + num(z_out) + " SE");
    out.require(z_cor <= 3, name + " corruptions off by " + num(z_cor) + " SE");
    values += name + " P1 " + num(exact.prob_one) + "/" + num(mc.outcome_frequency) + " corr " +
              num(exact.expected_corruptions) + "/" + num(mc.mean_corruptions) + "; ";
  };
  check("toy2", load_protocol_file<double>(fixture("toy2.json")), params_for(1, 0.6, 0.05));
  check("majority(5)", majority_single_turn<double>(5), params_for(5, 0, 0, 1.2));
  out.detail = values + (out.passed ? "" : out.detail);
  return out;
}

Outcome martingales() {
  Outcome out;
  for (std::size_t n : {3, 5}) {
    auto r = martingale_diagnostics(*majority_single_turn<Rational>(n), {0.2, 0.4, 0.6, 0.8, 1.0});
    out.require(r.tower, "tower fails on majority(" + std::to_string(n) + ")");
    out.require(r.orthogonality, "orthogonality fails on majority(" + std::to_string(n) + ")");
    out.require(r.passed(), "Doob grid fails on majority(" + std::to_string(n) + ")");
  }
  out.detail = "majority(3), majority(5), 5-point grid" + (out.passed ? "" : "; " + out.detail);
  return out;
}

Outcome bias_phenomenon() {
  Outcome out;
  std::ifstream in(fixture("pilot_majority1001.json"));
  json pilot = json::parse(in);
  const json& thr = pilot["thresholds"];
  ExperimentConfig cfg = load_config(fixture("pilot_config.json"));
  cfg.trials = 100'000;
  RunOutcome attacked = run_experiment(cfg);
  const json& mc = attacked.body["monte_carlo"];
  ExperimentConfig honest_cfg = cfg;
  honest_cfg.adversary = AdversaryConfig{};
  RunOutcome honest = run_experiment(honest_cfg);
  const json& hmc = honest.body["monte_carlo"];

  double freq = mc["outcome_frequency"];
  double corr = mc["mean_corruptions"];
  double hfreq = hmc["outcome_frequency"];
  double se = std::hypot(mc["outcome_stderr"].get<double>(), hmc["outcome_stderr"].get<double>());
  double gap = freq - hfreq;
  out.require(attacked.body["adversary"]["direction"] == 1, "full attack did not choose direction 1");
  out.require(freq >= thr["min_outcome_frequency"].get<double>(), "attacked frequency " + num(freq));
  out.require(corr <= thr["max_mean_corruptions"].get<double>(), "mean corruptions " + num(corr));
  out.require(gap - 3 * se >= thr["min_gap_over_honest"].get<double>(), "gap " + num(gap));
  out.detail = "1e5 trials: attacked " + num(freq) + ", honest " + num(hfreq) + ", mean corruptions " +
               num(corr) + " (cap " + num(thr["max_mean_corruptions"]) + ")" +
               (out.passed ? "" : "; " + out.detail);
  return out;
}

Outcome soft_metrics() {
  Outcome out;
  std::string values;
  for (std::size_t n : {3, 5}) {
    json doc = {{"protocol", {{"generator", "majority_single_turn"}, {"params", {{"n", n}}}}},
                {"adversary",
                 {{"kind", "normal"},
                  {"overrides",
                   {{"epsilon", 0.5}, {"lambda", 1.2}, {"delta", 0.1}}}}}};
    RunOutcome r = run_experiment(parse_config(doc));
    const json& kl = r.body["exact"]["kl"];
    out.require(kl["agree"] == true, "KL chain rule disagrees on majority(" + std::to_string(n) + ")");
    out.require(std::fabs(kl["direct"].get<double>() - kl["chain_rule"].get<double>()) <= 1e-9,
                "KL difference above 1e-9");
    const json& soft = r.body["soft_metrics"];
    out.require(soft.size() == 2, "soft metrics missing");
    for (const auto& m : soft) {
      out.require(m["kind"] == "informational", "soft metric not informational");
      values += m["name"].get<std::string>() + "(" + std::to_string(n) + ") " +
                num(m["measured"]) + " vs " + num(m["bound"]) + " " + m["status"].get<std::string>() +
                "; ";
    }
    out.require(soft[0]["bound"].get<double>() == 2.0 / 1.2, "variance bound is not 2/lambda");
    out.require(std::fabs(soft[1]["bound"].get<double>() - 4096 * 1.2 * 1.2 * 1.2) < 1e-9,
                "KL bound is not 16^3 lambda^3");
  }
  out.detail = values + (out.passed ? "" : out.detail);
  return out;
}

Outcome reproducibility() {
  Outcome out;
  std::vector<std::string> configs = {"pilot_config.json", "cli_mc_majority9.json",
                                      "normalize_two_large.json", "cli_majority3.json"};
  for (const auto& name : configs) {
    ExperimentConfig cfg = load_config(fixture(name));
    if (cfg.trials) cfg.trials = std::min<std::size_t>(*cfg.trials, 2000);
    std::string reference;
    for (std::size_t workers : {1, 2, 4}) {
      cfg.workers = workers;
      for (int rep = 0; rep < 2; ++rep) {
        std::string body = run_experiment(cfg).body.dump();
        if (reference.empty()) reference = body;
        out.require(body == reference, name + " differs with " + std::to_string(workers) + " workers");
      }
    }
  }
  out.detail = std::to_string(configs.size()) + " configs x workers {1,2,4} x 2 runs" +
               (out.passed ? "" : "; " + out.detail);
  return out;
}

}  // namespace

int main() {
  criterion(1, "biased mean shift and mixture identity (exact)", 5, biased_identities);
  criterion(2, "biased KL bound", 5, biased_kl_bound);
  criterion(3, "coupling marginals and dominance", 5, coupling);
  criterion(4, "one-shot guarantee on the zoo", 10, one_shot_guarantee);
  criterion(5, "composition induces the inner-attacked law", 30, composition);
  criterion(6, "normalization validity and semantics", 30, normalization);
  criterion(7, "derandomization does not lose", 30, derandomization);
  criterion(8, "Monte Carlo agrees with enumeration", 120, mc_agreement);
  criterion(9, "martingale diagnostics", 10, martingales);
  criterion(10, "bias phenomenon on majority(1001)", 300, bias_phenomenon);
  criterion(11, "soft metrics reported, KL agreement hard", 60, soft_metrics);
  criterion(12, "report bodies reproducible across workers", 0, reproducibility);
  std::printf("%d of 12 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
