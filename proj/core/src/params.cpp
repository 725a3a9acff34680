#include "coinflip/params.hpp"

#include "coinflip/error.hpp"

#include <algorithm>
#include <cmath>

namespace coinflip {

namespace {

double clamp_unit(double p, bool* clamped) {
  double c = std::clamp(p, 0.0, 1.0);
  if (clamped) *clamped = c != p;
  return c;
}

}  // namespace

AttackParameters AttackParameters::make(std::size_t protocol_parties,
                                        const ParameterOverrides& o) {
  AttackParameters p;
  auto mark = [&](bool set, const char* name) {
    if (set) p.overridden.insert(name);
  };

  p.n = o.n.value_or(protocol_parties);
  mark(o.n.has_value(), "n");
  if (p.n == 0) throw InvalidParameters("n must be positive");
  const double n = static_cast<double>(p.n);
  const double log_n = std::log2(n);

  if (o.epsilon) {
    p.epsilon = *o.epsilon;
  } else {
    double loglog = log_n > 0 ? std::log2(log_n) : -1;
    if (!(loglog > 1)) {
      throw InvalidParameters("default epsilon = (log log n)^(-1/50) is undefined for n = " +
                              std::to_string(p.n) + "; override epsilon");
    }
    p.epsilon = std::pow(loglog, -1.0 / 50.0);
  }
  mark(o.epsilon.has_value(), "epsilon");
  if (!(p.epsilon > 0 && p.epsilon < 1)) throw InvalidParameters("epsilon must lie in (0,1)");

  p.lambda = o.lambda.value_or(100.0 / std::pow(p.epsilon, 5));
  mark(o.lambda.has_value(), "lambda");
  if (!(p.lambda > 0)) throw InvalidParameters("lambda must be positive");

  if (o.delta) {
    p.delta = *o.delta;
  } else {
    if (!(log_n > 1)) {
      throw InvalidParameters("default delta = 1/log^2 n is undefined for n = " +
                              std::to_string(p.n) + "; override delta");
    }
    p.delta = 1.0 / (log_n * log_n);
  }
  mark(o.delta.has_value(), "delta");
  if (!(p.delta > 0 && p.delta < 1)) throw InvalidParameters("delta must lie in (0,1)");

  const double root_n = std::sqrt(n);
  p.neg_jump_threshold = o.neg_jump_threshold.value_or(1.0 / (p.lambda * root_n));
  mark(o.neg_jump_threshold.has_value(), "neg_jump_threshold");
  p.large_var_threshold = o.large_var_threshold.value_or(1.0 / (p.lambda * n));
  mark(o.large_var_threshold.has_value(), "large_var_threshold");
  p.posterior_cap = o.posterior_cap.value_or(16.0 * p.lambda * p.lambda / root_n);
  mark(o.posterior_cap.has_value(), "posterior_cap");
  p.small_corrupt_prob = o.small_corrupt_prob.value_or(p.lambda * p.lambda / root_n);
  mark(o.small_corrupt_prob.has_value(), "small_corrupt_prob");
  if (!(p.neg_jump_threshold > 0) || !(p.large_var_threshold > 0) || p.posterior_cap < 0 ||
      p.small_corrupt_prob < 0) {
    throw InvalidParameters("thresholds must be positive");
  }

  if (o.max_iterations) {
    p.max_iterations = *o.max_iterations;
  } else {
    double t = std::ceil(root_n * p.lambda / p.delta);
    p.max_iterations = t >= static_cast<double>(kIterationHardCap)
                           ? kIterationHardCap
                           : static_cast<std::size_t>(t);
  }
  mark(o.max_iterations.has_value(), "max_iterations");
  return p;
}

double AttackParameters::large_jump_corrupt_prob(double variance, bool* clamped) const {
  return clamp_unit(lambda * lambda * std::sqrt(std::max(variance, 0.0)), clamped);
}

double AttackParameters::small_jump_corrupt_prob(bool* clamped) const {
  return clamp_unit(small_corrupt_prob, clamped);
}

}  // namespace coinflip
