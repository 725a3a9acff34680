#include "coinflip/experiment.hpp"

#include "coinflip/analyzer.hpp"
#include "coinflip/error.hpp"
#include "coinflip/normalizer.hpp"
#include "coinflip/one_shot.hpp"
#include "coinflip/protocol_file.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

namespace coinflip {

using nlohmann::json;

const char* to_string(AdversaryKind k) {
  switch (k) {
    case AdversaryKind::None:
      return "none";
    case AdversaryKind::Normal:
      return "normal";
    case AdversaryKind::OneShot:
      return "one-shot";
    case AdversaryKind::Iterated:
      return "iterated";
    case AdversaryKind::Full:
      return "full";
  }
  return "?";
}

const char* to_string(RunMode m) { return m == RunMode::Exact ? "exact" : "monte-carlo"; }

namespace {

const char* to_string(Direction d) { return d == Direction::Maximize ? "maximize" : "minimize"; }

void reject_unknown(const json& obj, std::initializer_list<const char*> known,
                    const std::string& path) {
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw ConfigError(path.empty() ? key : path + "." + key, "unknown field");
  }
}

std::size_t as_count(const json& v, const std::string& path, std::size_t min = 0) {
  if (!v.is_number_integer() || v.get<long long>() < static_cast<long long>(min)) {
    throw ConfigError(path, "expected an integer >= " + std::to_string(min));
  }
  return v.get<std::size_t>();
}

double as_real(const json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path, "expected a number");
  return v.get<double>();
}

bool as_bool(const json& v, const std::string& path) {
  if (!v.is_boolean()) throw ConfigError(path, "expected true or false");
  return v.get<bool>();
}

std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string()) throw ConfigError(path, "expected a string");
  return v.get<std::string>();
}

ParameterOverrides parse_overrides(const json& v, const std::string& path) {
  if (!v.is_object()) throw ConfigError(path, "expected an object");
  ParameterOverrides o;
  for (const auto& [key, value] : v.items()) {
    std::string at = path + "." + key;
    if (key == "n") {
      o.n = as_count(value, at, 1);
    } else if (key == "epsilon") {
      o.epsilon = as_real(value, at);
    } else if (key == "lambda") {
      o.lambda = as_real(value, at);
    } else if (key == "delta") {
      o.delta = as_real(value, at);
    } else if (key == "neg_jump_threshold") {
      o.neg_jump_threshold = as_real(value, at);
    } else if (key == "large_var_threshold") {
      o.large_var_threshold = as_real(value, at);
    } else if (key == "posterior_cap") {
      o.posterior_cap = as_real(value, at);
    } else if (key == "small_corrupt_prob") {
      o.small_corrupt_prob = as_real(value, at);
    } else if (key == "max_iterations") {
      o.max_iterations = as_count(value, at);
    } else {
      throw ConfigError(at, "unknown parameter");
    }
  }
  return o;
}

json overrides_to_json(const ParameterOverrides& o) {
  json j = json::object();
  if (o.n) j["n"] = *o.n;
  if (o.epsilon) j["epsilon"] = *o.epsilon;
  if (o.lambda) j["lambda"] = *o.lambda;
  if (o.delta) j["delta"] = *o.delta;
  if (o.neg_jump_threshold) j["neg_jump_threshold"] = *o.neg_jump_threshold;
  if (o.large_var_threshold) j["large_var_threshold"] = *o.large_var_threshold;
  if (o.posterior_cap) j["posterior_cap"] = *o.posterior_cap;
  if (o.small_corrupt_prob) j["small_corrupt_prob"] = *o.small_corrupt_prob;
  if (o.max_iterations) j["max_iterations"] = *o.max_iterations;
  return j;
}

AdversaryConfig parse_adversary(const json& v) {
  const std::string path = "adversary";
  if (!v.is_object()) throw ConfigError(path, "expected an object");
  reject_unknown(v, {"kind", "overrides", "budget", "strict_halt", "normalize", "derandomize"},
                 path);
  AdversaryConfig a;
  if (v.contains("kind")) {
    std::string kind = as_string(v["kind"], path + ".kind");
    bool found = false;
    for (auto k : {AdversaryKind::None, AdversaryKind::Normal, AdversaryKind::OneShot,
                   AdversaryKind::Iterated, AdversaryKind::Full}) {
      if (kind == to_string(k)) {
        a.kind = k;
        found = true;
      }
    }
    if (!found) {
      throw ConfigError(path + ".kind",
                        "unknown kind '" + kind + "' (none, normal, one-shot, iterated, full)");
    }
  }
  if (v.contains("overrides")) a.overrides = parse_overrides(v["overrides"], path + ".overrides");
  if (v.contains("budget") && !v["budget"].is_null()) {
    a.budget = as_count(v["budget"], path + ".budget");
  }
  if (v.contains("strict_halt")) a.strict_halt = as_bool(v["strict_halt"], path + ".strict_halt");
  if (v.contains("normalize") && !v["normalize"].is_null()) {
    a.normalize = as_bool(v["normalize"], path + ".normalize");
  }
  if (v.contains("derandomize") && !v["derandomize"].is_null()) {
    std::string d = as_string(v["derandomize"], path + ".derandomize");
    if (d == "maximize") {
      a.derandomize = Direction::Maximize;
    } else if (d == "minimize") {
      a.derandomize = Direction::Minimize;
    } else {
      throw ConfigError(path + ".derandomize", "expected \"maximize\" or \"minimize\"");
    }
  }
  return a;
}

json canonical_protocol(const json& p) {
  if (p.is_object() && p.contains("generator")) return zoo_spec_to_json(zoo_spec_from_json(p));
  return p;
}

// The config as it appears in a report body: no worker count, no output
// paths, since neither may change results.
json body_config(const ExperimentConfig& cfg) {
  json j = config_to_json(cfg);
  j.erase("workers");
  j.erase("output");
  return j;
}

json number_or_inf(double x) {
  if (std::isfinite(x)) return x;
  return x > 0 ? "inf" : "-inf";
}

json variance_json(const VarianceSums& v) {
  return {{"small", v.small},
          {"large", v.large},
          {"nonrobust", v.nonrobust},
          {"robust", v.robust()},
          {"total", v.total()}};
}

json soft_metric(const std::string& name, double measured, double bound) {
  return {{"name", name},
          {"measured", number_or_inf(measured)},
          {"bound", number_or_inf(bound)},
          {"status", measured <= bound ? "within" : "exceeds"},
          {"kind", "informational"}};
}

json protocol_json(const Protocol<double>& p) {
  return {{"name", p.name()}, {"parties", p.num_parties()}, {"rounds", p.num_rounds()}};
}

std::string utc_timestamp() {
  std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json metadata(std::chrono::steady_clock::time_point start, std::size_t workers) {
  std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  return {{"timestamp", utc_timestamp()},
          {"runtime_seconds", elapsed.count()},
          {"workers", workers},
          {"version", COINFLIP_VERSION}};
}

json header(const char* command, const ExperimentConfig& cfg, const Protocol<double>& p,
            const ResolvedParameters& rp) {
  json body;
  body["schema_version"] = kReportSchemaVersion;
  body["command"] = command;
  body["config"] = body_config(cfg);
  body["protocol"] = protocol_json(p);
  body["parameters"] = rp.derived ? parameters_to_json(rp.params) : json(nullptr);
  body["overridden"] = rp.derived ? json(rp.params.overridden) : json::array();
  body["defaults"] = defaults_provenance();
  return body;
}

json verdicts_json(const NormalityReport& r) {
  json conditions = json::array();
  for (const auto& c : r.conditions) {
    conditions.push_back({{"name", c.name},
                          {"passed", c.passed},
                          {"witness", c.witness ? json(*c.witness) : json(nullptr)},
                          {"detail", c.detail}});
  }
  return {{"all_passed", r.all_passed()},
          {"transcripts_checked", r.transcripts_checked},
          {"conditions", conditions}};
}

std::map<Transcript, double> honest_law(const Protocol<double>& p, std::size_t budget) {
  std::map<Transcript, double> law;
  for_each_transcript<double>(
      p, [&](TranscriptView t, const double& prob) { law[Transcript(t.begin(), t.end())] = prob; },
      budget);
  return law;
}

}  // namespace

bool ExperimentConfig::operator==(const ExperimentConfig& o) const {
  return config_to_json(*this) == config_to_json(o) && base_dir == o.base_dir;
}

ExperimentConfig parse_config(const json& doc) {
  if (!doc.is_object()) throw ConfigError("$", "config must be a JSON object");
  reject_unknown(doc,
                 {"schema_version", "protocol", "adversary", "mode", "trials", "seed", "workers",
                  "node_budget", "robustness_trials", "output"},
                 "");
  ExperimentConfig cfg;
  if (doc.contains("schema_version") &&
      (!doc["schema_version"].is_number_integer() || doc["schema_version"] != kConfigSchemaVersion)) {
    throw ConfigError("schema_version", "expected " + std::to_string(kConfigSchemaVersion));
  }
  if (!doc.contains("protocol")) throw ConfigError("protocol", "required field is missing");
  const json& p = doc["protocol"];
  if (!p.is_object()) throw ConfigError("protocol", "expected an object");
  if (p.contains("file")) {
    reject_unknown(p, {"file"}, "protocol");
    as_string(p["file"], "protocol.file");
  } else if (!p.contains("generator") && !p.contains("format")) {
    throw ConfigError("protocol", "expected a zoo spec, a protocol document or {\"file\": ...}");
  }
  cfg.protocol = canonical_protocol(p);
  if (doc.contains("adversary")) cfg.adversary = parse_adversary(doc["adversary"]);
  if (doc.contains("mode")) {
    std::string mode = as_string(doc["mode"], "mode");
    if (mode == "exact") {
      cfg.mode = RunMode::Exact;
    } else if (mode == "monte-carlo") {
      cfg.mode = RunMode::MonteCarlo;
    } else {
      throw ConfigError("mode", "expected \"exact\" or \"monte-carlo\"");
    }
  }
  if (doc.contains("trials") && !doc["trials"].is_null()) {
    cfg.trials = as_count(doc["trials"], "trials", 1);
  }
  if (doc.contains("seed")) {
    const json& seed = doc["seed"];
    if (!seed.is_number_integer() || (!seed.is_number_unsigned() && seed.get<std::int64_t>() < 0)) {
      throw ConfigError("seed", "expected an unsigned integer");
    }
    cfg.seed = doc["seed"].get<std::uint64_t>();
  }
  if (doc.contains("workers")) cfg.workers = as_count(doc["workers"], "workers", 1);
  if (doc.contains("node_budget")) cfg.node_budget = as_count(doc["node_budget"], "node_budget", 1);
  if (doc.contains("robustness_trials")) {
    cfg.robustness_trials = as_count(doc["robustness_trials"], "robustness_trials", 1);
  }
  if (doc.contains("output")) {
    const json& out = doc["output"];
    if (!out.is_object()) throw ConfigError("output", "expected an object");
    reject_unknown(out, {"report", "csv"}, "output");
    if (out.contains("report")) cfg.report_path = as_string(out["report"], "output.report");
    if (out.contains("csv")) cfg.csv_path = as_string(out["csv"], "output.csv");
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError(file, "cannot open config file");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(file, std::string("invalid JSON: ") + e.what());
  }
  ExperimentConfig cfg = parse_config(doc);
  cfg.base_dir = std::filesystem::path(file).parent_path().string();
  return cfg;
}

json config_to_json(const ExperimentConfig& cfg) {
  const AdversaryConfig& a = cfg.adversary;
  json adversary = {
      {"kind", to_string(a.kind)},
      {"overrides", overrides_to_json(a.overrides)},
      {"budget", a.budget ? json(*a.budget) : json(nullptr)},
      {"strict_halt", a.strict_halt},
      {"normalize", a.normalize ? json(*a.normalize) : json(nullptr)},
      {"derandomize", a.derandomize ? json(to_string(*a.derandomize)) : json(nullptr)}};
  return {{"schema_version", kConfigSchemaVersion},
          {"protocol", cfg.protocol},
          {"adversary", adversary},
          {"mode", to_string(cfg.mode)},
          {"trials", cfg.trials ? json(*cfg.trials) : json(nullptr)},
          {"seed", cfg.seed},
          {"workers", cfg.workers},
          {"node_budget", cfg.node_budget},
          {"robustness_trials", cfg.robustness_trials},
          {"output", {{"report", cfg.report_path}, {"csv", cfg.csv_path}}}};
}

void validate_config(const ExperimentConfig& cfg) {
  if (cfg.mode == RunMode::MonteCarlo && !cfg.trials) {
    throw ConfigError("trials", "required in monte-carlo mode");
  }
}

ProtocolPtr<double> config_protocol(const ExperimentConfig& cfg) {
  if (cfg.protocol.contains("file")) {
    std::filesystem::path file = cfg.protocol["file"].get<std::string>();
    if (file.is_relative() && !cfg.base_dir.empty()) file = cfg.base_dir / file;
    return load_protocol_file<double>(file.string());
  }
  return protocol_from_json<double>(cfg.protocol, "protocol");
}

ResolvedParameters resolve_parameters(const ExperimentConfig& cfg, const Protocol<double>& p) {
  try {
    return {AttackParameters::make(p.num_parties(), cfg.adversary.overrides), true};
  } catch (const InvalidParameters& e) {
    if (cfg.adversary.kind != AdversaryKind::None) throw ConfigError("adversary.overrides", e.what());
  }
  ResolvedParameters r;
  r.derived = false;
  r.params.n = cfg.adversary.overrides.n.value_or(p.num_parties());
  r.params.neg_jump_threshold = std::numeric_limits<double>::infinity();
  r.params.large_var_threshold = std::numeric_limits<double>::infinity();
  return r;
}

json parameters_to_json(const AttackParameters& p) {
  return {{"n", p.n},
          {"epsilon", p.epsilon},
          {"lambda", p.lambda},
          {"delta", p.delta},
          {"neg_jump_threshold", p.neg_jump_threshold},
          {"large_var_threshold", p.large_var_threshold},
          {"posterior_cap", p.posterior_cap},
          {"small_corrupt_prob", p.small_corrupt_prob},
          {"max_iterations", p.max_iterations}};
}

json defaults_provenance() {
  return {{"epsilon", "(log2 log2 n)^(-1/50)"},
          {"lambda", "100 / epsilon^5"},
          {"delta", "1 / (log2 n)^2"},
          {"neg_jump_threshold", "1 / (lambda sqrt n)"},
          {"large_var_threshold", "1 / (lambda n)"},
          {"posterior_cap", "16 lambda^2 / sqrt n"},
          {"small_corrupt_prob", "lambda^2 / sqrt n"},
          {"max_iterations", "ceil(sqrt n lambda / delta), capped at " +
                                 std::to_string(AttackParameters::kIterationHardCap)},
          {"node_budget", kDefaultNodeBudget},
          {"trials", kDefaultTrials},
          {"robustness_trials", kDefaultRobustnessTrials}};
}

RunOutcome run_experiment(const ExperimentConfig& cfg) {
  auto start = std::chrono::steady_clock::now();
  validate_config(cfg);
  ProtocolPtr<double> protocol = config_protocol(cfg);
  ResolvedParameters rp = resolve_parameters(cfg, *protocol);
  const AttackParameters& params = rp.params;
  const AdversaryConfig& ac = cfg.adversary;

  RunOutcome out;
  json& body = out.body;
  body = header("run", cfg, *protocol, rp);
  double honest = expected_outcome<double>(*protocol, {});
  body["honest"] = {{"expectation", honest}};

  AdversaryPtr adv;
  json info = {{"kind", to_string(ac.kind)}};
  json direction = nullptr;
  auto record_iteration = [&](const OneShotIteration<double>& it) {
    info["iterations"] = it.iterations();
    info["stop_reason"] = to_string(it.stop_reason);
    info["expectations"] = it.expectations;
    info["reach_probabilities"] = it.reach_probabilities;
  };
  switch (ac.kind) {
    case AdversaryKind::None:
      adv = std::make_shared<IdentityAdversary>(protocol);
      break;
    case AdversaryKind::Normal: {
      NormalAttackerOptions o;
      o.normalize = ac.normalize.value_or(false);
      o.strict = ac.strict_halt;
      o.budget = ac.budget;
      adv = std::make_shared<NormalAttacker>(protocol, params, o);
      direction = 1;
      break;
    }
    case AdversaryKind::OneShot:
      adv = std::make_shared<OneShotAdversary>(protocol, params);
      direction = 0;
      break;
    case AdversaryKind::Iterated: {
      std::size_t rounds = params.max_iterations;
      if (ac.budget) rounds = std::min(rounds, *ac.budget);
      auto it = iterate_one_shot<double>(protocol, params, rounds, cfg.node_budget);
      record_iteration(it);
      adv = one_shot_chain(it);
      direction = 0;
      break;
    }
    case AdversaryKind::Full: {
      FullAttackOptions o;
      o.budget = ac.budget;
      o.strict = ac.strict_halt;
      o.normalize = ac.normalize.value_or(true);
      o.monte_carlo = cfg.mode == RunMode::MonteCarlo;
      o.robustness_trials = cfg.robustness_trials;
      o.seed = cfg.seed;
      o.node_budget = cfg.node_budget;
      FullAttack fa = full_attack(protocol, params, o);
      record_iteration(fa.iteration);
      info["trivial"] = fa.trivial;
      adv = fa.adversary;
      direction = fa.direction;
      break;
    }
  }
  if (ac.derandomize) {
    adv = derandomize(*adv, *ac.derandomize, cfg.node_budget);
    info["derandomized"] = to_string(*ac.derandomize);
  }
  info["direction"] = direction;
  info["composite_kind"] = adv->kind();
  info["deterministic"] = adv->is_deterministic();
  body["adversary"] = info;

  json soft = json::array();
  double attacked = 0;
  double corruptions = 0;
  if (cfg.mode == RunMode::Exact) {
    ExactAnalysis a = analyze_exact(*adv, params, cfg.node_budget);
    bool agree = std::fabs(a.kl_direct - a.kl_chain) <= kKlAgreementTolerance ||
                 (std::isinf(a.kl_direct) && std::isinf(a.kl_chain));
    out.hard_failure = !agree;
    attacked = a.prob_one;
    corruptions = a.expected_corruptions;
    body["exact"] = {{"prob_one", a.prob_one},
                     {"expected_corruptions", a.expected_corruptions},
                     {"variance", variance_json(a.variance)},
                     {"kl",
                      {{"direct", number_or_inf(a.kl_direct)},
                       {"chain_rule", number_or_inf(a.kl_chain)},
                       {"agree", agree},
                       {"tolerance", kKlAgreementTolerance}}},
                     {"transcripts", a.attacked.size()},
                     {"nodes", a.nodes}};
    if (rp.derived) {
      soft.push_back(soft_metric("robust_variance_sum", a.variance.robust(), 2.0 / params.lambda));
      soft.push_back(soft_metric("kl_attacked_vs_honest", a.kl_direct,
                                 4096.0 * std::pow(params.lambda, 3)));
    }
  } else {
    bool keep = !cfg.csv_path.empty();
    ExperimentReport r = monte_carlo(*adv, params, *cfg.trials, cfg.seed, cfg.workers, keep);
    attacked = r.outcome_frequency;
    corruptions = r.mean_corruptions;
    json histogram = json::array();
    for (const auto& [c, count] : r.corruption_histogram) histogram.push_back({c, count});
    json warnings = json::array();
    if (r.clamped_trials > 0) {
      warnings.push_back("corruption probability clamped to [0,1] in " +
                         std::to_string(r.clamped_trials) + " trials");
    }
    if (r.nonrobust_trials > 0) {
      warnings.push_back("NonRobust round played honestly in " +
                         std::to_string(r.nonrobust_trials) + " trials");
    }
    body["monte_carlo"] = {{"trials", r.trials},
                           {"base_seed", r.base_seed},
                           {"outcome_frequency", r.outcome_frequency},
                           {"outcome_stderr", r.outcome_stderr},
                           {"mean_corruptions", r.mean_corruptions},
                           {"corruptions_stderr", r.corruptions_stderr},
                           {"max_corruptions", r.max_corruptions},
                           {"corruption_histogram", histogram},
                           {"mean_variance", variance_json(r.mean_variance)},
                           {"clamped_trials", r.clamped_trials},
                           {"nonrobust_trials", r.nonrobust_trials},
                           {"warnings", warnings}};
    if (rp.derived) {
      soft.push_back(
          soft_metric("robust_variance_sum", r.mean_variance.robust(), 2.0 / params.lambda));
    }
    out.rows = std::move(r.rows);
  }
  body["soft_metrics"] = soft;
  body["summary"] = {{"honest_expectation", honest},
                     {"attacked_expectation", attacked},
                     {"corruptions", corruptions},
                     {"direction", direction}};
  out.metadata = metadata(start, cfg.workers);
  return out;
}

RunOutcome normalize_experiment(const ExperimentConfig& cfg) {
  auto start = std::chrono::steady_clock::now();
  ProtocolPtr<double> protocol = config_protocol(cfg);
  ResolvedParameters rp;
  try {
    rp.params = AttackParameters::make(protocol->num_parties(), cfg.adversary.overrides);
  } catch (const InvalidParameters& e) {
    throw ConfigError("adversary.overrides", e.what());
  }
  const AttackParameters& params = rp.params;

  RunOutcome out;
  out.body = header("normalize", cfg, *protocol, rp);
  NormalityReport before = validate_normal(*protocol, params, cfg.node_budget);
  auto normalized = normalize(protocol, params);
  NormalityReport after = validate_normal(*normalized, params, cfg.node_budget);
  MappingSummary summary = summarize_mapping(*normalized, cfg.node_budget);

  auto base_law = honest_law(*protocol, cfg.node_budget);
  auto norm_law = honest_law(*normalized, cfg.node_budget);
  bool preserved = base_law.size() == norm_law.size();
  for (const auto& [t, prob] : base_law) {
    auto it = norm_law.find(t);
    preserved = preserved && it != norm_law.end() && std::fabs(it->second - prob) <= 1e-12 &&
                expected_outcome<double>(*protocol, t) == expected_outcome<double>(*normalized, t);
  }

  const PartyMapping& mapping = normalized->mapping();
  json by_original = json::object();
  for (const auto& [party, ids] : summary.by_original) {
    json labels = json::array();
    for (PartyId id : ids) labels.push_back(mapping.label(id));
    by_original[std::to_string(party)] = labels;
  }
  out.body["mapping"] = {{"declared_pseudo_parties", summary.declared_pseudo_parties},
                         {"reachable_pseudo_parties", summary.reachable_pseudo_parties},
                         {"nonrobust_rounds", summary.nonrobust_rounds},
                         {"by_original", by_original}};
  out.body["before"] = verdicts_json(before);
  out.body["after"] = verdicts_json(after);
  out.body["semantics_preserved"] = preserved;
  out.hard_failure = !after.all_passed() || !preserved;
  out.metadata = metadata(start, cfg.workers);
  return out;
}

json report_document(const RunOutcome& r) { return {{"body", r.body}, {"metadata", r.metadata}}; }

std::string trials_csv(const std::vector<TrialRow>& rows) {
  std::ostringstream os;
  os << "trial_index,seed,outcome,corruptions,clamped,nonrobust_hit\n";
  for (const auto& r : rows) {
    os << r.index << ',' << r.seed << ',' << r.outcome << ',' << r.corruptions << ','
       << (r.clamped ? 1 : 0) << ',' << (r.nonrobust_hit ? 1 : 0) << '\n';
  }
  return os.str();
}

}  // namespace coinflip
