#include "coinflip/protocol_file.hpp"

#include "coinflip/error.hpp"

#include <fstream>
#include <map>
#include <set>

namespace coinflip {

using nlohmann::json;

namespace {

const json& require(const json& doc, const char* key, const std::string& path) {
  if (!doc.is_object() || !doc.contains(key)) {
    throw ConfigError(path + "." + key, "required field is missing");
  }
  return doc.at(key);
}

std::size_t as_count(const json& v, const std::string& path) {
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw ConfigError(path, "expected a nonnegative integer");
  }
  return v.get<std::size_t>();
}

template <class T>
T as_prob(const json& v, const std::string& path) {
  try {
    if (v.is_string()) return parse_number<T>(v.get<std::string>());
    if (v.is_number_integer()) return T(v.get<long long>());
    if (v.is_number()) return parse_number<T>(v.dump());
  } catch (const Error& e) {
    throw ConfigError(path, e.what());
  }
  throw ConfigError(path, "expected a number or a \"p/q\" string");
}

Message as_message(const json& v, const std::string& path) {
  if (v.is_number_integer()) return v.get<Message>();
  if (v.is_string()) {
    const auto& s = v.get_ref<const std::string&>();
    std::size_t used = 0;
    try {
      long long m = std::stoll(s, &used);
      if (used == s.size()) return m;
    } catch (const std::exception&) {
    }
  }
  throw ConfigError(path, "messages are integers");
}

template <class T>
FiniteDistribution<T> parse_dist(const json& v, const std::string& path) {
  std::vector<typename FiniteDistribution<T>::Entry> entries;
  if (v.is_object()) {
    for (const auto& [key, prob] : v.items()) {
      entries.push_back({as_message(json(key), path), as_prob<T>(prob, path + "." + key)});
    }
  } else if (v.is_array()) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      const auto& pair = v[i];
      std::string at = path + "[" + std::to_string(i) + "]";
      if (!pair.is_array() || pair.size() != 2) throw ConfigError(at, "expected [message, prob]");
      entries.push_back({as_message(pair[0], at), as_prob<T>(pair[1], at)});
    }
  } else {
    throw ConfigError(path, "expected an object or an array of [message, prob]");
  }
  try {
    return FiniteDistribution<T>::from_entries(std::move(entries));
  } catch (const Error& e) {
    throw ConfigError(path, e.what());
  }
}

Transcript parse_transcript(const json& v, const std::string& path) {
  if (!v.is_array()) throw ConfigError(path, "expected an array of messages");
  Transcript t;
  for (std::size_t i = 0; i < v.size(); ++i) {
    t.push_back(as_message(v[i], path + "[" + std::to_string(i) + "]"));
  }
  return t;
}

std::function<int(TranscriptView)> parse_output(const json& v, const std::string& path) {
  const std::string rule = require(v, "rule", path).get<std::string>();
  auto nonzero = [](TranscriptView t) {
    return static_cast<std::size_t>(std::count_if(t.begin(), t.end(), [](Message m) { return m != 0; }));
  };
  if (rule == "majority") {
    return [nonzero](TranscriptView t) { return 2 * nonzero(t) > t.size() ? 1 : 0; };
  }
  if (rule == "and") {
    return [nonzero](TranscriptView t) { return nonzero(t) == t.size() ? 1 : 0; };
  }
  if (rule == "or") {
    return [nonzero](TranscriptView t) { return nonzero(t) > 0 ? 1 : 0; };
  }
  if (rule == "parity") {
    return [nonzero](TranscriptView t) { return static_cast<int>(nonzero(t) % 2); };
  }
  if (rule == "last") {
    return [](TranscriptView t) { return !t.empty() && t.back() != 0 ? 1 : 0; };
  }
  if (rule == "constant") {
    const json& value = require(v, "value", path);
    if (!value.is_number_integer() || (value.get<int>() != 0 && value.get<int>() != 1)) {
      throw ConfigError(path + ".value", "expected 0 or 1");
    }
    int bit = value.get<int>();
    return [bit](TranscriptView) { return bit; };
  }
  if (rule == "table") {
    const json& ones = require(v, "ones", path);
    if (!ones.is_array()) throw ConfigError(path + ".ones", "expected an array of transcripts");
    auto table = std::make_shared<std::set<Transcript>>();
    for (std::size_t i = 0; i < ones.size(); ++i) {
      table->insert(parse_transcript(ones[i], path + ".ones[" + std::to_string(i) + "]"));
    }
    return [table](TranscriptView t) {
      return table->count(Transcript(t.begin(), t.end())) ? 1 : 0;
    };
  }
  throw ConfigError(path + ".rule", "unknown output rule '" + rule + "'");
}

template <class T>
struct Declared {
  std::string name;
  std::size_t parties = 0;
  std::size_t rounds = 0;
  std::vector<PartyId> schedule_party;
  std::vector<FiniteDistribution<T>> schedule_dist;
  std::map<Transcript, PartyId> party_override;
  std::map<Transcript, FiniteDistribution<T>> dist_override;
};

template <class T>
ProtocolPtr<T> declarative(const json& doc, const std::string& path) {
  auto d = std::make_shared<Declared<T>>();
  d->name = doc.value("name", std::string("declared"));
  d->parties = as_count(require(doc, "parties", path), path + ".parties");
  d->rounds = as_count(require(doc, "rounds", path), path + ".rounds");
  if (d->parties == 0) throw ConfigError(path + ".parties", "at least one party is required");

  const json& schedule = require(doc, "schedule", path);
  if (!schedule.is_array() || schedule.size() != d->rounds) {
    throw ConfigError(path + ".schedule", "expected one entry per round");
  }
  auto check_party = [&](const json& v, const std::string& at) {
    std::size_t id = as_count(v, at);
    if (id >= d->parties) throw ConfigError(at, "party id out of range");
    return static_cast<PartyId>(id);
  };
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    std::string at = path + ".schedule[" + std::to_string(i) + "]";
    d->schedule_party.push_back(check_party(require(schedule[i], "party", at), at + ".party"));
    d->schedule_dist.push_back(parse_dist<T>(require(schedule[i], "dist", at), at + ".dist"));
  }
  if (doc.contains("overrides")) {
    const json& overrides = doc.at("overrides");
    if (!overrides.is_array()) throw ConfigError(path + ".overrides", "expected an array");
    for (std::size_t i = 0; i < overrides.size(); ++i) {
      std::string at = path + ".overrides[" + std::to_string(i) + "]";
      Transcript prefix = parse_transcript(require(overrides[i], "prefix", at), at + ".prefix");
      if (prefix.size() >= d->rounds) throw ConfigError(at + ".prefix", "prefix is too long");
      if (overrides[i].contains("party")) {
        d->party_override[prefix] = check_party(overrides[i].at("party"), at + ".party");
      }
      if (overrides[i].contains("dist")) {
        d->dist_override.emplace(prefix, parse_dist<T>(overrides[i].at("dist"), at + ".dist"));
      }
    }
  }

  typename RuleProtocol<T>::Rules rules;
  rules.party = [d](TranscriptView prefix) {
    auto it = d->party_override.find(Transcript(prefix.begin(), prefix.end()));
    return it != d->party_override.end() ? it->second : d->schedule_party[prefix.size()];
  };
  rules.dist = [d](TranscriptView prefix) {
    auto it = d->dist_override.find(Transcript(prefix.begin(), prefix.end()));
    return it != d->dist_override.end() ? it->second : d->schedule_dist[prefix.size()];
  };
  rules.output = parse_output(require(doc, "output", path), path + ".output");
  return std::make_shared<RuleProtocol<T>>(d->name, d->parties, d->rounds, std::move(rules));
}

}  // namespace

ZooSpec zoo_spec_from_json(const json& doc, const std::string& path) {
  ZooSpec spec;
  const json& gen = require(doc, "generator", path);
  if (!gen.is_string()) throw ConfigError(path + ".generator", "expected a string");
  spec.generator = gen.get<std::string>();
  const auto& names = zoo_generators();
  if (std::find(names.begin(), names.end(), spec.generator) == names.end()) {
    throw ConfigError(path + ".generator", "unknown generator '" + spec.generator + "'");
  }
  const json& params = require(doc, "params", path);
  std::string at = path + ".params";
  if (!params.is_object()) throw ConfigError(at, "expected an object");
  for (const auto& [key, value] : params.items()) {
    if (key == "n") {
      spec.n = as_count(value, at + ".n");
    } else if (key == "k") {
      spec.k = as_count(value, at + ".k");
    } else if (key == "run_len") {
      spec.run_len = as_count(value, at + ".run_len");
    } else if (key == "value") {
      spec.value = static_cast<int>(as_count(value, at + ".value"));
    } else {
      throw ConfigError(at + "." + key, "unknown parameter");
    }
  }
  if (!params.contains("n")) throw ConfigError(at + ".n", "required field is missing");
  return spec;
}

json zoo_spec_to_json(const ZooSpec& spec) {
  json params = {{"n", spec.n}};
  if (spec.generator == "majority_many_turn" || spec.generator == "punishing_majority") {
    params["k"] = spec.k;
  }
  if (spec.generator == "punishing_majority") params["run_len"] = spec.run_len;
  if (spec.generator == "constant") params["value"] = spec.value;
  return {{"generator", spec.generator}, {"params", params}};
}

template <class T>
ProtocolPtr<T> protocol_from_json(const json& doc, const std::string& path) {
  if (!doc.is_object()) throw ConfigError(path, "expected an object");
  if (doc.contains("generator")) {
    ZooSpec spec = zoo_spec_from_json(doc, path);
    try {
      return make_zoo_protocol<T>(spec);
    } catch (const InvalidParameters& e) {
      throw ConfigError(path + ".params", e.what());
    }
  }
  const json& format = require(doc, "format", path);
  if (format != kProtocolFormat) {
    throw ConfigError(path + ".format", std::string("expected \"") + kProtocolFormat + "\"");
  }
  return declarative<T>(doc, path);
}

template <class T>
ProtocolPtr<T> load_protocol_file(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError(file, "cannot open protocol file");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(file, e.what());
  }
  return protocol_from_json<T>(doc, file);
}

template ProtocolPtr<double> protocol_from_json<double>(const json&, const std::string&);
template ProtocolPtr<Rational> protocol_from_json<Rational>(const json&, const std::string&);
template ProtocolPtr<double> load_protocol_file<double>(const std::string&);
template ProtocolPtr<Rational> load_protocol_file<Rational>(const std::string&);

}  // namespace coinflip
