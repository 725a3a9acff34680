#pragma once

#include "coinflip/protocol.hpp"
#include "coinflip/zoo.hpp"

#include "json.hpp"

#include <string>

namespace coinflip {

// Protocol description documents. Two forms are accepted:
//
//   {"generator": "majority_single_turn", "params": {"n": 3}}
//
//   {"format": "coinflip-protocol/1",
//    "parties": 2, "rounds": 2,
//    "schedule": [ {"party": 0, "dist": {"0": "1/2", "1": "1/2"}},
//                  {"party": 1, "dist": {"0": "1/2", "1": "1/2"}} ],
//    "overrides": [ {"prefix": [1], "dist": {"0": "1/4", "1": "3/4"}} ],
//    "output": {"rule": "table", "ones": [[1, 1], [0, 1]]}}
//
// `schedule` gives one default rule per round so the protocol is total;
// `overrides` replace the party and/or law at exact prefixes. Probabilities
// are numbers or "p/q" strings. Output rules: majority, and, or, parity,
// last, constant (with "value"), table (with "ones"). Full schema in
// docs/protocol.schema.json.
inline constexpr const char* kProtocolFormat = "coinflip-protocol/1";

ZooSpec zoo_spec_from_json(const nlohmann::json& doc, const std::string& path = "protocol");
nlohmann::json zoo_spec_to_json(const ZooSpec& spec);

template <class T>
ProtocolPtr<T> protocol_from_json(const nlohmann::json& doc,
                                  const std::string& path = "protocol");

template <class T>
ProtocolPtr<T> load_protocol_file(const std::string& file);

}  // namespace coinflip
