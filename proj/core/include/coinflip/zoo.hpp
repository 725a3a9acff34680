#pragma once

#include "coinflip/protocol.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace coinflip {

// Named generator plus its parameters, as addressed from configs and the CLI.
struct ZooSpec {
  std::string generator;
  std::size_t n = 0;         // parties
  std::size_t k = 1;         // bits per party (many-turn / punishing)
  std::size_t run_len = 0;   // punishing_majority: 1-run length that voids a party
  int value = 1;             // constant: output bit

  bool operator==(const ZooSpec&) const = default;
};

const std::vector<std::string>& zoo_generators();

// n parties, one unbiased bit each in party order, output = majority.
// Rejects even n.
template <class T>
ProtocolPtr<T> majority_single_turn(std::size_t n);

// n*k rounds, round-robin speakers (round i is spoken by party (i-1) mod n),
// output = majority of all bits. Rejects even n*k.
template <class T>
ProtocolPtr<T> majority_many_turn(std::size_t n, std::size_t k);

// Each party sends a bit that is 0 with probability 1/n; output = AND.
template <class T>
ProtocolPtr<T> biased_and(std::size_t n);

// Many-turn majority where a party whose bits ever contain a 1-run of length
// run_len loses all its votes. Ties (including zero votes) resolve to 0.
template <class T>
ProtocolPtr<T> punishing_majority(std::size_t n, std::size_t k, std::size_t run_len);

// n parties send unbiased bits; the output ignores them.
template <class T>
ProtocolPtr<T> constant_protocol(std::size_t n, int value);

template <class T>
ProtocolPtr<T> make_zoo_protocol(const ZooSpec& spec);

}  // namespace coinflip
