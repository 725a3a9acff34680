#pragma once

#include <stdexcept>
#include <string>

namespace coinflip {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidPrefix : public Error {
 public:
  using Error::Error;
};

class NoNextRound : public Error {
 public:
  using Error::Error;
};

class BudgetExceeded : public Error {
 public:
  using Error::Error;
};

class InvalidDistribution : public Error {
 public:
  using Error::Error;
};

class InvalidBias : public Error {
 public:
  using Error::Error;
};

class InvalidUtility : public Error {
 public:
  using Error::Error;
};

class InvalidParameters : public Error {
 public:
  using Error::Error;
};

class AttackInfeasible : public Error {
 public:
  AttackInfeasible(const std::string& what, std::size_t round)
      : Error(what), round_(round) {}
  std::size_t round() const { return round_; }

 private:
  std::size_t round_;
};

class UndefinedPosterior : public Error {
 public:
  using Error::Error;
};

class CompositionContract : public Error {
 public:
  using Error::Error;
};

// Configuration problems carry the JSON path of the offending field.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

}  // namespace coinflip
