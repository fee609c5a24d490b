#pragma once

#include <stdexcept>
#include <string>

namespace som {

// Base for every error this library throws on purpose.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Argument outside a documented range (e.g. strategy round count).
class BoundsError : public Error {
public:
  using Error::Error;
};

// Malformed textual input; carries the byte offset of the offending token.
class ParseError : public Error {
public:
  ParseError(const std::string& what, std::size_t index)
      : Error(what + " (at index " + std::to_string(index) + ")"), index(index) {}
  std::size_t index;
};

// Invalid or inconsistent experiment configuration; `key` is the config path.
class ConfigError : public Error {
public:
  explicit ConfigError(const std::string& key, const std::string& what)
      : Error("config key '" + key + "': " + what), key(key) {}
  std::string key;
};

// A dataset file that cannot be ingested; carries the 1-based record line.
class IngestError : public Error {
public:
  IngestError(const std::string& what, long line)
      : Error(what + " (line " + std::to_string(line) + ")"), line(line) {}
  long line;
};

// Stratified sampling cannot satisfy a quota.
class SamplingError : public Error {
public:
  using Error::Error;
};

// Precondition violation in an analytic computation (empty input, mismatched
// vector lengths, degenerate data).
class DomainError : public Error {
public:
  using Error::Error;
};

// Anything that goes wrong while obtaining a completion. The class decides
// retry behaviour: Retryable errors may be re-attempted, Protocol and Fatal
// errors never are.
class BackendError : public Error {
public:
  enum class Kind { Retryable, Protocol, Fatal };

  BackendError(Kind kind, const std::string& what, int attempts = 1)
      : Error(what), kind(kind), attempts(attempts) {}

  Kind kind;
  int attempts;
};

}  // namespace som
