// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace stratdisc {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class AlreadyObserved : public Error {
 public:
  using Error::Error;
};

class UnknownNode : public Error {
 public:
  using Error::Error;
};

class NonterminatingPolicy : public Error {
 public:
  using Error::Error;
};

class GrammarCycle : public Error {
 public:
  using Error::Error;
};

class UnknownAtom : public Error {
 public:
  using Error::Error;
};

class SyntaxError : public Error {
 public:
  SyntaxError(const std::string& msg, std::size_t pos)
      : Error(msg + " at offset " + std::to_string(pos)), position(pos) {}
  std::size_t position;
};

class MissingData : public Error {
 public:
  using Error::Error;
};

class MalformedRow : public Error {
 public:
  MalformedRow(const std::string& msg, std::size_t line)
      : Error(msg + " (line " + std::to_string(line) + ")"), line_number(line) {}
  std::size_t line_number;
};

class InconsistentReplay : public Error {
 public:
  using Error::Error;
};

class NoSeparator : public Error {
 public:
  using Error::Error;
};

class InductionFailed : public Error {
 public:
  using Error::Error;
};

class NoCondition : public Error {
 public:
  using Error::Error;
};

class TransformFailed : public Error {
 public:
  using Error::Error;
};

class MissingEntry : public Error {
 public:
  using Error::Error;
};

class NoAdmissibleModel : public Error {
 public:
  using Error::Error;
};

}  // namespace stratdisc
