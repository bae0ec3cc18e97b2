#pragma once

#include <stdexcept>
#include <string>

namespace subreg {

// Error taxonomy. Everything user-facing derives from Error so the CLI can
// map "oracle/domain" failures to a single exit code.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Expression evaluated to NaN, or a point escaped dom f where finiteness is required.
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(what) {}
};

// Input shape not handled by an analytic oracle (e.g. discontinuity at a
// breakpoint, or dimension beyond the oracle's specialization).
class UnsupportedStructure : public Error {
 public:
  explicit UnsupportedStructure(const std::string& what) : Error(what) {}
};

// A probe grid would exceed the configured evaluation cap.
class BudgetExceeded : public Error {
 public:
  explicit BudgetExceeded(const std::string& what) : Error(what) {}
};

// A check's stated precondition failed on the probe data; carries a witness.
class PreconditionError : public Error {
 public:
  explicit PreconditionError(const std::string& what) : Error(what) {}
};

class ArgumentError : public Error {
 public:
  explicit ArgumentError(const std::string& what) : Error(what) {}
};

// DSL / expression syntax problem, with position info in the message.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line, int column)
      : Error(what + " (line " + std::to_string(line) + ", column " +
              std::to_string(column) + ")"),
        line(line),
        column(column) {}
  int line;
  int column;
};

}  // namespace subreg
