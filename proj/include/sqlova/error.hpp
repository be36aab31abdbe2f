#pragma once

#include <stdexcept>
#include <string>

namespace sqlova {

enum class ErrorKind {
  Parse,      // malformed record / missing field
  Schema,     // row/header arity mismatch
  Type,       // unparseable Real value
  Code,       // enum code out of range
  Bounds,     // index out of range
  Length,     // encoder input too long
  Config,     // configuration invariant violated
  Contract,   // precondition violated by caller
  Usage,      // bad CLI usage or inconsistent inputs
  Io,
  Internal,   // invariant violated inside the library
};

const char* error_kind_name(ErrorKind kind);

/// Single exception type for the library. The kind decides the CLI exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void check(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

}  // namespace sqlova
