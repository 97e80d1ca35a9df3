#pragma once

#include <stdexcept>
#include <string>

namespace fedrep {

/// Raised for precondition violations, malformed input and I/O failures.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

[[noreturn]] inline void fail(const std::string& what) { throw Error(what); }

inline void require(bool condition, const std::string& what) {
  if (!condition) fail(what);
}

}  // namespace fedrep
