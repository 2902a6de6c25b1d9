#pragma once

#include <stdexcept>
#include <string>

namespace perfhom {

enum class ErrorKind {
  Argument,       // precondition violated by the caller
  Geometry,       // hole touches its cell, inclusion chain broken, box outside region
  UnderResolved,  // isolated fluid node, ramp narrower than the grid
  Singular,       // no Dirichlet constraint anywhere, singular dense matrix
  NoConvergence,  // iteration cap reached
  Breakdown,      // Krylov breakdown
  Config,         // experiment configuration rejected
  Io,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

}  // namespace perfhom
