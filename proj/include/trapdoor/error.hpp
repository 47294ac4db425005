#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace trapdoor {

enum class ErrorKind {
  Input,          // malformed or inconsistent arguments
  Degeneracy,     // singular design, all-zero weights, ...
  Generation,     // invalid mechanism parameters while simulating
  Fit,            // optimizer or sampler failure
  UndefinedCell,  // a required conditional probability has an empty cell
  Config,         // strategy/model combination not available
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

/// Raised when a plug-in term needs a conditional probability whose
/// conditioning cell has no observations. `index` holds the (x, z, w, ...)
/// values of the offending cell.
class UndefinedCellError : public Error {
 public:
  UndefinedCellError(const std::string& what, std::vector<int> index)
      : Error(ErrorKind::UndefinedCell, what), index_(std::move(index)) {}
  const std::vector<int>& index() const noexcept { return index_; }

 private:
  std::vector<int> index_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace trapdoor
