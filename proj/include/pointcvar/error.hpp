#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pcvar {

enum class ErrorCode {
  InvalidArgument,
  Parse,
  Io,
  NonFinite,
  Degenerate,
  Solver,
  Config,
};

const char* to_string(ErrorCode code) noexcept;

// Every failure the library reports is an Error; the CLI turns `code` into
// its machine-readable error line.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class ParseError : public Error {
 public:
  ParseError(std::string file, std::size_t line, const std::string& detail);

  const std::string& file() const noexcept { return file_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string file_;
  std::size_t line_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool cond, const std::string& what) {
  if (!cond) throw Error(ErrorCode::InvalidArgument, what);
}

}  // namespace pcvar
