#pragma once

#include <stdexcept>
#include <string>

namespace micmix
{

// Exit codes of the command-line tool; kept stable for scripting.
enum class ExitCode : int
{
  ok = 0,
  config = 2,
  validation = 3,
  runtime = 4,
};

class Error : public std::runtime_error
{
public:
  explicit Error(const std::string &what, ExitCode code)
      : std::runtime_error(what), code_(code)
  {
  }

  ExitCode code() const noexcept { return code_; }

private:
  ExitCode code_;
};

// Bad flags, unreadable or contradictory configuration.
class ConfigError : public Error
{
public:
  explicit ConfigError(const std::string &what) : Error(what, ExitCode::config) {}
};

// Malformed input file; carries the 1-based line number when known.
class ParseError : public Error
{
public:
  ParseError(const std::string &what, std::size_t line = 0)
      : Error(line == 0 ? what : what + " (line " + std::to_string(line) + ")",
              ExitCode::validation),
        line_(line)
  {
  }

  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

// Input that parses but violates a domain invariant.
class ValidationError : public Error
{
public:
  explicit ValidationError(const std::string &what) : Error(what, ExitCode::validation) {}
};

// Failures while computing: underflow, non-convergence, degenerate fits.
class NumericalError : public Error
{
public:
  explicit NumericalError(const std::string &what) : Error(what, ExitCode::runtime) {}
};

} // namespace micmix
