#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace eprmbl {

// Error classes map onto the CLI exit codes: config = 1, io = 2, numeric = 3.
enum class ErrorClass : int { config = 1, io = 2, numeric = 3 };

class Error : public std::runtime_error {
  public:
    Error(ErrorClass cls, const std::string &msg) : std::runtime_error(msg), cls_(cls) {}
    [[nodiscard]] ErrorClass error_class() const noexcept { return cls_; }
    [[nodiscard]] int exit_code() const noexcept { return static_cast<int>(cls_); }

  private:
    ErrorClass cls_;
};

class ConfigError : public Error {
  public:
    explicit ConfigError(const std::string &msg) : Error(ErrorClass::config, msg) {}
};

class IoError : public Error {
  public:
    explicit IoError(const std::string &msg) : Error(ErrorClass::io, msg) {}
};

// Violated numeric preconditions: bad dimensions, out-of-range sites, invalid density matrices.
class NumericError : public Error {
  public:
    explicit NumericError(const std::string &msg) : Error(ErrorClass::numeric, msg) {}
};

class SolverError : public NumericError {
  public:
    SolverError(const std::string &msg, std::uint64_t seed)
        : NumericError(msg + " (realization seed " + std::to_string(seed) + ")"), seed_(seed) {}
    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }

  private:
    std::uint64_t seed_;
};

} // namespace eprmbl
