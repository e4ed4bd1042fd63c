#pragma once

#include <stdexcept>
#include <string>

namespace mmsim {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration; `key()` names the offending key path (e.g. "time.dt").
class ConfigError : public Error {
public:
    ConfigError(std::string key, const std::string& what)
        : Error(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}

    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

/// Failure inside a time step or a nonlinear solve, tagged with the simulation time.
class SolveError : public Error {
public:
    SolveError(double time, const std::string& what)
        : Error("t=" + std::to_string(time) + ": " + what), time_(time) {}

    double time() const noexcept { return time_; }

private:
    double time_;
};

} // namespace mmsim
