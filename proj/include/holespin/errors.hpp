#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace holespin {

/// Rejected input: bad geometry, bad parameters, inconsistent grids.
class InvalidInput : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Configuration file problems; the message carries the key path.
class ConfigError : public InvalidInput {
public:
    using InvalidInput::InvalidInput;
};

/// File access or parse failures.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An iterative method stopped without meeting its tolerance.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, std::vector<double> history)
        : std::runtime_error(what), history_(std::move(history)) {}
    const std::vector<double>& history() const { return history_; }

private:
    std::vector<double> history_;
};

}  // namespace holespin
