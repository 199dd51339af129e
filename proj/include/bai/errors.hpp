#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace bai {

// Invalid model / experiment parameters. The CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A strategy was driven out of order (wrong round, early recommend, foreign observation).
class ProtocolError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// Numerical input outside the domain of a formula (non-positive variance, a == b, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Wraps a failure inside one simulation trial with its position in the experiment.
class TrialError : public std::runtime_error {
public:
    TrialError(std::string strategy, std::size_t trial, const std::string& what)
        : std::runtime_error("strategy '" + strategy + "' trial " + std::to_string(trial) + ": " + what),
          strategy_(std::move(strategy)),
          trial_(trial) {}

    const std::string& strategy() const noexcept { return strategy_; }
    std::size_t trial() const noexcept { return trial_; }

private:
    std::string strategy_;
    std::size_t trial_;
};

}  // namespace bai
