#pragma once

#include <stdexcept>
#include <string>

namespace disagree {

// Base for everything this library throws. The CLI maps these to exit code 1.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad input data: malformed records, schema violations, alignment mismatches.
class ValidationError : public Error {
public:
    using Error::Error;
};

// Bad configuration: invalid hyperparameters, empty training sets.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Metric computation on mismatched or off-contract inputs.
class EvalError : public Error {
public:
    using Error::Error;
};

// Predictor misuse: untrained model, wrong mode for the requested operation.
class ModelError : public Error {
public:
    using Error::Error;
};

// File level problems: unreadable paths, corrupt serialized artifacts.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace disagree
