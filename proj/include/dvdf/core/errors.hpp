#pragma once

#include <stdexcept>
#include <string>

namespace dvdf {

/// Malformed tables, out-of-range ids, bad hyperparameters.
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Two MDPs that are supposed to differ only in their kernels differ elsewhere.
class DomainMismatch : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A metric whose denominator or reference set is empty/degenerate.
class UndefinedMetric : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class TrainingFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace dvdf
