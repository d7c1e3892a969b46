#pragma once

#include <stdexcept>
#include <string>

namespace fedcast {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A tensor violates its own invariants (shape/value mismatch, non-finite values).
class InvalidTensorError : public Error {
public:
    using Error::Error;
};

/// Two parameter sets (or tensors) that must share names/shapes do not.
class CongruenceError : public Error {
public:
    using Error::Error;
};

/// Aggregation weights fail the simplex constraint.
class NormalizationError : public Error {
public:
    using Error::Error;
};

/// A deviation profile lacks an entry the selection step needs.
class MissingDeviationError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// Bad runtime data: empty dataset/corpus, misaligned sequence lists.
class DataError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace fedcast
