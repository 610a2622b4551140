#pragma once

#include <stdexcept>
#include <string>

namespace diqnn {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Shape or size mismatch between operands.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// A documented precondition was violated (asymmetric input, stale trace, ...).
class ContractViolation : public Error {
public:
    using Error::Error;
};

/// Input is degenerate for the requested operation (zero vector, empty set).
class DegenerateInput : public Error {
public:
    using Error::Error;
};

/// Malformed binary or text input (bad magic, truncation).
class FormatError : public Error {
public:
    using Error::Error;
};

/// Text input that does not parse; carries row/column context in the message.
class ParseError : public Error {
public:
    using Error::Error;
};

/// Invalid model or run specification (zero dimension, rank out of range).
class SpecError : public Error {
public:
    using Error::Error;
};

/// Training produced a non-finite or runaway loss.
class DivergedTraining : public Error {
public:
    explicit DivergedTraining(const std::string& what, long step)
        : Error(what), step_(step) {}
    long step() const { return step_; }

private:
    long step_;
};

/// Operation requires a homogeneous (pure quadratic / low-rank) network.
class UnsupportedModel : public Error {
public:
    using Error::Error;
};

} // namespace diqnn
