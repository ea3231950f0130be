#pragma once

#include <stdexcept>
#include <string>

namespace mfpart {

/// Base for every error the toolkit raises. Callers that only care about
/// "the analysis failed" catch this; the subclasses let the CLI map failures
/// onto exit codes and batch failure entries.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class FormatError : public Error {
public:
    using Error::Error;
};

class EmptyInputError : public Error {
public:
    using Error::Error;
};

/// All volatility is zero over the analyzed length (prices never moved).
class DegenerateSeriesError : public Error {
public:
    using Error::Error;
};

class InsufficientScalingRangeError : public Error {
public:
    using Error::Error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

/// Too many bootstrap replicates failed for the p-values to mean anything.
class UnreliableTestError : public Error {
public:
    using Error::Error;
};

class IncompatibleMembersError : public Error {
public:
    using Error::Error;
};

class UsageError : public Error {
public:
    using Error::Error;
};

}  // namespace mfpart
