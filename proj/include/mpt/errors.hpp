#pragma once

#include <stdexcept>
#include <string>

namespace mpt {

// Base of every error this library throws on purpose.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Configuration rejected before any work starts.
struct ConfigError : Error {
    using Error::Error;
};

// A named aux field required by a template slot is absent from the instance.
struct MissingField : Error {
    using Error::Error;
};

// The token budget cannot hold the untruncatable template tokens plus one
// instance token.
struct BudgetExhausted : Error {
    using Error::Error;
};

struct EmptyVerbalizer : Error {
    using Error::Error;
};

// Wrapped input was produced with a different template than the model's.
struct IncompatibleTemplate : Error {
    using Error::Error;
};

struct EmptyTrainingSet : Error {
    using Error::Error;
};

struct EmptyEnsemble : Error {
    using Error::Error;
};

// A class has zero candidates under both the primary and fallback selection
// paths.
struct ClassUnfillable : Error {
    using Error::Error;
};

// A class cannot supply the requested number of examples.
struct InsufficientClass : Error {
    using Error::Error;
};

struct PoolTooSmall : Error {
    using Error::Error;
};

struct LengthMismatch : Error {
    using Error::Error;
};

// Input file did not parse under the declared format; carries line context.
struct ParseError : Error {
    ParseError(const std::string& path, long line, const std::string& reason)
        : Error(path + ":" + std::to_string(line) + ": " + reason),
          line_number(line) {}
    long line_number;
};

// A record carries a label name outside the run's label space.
struct UnknownLabel : Error {
    using Error::Error;
};

}  // namespace mpt
