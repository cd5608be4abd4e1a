#pragma once

#include <stdexcept>
#include <string>

namespace aefrc {

/// Process exit codes used by the command-line front end.
enum class ExitCode : int {
    ok = 0,
    usage = 1,
    data = 2,
    numerical = 3,
};

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual ExitCode exit_code() const noexcept { return ExitCode::data; }
};

/// Malformed input files, inconsistent shapes, out-of-range indices.
class DataError : public Error {
public:
    using Error::Error;
};

/// Non-finite costs, divergent optimizers.
class NumericalError : public Error {
public:
    using Error::Error;
    ExitCode exit_code() const noexcept override { return ExitCode::numerical; }
};

/// Bad command-line usage or invalid configuration.
class UsageError : public Error {
public:
    using Error::Error;
    ExitCode exit_code() const noexcept override { return ExitCode::usage; }
};

}  // namespace aefrc
