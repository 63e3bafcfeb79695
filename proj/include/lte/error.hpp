#pragma once

#include <stdexcept>
#include <string>

namespace lte {

/// Base class for every error raised by the engine.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or invariant-violating input data (benchmark files, snapshots, configs).
class DataError : public Error {
public:
    using Error::Error;
};

/// Failure talking to a generation or embedding backend.
class BackendError : public Error {
public:
    BackendError(const std::string& what, int status = 0, bool retriable = false)
        : Error(what), status_(status), retriable_(retriable) {}

    /// HTTP status, 0 for transport-level failures.
    int status() const noexcept { return status_; }
    bool retriable() const noexcept { return retriable_; }

private:
    int status_;
    bool retriable_;
};

/// An evaluation run could not complete (too many backend failures, bad preconditions).
class RunAborted : public Error {
public:
    using Error::Error;
};

} // namespace lte
