#pragma once

#include <stdexcept>
#include <string>

namespace mtdsim {

/// Base class for everything thrown by this library.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input document (wrong type, missing or unknown field).
class parse_error : public error {
public:
    using error::error;
};

/// Structurally valid input that violates a domain constraint.
class validation_error : public error {
public:
    using error::error;
};

/// Pearson correlation requested on a zero-variance vector.
class undefined_correlation : public error {
public:
    using error::error;
};

/// A diversification plan cannot be completed (e.g. no alternative variant).
class planning_error : public error {
public:
    using error::error;
};

/// Scenario wiring problem: unknown service, unresolvable fixture, bad reference.
class scenario_error : public error {
public:
    using error::error;
};

class io_error : public error {
public:
    using error::error;
};

/// Broken internal invariant. Indicates a bug, not a bad scenario;
/// callers should abort rather than recover.
class internal_error : public error {
public:
    using error::error;
};

inline void require(bool cond, const std::string& what) {
    if (!cond) throw validation_error(what);
}

inline void internal_check(bool cond, const std::string& what) {
    if (!cond) throw internal_error(what);
}

} // namespace mtdsim
