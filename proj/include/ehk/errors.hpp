#pragma once

#include <stdexcept>
#include <string>

namespace ehk {

// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Input files missing or unreadable.
struct LoadError : Error { using Error::Error; };
// Malformed rows, bad enum values, unrenderable templates.
struct ParseError : Error { using Error::Error; };
// Cross-record references that do not resolve.
struct IntegrityError : Error { using Error::Error; };
// Numeric preconditions violated (empty groups, zero variance, ...).
struct DomainError : Error { using Error::Error; };
// Remote backend unreachable after bounded retries.
struct TransportError : Error { using Error::Error; };
// Remote backend answered with something structurally wrong.
struct ProtocolError : Error { using Error::Error; };
// Illegal session state transition.
struct StateError : Error { using Error::Error; };

} // namespace ehk
