#pragma once

#include <stdexcept>
#include <string>

namespace bequest {

/// A monotone root solve was asked to work on a bracket whose endpoint values
/// do not straddle the target. For valid model parameters this cannot happen,
/// so it signals corrupted inputs or broken arithmetic upstream.
struct NoBracket : std::runtime_error {
    explicit NoBracket(const std::string& what) : std::runtime_error(what) {}
};

/// Argument outside the mathematical domain of the evaluated function.
struct DomainError : std::domain_error {
    explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

/// Operation invoked for a consumption regime it does not apply to.
struct RegimeError : std::logic_error {
    explicit RegimeError(const std::string& what) : std::logic_error(what) {}
};

/// Invalid simulation configuration.
struct ConfigError : std::invalid_argument {
    explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

}  // namespace bequest
