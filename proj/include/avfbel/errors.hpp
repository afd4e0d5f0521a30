#pragma once

#include <stdexcept>
#include <string>

namespace avfbel {

// Shape or size disagreement between operands.
struct DimensionError : std::runtime_error {
    explicit DimensionError(const std::string& what) : std::runtime_error(what) {}
};

// NaN/Inf encountered where finite values are required.
struct NumericDomainError : std::runtime_error {
    explicit NumericDomainError(const std::string& what) : std::runtime_error(what) {}
};

// Caller violated a documented precondition (bad config value, rank, range...).
struct ContractViolation : std::runtime_error {
    explicit ContractViolation(const std::string& what) : std::runtime_error(what) {}
};

// Malformed external input (CSV rows, config files, checkpoints).
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Training left the stable regime (exploding weights, non-finite loss).
struct DivergenceError : std::runtime_error {
    explicit DivergenceError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace avfbel
