#pragma once

#include <stdexcept>
#include <string>

namespace amrl {

// Bad shapes, bad config files, mismatched architectures.
class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

// API misuse: stepping a finished episode, non-scalar loss, empty rollout.
class contract_error : public std::runtime_error {
public:
    explicit contract_error(const std::string& msg) : std::runtime_error(msg) {}
};

// NaN/Inf escaping a numeric kernel is always a hard failure.
class numeric_error : public std::runtime_error {
public:
    explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace amrl
