#pragma once

#include <stdexcept>
#include <string>

namespace policy_forge {

// A caller-supplied argument or object violates an operation's precondition
// (bounds off the grid, history too short, wrong parameter count, ...).
class PreconditionError : public std::invalid_argument {
public:
    explicit PreconditionError(const std::string& what) : std::invalid_argument(what) {}
};

// A computation produced a non-finite value or otherwise broke down.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace policy_forge
