#pragma once

#include <stdexcept>
#include <string>

namespace tapfw {

// Raised by the TNTP readers; `line` is 1-based within the input text.
class ParseError : public std::runtime_error {
public:
    ParseError(int line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

    int line() const noexcept { return line_; }

private:
    int line_;
};

// Raised when positive demand cannot be routed (the linear subproblem
// would be infeasible for that pair).
class UnreachableDemandError : public std::runtime_error {
public:
    UnreachableDemandError(int origin, int destination)
        : std::runtime_error("no route for demand pair (" + std::to_string(origin) + ", " +
                             std::to_string(destination) + ")"),
          origin_(origin),
          destination_(destination) {}

    int origin() const noexcept { return origin_; }
    int destination() const noexcept { return destination_; }

private:
    int origin_;
    int destination_;
};

}  // namespace tapfw
