#pragma once

#include <stdexcept>
#include <string>

namespace smellmap {

// Bad inputs: malformed files, violated invariants, contradictory options.
// The CLI maps this to exit code 1; anything else escaping to main is 2.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace smellmap
