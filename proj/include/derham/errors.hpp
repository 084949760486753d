#pragma once

#include <stdexcept>
#include <string>

namespace derham {

// Machine-readable error categories. The numeric value doubles as the CLI
// exit code, so every failure path is distinguishable by callers.
enum class errc {
    usage = 2,          // bad arguments / out-of-range request
    parse = 3,          // malformed input file
    validation = 4,     // mesh or coefficient invariant violated
    admissibility = 5,  // deformation with non-positive Jacobian determinant
    factorization = 6,  // indefinite mass matrix or singular solve
    multiplicity = 7,   // shape derivative requested for a non-simple eigenvalue
    normalization = 8,  // eigenvector not normalized in the required mass norm
    tracking = 9,       // eigenvalue tracking lost across the FD sweep
    invalid_input = 10, // zero vector, non-positive eigenvalue, ...
    verify_failed = 12, // one or more verify-suite checks failed
};

const char* errc_name(errc c);

class Error : public std::runtime_error {
public:
    Error(errc code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    errc code() const { return code_; }
    const char* code_name() const { return errc_name(code_); }

private:
    errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& message) {
    throw Error(code, message);
}

} // namespace derham
