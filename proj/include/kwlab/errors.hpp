#pragma once

#include <stdexcept>
#include <string>

namespace kw {

// Failure taxonomy for the whole library. Every throw site picks the most
// specific code; callers that need to branch do so on code(), not on text.
enum class errc {
    invalid_argument,        // caller broke a documented precondition
    parse_error,             // malformed config, OFF file, or field file
    io_error,                // filesystem trouble
    mesh_invalid,            // mesh fails closedness/manifoldness checks
    not_solvable,            // problem demonstrably has no solution here
    solver_failure,          // inner linear solve did not converge
    precondition_violated,   // certified input (sub/super solution) fails its check
    construction_failure,    // auxiliary object could not be built
    inadmissible,            // sign/admissibility hypotheses not met
    not_found,               // search exhausted without a hit
    degenerate_path,         // optimization path collapsed to an endpoint
    collapsed_to_first,      // "second" solution landed on the first one
    diverged,                // iterate left the representable range
    invalid_bracket,         // bisection endpoints do not straddle
};

inline const char* to_string(errc c) {
    switch (c) {
        case errc::invalid_argument:      return "invalid-argument";
        case errc::parse_error:           return "parse-error";
        case errc::io_error:              return "io-error";
        case errc::mesh_invalid:          return "mesh-invalid";
        case errc::not_solvable:          return "not-solvable";
        case errc::solver_failure:        return "solver-failure";
        case errc::precondition_violated: return "precondition-violated";
        case errc::construction_failure:  return "construction-failure";
        case errc::inadmissible:          return "inadmissible";
        case errc::not_found:             return "not-found";
        case errc::degenerate_path:       return "degenerate-path";
        case errc::collapsed_to_first:    return "collapsed-to-first";
        case errc::diverged:              return "diverged";
        case errc::invalid_bracket:       return "invalid-bracket";
    }
    return "unknown";
}

class error : public std::runtime_error {
public:
    error(errc code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    errc code() const noexcept { return code_; }

private:
    errc code_;
};

} // namespace kw
