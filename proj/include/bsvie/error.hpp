#pragma once

#include <stdexcept>
#include <string>

namespace bsvie {

enum class ErrorKind {
    Domain,
    Mass,
    Support,
    HorizonMismatch,
    GridMismatch,
    ToleranceUnreachable,
    DegenerateWeights,
    Quadrature,
    UnsupportedFamily,
    UnsupportedKernel,
    UnsupportedMeasure,
    SingularStep,
    PicardDiverged,
    PicardStalled,
    RegressionIllConditioned,
    Config,
};

const char* to_string(ErrorKind kind) noexcept;

/// Process exit code for an error: 2 config/validation, 3 convergence or
/// truncation failure, 4 statistical degeneracy.
int exit_code(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace bsvie
