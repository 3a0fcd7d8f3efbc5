#include "bsvie/error.hpp"

namespace bsvie {

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::Domain: return "DomainError";
        case ErrorKind::Mass: return "MassError";
        case ErrorKind::Support: return "SupportError";
        case ErrorKind::HorizonMismatch: return "HorizonMismatch";
        case ErrorKind::GridMismatch: return "GridMismatch";
        case ErrorKind::ToleranceUnreachable: return "ToleranceUnreachable";
        case ErrorKind::DegenerateWeights: return "DegenerateWeights";
        case ErrorKind::Quadrature: return "QuadratureError";
        case ErrorKind::UnsupportedFamily: return "UnsupportedFamily";
        case ErrorKind::UnsupportedKernel: return "UnsupportedKernel";
        case ErrorKind::UnsupportedMeasure: return "UnsupportedMeasure";
        case ErrorKind::SingularStep: return "SingularStep";
        case ErrorKind::PicardDiverged: return "PicardDiverged";
        case ErrorKind::PicardStalled: return "PicardStalled";
        case ErrorKind::RegressionIllConditioned: return "RegressionIllConditioned";
        case ErrorKind::Config: return "ConfigError";
    }
    return "Error";
}

int exit_code(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::ToleranceUnreachable:
        case ErrorKind::SingularStep:
        case ErrorKind::PicardDiverged:
        case ErrorKind::PicardStalled:
        case ErrorKind::RegressionIllConditioned:
            return 3;
        case ErrorKind::DegenerateWeights:
            return 4;
        default:
            return 2;
    }
}

}  // namespace bsvie
