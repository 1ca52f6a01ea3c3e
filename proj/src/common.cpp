#include "hypam/common.hpp"

namespace hypam {

const char* error_kind_name(ErrorKind k) {
    switch (k) {
        case ErrorKind::InvalidPoint: return "invalid-point";
        case ErrorKind::InvalidArgument: return "invalid-argument";
        case ErrorKind::RegionTooSmall: return "region-too-small";
        case ErrorKind::InvalidBump: return "invalid-bump";
        case ErrorKind::FactorizationFailure: return "factorization-failure";
        case ErrorKind::BudgetExceeded: return "budget-exceeded";
        case ErrorKind::ConstraintViolation: return "constraint-violation";
        case ErrorKind::KernelUnavailable: return "kernel-unavailable";
        case ErrorKind::CalibrationFailed: return "calibration-failed";
        case ErrorKind::CrossValidationMismatch: return "cross-validation-mismatch";
        case ErrorKind::LengthMismatch: return "length-mismatch";
        case ErrorKind::EmptyInput: return "empty-input";
        case ErrorKind::QuadratureFailure: return "quadrature-failure";
        case ErrorKind::ZeroAcceptance: return "zero-acceptance";
        case ErrorKind::AllZeroCounts: return "all-zero-counts";
    }
    return "unknown";
}

}  // namespace hypam
