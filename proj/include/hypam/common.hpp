#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace hypam {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class ErrorKind {
    InvalidPoint,
    InvalidArgument,
    RegionTooSmall,
    InvalidBump,
    FactorizationFailure,
    BudgetExceeded,
    ConstraintViolation,
    KernelUnavailable,
    CalibrationFailed,
    CrossValidationMismatch,
    LengthMismatch,
    EmptyInput,
    QuadratureFailure,
    ZeroAcceptance,
    AllZeroCounts,
};

const char* error_kind_name(ErrorKind k);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind k, const std::string& msg) { throw Error(k, msg); }

inline void require(bool cond, const std::string& msg) {
    if (!cond) fail(ErrorKind::InvalidArgument, msg);
}

// Geometry tolerances, kept in one place.
namespace tol {
inline constexpr double minkowski_norm = 1e-10;   // |<x,x> + 1| relative to x0^2
inline constexpr double same_point = 1e-12;       // distance below which two points coincide
inline constexpr double jitter_cap = 1e-8;        // max diagonal jitter, in units of sigma^2
}  // namespace tol

}  // namespace hypam
