#pragma once

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>

namespace nsssm {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using Complex = std::complex<double>;

// Error hierarchy. Every module error derives from Error so the CLI can
// report a structured message and a nonzero exit code.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

#define NSSSM_DEFINE_ERROR(Name, tag)                                   \
    class Name : public Error {                                         \
    public:                                                             \
        explicit Name(const std::string& what) : Error(tag, what) {}    \
    };

NSSSM_DEFINE_ERROR(PreconditionError, "precondition")
NSSSM_DEFINE_ERROR(DegenerateError, "degenerate")
NSSSM_DEFINE_ERROR(StiffnessError, "stiffness")
NSSSM_DEFINE_ERROR(ChatteringError, "chattering")
NSSSM_DEFINE_ERROR(DecompositionError, "decomposition")
NSSSM_DEFINE_ERROR(ConditioningError, "conditioning")
NSSSM_DEFINE_ERROR(ResonanceError, "resonance")
NSSSM_DEFINE_ERROR(AssemblyError, "assembly")
NSSSM_DEFINE_ERROR(ConvergenceError, "convergence")
NSSSM_DEFINE_ERROR(ChartError, "chart")
NSSSM_DEFINE_ERROR(ConfigError, "config")
NSSSM_DEFINE_ERROR(StrategyError, "strategy")
NSSSM_DEFINE_ERROR(ProcedureError, "procedure")

#undef NSSSM_DEFINE_ERROR

// Forward simulation through repelling sliding is refused; the state where
// it was detected travels with the error.
class NonUniquenessError : public Error {
public:
    NonUniquenessError(const std::string& what, double t, Vec x)
        : Error("non_uniqueness", what), t_(t), x_(std::move(x)) {}
    double time() const noexcept { return t_; }
    const Vec& state() const noexcept { return x_; }

private:
    double t_;
    Vec x_;
};

}  // namespace nsssm
