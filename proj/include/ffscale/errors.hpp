// errors.hpp — typed failures raised by the solvers and integrators
#pragma once

#include <stdexcept>
#include <string>

namespace ffscale {

// Integrator norm drift exceeded the acceptance gate.
class NormDriftError : public std::runtime_error {
public:
    NormDriftError(double drift, double gate)
        : std::runtime_error("norm drift " + std::to_string(drift) +
                             " exceeds gate " + std::to_string(gate)),
          drift(drift) {}
    double drift;
};

// The reality condition has no real solution at `time`.
class InfeasibleError : public std::runtime_error {
public:
    InfeasibleError(double time, double residual)
        : std::runtime_error("phase condition infeasible at t = " + std::to_string(time) +
                             " (residual " + std::to_string(residual) + ")"),
          time(time), residual(residual) {}
    double time;
    double residual;
};

// Continuation jumped more than the branch threshold between adjacent points.
class BranchLossError : public std::runtime_error {
public:
    BranchLossError(double time, double jump)
        : std::runtime_error("branch lost at t = " + std::to_string(time) +
                             " (phase jump " + std::to_string(jump) + ")"),
          time(time), jump(jump) {}
    double time;
    double jump;
};

// Spectrum too close to degenerate for the counterdiabatic construction.
class DegenerateSpectrumError : public std::runtime_error {
public:
    explicit DegenerateSpectrumError(double gap)
        : std::runtime_error("degenerate spectrum (min gap " + std::to_string(gap) + ")"),
          gap(gap) {}
    double gap;
};

// Evaluation requested off the sampled phase grid.
class OutOfDomainError : public std::runtime_error {
public:
    explicit OutOfDomainError(double time)
        : std::runtime_error("time " + std::to_string(time) + " is not on the sampled grid"),
          time(time) {}
    double time;
};

} // namespace ffscale
