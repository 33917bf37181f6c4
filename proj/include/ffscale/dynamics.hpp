// dynamics.hpp — fixed-step Schrödinger integration and trajectory diagnostics
#pragma once

#include "ffscale/qcore.hpp"

#include <functional>
#include <vector>

namespace ffscale {

inline constexpr double kNormDriftGate = 1e-7;
inline constexpr double kOperatorHermTol = 1e-10;

struct TimeGrid {
    double t_start = 0.0;
    double t_end = 0.0;
    double dt = 0.0;
    int n_steps = 0;

    // validates that (t_end - t_start)/dt is an integer to 1e-9 relative tolerance
    static TimeGrid make(double t_start, double t_end, double dt);

    int size() const { return n_steps + 1; }
    double time(int i) const { return t_start + i * dt; }

    // half-step refinement (same span, dt/2); RK4 stage times of the parent
    // grid all land on the refined grid
    TimeGrid refined() const { return make(t_start, t_end, dt / 2); }
};

struct TimeDependentOperator {
    int dim = 0;
    std::function<Matrix(double)> eval;

    // evaluates and asserts Hermiticity to 1e-10
    Matrix operator()(double t) const;
};

struct Trajectory {
    TimeGrid grid;
    std::vector<Vector> states; // one per grid point
    double norm_drift = 0.0;    // max |  ||psi||^2 - 1  |
};

// Classical RK4 on d psi/dt = -i H(t) psi, no renormalization. Throws
// NormDriftError when the drift diagnostic exceeds the gate.
Trajectory evolve(const TimeDependentOperator& h, const Vector& psi0, const TimeGrid& grid);

// |<chi|psi>|^2
double fidelity(const Vector& psi, const Vector& chi);

// |<sigma|psi>|^2 for the computational-basis component `index`
double population(const Vector& psi, int index);

} // namespace ffscale
