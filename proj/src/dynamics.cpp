#include "ffscale/dynamics.hpp"

#include "ffscale/errors.hpp"

#include <cmath>
#include <stdexcept>

namespace ffscale {

TimeGrid TimeGrid::make(double t_start, double t_end, double dt) {
    if (!(dt > 0)) throw std::invalid_argument("TimeGrid: dt must be positive");
    if (!(t_end > t_start)) throw std::invalid_argument("TimeGrid: t_end must exceed t_start");
    const double steps = (t_end - t_start) / dt;
    const double rounded = std::round(steps);
    if (std::abs(steps - rounded) > 1e-9 * std::max(1.0, steps)) {
        throw std::invalid_argument("TimeGrid: span is not an integer number of steps");
    }
    TimeGrid g;
    g.t_start = t_start;
    g.t_end = t_end;
    g.dt = dt;
    g.n_steps = static_cast<int>(rounded);
    return g;
}

Matrix TimeDependentOperator::operator()(double t) const {
    Matrix m = eval(t);
    require_hermitian(m, kOperatorHermTol, "TimeDependentOperator");
    return m;
}

Trajectory evolve(const TimeDependentOperator& h, const Vector& psi0, const TimeGrid& grid) {
    if (h.dim != psi0.size()) {
        throw std::invalid_argument("evolve: dimension mismatch between H and psi0");
    }
    if (std::abs(psi0.squaredNorm() - 1.0) > 1e-10) {
        throw std::invalid_argument("evolve: initial state is not normalized");
    }
    const Complex mi(0, -1);
    Trajectory traj;
    traj.grid = grid;
    traj.states.reserve(static_cast<std::size_t>(grid.size()));
    traj.states.push_back(psi0);

    Vector psi = psi0;
    double drift = 0.0;
    for (int k = 0; k < grid.n_steps; ++k) {
        const double t = grid.time(k);
        const double dt = grid.dt;
        const Vector k1 = mi * (h(t) * psi);
        const Vector k2 = mi * (h(t + 0.5 * dt) * (psi + 0.5 * dt * k1).eval());
        const Vector k3 = mi * (h(t + 0.5 * dt) * (psi + 0.5 * dt * k2).eval());
        const Vector k4 = mi * (h(t + dt) * (psi + dt * k3).eval());
        psi += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        traj.states.push_back(psi);
        drift = std::max(drift, std::abs(psi.squaredNorm() - 1.0));
    }
    traj.norm_drift = drift;
    if (drift > kNormDriftGate) {
        throw NormDriftError(drift, kNormDriftGate);
    }
    return traj;
}

double fidelity(const Vector& psi, const Vector& chi) {
    if (psi.size() != chi.size()) {
        throw std::invalid_argument("fidelity: dimension mismatch");
    }
    return std::norm(chi.dot(psi));
}

double population(const Vector& psi, int index) {
    if (index < 0 || index >= psi.size()) {
        throw std::invalid_argument("population: index out of range");
    }
    return std::norm(psi(index));
}

} // namespace ffscale
