#include "ffscale/ffscale.hpp"

#include "ffscale/errors.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ffscale {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

// ---------------------------------------------------------------------------
// protocol and scaling map
// ---------------------------------------------------------------------------
double magnification(double t, const MagnificationProtocol& p) {
    if (t > p.t0) return 1.0;
    return p.alpha_bar + (1.0 - p.alpha_bar) * std::cos(2.0 * kPi * t / p.t0);
}

double ScalingMap::alpha(double t) const {
    if (protocol_) return magnification(t, *protocol_);
    return alpha_fn_(t);
}

double ScalingMap::lambda(double t) const {
    if (protocol_) {
        const MagnificationProtocol& p = *protocol_;
        if (t > p.t0) return p.alpha_bar * p.t0 + t - p.t0;
        const double b = 2.0 * kPi / p.t0;
        return p.alpha_bar * t + (1.0 - p.alpha_bar) * std::sin(b * t) / b;
    }
    // generic route: cumulative table plus one Simpson panel for the
    // remainder (signed, so slightly-off-table probes extrapolate)
    const TimeGrid& g = table_grid_;
    int k = static_cast<int>(std::floor((t - g.t_start) / g.dt));
    k = std::min(std::max(k, 0), g.n_steps);
    const double tk = g.time(k);
    double out = cumulative_[static_cast<std::size_t>(k)];
    const double rem = t - tk;
    if (rem != 0) {
        out += rem / 6.0 * (alpha_fn_(tk) + 4.0 * alpha_fn_(tk + 0.5 * rem) + alpha_fn_(t));
    }
    return out;
}

ScalingMap scaling_map(const MagnificationProtocol& p) {
    if (!(p.alpha_bar >= 1.0)) {
        throw std::invalid_argument("scaling_map: alpha_bar must be >= 1");
    }
    if (!(p.t0 > 0.0)) {
        throw std::invalid_argument("scaling_map: t0 must be positive");
    }
    ScalingMap map;
    map.protocol_ = p;
    return map;
}

std::vector<double> cumulative_simpson(const std::function<double(double)>& f,
                                       const TimeGrid& grid) {
    std::vector<double> cum(static_cast<std::size_t>(grid.size()), 0.0);
    for (int k = 0; k < grid.n_steps; ++k) {
        const double a = grid.time(k);
        const double b = grid.time(k + 1);
        const double panel = (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b));
        cum[static_cast<std::size_t>(k + 1)] = cum[static_cast<std::size_t>(k)] + panel;
    }
    return cum;
}

ScalingMap scaling_map(const std::function<double(double)>& alpha_fn, const TimeGrid& grid) {
    for (int k = 0; k <= 2 * grid.n_steps; ++k) {
        const double t = grid.t_start + 0.5 * k * grid.dt;
        if (alpha_fn(t) < 1.0 - 1e-12) {
            throw std::invalid_argument("scaling_map: alpha(t) dips below 1 at t = " +
                                        std::to_string(t));
        }
    }
    ScalingMap map;
    map.alpha_fn_ = alpha_fn;
    map.table_grid_ = grid;
    map.cumulative_ = cumulative_simpson(alpha_fn, grid);
    return map;
}

// ---------------------------------------------------------------------------
// phase trajectory
// ---------------------------------------------------------------------------
int PhaseTrajectory::index_of(double t) const {
    const double raw = (t - grid.t_start) / grid.dt;
    const long k = std::lround(raw);
    if (k < 0 || k > grid.n_steps ||
        std::abs(t - grid.time(static_cast<int>(k))) > 1e-9 * std::max(1.0, std::abs(t))) {
        throw OutOfDomainError(t);
    }
    return static_cast<int>(k);
}

namespace {

// Unit reference phases q_sigma = conj(w)/|w| of the trajectory components at
// Lambda(t); at node components the limit phase comes from a five-point
// derivative stencil in t.
Vector reference_phases(const TrajectoryFn& psi, const ScalingMap& map, double t,
                        double stencil_step, double node_threshold) {
    const Vector w = psi(map.lambda(t));
    Vector q(w.size());
    for (int s = 0; s < w.size(); ++s) {
        if (std::abs(w(s)) >= node_threshold) {
            q(s) = std::conj(w(s)) / std::abs(w(s));
        } else {
            const double h = stencil_step;
            const Complex wm2 = psi(map.lambda(t - 2 * h))(s);
            const Complex wm1 = psi(map.lambda(t - h))(s);
            const Complex wp1 = psi(map.lambda(t + h))(s);
            const Complex wp2 = psi(map.lambda(t + 2 * h))(s);
            const Complex dw = (wm2 - 8.0 * wm1 + 8.0 * wp1 - wp2) / (12.0 * h);
            if (std::abs(dw) == 0.0) {
                throw InfeasibleError(t, std::numeric_limits<double>::quiet_NaN());
            }
            q(s) = std::conj(dw) / std::abs(dw);
        }
    }
    return q;
}

// The condition residual is evaluated in extended precision. Structural
// zeroes of the phases (two-spin phi_1 = phi_2 = 0) are conditioned by the
// vanishing amplitude near a node, so the double-precision rounding floor of
// the evaluation would reappear in v_a amplified by the divergent potential.
using LongComplex = std::complex<long double>;
using LongMatrix = Eigen::Matrix<LongComplex, Eigen::Dynamic, Eigen::Dynamic>;
using LongVector = Eigen::Matrix<LongComplex, Eigen::Dynamic, 1>;

struct ConditionPoint {
    LongMatrix h_t;        // H(t)
    LongMatrix h_lambda;   // H(Lambda(t))
    long double alpha = 1;
    LongVector psi_lambda; // psi(Lambda(t))
    LongVector qbar;       // reference phases
};

// r_sigma(phi) = Im[ ((alpha U H_L U+ - H) U psi_L)_sigma * e^{i f_sigma} * q_sigma ]
Eigen::VectorXd condition_residual(const ConditionPoint& cp,
                                   const DiagonalObservableBasis& basis,
                                   const Eigen::VectorXd& phi) {
    const RealVector f = basis.phase_profile(phi);
    const int n = static_cast<int>(f.size());
    LongVector u(n);
    for (int i = 0; i < n; ++i) {
        u(i) = std::exp(LongComplex(0, -static_cast<long double>(f(i))));
    }
    const LongVector psi_ff = u.cwiseProduct(cp.psi_lambda);
    const LongMatrix u_h_udag = u.asDiagonal() * cp.h_lambda * u.conjugate().asDiagonal();
    const LongVector a = cp.alpha * (u_h_udag * psi_ff) - cp.h_t * psi_ff;
    Eigen::VectorXd r(n);
    for (int s = 0; s < n; ++s) {
        r(s) = static_cast<double>(std::imag(
            a(s) * std::exp(LongComplex(0, static_cast<long double>(f(s)))) * cp.qbar(s)));
    }
    return r;
}

// Gauss-Newton with small Levenberg damping. Iterates to stagnation rather
// than stopping at the tolerance: downstream coefficients amplify phase error
// by 1/cos-type factors near nodes, so every spare digit counts.
Eigen::VectorXd newton_solve(const ConditionPoint& cp, const DiagonalObservableBasis& basis,
                             Eigen::VectorXd phi, const PhaseSolveOptions& opts, double t) {
    const int m = basis.count();
    Eigen::VectorXd best_phi = phi;
    double best = std::numeric_limits<double>::infinity();
    int stalled = 0;
    for (int it = 0; it < opts.max_iter; ++it) {
        const Eigen::VectorXd r = condition_residual(cp, basis, phi);
        const double rn = r.lpNorm<Eigen::Infinity>();
        if (rn < best) {
            best = rn;
            best_phi = phi;
            stalled = 0;
        } else if (++stalled >= 2 && best <= 1e-14) {
            break; // at the floating-point floor
        }
        Eigen::MatrixXd jac(r.size(), m);
        for (int a = 0; a < m; ++a) {
            Eigen::VectorXd dp = Eigen::VectorXd::Zero(m);
            dp(a) = opts.fd_step;
            jac.col(a) = (condition_residual(cp, basis, phi + dp) -
                          condition_residual(cp, basis, phi - dp)) /
                         (2.0 * opts.fd_step);
        }
        Eigen::MatrixXd jtj = jac.transpose() * jac;
        const double mu = 1e-12 * std::max(1.0, jtj.trace());
        jtj.diagonal().array() += mu;
        const Eigen::VectorXd step = jtj.ldlt().solve(-(jac.transpose() * r));
        phi += step;
    }
    const double rn = condition_residual(cp, basis, phi).lpNorm<Eigen::Infinity>();
    if (rn < best) {
        best = rn;
        best_phi = phi;
    }
    if (best <= opts.tol) return best_phi;
    throw InfeasibleError(t, best);
}

ConditionPoint make_point(const TimeDependentOperator& h, const TrajectoryFn& psi,
                          const ScalingMap& map, double t, double grid_dt,
                          double node_threshold) {
    ConditionPoint cp;
    cp.h_t = h(t).cast<LongComplex>();
    cp.h_lambda = h(map.lambda(t)).cast<LongComplex>();
    cp.alpha = map.alpha(t);
    cp.psi_lambda = psi(map.lambda(t)).cast<LongComplex>();
    // quarter-step stencil: the magnification ramp is only C^1 at its end,
    // which costs the five-point formula one order when a node sits there
    cp.qbar = reference_phases(psi, map, t, 0.25 * grid_dt, node_threshold)
                  .cast<LongComplex>();
    return cp;
}

} // namespace

PhaseTrajectory solve_phase_condition(const TimeDependentOperator& h,
                                      const TrajectoryFn& psi,
                                      const ScalingMap& map,
                                      const DiagonalObservableBasis& basis,
                                      const TimeGrid& grid,
                                      const PhaseSolveOptions& opts) {
    const int m = basis.count();
    PhaseTrajectory out;
    out.grid = grid;
    out.basis = basis;
    out.phases.resize(grid.size(), m);
    out.derivatives.resize(grid.size(), m);

    // initial point: solve from the zero seed and a few axis probes, keep the
    // root of smallest norm
    {
        const ConditionPoint cp =
            make_point(h, psi, map, grid.t_start, grid.dt, opts.node_threshold);
        Eigen::VectorXd best;
        double best_norm = std::numeric_limits<double>::infinity();
        std::vector<Eigen::VectorXd> seeds;
        seeds.push_back(Eigen::VectorXd::Zero(m));
        for (int a = 0; a < m; ++a) {
            for (double s : {0.4, -0.4, 0.8, -0.8}) {
                Eigen::VectorXd v = Eigen::VectorXd::Zero(m);
                v(a) = s;
                seeds.push_back(v);
            }
        }
        for (const auto& seed : seeds) {
            try {
                Eigen::VectorXd phi = newton_solve(cp, basis, seed, opts, grid.t_start);
                if (phi.norm() < best_norm) {
                    best_norm = phi.norm();
                    best = phi;
                }
            } catch (const InfeasibleError&) {
                // a probe seed may diverge; only the collective failure matters
            }
        }
        if (!best.size()) {
            throw InfeasibleError(grid.t_start, std::numeric_limits<double>::quiet_NaN());
        }
        out.phases.row(0) = best.transpose();
    }

    for (int k = 1; k <= grid.n_steps; ++k) {
        const double t = grid.time(k);
        const ConditionPoint cp = make_point(h, psi, map, t, grid.dt, opts.node_threshold);
        const Eigen::VectorXd seed = out.phases.row(k - 1).transpose();
        const Eigen::VectorXd phi = newton_solve(cp, basis, seed, opts, t);
        const double jump = (phi - seed).lpNorm<Eigen::Infinity>();
        if (jump > kBranchJumpThreshold) {
            throw BranchLossError(t, jump);
        }
        out.phases.row(k) = phi.transpose();
    }

    // phidot: central differences, second-order one-sided at the endpoints
    const double dt = grid.dt;
    const int n = grid.size();
    for (int a = 0; a < m; ++a) {
        for (int k = 1; k + 1 < n; ++k) {
            out.derivatives(k, a) = (out.phases(k + 1, a) - out.phases(k - 1, a)) / (2 * dt);
        }
        if (n >= 3) {
            out.derivatives(0, a) =
                (-3 * out.phases(0, a) + 4 * out.phases(1, a) - out.phases(2, a)) / (2 * dt);
            out.derivatives(n - 1, a) =
                (3 * out.phases(n - 1, a) - 4 * out.phases(n - 2, a) + out.phases(n - 3, a)) /
                (2 * dt);
        } else {
            out.derivatives.col(a).setZero();
        }
    }
    return out;
}

TimeDependentOperator ff_hamiltonian(const TimeDependentOperator& h,
                                     const ScalingMap& map,
                                     const PhaseTrajectory& phases) {
    TimeDependentOperator out;
    out.dim = h.dim;
    out.eval = [h, map, phases](double t) -> Matrix {
        const int k = phases.index_of(t);
        const Eigen::VectorXd phi = phases.phases.row(k).transpose();
        const Eigen::VectorXd phidot = phases.derivatives.row(k).transpose();
        const Matrix u = diagonal_phase_unitary(phi, phases.basis);
        Matrix ff = map.alpha(t) * (u * h.eval(map.lambda(t)) * u.adjoint());
        const RealVector fdot = phases.basis.phase_profile(phidot);
        for (int i = 0; i < phases.basis.dim; ++i) {
            ff(i, i) += fdot(i);
        }
        return ff;
    };
    return out;
}

// ---------------------------------------------------------------------------
// potentials
// ---------------------------------------------------------------------------
ResidualPotential residual_potential(const Vector& psi_ff, const Matrix& h_ff_val,
                                     const Matrix& h_val, double node_threshold) {
    const Vector num = (h_ff_val - h_val) * psi_ff;
    ResidualPotential out;
    out.values.resize(static_cast<std::size_t>(psi_ff.size()));
    out.flags.assign(static_cast<std::size_t>(psi_ff.size()), 0);
    for (int s = 0; s < psi_ff.size(); ++s) {
        const double mag = std::abs(psi_ff(s));
        if (mag < node_threshold) {
            out.flags[static_cast<std::size_t>(s)] = 1;
            // the ratio still carries the divergence sign while mag > 0
            out.values[static_cast<std::size_t>(s)] =
                mag > 0 ? num(s) / psi_ff(s) : Complex(kPotentialCap, 0);
        } else {
            out.values[static_cast<std::size_t>(s)] = num(s) / psi_ff(s);
        }
    }
    return out;
}

double AccelerationPotential::component(int k, int sigma) const {
    double val = v0(k) / basis.dim;
    for (int a = 0; a < basis.count(); ++a) {
        val += v(k, a) * basis.diagonals[static_cast<std::size_t>(a)](sigma);
    }
    return val;
}

AccelerationPotential synthesize_potential(const PhaseTrajectory& phases,
                                           const TimeDependentOperator& h,
                                           const TrajectoryFn& psi,
                                           const ScalingMap& map) {
    const TimeGrid& grid = phases.grid;
    const DiagonalObservableBasis& basis = phases.basis;
    const int n = basis.dim;

    AccelerationPotential pot;
    pot.grid = grid;
    pot.basis = basis;
    pot.v0.resize(grid.size());
    pot.v.resize(grid.size(), basis.count());
    pot.component_values.resize(grid.size(), n);
    pot.singular.assign(static_cast<std::size_t>(grid.size()), 0);
    pot.dropped_v0 = RealVector::Zero(grid.size());

    // stacked diagonals for least-squares recovery of v_a
    Eigen::MatrixXd d(n, basis.count());
    for (int a = 0; a < basis.count(); ++a) {
        d.col(a) = basis.diagonals[static_cast<std::size_t>(a)];
    }
    const auto d_qr = d.colPivHouseholderQr();
    if (d_qr.rank() != basis.count()) {
        throw std::invalid_argument("synthesize_potential: diagonal basis is singular");
    }

    for (int k = 0; k < grid.size(); ++k) {
        const double t = grid.time(k);
        const Eigen::VectorXd phi = phases.phases.row(k).transpose();
        const Eigen::VectorXd phidot = phases.derivatives.row(k).transpose();
        const Matrix u = diagonal_phase_unitary(phi, basis);
        const Vector psi_l = psi(map.lambda(t));
        const Vector psi_ff = u * psi_l;
        Matrix h_ff = map.alpha(t) * (u * h(map.lambda(t)) * u.adjoint());
        const RealVector fdot = basis.phase_profile(phidot);
        for (int i = 0; i < n; ++i) h_ff(i, i) += fdot(i);

        const ResidualPotential rp = residual_potential(psi_ff, h_ff, h(t));
        RealVector re(n);
        bool flagged = false;
        for (int s = 0; s < n; ++s) {
            const Complex val = rp.values[static_cast<std::size_t>(s)];
            if (rp.flags[static_cast<std::size_t>(s)]) {
                flagged = true;
                re(s) = std::clamp(std::real(val), -kPotentialCap, kPotentialCap);
            } else {
                if (std::abs(std::imag(val)) > 1e-8) {
                    throw std::invalid_argument(
                        "synthesize_potential: phases do not satisfy the reality "
                        "condition (|Im V| = " +
                        std::to_string(std::abs(std::imag(val))) + " at t = " +
                        std::to_string(t) + ")");
                }
                re(s) = std::real(val);
            }
        }
        pot.singular[static_cast<std::size_t>(k)] = flagged ? 1 : 0;
        pot.component_values.row(k) = re.transpose();
        const double v0 = re.sum();
        const Eigen::VectorXd va = d_qr.solve(re - RealVector::Constant(n, v0 / n));
        pot.v0(k) = std::clamp(v0, -kPotentialCap, kPotentialCap);
        for (int a = 0; a < basis.count(); ++a) {
            pot.v(k, a) = std::clamp(va(a), -kPotentialCap, kPotentialCap);
        }
    }

    pot.events = detect_singularity(psi, map, grid);
    return pot;
}

AccelerationPotential gauge_eliminate(AccelerationPotential pot) {
    pot.dropped_v0 = pot.v0;
    for (int k = 0; k < pot.grid.size(); ++k) {
        for (int s = 0; s < pot.basis.dim; ++s) {
            pot.component_values(k, s) =
                std::clamp(pot.component_values(k, s) - pot.dropped_v0(k) / pot.basis.dim,
                           -kPotentialCap, kPotentialCap);
        }
    }
    pot.v0.setZero();
    pot.gauge_eliminated = true;
    return pot;
}

std::vector<NodeEvent> detect_singularity(const TrajectoryFn& psi, const ScalingMap& map,
                                          const TimeGrid& grid, double node_threshold) {
    const int dim = static_cast<int>(psi(map.lambda(grid.t_start)).size());
    std::vector<NodeEvent> events;
    for (int s = 0; s < dim; ++s) {
        int k = 0;
        while (k < grid.size()) {
            const double amp = std::abs(psi(map.lambda(grid.time(k)))(s));
            if (amp >= node_threshold) {
                ++k;
                continue;
            }
            int best = k;
            double best_amp = amp;
            int end = k + 1;
            while (end < grid.size()) {
                const double a2 = std::abs(psi(map.lambda(grid.time(end)))(s));
                if (a2 >= node_threshold) break;
                if (a2 < best_amp) {
                    best_amp = a2;
                    best = end;
                }
                ++end;
            }
            NodeEvent ev;
            ev.time = grid.time(best);
            ev.component = s;
            events.push_back(ev);
            k = end;
        }
    }
    std::sort(events.begin(), events.end(), [](const NodeEvent& a, const NodeEvent& b) {
        return a.time < b.time || (a.time == b.time && a.component < b.component);
    });
    return events;
}

void annotate_side_signs(std::vector<NodeEvent>& events,
                         const std::function<double(int, double)>& v_of, double probe) {
    for (NodeEvent& ev : events) {
        const double left = v_of(ev.component, ev.time - probe);
        const double right = v_of(ev.component, ev.time + probe);
        ev.left_sign = left > 0 ? 1 : (left < 0 ? -1 : 0);
        ev.right_sign = right > 0 ? 1 : (right < 0 ? -1 : 0);
    }
}

TimeDependentOperator driven_hamiltonian(const TimeDependentOperator& h,
                                         const AccelerationPotential& pot,
                                         double stability_cap) {
    TimeDependentOperator out;
    out.dim = h.dim;
    out.eval = [h, p = pot, stability_cap](double t) -> Matrix {
        const int k = [&]() {
            const double raw = (t - p.grid.t_start) / p.grid.dt;
            const long idx = std::lround(raw);
            if (idx < 0 || idx > p.grid.n_steps ||
                std::abs(t - p.grid.time(static_cast<int>(idx))) >
                    1e-9 * std::max(1.0, std::abs(t))) {
                throw OutOfDomainError(t);
            }
            return static_cast<int>(idx);
        }();
        Matrix m = h.eval(t);
        for (int s = 0; s < p.basis.dim; ++s) {
            m(s, s) += std::clamp(p.component_values(k, s), -stability_cap, stability_cap);
        }
        return m;
    };
    return out;
}

} // namespace ffscale
