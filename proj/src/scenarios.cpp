#include "ffscale/scenarios.hpp"

#include "ffscale/errors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ffscale {

namespace {

Matrix spin_half_hamiltonian(const Eigen::Vector3d& h) {
    Matrix m(2, 2);
    m << h.z(), Complex(h.x(), -h.y()), Complex(h.x(), h.y()), -h.z();
    return 0.5 * m;
}

// Drive cap: fixed-step RK4 needs |V| dt well inside its imaginary-axis
// stability interval. |V| dt = 1 keeps the per-stage amplitude factor at
// 0.994, which bounds the norm damage of clamped node crossings while the
// capped component still dephases fast enough to track the reference.
double drive_cap(double dt) { return 1.0 / dt; }

} // namespace

Eigen::Vector3d two_level_field(double t, double omega) {
    return {std::cos(omega * t), -omega, std::sin(omega * t)};
}

TimeDependentOperator two_level_hamiltonian(double omega) {
    TimeDependentOperator h;
    h.dim = 2;
    h.eval = [omega](double t) { return spin_half_hamiltonian(two_level_field(t, omega)); };
    return h;
}

TimeDependentOperator two_level_adiabatic(double omega) {
    TimeDependentOperator h;
    h.dim = 2;
    h.eval = [omega](double t) {
        return spin_half_hamiltonian({std::cos(omega * t), 0.0, std::sin(omega * t)});
    };
    return h;
}

Vector two_level_exact(double t, double omega) {
    const double c = std::cos(omega * t / 2);
    const double s = std::sin(omega * t / 2);
    Vector psi(2);
    psi << Complex(c + s, 0), Complex(c - s, 0);
    return std::exp(Complex(0, -t / 2)) / std::sqrt(2.0) * psi;
}

TimeDependentOperator two_spin_hamiltonian(double omega) {
    TimeDependentOperator h;
    h.dim = 4;
    const Matrix sx = pauli('x');
    const Matrix sy = pauli('y');
    const Matrix sz = pauli('z');
    const Matrix id = Matrix::Identity(2, 2);
    const Matrix zz = kron(sz, sz);
    const Matrix xsum = kron(sx, id) + kron(id, sx);
    const Matrix cd = omega / 4.0 * (kron(sy, sz) + kron(sz, sy));
    h.eval = [=](double t) {
        return Matrix(std::sin(omega * t) * zz - 0.5 * std::cos(omega * t) * xsum + cd);
    };
    return h;
}

Vector two_spin_exact(double t, double omega) {
    const double s = std::sin(omega * t);
    const double c = std::cos(omega * t);
    Vector psi(4);
    psi << c, 1 + s, 1 + s, c;
    return std::exp(Complex(0, t)) / (2.0 * std::sqrt(1.0 + s)) * psi;
}

TimeDependentOperator decreasing_field_hamiltonian(const std::function<double(double)>& envelope,
                                                   double omega) {
    TimeDependentOperator h;
    h.dim = 2;
    h.eval = [envelope, omega](double t) {
        const double hv = envelope(t);
        return spin_half_hamiltonian({hv * std::cos(omega * t), hv * std::sin(omega * t), omega});
    };
    return h;
}

Vector decreasing_field_exact(double t, const std::function<double(double)>& envelope,
                              double omega) {
    // phase integral by composite Simpson with panels no wider than 1e-3
    double integral = 0.0;
    if (t != 0.0) {
        const int panels = std::max(1, static_cast<int>(std::ceil(std::abs(t) / 1e-3)));
        const double w = t / panels;
        for (int k = 0; k < panels; ++k) {
            const double a = k * w;
            const double b = a + w;
            integral += w / 6.0 * (envelope(a) + 4.0 * envelope(0.5 * (a + b)) + envelope(b));
        }
    }
    Vector psi(2);
    psi(0) = Complex(0, -1) * std::exp(Complex(0, -omega * t / 2)) * std::sin(integral / 2);
    psi(1) = std::exp(Complex(0, omega * t / 2)) * std::cos(integral / 2);
    return psi;
}

// ---------------------------------------------------------------------------
namespace {

// sign probe for node events: Re V(component) evaluated off-grid with the
// phases frozen at the nearest solved sample
std::function<double(int, double)> potential_probe(const PhaseTrajectory& phases,
                                                   const TimeDependentOperator& h,
                                                   const TrajectoryFn& psi,
                                                   const ScalingMap& map) {
    return [&phases, h, psi, map](int component, double t) {
        int k = static_cast<int>(std::lround((t - phases.grid.t_start) / phases.grid.dt));
        k = std::clamp(k, 0, phases.grid.n_steps);
        const Eigen::VectorXd phi = phases.phases.row(k).transpose();
        const Eigen::VectorXd phidot = phases.derivatives.row(k).transpose();
        const Matrix u = diagonal_phase_unitary(phi, phases.basis);
        const Vector psi_ff = u * psi(map.lambda(t));
        Matrix h_ff = map.alpha(t) * (u * h(map.lambda(t)) * u.adjoint());
        const RealVector fdot = phases.basis.phase_profile(phidot);
        for (int i = 0; i < phases.basis.dim; ++i) h_ff(i, i) += fdot(i);
        const Vector num = (h_ff - h(t)) * psi_ff;
        if (std::abs(psi_ff(component)) == 0.0) return 0.0;
        return std::real(num(component) / psi_ff(component));
    };
}

void append_column(ScenarioResult& r, const std::string& name, std::vector<double> data) {
    r.columns.push_back(name);
    r.series.push_back(std::move(data));
}

} // namespace

ScenarioResult run_two_level(const TwoLevelScenario& s) {
    const MagnificationProtocol protocol{s.alpha_bar, s.t0};
    const ScalingMap map = scaling_map(protocol);
    const TimeGrid grid = TimeGrid::make(0.0, s.t0, s.dt);
    const TimeGrid half = grid.refined();
    const DiagonalObservableBasis basis = standard_diagonal_basis(2);
    const TimeDependentOperator h = two_level_hamiltonian(s.omega);
    const double omega = s.omega;
    const TrajectoryFn traj = [omega](double u) { return two_level_exact(u, omega); };

    const PhaseTrajectory phases = solve_phase_condition(h, traj, map, basis, half);
    AccelerationPotential pot = synthesize_potential(phases, h, traj, map);
    annotate_side_signs(pot.events, potential_probe(phases, h, traj, map), s.dt);

    // numerical drive keeps v0: eliminating it moves the node divergence onto
    // the populated component and fixed-step integration cannot track it
    const Trajectory driven =
        evolve(driven_hamiltonian(h, pot, drive_cap(s.dt)),
               diagonal_phase_unitary(phases.phases.row(0).transpose(), basis) * traj(0.0),
               grid);
    const Trajectory unscaled = evolve(h, traj(0.0), grid);

    const AccelerationPotential reported = s.gauge_eliminate_v0 ? gauge_eliminate(pot) : pot;

    ScenarioResult r;
    const int n = grid.size();
    std::vector<double> t_col(n), a_col(n), l_col(n), phi_col(n), phid_col(n), v0_col(n),
        v_col(n), pop_un(n), pop_an(n), pop_num(n), flag_col(n);
    for (int k = 0; k < n; ++k) {
        const double t = grid.time(k);
        const int hk = 2 * k; // even half-grid index
        t_col[k] = t;
        a_col[k] = map.alpha(t);
        l_col[k] = map.lambda(t);
        phi_col[k] = phases.phases(hk, 0);
        phid_col[k] = phases.derivatives(hk, 0);
        v0_col[k] = reported.v0(hk);
        v_col[k] = reported.v(hk, 0);
        pop_un[k] = population(unscaled.states[static_cast<std::size_t>(k)], 0);
        const Matrix u = diagonal_phase_unitary(phases.phases.row(hk).transpose(), basis);
        pop_an[k] = population(u * traj(map.lambda(t)), 0);
        pop_num[k] = population(driven.states[static_cast<std::size_t>(k)], 0);
        flag_col[k] = pot.singular[static_cast<std::size_t>(hk)] ? 1.0 : 0.0;
        if (!pot.singular[static_cast<std::size_t>(hk)]) {
            r.max_pop_deviation = std::max(r.max_pop_deviation, std::abs(pop_num[k] - pop_an[k]));
        }
    }
    append_column(r, "t", std::move(t_col));
    append_column(r, "alpha", std::move(a_col));
    append_column(r, "lambda", std::move(l_col));
    append_column(r, "phi_1", std::move(phi_col));
    append_column(r, "phidot_1", std::move(phid_col));
    append_column(r, "v0", std::move(v0_col));
    append_column(r, "v_1", std::move(v_col));
    append_column(r, "pop_up_unscaled", std::move(pop_un));
    append_column(r, "pop_up_analytic", std::move(pop_an));
    append_column(r, "pop_up_numeric", std::move(pop_num));
    append_column(r, "singular_flag", std::move(flag_col));
    r.events = pot.events;
    r.any_clamped = !pot.events.empty();
    return r;
}

ScenarioResult run_two_spin(const TwoSpinScenario& s) {
    const MagnificationProtocol protocol{s.alpha_bar, s.t0};
    const ScalingMap map = scaling_map(protocol);
    const TimeGrid grid = TimeGrid::make(0.0, s.t0, s.dt);
    const TimeGrid half = grid.refined();
    const DiagonalObservableBasis basis = standard_diagonal_basis(4);
    const TimeDependentOperator h = two_spin_hamiltonian(s.omega);
    const double omega = s.omega;
    const TrajectoryFn traj = [omega](double u) { return two_spin_exact(u, omega); };

    const PhaseTrajectory phases = solve_phase_condition(h, traj, map, basis, half);
    AccelerationPotential pot = synthesize_potential(phases, h, traj, map);
    annotate_side_signs(pot.events, potential_probe(phases, h, traj, map), s.dt);

    // the structural claims of the model: phi_1 = phi_2 = 0, v_1 = v_2 = 0
    const double phi12 = std::max(phases.phases.col(0).cwiseAbs().maxCoeff(),
                                  phases.phases.col(1).cwiseAbs().maxCoeff());
    double v12 = 0.0;
    for (int k = 0; k < half.size(); ++k) {
        if (pot.singular[static_cast<std::size_t>(k)]) continue;
        v12 = std::max({v12, std::abs(pot.v(k, 0)), std::abs(pot.v(k, 1))});
    }
    if (phi12 > 1e-8 || v12 > 1e-8) {
        throw std::logic_error("run_two_spin: phi_1/phi_2 or v_1/v_2 unexpectedly nonzero");
    }

    const Vector psi0 = two_spin_exact(0.0, s.omega); // phi(0) = 0 so psi_FF(0) = psi(0)
    const Trajectory driven = evolve(driven_hamiltonian(h, pot, drive_cap(s.dt)), psi0, grid);
    const Trajectory unscaled = evolve(h, psi0, grid);

    Vector target(4);
    target << 0, 1, 1, 0;
    target /= std::sqrt(2.0);

    const AccelerationPotential reported = s.gauge_eliminate_v0 ? gauge_eliminate(pot) : pot;

    ScenarioResult r;
    const int n = grid.size();
    std::vector<std::vector<double>> cols(18, std::vector<double>(static_cast<std::size_t>(n)));
    for (int k = 0; k < n; ++k) {
        const double t = grid.time(k);
        const int hk = 2 * k;
        const Vector& psi_num = driven.states[static_cast<std::size_t>(k)];
        const Vector& psi_un = unscaled.states[static_cast<std::size_t>(k)];
        int c = 0;
        cols[c++][k] = t;
        cols[c++][k] = map.alpha(t);
        cols[c++][k] = map.lambda(t);
        for (int a = 0; a < 3; ++a) cols[c++][k] = phases.phases(hk, a);
        for (int a = 0; a < 3; ++a) cols[c++][k] = phases.derivatives(hk, a);
        cols[c++][k] = reported.v0(hk);
        for (int a = 0; a < 3; ++a) cols[c++][k] = reported.v(hk, a);
        cols[c++][k] = fidelity(psi_un, psi0);
        cols[c++][k] = fidelity(psi_un, target);
        cols[c++][k] = fidelity(psi_num, psi0);
        cols[c++][k] = fidelity(psi_num, target);
        cols[c][k] = pot.singular[static_cast<std::size_t>(hk)] ? 1.0 : 0.0;
        if (!pot.singular[static_cast<std::size_t>(hk)]) {
            const Matrix u = diagonal_phase_unitary(phases.phases.row(hk).transpose(), basis);
            const Vector psi_an = u * traj(map.lambda(t));
            for (int sig = 0; sig < 4; ++sig) {
                r.max_pop_deviation = std::max(
                    r.max_pop_deviation,
                    std::abs(population(psi_num, sig) - population(psi_an, sig)));
            }
        }
    }
    const char* names[] = {"t", "alpha", "lambda", "phi_1", "phi_2", "phi_3",
                           "phidot_1", "phidot_2", "phidot_3", "v0", "v_1", "v_2", "v_3",
                           "overlap_initial_unscaled", "overlap_final_unscaled",
                           "overlap_initial_ff", "overlap_final_ff", "singular_flag"};
    for (std::size_t i = 0; i < cols.size(); ++i) {
        append_column(r, names[i], std::move(cols[i]));
    }
    r.events = pot.events;
    r.any_clamped = !pot.events.empty();
    return r;
}

ScenarioResult run_decreasing_field(const DecreasingFieldScenario& s,
                                    const MagnificationProtocol& p) {
    const ScalingMap map = scaling_map(p);
    const TimeGrid grid = TimeGrid::make(0.0, s.t_end, s.dt);

    ScenarioResult r;
    const int n = grid.size();
    std::vector<double> t_col(n), a_col(n), l_col(n), phi_col(n), ratio_col(n), feas_col(n),
        flag_col(n, 0.0);
    double prev_phi = 0.0;
    bool all_ok = true;
    for (int k = 0; k < n; ++k) {
        const double t = grid.time(k);
        const double lam = map.lambda(t);
        const double a = map.alpha(t);
        const double ratio = a * s.envelope(lam) / s.envelope(t);
        const bool ok = std::abs(ratio) <= 1.0;
        t_col[k] = t;
        a_col[k] = a;
        l_col[k] = lam;
        ratio_col[k] = ratio;
        feas_col[k] = ok ? 1.0 : 0.0;
        if (ok) {
            const double base = std::acos(std::clamp(ratio, -1.0, 1.0));
            const double shift = s.omega * (lam - t);
            const double cand1 = base - shift;
            const double cand2 = -base - shift;
            const double phi =
                std::abs(cand1 - prev_phi) <= std::abs(cand2 - prev_phi) ? cand1 : cand2;
            phi_col[k] = phi;
            prev_phi = phi;
        } else {
            phi_col[k] = 0.0;
            if (all_ok) {
                r.first_infeasible_time = t;
            }
            all_ok = false;
        }
    }
    r.infeasible = !all_ok;
    r.verdict = all_ok ? "feasible" : "infeasible";
    append_column(r, "t", std::move(t_col));
    append_column(r, "alpha", std::move(a_col));
    append_column(r, "lambda", std::move(l_col));
    append_column(r, "phi_1", std::move(phi_col));
    append_column(r, "ratio", std::move(ratio_col));
    append_column(r, "feasible", std::move(feas_col));
    append_column(r, "singular_flag", std::move(flag_col));
    return r;
}

ScenarioResult run_cd_check(const TwoLevelScenario& s) {
    const MagnificationProtocol protocol{s.alpha_bar, s.t0};
    const ScalingMap map = scaling_map(protocol);
    const TimeGrid grid = TimeGrid::make(0.0, s.t0, s.dt);
    const TimeGrid half = grid.refined();
    const DiagonalObservableBasis basis = standard_diagonal_basis(2);

    AdiabaticModel model{two_level_adiabatic(s.omega)};
    const int target = 1; // E = +1/2 branch, the state followed by the example
    const FFConditionSolution sol = ff_conditions_solve(model, target, map, basis, half);
    const AccelerationPotential pot = sol.potential();

    // transitionless run: H_ad + H_cd equals the two-level example Hamiltonian
    const TimeDependentOperator h_total = two_level_hamiltonian(s.omega);
    SpectralDecomposition d0 = model.decomposition_at(0.0);
    const Trajectory base = evolve(h_total, d0.state(target), grid);

    // fast-forwarded transitionless run under H_FF from |n~(0)>
    const TimeDependentOperator h_ff = ff_hamiltonian(h_total, map, sol.phases);
    const Matrix u0 = diagonal_phase_unitary(sol.phases.phases.row(0).transpose(), basis);
    const Trajectory ff = evolve(h_ff, u0 * d0.state(target), grid);

    ScenarioResult r;
    const int n = grid.size();
    std::vector<double> t_col(n), a_col(n), l_col(n), phi_col(n), phid_col(n), v0_col(n),
        v_col(n), pop_base(n), pop_ff(n), flag_col(n);
    SpectralDecomposition prev = d0;
    for (int k = 0; k < n; ++k) {
        const double t = grid.time(k);
        const int hk = 2 * k;
        t_col[k] = t;
        a_col[k] = map.alpha(t);
        l_col[k] = map.lambda(t);
        phi_col[k] = sol.phases.phases(hk, 0);
        phid_col[k] = sol.phases.derivatives(hk, 0);
        v0_col[k] = s.gauge_eliminate_v0 ? 0.0 : sol.v0(hk);
        v_col[k] = sol.v(hk, 0);
        flag_col[k] = sol.singular[static_cast<std::size_t>(hk)] ? 1.0 : 0.0;
        const SpectralDecomposition dt_dec = model.decomposition_at(t, &prev);
        prev = dt_dec;
        pop_base[k] = fidelity(base.states[static_cast<std::size_t>(k)], dt_dec.state(target));
        const SpectralDecomposition dl = model.decomposition_at(map.lambda(t), &dt_dec);
        const Matrix u = diagonal_phase_unitary(sol.phases.phases.row(hk).transpose(), basis);
        pop_ff[k] = fidelity(ff.states[static_cast<std::size_t>(k)],
                             (u * dl.state(target)).eval());
    }
    append_column(r, "t", std::move(t_col));
    append_column(r, "alpha", std::move(a_col));
    append_column(r, "lambda", std::move(l_col));
    append_column(r, "phi_1", std::move(phi_col));
    append_column(r, "phidot_1", std::move(phid_col));
    append_column(r, "v0", std::move(v0_col));
    append_column(r, "v_1", std::move(v_col));
    append_column(r, "pop_adiabatic_state", std::move(pop_base));
    append_column(r, "pop_ff_state", std::move(pop_ff));
    append_column(r, "singular_flag", std::move(flag_col));
    r.events = pot.events;
    r.any_clamped = !pot.events.empty();
    return r;
}

ScenarioResult run_invariant_check(const TwoLevelScenario& s) {
    const MagnificationProtocol protocol{s.alpha_bar, s.t0};
    const ScalingMap map = scaling_map(protocol);
    const TimeGrid grid = TimeGrid::make(0.0, s.t0, s.dt);
    const TimeGrid half = grid.refined();
    const DiagonalObservableBasis basis = standard_diagonal_basis(2);

    AdiabaticModel model{two_level_adiabatic(s.omega)};
    const int target = 1;
    const FFConditionSolution sol = ff_conditions_solve(model, target, map, basis, half);
    const AccelerationPotential pot = sol.potential();
    const TimeDependentOperator h_total = two_level_hamiltonian(s.omega);

    RealVector lambda = RealVector::Zero(2);
    lambda(target) = 1.0; // rank-one invariant
    const LRInvariant inv = lr_build(lambda, model);

    auto f_ff_at = [&](int hk) -> Matrix {
        const double t = half.time(hk);
        const Matrix u =
            diagonal_phase_unitary(sol.phases.phases.row(hk).transpose(), basis);
        return u * inv.value_at(map.lambda(t)) * u.adjoint();
    };
    auto commutator_residual = [&](int hk, bool zero_v) -> double {
        const double t = half.time(hk);
        const Matrix f = f_ff_at(hk);
        const Matrix df = (f_ff_at(hk + 2) - f_ff_at(hk - 2)) / (2.0 * s.dt);
        Matrix hv = h_total(t);
        if (!zero_v) {
            hv(0, 0) += sol.v0(hk) / 2 + sol.v(hk, 0) * 0.5;
            hv(1, 1) += sol.v0(hk) / 2 - sol.v(hk, 0) * 0.5;
        }
        const Matrix res = Complex(0, 1) * df - (hv * f - f * hv);
        return res.cwiseAbs().maxCoeff();
    };

    ScenarioResult r;
    const int n = grid.size();
    std::vector<double> t_col(n), a_col(n), l_col(n), phi_col(n), phid_col(n), v0_col(n),
        v_col(n), res_base(n), res_ff(n), res_ctl(n), flag_col(n);
    for (int k = 0; k < n; ++k) {
        const double t = grid.time(k);
        const int hk = 2 * k;
        t_col[k] = t;
        a_col[k] = map.alpha(t);
        l_col[k] = map.lambda(t);
        phi_col[k] = sol.phases.phases(hk, 0);
        phid_col[k] = sol.phases.derivatives(hk, 0);
        v0_col[k] = s.gauge_eliminate_v0 ? 0.0 : sol.v0(hk);
        v_col[k] = sol.v(hk, 0);
        flag_col[k] = sol.singular[static_cast<std::size_t>(hk)] ? 1.0 : 0.0;
        if (hk >= 2 && hk + 2 <= half.n_steps) {
            // base invariant residual of i dF/dt = [H, F]
            const Matrix f = inv.value_at(t);
            const Matrix fp = inv.value_at(t + s.dt);
            const Matrix fm = inv.value_at(t - s.dt);
            const Matrix hv = h_total(t);
            res_base[k] = (Complex(0, 1) * (fp - fm) / (2.0 * s.dt) - (hv * f - f * hv))
                              .cwiseAbs()
                              .maxCoeff();
            res_ff[k] = commutator_residual(hk, false);
            res_ctl[k] = commutator_residual(hk, true);
        } else {
            res_base[k] = 0.0;
            res_ff[k] = 0.0;
            res_ctl[k] = 0.0;
        }
    }
    append_column(r, "t", std::move(t_col));
    append_column(r, "alpha", std::move(a_col));
    append_column(r, "lambda", std::move(l_col));
    append_column(r, "phi_1", std::move(phi_col));
    append_column(r, "phidot_1", std::move(phid_col));
    append_column(r, "v0", std::move(v0_col));
    append_column(r, "v_1", std::move(v_col));
    append_column(r, "lr_residual", std::move(res_base));
    append_column(r, "lr_ff_residual", std::move(res_ff));
    append_column(r, "lr_ff_residual_control", std::move(res_ctl));
    append_column(r, "singular_flag", std::move(flag_col));
    r.events = pot.events;
    r.any_clamped = !pot.events.empty();
    return r;
}

} // namespace ffscale
