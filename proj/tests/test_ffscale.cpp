#include "ffscale/ffscale.hpp"

#include "ffscale/errors.hpp"
#include "ffscale/scenarios.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace ffscale;

namespace {

constexpr double kPi = 3.14159265358979323846;
const double kOmega = kPi / 40;

// reality condition of the two-level example, written out explicitly
double condex_residual(double phi, double t, const ScalingMap& map) {
    return kOmega * map.alpha(t) - std::cos(kOmega * t) * std::sin(phi) -
           kOmega * std::cos(phi);
}

// single-flip reality condition of the two-spin example (phi_1 = phi_2 = 0);
// derived by rotating the coupling and cross-coupling matrix elements through
// the diagonal unitary
double two_spin_condition_residual(double phi3, double t, const ScalingMap& map) {
    return 2 * std::cos(kOmega * t) * std::sin(2 * phi3) +
           kOmega * std::cos(2 * phi3) - map.alpha(t) * kOmega;
}

} // namespace

TEST_CASE("magnification protocol endpoints") {
    const MagnificationProtocol p{2.0, 10.0};
    CHECK(magnification(0.0, p) == 1.0);
    CHECK(magnification(10.0, p) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(magnification(5.0, p) == doctest::Approx(3.0).epsilon(1e-15)); // 2 abar - 1
    CHECK(magnification(12.0, p) == 1.0);
}

TEST_CASE("scaling map closed form") {
    const ScalingMap map = scaling_map(MagnificationProtocol{2.0, 10.0});
    CHECK(map.lambda(0.0) == 0.0);
    CHECK(map.lambda(10.0) == doctest::Approx(20.0).epsilon(1e-14));
    CHECK(map.lambda(13.0) - map.lambda(10.0) == doctest::Approx(3.0).epsilon(1e-14));
    double prev = 0.0;
    for (int k = 1; k <= 200; ++k) {
        const double t = 0.05 * k;
        const double lam = map.lambda(t);
        CHECK(lam > prev);     // strictly increasing
        CHECK(lam >= t - 1e-12);
        CHECK(map.alpha(t) >= 1.0 - 1e-12);
        prev = lam;
    }
    CHECK_THROWS_AS(scaling_map(MagnificationProtocol{0.5, 10.0}), std::invalid_argument);
}

TEST_CASE("quadrature map agrees with the closed form") {
    const MagnificationProtocol p{2.0, 10.0};
    const ScalingMap closed = scaling_map(p);
    const TimeGrid grid = TimeGrid::make(0.0, 10.0, 1e-3);
    const ScalingMap generic =
        scaling_map([p](double t) { return magnification(t, p); }, grid);
    double worst = 0.0;
    for (int k = 0; k <= 2 * grid.n_steps; ++k) {
        const double t = 0.5 * k * grid.dt;
        worst = std::max(worst, std::abs(generic.lambda(t) - closed.lambda(t)));
    }
    CHECK(worst <= 1e-9);

    CHECK_THROWS_AS(scaling_map([](double t) { return 0.9 + 0.05 * t; },
                                TimeGrid::make(0.0, 1.0, 0.1)),
                    std::invalid_argument);
}

TEST_CASE("two-level phase condition solved on the grid") {
    const ScalingMap map = scaling_map(MagnificationProtocol{2.0, 10.0});
    const TimeGrid grid = TimeGrid::make(0.0, 10.0, 1e-3);
    const TimeDependentOperator h = two_level_hamiltonian(kOmega);
    const TrajectoryFn traj = [](double u) { return two_level_exact(u, kOmega); };
    const PhaseTrajectory phases =
        solve_phase_condition(h, traj, map, standard_diagonal_basis(2), grid);

    CHECK(std::abs(phases.phases(0, 0)) <= 1e-10);
    CHECK(std::abs(condex_residual(phases.phases(0, 0), 0.0, map)) <= 1e-10);
    double worst = 0.0, jump = 0.0;
    for (int k = 0; k <= grid.n_steps; ++k) {
        worst = std::max(worst,
                         std::abs(condex_residual(phases.phases(k, 0), grid.time(k), map)));
        if (k) jump = std::max(jump, std::abs(phases.phases(k, 0) - phases.phases(k - 1, 0)));
    }
    CHECK(worst <= 1e-10);
    CHECK(jump <= kBranchJumpThreshold);
}

TEST_CASE("two-spin phase condition: structure and residual") {
    const ScalingMap map = scaling_map(MagnificationProtocol{2.0, 10.0});
    const TimeGrid grid = TimeGrid::make(0.0, 10.0, 1e-3);
    const TimeDependentOperator h = two_spin_hamiltonian(kOmega);
    const TrajectoryFn traj = [](double u) { return two_spin_exact(u, kOmega); };
    const PhaseTrajectory phases =
        solve_phase_condition(h, traj, map, standard_diagonal_basis(4), grid);

    CHECK(phases.phases.col(0).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(phases.phases.col(1).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(std::abs(phases.phases(0, 2)) <= 1e-12); // branch limit at t = 0
    double worst = 0.0;
    for (int k = 0; k <= grid.n_steps; ++k) {
        worst = std::max(worst, std::abs(two_spin_condition_residual(
                                    phases.phases(k, 2), grid.time(k), map)));
    }
    CHECK(worst <= 1e-10);
}

TEST_CASE("phase condition is infeasible for a growing envelope") {
    const ScalingMap map = scaling_map(MagnificationProtocol{2.0, 10.0});
    const TimeGrid grid = TimeGrid::make(0.0, 1.0, 1e-2);
    auto envelope = [](double t) { return 1.0 + t; };
    const TimeDependentOperator h = decreasing_field_hamiltonian(envelope, kOmega);
    const TrajectoryFn traj = [envelope](double u) {
        return decreasing_field_exact(u, envelope, kOmega);
    };
    CHECK_THROWS_AS(
        solve_phase_condition(h, traj, map, standard_diagonal_basis(2), grid),
        InfeasibleError);
}

TEST_CASE("fast-forward Hamiltonian reduces to H for the identity transform") {
    const ScalingMap map = scaling_map(MagnificationProtocol{1.0, 10.0}); // alpha == 1
    const TimeGrid grid = TimeGrid::make(0.0, 1.0, 1e-2);
    const TimeDependentOperator h = two_level_hamiltonian(kOmega);
    PhaseTrajectory zero;
    zero.grid = grid;
    zero.basis = standard_diagonal_basis(2);
    zero.phases = Eigen::MatrixXd::Zero(grid.size(), 1);
    zero.derivatives = Eigen::MatrixXd::Zero(grid.size(), 1);
    const TimeDependentOperator ff = ff_hamiltonian(h, map, zero);
    for (double t : {0.0, 0.25, 0.5, 1.0}) {
        CHECK((ff(t) - h(t)).cwiseAbs().maxCoeff() <= 1e-12);
    }
    CHECK_THROWS_AS(ff(0.123456), OutOfDomainError); // off the sampled grid
}

TEST_CASE("evolving under the fast-forward Hamiltonian reproduces the transformed state") {
    const ScalingMap map = scaling_map(MagnificationProtocol{2.0, 10.0});
    const TimeGrid grid = TimeGrid::make(0.0, 10.0, 1e-3);
    const TimeGrid half = grid.refined();
    const DiagonalObservableBasis basis = standard_diagonal_basis(2);
    const TimeDependentOperator h = two_level_hamiltonian(kOmega);
    const TrajectoryFn traj = [](double u) { return two_level_exact(u, kOmega); };
    const PhaseTrajectory phases = solve_phase_condition(h, traj, map, basis, half);

    // H_FF(0) = H(0): alpha(0) = 1, Lambda(0) = 0, phi(0) = 0, phidot(0) = 0
    const TimeDependentOperator ff = ff_hamiltonian(h, map, phases);
    CHECK((ff(0.0) - h(0.0)).cwiseAbs().maxCoeff() <= 1e-10);

    const Matrix u0 = diagonal_phase_unitary(phases.phases.row(0).transpose(), basis);
    const Trajectory evolved = evolve(ff, u0 * traj(0.0), grid);
    double worst = 1.0;
    for (int k = 0; k <= grid.n_steps; ++k) {
        const Matrix u =
            diagonal_phase_unitary(phases.phases.row(2 * k).transpose(), basis);
        const Vector expected = u * traj(map.lambda(grid.time(k)));
        worst = std::min(worst, fidelity(evolved.states[static_cast<std::size_t>(k)],
                                         expected));
    }
    CHECK(worst >= 1.0 - 1e-8);
}

TEST_CASE("residual potential identities") {
    // H_FF = H gives V = 0
    const Matrix h = Matrix(0.5 * pauli('x'));
    Vector psi(2);
    psi << 0.6, 0.8;
    const ResidualPotential zero = residual_potential(psi, h, h);
    CHECK(std::abs(zero.values[0]) == 0.0);
    CHECK(std::abs(zero.values[1]) == 0.0);

    // the amplitude-weighted imaginary parts cancel for any Hermitian pair
    std::mt19937 rng(77);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int rep = 0; rep < 20; ++rep) {
        Matrix a(3, 3), b(3, 3);
        Vector v(3);
        for (int i = 0; i < 3; ++i) {
            v(i) = Complex(u(rng), u(rng));
            for (int j = 0; j < 3; ++j) {
                a(i, j) = Complex(u(rng), u(rng));
                b(i, j) = Complex(u(rng), u(rng));
            }
        }
        a = 0.5 * (a + a.adjoint()).eval();
        b = 0.5 * (b + b.adjoint()).eval();
        v /= v.norm();
        const ResidualPotential rp = residual_potential(v, a, b);
        double weighted = 0.0;
        for (int s = 0; s < 3; ++s) {
            weighted += std::norm(v(s)) * std::imag(rp.values[static_cast<std::size_t>(s)]);
        }
        CHECK(std::abs(weighted) <= 1e-12);
    }

    // vanishing component is flagged
    Vector node_state(2);
    node_state << 1, 1e-9;
    node_state /= node_state.norm();
    const ResidualPotential flagged =
        residual_potential(node_state, Matrix(pauli('x')), Matrix::Zero(2, 2));
    CHECK(flagged.flags[1] == 1);
    CHECK(flagged.flags[0] == 0);
}

TEST_CASE("potential synthesis on the two-level example") {
    const ScalingMap map = scaling_map(MagnificationProtocol{2.0, 10.0});
    const TimeGrid half = TimeGrid::make(0.0, 10.0, 5e-4);
    const DiagonalObservableBasis basis = standard_diagonal_basis(2);
    const TimeDependentOperator h = two_level_hamiltonian(kOmega);
    const TrajectoryFn traj = [](double u) { return two_level_exact(u, kOmega); };
    const PhaseTrajectory phases = solve_phase_condition(h, traj, map, basis, half);
    const AccelerationPotential pot = synthesize_potential(phases, h, traj, map);

    CHECK(std::abs(pot.v0(0)) <= 1e-9);
    CHECK(std::abs(pot.v(0, 0)) <= 1e-9);

    // defining identity and population transport at every unflagged point
    double identity_worst = 0.0, transport_worst = 0.0;
    for (int k = 0; k <= half.n_steps; ++k) {
        if (pot.singular[static_cast<std::size_t>(k)]) continue;
        const double t = half.time(k);
        const Matrix u = diagonal_phase_unitary(phases.phases.row(k).transpose(), basis);
        const Vector psi_l = traj(map.lambda(t));
        const Vector psi_ff = u * psi_l;
        Matrix h_ff = map.alpha(t) * (u * h(map.lambda(t)) * u.adjoint());
        const RealVector fdot =
            basis.phase_profile(phases.derivatives.row(k).transpose());
        for (int i = 0; i < 2; ++i) h_ff(i, i) += fdot(i);
        Matrix h_plus_v = h(t);
        for (int s = 0; s < 2; ++s) h_plus_v(s, s) += pot.component(k, s);
        identity_worst =
            std::max(identity_worst, (h_plus_v * psi_ff - h_ff * psi_ff).norm());
        for (int s = 0; s < 2; ++s) {
            transport_worst = std::max(
                transport_worst, std::abs(std::norm(psi_ff(s)) - std::norm(psi_l(s))));
        }
    }
    CHECK(identity_worst <= 1e-8);
    CHECK(transport_worst <= 1e-9);

    // the node at the end of the window is flagged and clamped
    CHECK(pot.singular.back() == 1);
    CHECK(std::abs(pot.v(half.n_steps, 0)) == kPotentialCap);
    REQUIRE(pot.events.size() == 1);
    CHECK(pot.events[0].component == 1);
    CHECK(std::abs(pot.events[0].time - 10.0) <= 2e-3);

    // wrong phases are rejected by the reality gate
    PhaseTrajectory off = phases;
    off.phases.array() += 0.2;
    CHECK_THROWS_AS(synthesize_potential(off, h, traj, map), std::invalid_argument);
}

TEST_CASE("two-spin potential structure") {
    const ScalingMap map = scaling_map(MagnificationProtocol{2.0, 10.0});
    const TimeGrid half = TimeGrid::make(0.0, 10.0, 5e-4);
    const DiagonalObservableBasis basis = standard_diagonal_basis(4);
    const TimeDependentOperator h = two_spin_hamiltonian(kOmega);
    const TrajectoryFn traj = [](double u) { return two_spin_exact(u, kOmega); };
    const PhaseTrajectory phases = solve_phase_condition(h, traj, map, basis, half);
    const AccelerationPotential pot = synthesize_potential(phases, h, traj, map);
    double v12 = 0.0;
    for (int k = 0; k <= half.n_steps; ++k) {
        if (pot.singular[static_cast<std::size_t>(k)]) continue;
        v12 = std::max({v12, std::abs(pot.v(k, 0)), std::abs(pot.v(k, 1))});
    }
    CHECK(v12 <= 1e-10);
}

TEST_CASE("gauge elimination shifts only the global phase") {
    // node-free window keeps both drives smooth
    const ScalingMap map = scaling_map(MagnificationProtocol{2.0, 10.0});
    const TimeGrid grid = TimeGrid::make(0.0, 8.0, 1e-3);
    const TimeGrid half = grid.refined();
    const DiagonalObservableBasis basis = standard_diagonal_basis(2);
    const TimeDependentOperator h = two_level_hamiltonian(kOmega);
    const TrajectoryFn traj = [](double u) { return two_level_exact(u, kOmega); };
    const PhaseTrajectory phases = solve_phase_condition(h, traj, map, basis, half);
    const AccelerationPotential full = synthesize_potential(phases, h, traj, map);
    const AccelerationPotential eliminated = gauge_eliminate(full);

    CHECK(eliminated.gauge_eliminated);
    CHECK(eliminated.v0.cwiseAbs().maxCoeff() == 0.0);
    CHECK((eliminated.dropped_v0 - full.v0).cwiseAbs().maxCoeff() == 0.0);

    const double cap = 1e9; // no clamping on this window
    const Vector psi0 = traj(0.0);
    const Trajectory with_v0 = evolve(driven_hamiltonian(h, full, cap), psi0, grid);
    const Trajectory without_v0 = evolve(driven_hamiltonian(h, eliminated, cap), psi0, grid);
    double pop_diff = 0.0;
    for (int k = 0; k <= grid.n_steps; ++k) {
        for (int s = 0; s < 2; ++s) {
            pop_diff = std::max(pop_diff,
                                std::abs(population(with_v0.states[k], s) -
                                         population(without_v0.states[k], s)));
        }
    }
    CHECK(pop_diff <= 1e-10);
    CHECK(std::abs(std::abs(with_v0.states.back().dot(without_v0.states.back())) - 1.0) <=
          1e-8);
}

TEST_CASE("gauge elimination of a constant identity shift") {
    // hand-built potential: v0 = c, v = 0
    const TimeGrid grid = TimeGrid::make(0.0, 2.0, 1e-3);
    const TimeGrid half = grid.refined();
    AccelerationPotential pot;
    pot.grid = half;
    pot.basis = standard_diagonal_basis(2);
    pot.v0 = RealVector::Constant(half.size(), 0.8);
    pot.v = Eigen::MatrixXd::Zero(half.size(), 1);
    pot.component_values = Eigen::MatrixXd::Constant(half.size(), 2, 0.4); // v0/N
    pot.singular.assign(static_cast<std::size_t>(half.size()), 0);
    pot.dropped_v0 = RealVector::Zero(half.size());

    const AccelerationPotential stripped = gauge_eliminate(pot);
    CHECK(stripped.component_values.cwiseAbs().maxCoeff() <= 1e-15);

    const TimeDependentOperator h = two_level_hamiltonian(kOmega);
    const Vector psi0 = two_level_exact(0.0, kOmega);
    const Trajectory a = evolve(driven_hamiltonian(h, pot, 1e9), psi0, grid);
    const Trajectory b = evolve(driven_hamiltonian(h, stripped, 1e9), psi0, grid);
    for (int k = 0; k <= grid.n_steps; k += 100) {
        for (int s = 0; s < 2; ++s) {
            CHECK(std::abs(population(a.states[k], s) - population(b.states[k], s)) <=
                  1e-10);
        }
    }
    CHECK(std::abs(std::abs(a.states.back().dot(b.states.back())) - 1.0) <= 1e-8);
}

TEST_CASE("node detection") {
    const ScalingMap map = scaling_map(MagnificationProtocol{2.0, 10.0});
    const TimeGrid grid = TimeGrid::make(0.0, 10.0, 1e-3);

    // two-level example: one node, the down component, at the end of the window
    const TrajectoryFn traj = [](double u) { return two_level_exact(u, kOmega); };
    const std::vector<NodeEvent> events = detect_singularity(traj, map, grid);
    REQUIRE(events.size() == 1);
    CHECK(events[0].component == 1);
    CHECK(std::abs(events[0].time - 10.0) <= 2e-3);

    // a stationary state with all components away from zero has no nodes
    const TrajectoryFn flat = [](double) {
        Vector v(2);
        v << 1, 1;
        return Vector(v / std::sqrt(2.0));
    };
    CHECK(detect_singularity(flat, map, grid).empty());

    // two-spin example: nothing before the endpoint, both outer components at it
    const TrajectoryFn traj4 = [](double u) { return two_spin_exact(u, kOmega); };
    const std::vector<NodeEvent> events4 = detect_singularity(traj4, map, grid);
    REQUIRE(events4.size() == 2);
    for (const NodeEvent& ev : events4) {
        CHECK(ev.time == doctest::Approx(10.0).epsilon(1e-12));
        CHECK((ev.component == 0 || ev.component == 3));
    }
}

TEST_CASE("end-to-end acceleration through the clamped node") {
    const ScenarioResult r = run_two_level({});
    CHECK(r.max_pop_deviation <= 1e-6);
    // flagged exclusion window is at most 2 grid steps
    std::size_t flagged = 0;
    const std::vector<double>& flags = r.series.back();
    for (double f : flags) flagged += f != 0.0 ? 1 : 0;
    CHECK(flagged <= 2);
}
