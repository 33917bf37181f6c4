// shortcuts.hpp — counterdiabatic (transitionless) driving, the fast-forward
// conditions specialized to adiabatic eigenstates, and Lewis-Riesenfeld
// invariant diagnostics.
#pragma once

#include "ffscale/ffscale.hpp"

#include <functional>

namespace ffscale {

inline constexpr double kCdMinGap = 1e-8;

struct AdiabaticModel {
    TimeDependentOperator h_ad;

    // decomposition at t with the branch aligned to `ref` when provided
    SpectralDecomposition decomposition_at(double t,
                                           const SpectralDecomposition* ref = nullptr) const;
};

// H_cd(t) = i sum_{m != n} |m><m|ndot><n|, eigenvector derivatives by
// phase-aligned central differences with step dt_fd. Hermitian, traceless,
// zero diagonal in the instantaneous eigenbasis. Throws on near-degeneracy.
Matrix counterdiabatic_term(const AdiabaticModel& model, double t, double dt_fd);

// two-level counterdiabatic field h x hdot / h^2 (central difference hdot)
Eigen::Vector3d cd_two_level(const std::function<Eigen::Vector3d(double)>& h, double t,
                             double dt_fd = 1e-5);

// state-specific deformation i(1 - |n><n|)|ndot><n| + h.c.
Matrix deformed_cd(const AdiabaticModel& model, int n, double t, double dt_fd);

// ---------------------------------------------------------------------------
// fast-forward conditions for a target adiabatic state
// ---------------------------------------------------------------------------
struct FFConditionSolution {
    TimeGrid grid;
    DiagonalObservableBasis basis;
    int target_state = 0;
    PhaseTrajectory phases;             // phi_a and derivatives
    RealVector v0;                      // per grid point
    Eigen::MatrixXd v;                  // size() x (N-1)
    std::vector<std::uint8_t> singular; // node flags (potential clamped there)
    RealVector residuals;               // per-point diagonal+off-diagonal residual

    AccelerationPotential potential() const;
};

// Solves the diagonal/off-diagonal matrix-element conditions for {v0, v_a,
// phi_a} with H(t) = H_ad + H_cd the transitionless Hamiltonian. The phases
// come from the shared reality-condition engine applied to the eigenstate
// trajectory; (v_a, v0) then follow from a per-point linear least-squares
// solve. Node-flagged points carry clamped values and are excluded from the
// residual gate. dt_fd should match the grid step: much smaller steps trade
// truncation error for subtractive-cancellation noise, which the centered
// phidot amplifies by 1/dt.
FFConditionSolution ff_conditions_solve(const AdiabaticModel& model, int n,
                                        const ScalingMap& map,
                                        const DiagonalObservableBasis& basis,
                                        const TimeGrid& grid, double dt_fd = 1e-3);

// ---------------------------------------------------------------------------
// Lewis-Riesenfeld invariant
// ---------------------------------------------------------------------------
struct LRInvariant {
    RealVector eigenvalues; // constant in time
    AdiabaticModel model;

    // F(t) = sum_n lambda_n |n(t)><n(t)| (projectors are phase-free)
    Matrix value_at(double t) const;
};

LRInvariant lr_build(const RealVector& eigenvalues, const AdiabaticModel& model);

// max_k || i dF/dt - [H, F] || with central differences on the grid interior;
// `h` should be the transitionless Hamiltonian (H_ad + H_cd).
double lr_dynamical_residual(const LRInvariant& inv, const TimeDependentOperator& h,
                             const TimeGrid& grid);

// Builds F_FF(t) = U(t) F(Lambda(t)) U+(t) and returns the maximum over
// interior grid points of || i dF_FF/dt - [H + diag(V), F_FF] ||, skipping
// points adjacent to flagged nodes.
double lr_ff_check(const LRInvariant& inv, const ScalingMap& map,
                   const PhaseTrajectory& phases, const AccelerationPotential& pot,
                   const TimeDependentOperator& h, const TimeGrid& grid);

} // namespace ffscale
