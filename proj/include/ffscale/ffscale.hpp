// ffscale.hpp — fast-forward core: magnification protocols, the time-scaling
// map, the diagonal-unitary phase condition and its solver, synthesis of the
// diagonal acceleration potential, gauge elimination, and node bookkeeping.
#pragma once

#include "ffscale/dynamics.hpp"
#include "ffscale/qcore.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace ffscale {

inline constexpr double kNodeThreshold = 1e-6; // component magnitude below which V is flagged
inline constexpr double kPotentialCap = 1e6;   // stored potential clamp at flagged points
inline constexpr double kBranchJumpThreshold = 1.5707963267948966; // pi/2

// ---------------------------------------------------------------------------
// Magnification protocol and the reparametrization map Lambda
// ---------------------------------------------------------------------------
struct MagnificationProtocol {
    double alpha_bar = 2.0; // >= 1
    double t0 = 10.0;       // ramp duration, > 0
};

// alpha_bar + (1 - alpha_bar) cos(2 pi t / t0) on [0, t0], then 1
double magnification(double t, const MagnificationProtocol& p);

class ScalingMap {
public:
    double alpha(double t) const;
    double lambda(double t) const;

private:
    friend ScalingMap scaling_map(const MagnificationProtocol& p);
    friend ScalingMap scaling_map(const std::function<double(double)>& alpha_fn,
                                  const TimeGrid& grid);
    std::optional<MagnificationProtocol> protocol_; // closed-form route
    std::function<double(double)> alpha_fn_;        // generic route
    TimeGrid table_grid_;
    std::vector<double> cumulative_; // Simpson table at table_grid_ nodes
};

// closed-form map for the cosine protocol; throws for alpha_bar < 1
ScalingMap scaling_map(const MagnificationProtocol& p);

// composite-Simpson map for a user-supplied alpha; throws if alpha dips below 1
ScalingMap scaling_map(const std::function<double(double)>& alpha_fn, const TimeGrid& grid);

// ---------------------------------------------------------------------------
// Phase trajectory: phi_a(t) with derivatives on a grid
// ---------------------------------------------------------------------------
using TrajectoryFn = std::function<Vector(double)>; // known solution s -> psi(s)

struct PhaseTrajectory {
    TimeGrid grid;
    DiagonalObservableBasis basis;
    Eigen::MatrixXd phases;      // size() x (N-1)
    Eigen::MatrixXd derivatives; // central differences, one-sided at the ends

    // exact-sample lookup; throws OutOfDomainError for off-grid times
    int index_of(double t) const;
};

struct PhaseSolveOptions {
    double tol = 1e-12;       // infinity-norm of the condition residual
    int max_iter = 50;
    double node_threshold = kNodeThreshold;
    double fd_step = 1e-7;    // Jacobian finite-difference step in phi
};

// Finds phi_a(t_k) with Im V(sigma, t_k) = 0 by Newton continuation. The
// residual is evaluated in the amplitude-normalized form
//   r_sigma = Im[ <sigma|(alpha U H(Lambda) U+ - H)|psi_FF> * phase_sigma ],
// which stays finite and full-rank through wavefunction nodes; at flagged
// components the reference phase comes from the component's time derivative
// (five-point stencil), i.e. the continuous-branch limit of the condition.
PhaseTrajectory solve_phase_condition(const TimeDependentOperator& h,
                                      const TrajectoryFn& psi,
                                      const ScalingMap& map,
                                      const DiagonalObservableBasis& basis,
                                      const TimeGrid& grid,
                                      const PhaseSolveOptions& opts = {});

// H_FF(t) = sum_a phidot_a X_a + alpha(t) U(t) H(Lambda(t)) U+(t), defined on
// the phase grid only.
TimeDependentOperator ff_hamiltonian(const TimeDependentOperator& h,
                                     const ScalingMap& map,
                                     const PhaseTrajectory& phases);

// ---------------------------------------------------------------------------
// Acceleration potential
// ---------------------------------------------------------------------------
struct ResidualPotential {
    std::vector<Complex> values;     // V(sigma) = <s|(H_FF - H)psi_FF>/<s|psi_FF>
    std::vector<std::uint8_t> flags; // node flag per component
};

ResidualPotential residual_potential(const Vector& psi_ff, const Matrix& h_ff_val,
                                     const Matrix& h_val,
                                     double node_threshold = kNodeThreshold);

struct NodeEvent {
    double time = 0.0;
    int component = 0;
    int left_sign = 0;  // sign of the potential approaching from below
    int right_sign = 0; // and from above
};

struct AccelerationPotential {
    TimeGrid grid;
    DiagonalObservableBasis basis;
    RealVector v0;      // per grid point (identity coefficient, times N/N)
    Eigen::MatrixXd v;  // size() x (N-1)
    // V(sigma) clamped componentwise; at flagged points the divergence is
    // confined to the vanishing components here, whereas the v0/v_a
    // coefficients clamp independently and lose that cancellation
    Eigen::MatrixXd component_values; // size() x N
    std::vector<std::uint8_t> singular; // per grid point
    std::vector<NodeEvent> events;
    RealVector dropped_v0; // filled by gauge_eliminate
    bool gauge_eliminated = false;

    // V(sigma) recomposed from the stored coefficients: v0/N + sum_a v_a X_a
    double component(int k, int sigma) const;
};

// Decomposes the (real) residual potential onto {I/N, X_a} along the phase
// grid. Flagged points carry values clamped to +-kPotentialCap; unflagged
// points must satisfy |Im V| <= 1e-8 or the phases are rejected.
AccelerationPotential synthesize_potential(const PhaseTrajectory& phases,
                                           const TimeDependentOperator& h,
                                           const TrajectoryFn& psi,
                                           const ScalingMap& map);

// Drops the identity part (v0 -> 0), recording it in dropped_v0. Populations
// of the driven evolution are unaffected by this gauge choice.
AccelerationPotential gauge_eliminate(AccelerationPotential pot);

// Scans |<sigma|psi(Lambda(t))>| < threshold over the grid; one event per
// contiguous run per component, at the time of smallest amplitude.
std::vector<NodeEvent> detect_singularity(const TrajectoryFn& psi, const ScalingMap& map,
                                          const TimeGrid& grid,
                                          double node_threshold = kNodeThreshold);

// Fills left/right divergence signs by probing v_of(component, time -+ probe).
void annotate_side_signs(std::vector<NodeEvent>& events,
                         const std::function<double(int, double)>& v_of, double probe);

// H(t) + diag(V(t)) with V looked up on pot.grid (sample the potential on the
// refined half grid so RK4 stage times resolve) and every component clamped to
// +-stability_cap. The cap keeps fixed-step integration stable across flagged
// nodes; 2/dt is the RK4 stability margin.
TimeDependentOperator driven_hamiltonian(const TimeDependentOperator& h,
                                         const AccelerationPotential& pot,
                                         double stability_cap);

// ---------------------------------------------------------------------------
// small quadrature helper shared with the scenarios
// ---------------------------------------------------------------------------
// cumulative composite Simpson of f over grid nodes; result[k] = int_0^{t_k} f
std::vector<double> cumulative_simpson(const std::function<double(double)>& f,
                                       const TimeGrid& grid);

} // namespace ffscale
