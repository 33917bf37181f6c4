// scenarios.hpp — the worked examples as reproducible pipelines with
// closed-form reference solutions: the two-level rotation, the two-spin
// entangler, the decreasing-field feasibility study, and the adiabatic
// (counterdiabatic / invariant) cross-checks.
#pragma once

#include "ffscale/shortcuts.hpp"

#include <cmath>
#include <functional>
#include <string>
#include <vector>

namespace ffscale {

inline constexpr double kDefaultOmega = 3.14159265358979323846 / 40.0;

struct TwoLevelScenario {
    double omega = kDefaultOmega; // t_f = pi/(2 omega) = 20 unscaled
    double alpha_bar = 2.0;
    double t0 = 10.0;
    double dt = 1e-3;
    bool gauge_eliminate_v0 = true; // reported potential only; the drive keeps v0
};

struct TwoSpinScenario {
    double omega = kDefaultOmega;
    double alpha_bar = 2.0;
    double t0 = 10.0;
    double dt = 1e-3;
    bool gauge_eliminate_v0 = true;
};

struct DecreasingFieldScenario {
    std::function<double(double)> envelope; // h(t) > 0
    double omega = kDefaultOmega;
    double t_end = 10.0;
    double dt = 1e-3;
};

// field (h0 cos wt, -w, h0 sin wt) with h0 = 1
TimeDependentOperator two_level_hamiltonian(double omega);
Eigen::Vector3d two_level_field(double t, double omega);
Vector two_level_exact(double t, double omega);

// adiabatic part only: (cos wt, 0, sin wt)
TimeDependentOperator two_level_adiabatic(double omega);

TimeDependentOperator two_spin_hamiltonian(double omega);
Vector two_spin_exact(double t, double omega);

TimeDependentOperator decreasing_field_hamiltonian(const std::function<double(double)>& envelope,
                                                   double omega);
// closed form from the envelope integral (composite Simpson, panels <= 1e-3)
Vector decreasing_field_exact(double t, const std::function<double(double)>& envelope,
                              double omega);

// ---------------------------------------------------------------------------
struct ScenarioResult {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> series; // column-major, equal lengths
    std::vector<NodeEvent> events;
    bool any_clamped = false;
    bool infeasible = false;
    double first_infeasible_time = std::numeric_limits<double>::quiet_NaN();
    std::string verdict;           // decreasing-field only
    double max_pop_deviation = 0;  // numeric vs analytic, flagged points excluded

    std::size_t rows() const { return series.empty() ? 0 : series.front().size(); }
};

ScenarioResult run_two_level(const TwoLevelScenario& s);
ScenarioResult run_two_spin(const TwoSpinScenario& s);
ScenarioResult run_decreasing_field(const DecreasingFieldScenario& s,
                                    const MagnificationProtocol& p);

// transitionless driving and invariant diagnostics on the two-level model
ScenarioResult run_cd_check(const TwoLevelScenario& s);
ScenarioResult run_invariant_check(const TwoLevelScenario& s);

} // namespace ffscale
