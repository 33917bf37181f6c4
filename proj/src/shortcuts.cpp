#include "ffscale/shortcuts.hpp"

#include "ffscale/errors.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ffscale {

SpectralDecomposition AdiabaticModel::decomposition_at(double t,
                                                       const SpectralDecomposition* ref) const {
    SpectralDecomposition d = spectral_decompose(h_ad(t), t);
    if (ref) align_phases(d, *ref);
    return d;
}

namespace {

void require_nondegenerate(const SpectralDecomposition& d) {
    const double gap = d.min_gap();
    if (gap < kCdMinGap) throw DegenerateSpectrumError(gap);
}

// eigenvector time derivatives at t by phase-aligned central differences
Matrix eigenvector_derivatives(const AdiabaticModel& model, double t, double dt_fd,
                               SpectralDecomposition& center) {
    center = model.decomposition_at(t);
    require_nondegenerate(center);
    SpectralDecomposition plus = model.decomposition_at(t + dt_fd, &center);
    SpectralDecomposition minus = model.decomposition_at(t - dt_fd, &center);
    return (plus.eigenvectors - minus.eigenvectors) / (2.0 * dt_fd);
}

} // namespace

Matrix counterdiabatic_term(const AdiabaticModel& model, double t, double dt_fd) {
    SpectralDecomposition d;
    const Matrix dvec = eigenvector_derivatives(model, t, dt_fd, d);
    const int n = d.dim();
    Matrix cd = Matrix::Zero(n, n);
    for (int state = 0; state < n; ++state) {
        const Vector ket = d.state(state);
        const Vector dket = dvec.col(state);
        const Vector proj = dket - ket * ket.dot(dket);
        cd += Complex(0, 1) * (proj * ket.adjoint());
    }
    cd = 0.5 * (cd + cd.adjoint()).eval();
    // exact zeros on the eigen-diagonal
    for (int state = 0; state < n; ++state) {
        const Vector ket = d.state(state);
        cd -= (ket.dot(cd * ket)) * (ket * ket.adjoint());
    }
    return cd;
}

Eigen::Vector3d cd_two_level(const std::function<Eigen::Vector3d(double)>& h, double t,
                             double dt_fd) {
    const Eigen::Vector3d hv = h(t);
    if (hv.norm() < 1e-9) {
        throw DegenerateSpectrumError(hv.norm());
    }
    const Eigen::Vector3d hdot = (h(t + dt_fd) - h(t - dt_fd)) / (2.0 * dt_fd);
    return hv.cross(hdot) / hv.squaredNorm();
}

Matrix deformed_cd(const AdiabaticModel& model, int n, double t, double dt_fd) {
    SpectralDecomposition d;
    const Matrix dvec = eigenvector_derivatives(model, t, dt_fd, d);
    if (n < 0 || n >= d.dim()) {
        throw std::invalid_argument("deformed_cd: state index out of range");
    }
    const Vector ket = d.state(n);
    const Vector dket = dvec.col(n);
    const Vector proj = dket - ket * ket.dot(dket);
    const Matrix half = Complex(0, 1) * (proj * ket.adjoint());
    return half + half.adjoint();
}

// ---------------------------------------------------------------------------
// fast-forward conditions for adiabatic states
// ---------------------------------------------------------------------------
namespace {

// Aligned eigenstate branch over a span of the reparametrized time, with
// anchors dense enough that aligning any decomposition to its nearest anchor
// reproduces the continuous branch.
class EigenBranch {
public:
    EigenBranch(const AdiabaticModel& model, double s_begin, double s_end, double spacing)
        : model_(model) {
        const int count = std::max(2, static_cast<int>(std::ceil((s_end - s_begin) / spacing)) + 1);
        anchors_.reserve(static_cast<std::size_t>(count));
        const double step = (s_end - s_begin) / (count - 1);
        SpectralDecomposition prev = model.decomposition_at(s_begin);
        require_nondegenerate(prev);
        anchors_.push_back(prev);
        for (int i = 1; i < count; ++i) {
            SpectralDecomposition cur = model.decomposition_at(s_begin + i * step, &prev);
            require_nondegenerate(cur);
            anchors_.push_back(cur);
            prev = anchors_.back();
        }
        s_begin_ = s_begin;
        step_ = step;
    }

    SpectralDecomposition at(double s) const {
        const int idx = std::min(
            std::max(static_cast<int>(std::lround((s - s_begin_) / step_)), 0),
            static_cast<int>(anchors_.size()) - 1);
        return model_.decomposition_at(s, &anchors_[static_cast<std::size_t>(idx)]);
    }

    Vector state(double s, int n) const { return at(s).state(n); }

private:
    const AdiabaticModel& model_;
    std::vector<SpectralDecomposition> anchors_;
    double s_begin_ = 0.0;
    double step_ = 0.0;
};

} // namespace

AccelerationPotential FFConditionSolution::potential() const {
    AccelerationPotential pot;
    pot.grid = grid;
    pot.basis = basis;
    pot.v0 = v0;
    pot.v = v;
    pot.singular = singular;
    pot.dropped_v0 = RealVector::Zero(grid.size());
    pot.component_values.resize(grid.size(), basis.dim);
    for (int k = 0; k < grid.size(); ++k) {
        for (int s = 0; s < basis.dim; ++s) {
            pot.component_values(k, s) =
                std::clamp(pot.component(k, s), -kPotentialCap, kPotentialCap);
        }
    }
    for (int k = 0; k < grid.size(); ++k) {
        if (singular[static_cast<std::size_t>(k)] &&
            (k == 0 || !singular[static_cast<std::size_t>(k - 1)])) {
            NodeEvent ev;
            ev.time = grid.time(k);
            ev.component = -1;
            pot.events.push_back(ev);
        }
    }
    return pot;
}

FFConditionSolution ff_conditions_solve(const AdiabaticModel& model, int n,
                                        const ScalingMap& map,
                                        const DiagonalObservableBasis& basis,
                                        const TimeGrid& grid, double dt_fd) {
    const int dim = model.h_ad.dim;
    if (n < 0 || n >= dim) {
        throw std::invalid_argument("ff_conditions_solve: state index out of range");
    }

    // branch of |n(s)| over the reparametrized span, with margin for the
    // node-phase stencils of the shared solver
    const double margin = 4.0 * grid.dt;
    EigenBranch branch(model, map.lambda(grid.t_start - margin) - 1e-9,
                       map.lambda(grid.t_end + margin) + 1e-9,
                       std::max(grid.dt, 1e-3));

    // transitionless Hamiltonian H_ad + H_cd
    TimeDependentOperator h_total;
    h_total.dim = dim;
    const AdiabaticModel* model_ptr = &model;
    h_total.eval = [model_ptr, dt_fd](double t) {
        return Matrix(model_ptr->h_ad(t) + counterdiabatic_term(*model_ptr, t, dt_fd));
    };

    TrajectoryFn eigen_traj = [&branch, n](double s) { return branch.state(s, n); };

    FFConditionSolution sol;
    sol.grid = grid;
    sol.basis = basis;
    sol.target_state = n;
    sol.phases = solve_phase_condition(h_total, eigen_traj, map, basis, grid);
    sol.v0.resize(grid.size());
    sol.v.resize(grid.size(), basis.count());
    sol.singular.assign(static_cast<std::size_t>(grid.size()), 0);
    sol.residuals = RealVector::Zero(grid.size());

    const int na = basis.count();
    for (int k = 0; k < grid.size(); ++k) {
        const double t = grid.time(k);
        const double s = map.lambda(t);
        const double a = map.alpha(t);
        const SpectralDecomposition d = branch.at(s);
        const Vector n_l = d.state(n);

        // node flag: vanishing component of the target eigenstate
        for (int comp = 0; comp < dim; ++comp) {
            if (std::abs(n_l(comp)) < kNodeThreshold) {
                sol.singular[static_cast<std::size_t>(k)] = 1;
            }
        }

        const Eigen::VectorXd phi = sol.phases.phases.row(k).transpose();
        const Eigen::VectorXd phidot = sol.phases.derivatives.row(k).transpose();
        const Matrix u = diagonal_phase_unitary(phi, basis);
        const Vector n_t = u * n_l;
        const Matrix h_val = h_total(t);

        // aligned eigenvector derivative in the reparametrized time
        const SpectralDecomposition dp = model.decomposition_at(s + dt_fd, &d);
        const SpectralDecomposition dm = model.decomposition_at(s - dt_fd, &d);
        const Vector n_prime = (dp.state(n) - dm.state(n)) / (2.0 * dt_fd);

        // least squares for x = (v_1..v_{N-1}, v0):
        //   off-diagonal rows:  sum_a v_a <m~|X_a|n~> = i<m~|d n~/dt> - <m~|H|n~>
        //   diagonal row:       v0/N + sum_a v_a <n~|X_a|n~>
        //                         = alpha E_n(Lambda) + sum_a phidot_a <n~|X_a|n~> - <n~|H|n~>
        Eigen::MatrixXd lhs(2 * (dim - 1) + 1, na + 1);
        Eigen::VectorXd rhs(2 * (dim - 1) + 1);
        int row = 0;
        for (int m = 0; m < dim; ++m) {
            if (m == n) continue;
            const Vector m_t = u * d.state(m);
            Complex rhs_c = -(m_t.dot(h_val * n_t));
            // i<m~|d n~/dt> = sum_a phidot_a <m~|X_a|n~> + i alpha <m(L)|n'(L)>
            rhs_c += Complex(0, 1) * a * (d.state(m).dot(n_prime));
            for (int x = 0; x < na; ++x) {
                const Complex xa_el =
                    m_t.dot(basis.diagonals[static_cast<std::size_t>(x)]
                                .cast<Complex>()
                                .cwiseProduct(n_t));
                rhs_c += phidot(x) * xa_el;
                lhs(row, x) = std::real(xa_el);
                lhs(row + 1, x) = std::imag(xa_el);
            }
            lhs(row, na) = 0.0;
            lhs(row + 1, na) = 0.0;
            rhs(row) = std::real(rhs_c);
            rhs(row + 1) = std::imag(rhs_c);
            row += 2;
        }
        {
            double rhs_d = a * d.energies(n) - std::real(n_t.dot(h_val * n_t));
            for (int x = 0; x < na; ++x) {
                const double xa_nn = std::real(
                    n_t.dot(basis.diagonals[static_cast<std::size_t>(x)]
                                .cast<Complex>()
                                .cwiseProduct(n_t)));
                rhs_d += phidot(x) * xa_nn;
                lhs(row, x) = xa_nn;
            }
            lhs(row, na) = 1.0 / dim;
            rhs(row) = rhs_d;
        }

        const Eigen::VectorXd x = lhs.colPivHouseholderQr().solve(rhs);
        sol.residuals(k) = (lhs * x - rhs).lpNorm<Eigen::Infinity>();
        for (int xi = 0; xi < na; ++xi) {
            sol.v(k, xi) = std::clamp(x(xi), -kPotentialCap, kPotentialCap);
        }
        sol.v0(k) = std::clamp(x(na), -kPotentialCap, kPotentialCap);
    }
    return sol;
}

// ---------------------------------------------------------------------------
// Lewis-Riesenfeld invariant
// ---------------------------------------------------------------------------
Matrix LRInvariant::value_at(double t) const {
    const SpectralDecomposition d = model.decomposition_at(t);
    if (d.degenerate) throw DegenerateSpectrumError(d.min_gap());
    Matrix f = Matrix::Zero(d.dim(), d.dim());
    for (int s = 0; s < d.dim(); ++s) {
        f += eigenvalues(s) * (d.state(s) * d.state(s).adjoint());
    }
    return f;
}

LRInvariant lr_build(const RealVector& eigenvalues, const AdiabaticModel& model) {
    if (eigenvalues.size() != model.h_ad.dim) {
        throw std::invalid_argument("lr_build: eigenvalue count must match the dimension");
    }
    LRInvariant inv;
    inv.eigenvalues = eigenvalues;
    inv.model = model;
    return inv;
}

double lr_dynamical_residual(const LRInvariant& inv, const TimeDependentOperator& h,
                             const TimeGrid& grid) {
    double worst = 0.0;
    for (int k = 1; k < grid.n_steps; ++k) {
        const double t = grid.time(k);
        const Matrix f = inv.value_at(t);
        const Matrix df = (inv.value_at(grid.time(k + 1)) - inv.value_at(grid.time(k - 1))) /
                          (2.0 * grid.dt);
        const Matrix hv = h(t);
        const Matrix res = Complex(0, 1) * df - (hv * f - f * hv);
        worst = std::max(worst, res.cwiseAbs().maxCoeff());
    }
    return worst;
}

double lr_ff_check(const LRInvariant& inv, const ScalingMap& map,
                   const PhaseTrajectory& phases, const AccelerationPotential& pot,
                   const TimeDependentOperator& h, const TimeGrid& grid) {
    auto f_ff = [&](int k) -> Matrix {
        const double t = grid.time(k);
        const Matrix u =
            diagonal_phase_unitary(phases.phases.row(phases.index_of(t)).transpose(),
                                   phases.basis);
        return u * inv.value_at(map.lambda(t)) * u.adjoint();
    };
    auto pot_index = [&](double t) {
        return static_cast<int>(std::lround((t - pot.grid.t_start) / pot.grid.dt));
    };
    // skip points within two coarse steps of any flagged node
    const int span = std::max(1, static_cast<int>(std::lround(grid.dt / pot.grid.dt)));
    auto flagged_near = [&](int k) {
        const int pk = pot_index(grid.time(k));
        for (int j = std::max(0, pk - 2 * span); j <= std::min(pot.grid.n_steps, pk + 2 * span);
             ++j) {
            if (pot.singular[static_cast<std::size_t>(j)]) return true;
        }
        return false;
    };
    double worst = 0.0;
    for (int k = 1; k < grid.n_steps; ++k) {
        if (flagged_near(k)) continue;
        const double t = grid.time(k);
        const Matrix f = f_ff(k);
        const Matrix df = (f_ff(k + 1) - f_ff(k - 1)) / (2.0 * grid.dt);
        Matrix hv = h(t);
        const int pk = pot_index(t);
        for (int s = 0; s < pot.basis.dim; ++s) {
            hv(s, s) += pot.component(pk, s);
        }
        const Matrix res = Complex(0, 1) * df - (hv * f - f * hv);
        worst = std::max(worst, res.cwiseAbs().maxCoeff());
    }
    return worst;
}

} // namespace ffscale
