#include "ffscale/qcore.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>
#include <string>

namespace ffscale {

double hermiticity_error(const Matrix& m) {
    return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

double unitarity_error(const Matrix& m) {
    Matrix g = m.adjoint() * m;
    g -= Matrix::Identity(m.rows(), m.cols());
    return g.cwiseAbs().maxCoeff();
}

void require_hermitian(const Matrix& m, double tol, const char* context) {
    if (m.rows() != m.cols()) {
        throw std::invalid_argument(std::string(context) + ": not square");
    }
    const double err = hermiticity_error(m);
    if (!(err <= tol)) {
        throw std::invalid_argument(std::string(context) + ": not Hermitian (max |M - M'| = " +
                                    std::to_string(err) + ")");
    }
}

Matrix pauli(char axis) {
    Matrix m(2, 2);
    switch (axis) {
    case 'x': m << 0, 1, 1, 0; break;
    case 'y': m << 0, Complex(0, -1), Complex(0, 1), 0; break;
    case 'z': m << 1, 0, 0, -1; break;
    default: throw std::invalid_argument("pauli: axis must be 'x', 'y' or 'z'");
    }
    return m;
}

Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

Matrix DiagonalObservableBasis::matrix(int a) const {
    return diagonals.at(static_cast<std::size_t>(a)).cast<Complex>().asDiagonal();
}

RealVector DiagonalObservableBasis::phase_profile(const RealVector& phases) const {
    RealVector f = RealVector::Zero(dim);
    for (int a = 0; a < count(); ++a) {
        f += phases(a) * diagonals[static_cast<std::size_t>(a)];
    }
    return f;
}

DiagonalObservableBasis standard_diagonal_basis(int n) {
    if (n < 2) {
        throw std::invalid_argument("standard_diagonal_basis: dimension must be >= 2");
    }
    DiagonalObservableBasis basis;
    basis.dim = n;
    if (n == 2) {
        RealVector x(2);
        x << 0.5, -0.5;
        basis.diagonals.push_back(x);
    } else if (n == 4) {
        // two-spin convention: sz(1), sz(2), sz(1)sz(2)
        RealVector x1(4), x2(4), x3(4);
        x1 << 1, 1, -1, -1;
        x2 << 1, -1, 1, -1;
        x3 << 1, -1, -1, 1;
        basis.diagonals.push_back(x1);
        basis.diagonals.push_back(x2);
        basis.diagonals.push_back(x3);
    } else {
        // ladder: a ones followed by -a, zeros elsewhere
        for (int a = 1; a < n; ++a) {
            RealVector x = RealVector::Zero(n);
            for (int i = 0; i < a; ++i) x(i) = 1.0;
            x(a) = -static_cast<double>(a);
            basis.diagonals.push_back(x);
        }
    }
    validate_basis(basis);
    return basis;
}

void validate_basis(const DiagonalObservableBasis& basis) {
    const int n = basis.dim;
    if (n < 2) throw std::invalid_argument("diagonal basis: dimension must be >= 2");
    if (basis.count() != n - 1) {
        throw std::invalid_argument("diagonal basis: expected N-1 operators");
    }
    // stacked diagonals plus the identity must have rank N
    Eigen::MatrixXd stack(n, n);
    stack.col(0).setOnes();
    for (int a = 0; a < n - 1; ++a) {
        const RealVector& x = basis.diagonals[static_cast<std::size_t>(a)];
        if (x.size() != n) throw std::invalid_argument("diagonal basis: wrong length");
        if (std::abs(x.sum()) > 1e-12) {
            throw std::invalid_argument("diagonal basis: operator not traceless");
        }
        stack.col(a + 1) = x;
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(stack);
    if (lu.rank() != n) {
        throw std::invalid_argument("diagonal basis: operators not independent with identity");
    }
}

Matrix diagonal_phase_unitary(const RealVector& phases,
                              const DiagonalObservableBasis& basis) {
    if (phases.size() != basis.count()) {
        throw std::invalid_argument("diagonal_phase_unitary: phase count mismatch");
    }
    const RealVector f = basis.phase_profile(phases);
    Vector diag(basis.dim);
    for (int i = 0; i < basis.dim; ++i) {
        diag(i) = std::exp(Complex(0, -f(i)));
    }
    return diag.asDiagonal();
}

double SpectralDecomposition::min_gap() const {
    double gap = std::numeric_limits<double>::infinity();
    for (int i = 0; i + 1 < dim(); ++i) {
        gap = std::min(gap, energies(i + 1) - energies(i));
    }
    return gap;
}

SpectralDecomposition spectral_decompose(const Matrix& h, double t) {
    require_hermitian(h, kUnitaryTol, "spectral_decompose");
    Eigen::SelfAdjointEigenSolver<Matrix> solver(0.5 * (h + h.adjoint()));
    if (solver.info() != Eigen::Success) {
        throw std::runtime_error("spectral_decompose: eigensolver failed");
    }
    SpectralDecomposition out;
    out.time = t;
    out.energies = solver.eigenvalues();
    out.eigenvectors = solver.eigenvectors();
    // phase convention: largest-magnitude component real and positive
    for (int n = 0; n < out.dim(); ++n) {
        Eigen::Index imax = 0;
        out.eigenvectors.col(n).cwiseAbs().maxCoeff(&imax);
        const Complex c = out.eigenvectors(imax, n);
        out.eigenvectors.col(n) *= std::conj(c) / std::abs(c);
    }
    out.degenerate = out.dim() > 1 && out.min_gap() < kDegeneracyGap;
    return out;
}

void align_phases(SpectralDecomposition& cur, const SpectralDecomposition& ref) {
    for (int n = 0; n < cur.dim(); ++n) {
        const Complex ov = ref.eigenvectors.col(n).dot(cur.eigenvectors.col(n));
        if (std::abs(ov) > 0) {
            cur.eigenvectors.col(n) *= std::conj(ov) / std::abs(ov);
        }
    }
}

} // namespace ffscale
