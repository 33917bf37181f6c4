// qcore.hpp — small dense complex algebra: Pauli/Kronecker helpers, diagonal
// observable bases, and Hermitian eigendecomposition with a fixed phase
// convention.
#pragma once

#include <Eigen/Dense>

#include <complex>
#include <vector>

namespace ffscale {

using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using Complex = std::complex<double>;

inline constexpr double kHermitianTol = 1e-12;
inline constexpr double kUnitaryTol = 1e-10;
inline constexpr double kDegeneracyGap = 1e-10;

// max |M - M†| over entries
double hermiticity_error(const Matrix& m);

// max |M†M - I| over entries
double unitarity_error(const Matrix& m);

// throws std::invalid_argument when the Hermitian tag would be violated
void require_hermitian(const Matrix& m, double tol = kHermitianTol,
                       const char* context = "matrix");

Matrix pauli(char axis); // 'x', 'y' or 'z'

Matrix kron(const Matrix& a, const Matrix& b);

// ---------------------------------------------------------------------------
// Diagonal observable basis {X_a}: N-1 traceless real diagonal matrices,
// linearly independent together with the identity.
// ---------------------------------------------------------------------------
struct DiagonalObservableBasis {
    int dim = 0;
    std::vector<RealVector> diagonals; // N-1 entries, each of length N

    int count() const { return static_cast<int>(diagonals.size()); }
    Matrix matrix(int a) const;

    // f_sigma = sum_a phases[a] * (X_a)_{sigma sigma}
    RealVector phase_profile(const RealVector& phases) const;
};

// N = 2 -> {sigma_z/2}; N = 4 -> {sz x I, I x sz, sz x sz}; otherwise a
// ladder of integer-valued traceless diagonals. Throws for N < 2.
DiagonalObservableBasis standard_diagonal_basis(int n);

// validates the basis invariants (tracelessness, rank together with identity)
void validate_basis(const DiagonalObservableBasis& basis);

// exp(-i sum_a phases[a] X_a), entrywise on the diagonal
Matrix diagonal_phase_unitary(const RealVector& phases,
                              const DiagonalObservableBasis& basis);

// ---------------------------------------------------------------------------
// Spectral decomposition with deterministic phases: eigenvalues ascending,
// each eigenvector's largest-magnitude component made real and positive.
// ---------------------------------------------------------------------------
struct SpectralDecomposition {
    double time = 0.0;
    RealVector energies;  // ascending
    Matrix eigenvectors;  // columns
    bool degenerate = false;

    int dim() const { return static_cast<int>(energies.size()); }
    Vector state(int n) const { return eigenvectors.col(n); }
    double min_gap() const;
};

SpectralDecomposition spectral_decompose(const Matrix& h, double t = 0.0);

// Rotates each eigenvector of `cur` by a unit phase so that <ref_n|cur_n> is
// real and positive; used to build a continuous branch along a time grid.
void align_phases(SpectralDecomposition& cur, const SpectralDecomposition& ref);

} // namespace ffscale
