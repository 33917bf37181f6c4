#include "ffscale/qcore.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace ffscale;

namespace {

Matrix random_hermitian(int n, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) m(i, j) = Complex(u(rng), u(rng));
    }
    return 0.5 * (m + m.adjoint()).eval();
}

Vector random_state(int n, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Vector v(n);
    for (int i = 0; i < n; ++i) v(i) = Complex(u(rng), u(rng));
    return v / v.norm();
}

} // namespace

TEST_CASE("pauli matrices") {
    const Matrix z = pauli('z');
    CHECK(std::abs(z(0, 0) - Complex(1, 0)) == 0.0);
    CHECK(std::abs(z(1, 1) - Complex(-1, 0)) == 0.0);
    CHECK(std::abs(z(0, 1)) == 0.0);

    const Matrix x = pauli('x');
    CHECK(((x * x) - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() == 0.0);

    const Matrix y = pauli('y');
    const Matrix comm = x * y - y * x;
    CHECK((comm - 2.0 * Complex(0, 1) * z).cwiseAbs().maxCoeff() == 0.0);

    for (char axis : {'x', 'y', 'z'}) {
        const Matrix p = pauli(axis);
        CHECK(hermiticity_error(p) == 0.0);
        CHECK(unitarity_error(p) <= 1e-15);
        CHECK(std::abs(p.trace()) == 0.0);
    }
    CHECK_THROWS_AS(pauli('w'), std::invalid_argument);
}

TEST_CASE("kron products") {
    const Matrix id = Matrix::Identity(2, 2);
    CHECK((kron(id, id) - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() == 0.0);

    // eigenaction of sz x I on the second basis vector (up, down)
    Vector e1 = Vector::Zero(4);
    e1(1) = 1.0;
    CHECK((kron(pauli('z'), id) * e1 - e1).cwiseAbs().maxCoeff() == 0.0);

    const Matrix zz = kron(pauli('z'), pauli('z'));
    Vector diag(4);
    diag << 1, -1, -1, 1;
    CHECK((zz - Matrix(diag.asDiagonal())).cwiseAbs().maxCoeff() == 0.0);

    // mixed product rule (A x B)(C x D) = AC x BD
    const Matrix a = random_hermitian(2, 11), b = random_hermitian(3, 12);
    const Matrix c = random_hermitian(2, 13), d = random_hermitian(3, 14);
    CHECK((kron(a, b) * kron(c, d) - kron((a * c).eval(), (b * d).eval()))
              .cwiseAbs()
              .maxCoeff() <= 1e-12);

    // associativity is exact for integer-valued matrices
    const Matrix x = pauli('x'), z = pauli('z');
    CHECK((kron(kron(x, z), id) - kron(x, kron(z, id))).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("standard diagonal bases") {
    const DiagonalObservableBasis b2 = standard_diagonal_basis(2);
    REQUIRE(b2.count() == 1);
    CHECK(b2.diagonals[0](0) == 0.5);
    CHECK(b2.diagonals[0](1) == -0.5);

    const DiagonalObservableBasis b4 = standard_diagonal_basis(4);
    REQUIRE(b4.count() == 3);
    RealVector x1(4), x2(4), x3(4);
    x1 << 1, 1, -1, -1;
    x2 << 1, -1, 1, -1;
    x3 << 1, -1, -1, 1;
    CHECK((b4.diagonals[0] - x1).cwiseAbs().maxCoeff() == 0.0);
    CHECK((b4.diagonals[1] - x2).cwiseAbs().maxCoeff() == 0.0);
    CHECK((b4.diagonals[2] - x3).cwiseAbs().maxCoeff() == 0.0);

    for (int n : {2, 3, 4, 5, 7}) {
        const DiagonalObservableBasis b = standard_diagonal_basis(n);
        for (int a = 0; a < b.count(); ++a) {
            CHECK(std::abs(b.diagonals[a].sum()) <= 1e-12); // traceless
            for (int c2 = 0; c2 < b.count(); ++c2) {
                const Matrix comm = b.matrix(a) * b.matrix(c2) - b.matrix(c2) * b.matrix(a);
                CHECK(comm.cwiseAbs().maxCoeff() <= 1e-12); // commuting
            }
        }
        CHECK_NOTHROW(validate_basis(b)); // independent together with identity
    }
    CHECK_THROWS_AS(standard_diagonal_basis(1), std::invalid_argument);
}

TEST_CASE("diagonal phase unitary") {
    const DiagonalObservableBasis b2 = standard_diagonal_basis(2);
    RealVector zero(1);
    zero << 0.0;
    CHECK((diagonal_phase_unitary(zero, b2) - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() ==
          0.0);

    RealVector pi_phase(1);
    pi_phase << 3.14159265358979323846;
    const Matrix u = diagonal_phase_unitary(pi_phase, b2);
    CHECK(std::abs(u(0, 0) - Complex(0, -1)) <= 1e-15);
    CHECK(std::abs(u(1, 1) - Complex(0, 1)) <= 1e-15);

    // populations preserved, unitarity, commutation with the basis
    const DiagonalObservableBasis b4 = standard_diagonal_basis(4);
    RealVector phases(3);
    phases << 0.3, -1.1, 2.4;
    const Matrix u4 = diagonal_phase_unitary(phases, b4);
    CHECK(unitarity_error(u4) <= 1e-12);
    for (int a = 0; a < 3; ++a) {
        CHECK((u4 * b4.matrix(a) - b4.matrix(a) * u4).cwiseAbs().maxCoeff() <= 1e-12);
    }
    const Vector psi = random_state(4, 21);
    const Vector rotated = u4 * psi;
    for (int s = 0; s < 4; ++s) {
        CHECK(std::abs(std::norm(rotated(s)) - std::norm(psi(s))) <= 1e-14);
    }
}

TEST_CASE("spectral decomposition basics") {
    const Matrix h = 0.5 * pauli('z');
    const SpectralDecomposition d = spectral_decompose(h);
    CHECK(d.energies(0) == doctest::Approx(-0.5).epsilon(1e-14));
    CHECK(d.energies(1) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(std::abs(d.eigenvectors(1, 0) - Complex(1, 0)) <= 1e-14); // ground (0,1)
    CHECK(std::abs(d.eigenvectors(0, 1) - Complex(1, 0)) <= 1e-14); // excited (1,0)
    CHECK_FALSE(d.degenerate);
}

TEST_CASE("spectral decomposition matches the polar-angle eigenvectors") {
    const double omega = 3.14159265358979323846 / 40.0;
    for (double t : {0.3, 2.0, 7.7}) {
        const double theta = 3.14159265358979323846 / 2 - omega * t;
        Matrix h(2, 2);
        h << std::cos(theta), std::sin(theta), std::sin(theta), -std::cos(theta);
        h *= 0.5;
        const SpectralDecomposition d = spectral_decompose(h, t);
        Vector up(2), down(2);
        up << std::cos(theta / 2), std::sin(theta / 2);
        down << -std::sin(theta / 2), std::cos(theta / 2);
        // same rays up to the phase convention
        CHECK(std::abs(std::abs(up.dot(d.state(1))) - 1.0) <= 1e-12);
        CHECK(std::abs(std::abs(down.dot(d.state(0))) - 1.0) <= 1e-12);
        // convention: largest-magnitude component real and positive
        for (int n = 0; n < 2; ++n) {
            Eigen::Index imax = 0;
            d.state(n).cwiseAbs().maxCoeff(&imax);
            CHECK(std::abs(std::imag(d.state(n)(imax))) <= 1e-12);
            CHECK(std::real(d.state(n)(imax)) > 0.0);
        }
    }
}

TEST_CASE("spectral decomposition reconstruction and completeness") {
    const Matrix h = random_hermitian(4, 31);
    const SpectralDecomposition d = spectral_decompose(h);
    Matrix rebuilt = Matrix::Zero(4, 4);
    Matrix complete = Matrix::Zero(4, 4);
    for (int n = 0; n < 4; ++n) {
        rebuilt += d.energies(n) * (d.state(n) * d.state(n).adjoint());
        complete += d.state(n) * d.state(n).adjoint();
    }
    CHECK((rebuilt - h).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK((complete - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() <= 1e-10);
    for (int m = 0; m < 4; ++m) {
        for (int n = 0; n < 4; ++n) {
            const double expect = m == n ? 1.0 : 0.0;
            CHECK(std::abs(d.state(m).dot(d.state(n)) - expect) <= 1e-10);
        }
    }
}

TEST_CASE("spectral decomposition rejects non-Hermitian input and flags degeneracy") {
    Matrix bad(2, 2);
    bad << 0, 1, 0, 0;
    CHECK_THROWS_AS(spectral_decompose(bad), std::invalid_argument);

    const SpectralDecomposition d = spectral_decompose(Matrix::Identity(3, 3));
    CHECK(d.degenerate);
}

TEST_CASE("phase alignment builds a continuous branch") {
    const double omega = 0.3;
    const Matrix a = random_hermitian(3, 41), b = random_hermitian(3, 42);
    SpectralDecomposition prev = spectral_decompose(a, 0.0);
    for (int k = 1; k <= 50; ++k) {
        const double t = 0.02 * k;
        SpectralDecomposition cur = spectral_decompose(a + std::sin(omega * t) * b, t);
        align_phases(cur, prev);
        for (int n = 0; n < 3; ++n) {
            const Complex ov = prev.state(n).dot(cur.state(n));
            CHECK(std::real(ov) > 0.9); // small steps keep the branch close
            CHECK(std::abs(std::imag(ov)) <= 1e-12);
        }
        prev = cur;
    }
}
