#include <ususy/operators.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace ususy;

namespace {

Mat random_matrix(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Mat A(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) A(i, j) = cplx(g(rng), g(rng));
    return A;
}

// Trapezoid on a fine grid; phi decays like a Gaussian so the rule is
// spectrally accurate on [-L, L].
double overlap_quadrature(int m, int n, double L = 12.0, int N = 24001) {
    const double h = 2 * L / (N - 1);
    double s = 0.0;
    for (int i = 0; i < N; ++i) {
        const double r = -L + i * h;
        const double w = (i == 0 || i == N - 1) ? 0.5 : 1.0;
        s += w * ho_wavefunction(m, r) * ho_wavefunction(n, r);
    }
    return s * h;
}

}  // namespace

TEST(BosonOps, TwoLevelAnnihilation) {
    auto ops = boson_ops(FockSpace{2});
    EXPECT_EQ(ops.a(0, 1), cplx(1.0));
    EXPECT_EQ((ops.a.array() != cplx{}).count(), 1);
}

TEST(BosonOps, NumberOperatorDiagonal) {
    auto ops = boson_ops(FockSpace{3});
    Mat expected = Mat::Zero(3, 3);
    expected.diagonal() << 0.0, 1.0, 2.0;
    EXPECT_LT((ops.n - expected).norm(), 1e-14);
}

TEST(BosonOps, CommutatorTruncationArtifact) {
    const int M = 8;
    auto ops = boson_ops(FockSpace{M});
    // entries of a written out independently
    Mat a = Mat::Zero(M, M);
    for (int n = 1; n < M; ++n) a(n - 1, n) = std::sqrt(double(n));
    Mat comm = ops.a * ops.adag - ops.adag * ops.a;
    EXPECT_LT((ops.a - a).norm(), 1e-15);
    for (int i = 0; i < M; ++i)
        for (int j = 0; j < M; ++j) {
            cplx want = i == j ? cplx(i == M - 1 ? 1.0 - M : 1.0) : cplx{};
            EXPECT_NEAR(std::abs(comm(i, j) - want), 0.0, 1e-12);
        }
    Mat shifted = comm - Mat::Identity(M, M);
    EXPECT_NEAR(shifted(M - 1, M - 1).real(), -double(M), 1e-12);
    EXPECT_NEAR(shifted.topLeftCorner(M - 1, M - 1).norm(), 0.0, 1e-12);
}

TEST(BosonOps, RejectsEmptySpace) { EXPECT_THROW(FockSpace{0}, InvalidArgument); }

TEST(SpinGenerators, SpinHalf) {
    auto s = spin_generators(1);
    EXPECT_EQ(s.S_z(0, 0), cplx(1.0));
    EXPECT_EQ(s.S_z(1, 1), cplx(-1.0));
    EXPECT_EQ(s.S_plus(0, 1), cplx(1.0));
}

TEST(SpinGenerators, SpinOneEntries) {
    auto s = spin_generators(2);
    EXPECT_NEAR(s.S_plus(0, 1).real(), std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(s.S_plus(1, 2).real(), std::sqrt(2.0), 1e-15);
    EXPECT_EQ(s.S_z(0, 0), cplx(2.0));
    EXPECT_EQ(s.S_z(1, 1), cplx(0.0));
    EXPECT_EQ(s.S_z(2, 2), cplx(-2.0));
}

TEST(SpinGenerators, AlgebraUpToTwenty) {
    for (int p = 1; p <= 20; ++p) {
        auto s = spin_generators(p);
        Mat c1 = s.S_plus * s.S_minus - s.S_minus * s.S_plus - s.S_z;
        Mat c2 = s.S_z * s.S_plus - s.S_plus * s.S_z - 2.0 * s.S_plus;
        Mat c3 = s.S_z * s.S_minus - s.S_minus * s.S_z + 2.0 * s.S_minus;
        EXPECT_LT(c1.cwiseAbs().maxCoeff(), 1e-12) << p;
        EXPECT_LT(c2.cwiseAbs().maxCoeff(), 1e-12) << p;
        EXPECT_LT(c3.cwiseAbs().maxCoeff(), 1e-12) << p;
    }
    EXPECT_THROW(spin_generators(0), InvalidArgument);
}

TEST(Kron, IdentityAndDiagonal) {
    EXPECT_LT((kron(identity(2), identity(3)) - identity(6)).norm(), 1e-15);
    Mat d = Mat::Zero(2, 2);
    d(1, 1) = 1.0;
    Mat want = Mat::Zero(4, 4);
    want.diagonal() << 0.0, 1.0, 0.0, -1.0;
    EXPECT_LT((kron(pauli::z(), d) - want).norm(), 1e-15);
}

TEST(Kron, SinglePlacement) {
    Mat k = kron(pauli::plus(), annihilation(2));
    EXPECT_EQ((k.array() != cplx{}).count(), 1);
    // sigma+ at (0,1), a at (0,1) -> row 0*2+0, col 1*2+1
    EXPECT_EQ(k(0, 3), cplx(1.0));
}

TEST(Kron, MixedProductAndAssociativity) {
    std::mt19937_64 rng(7);
    for (int t = 0; t < 20; ++t) {
        int n1 = 2 + t % 3, n2 = 2 + (t / 3) % 3;
        Mat A = random_matrix(n1, rng), C = random_matrix(n1, rng);
        Mat B = random_matrix(n2, rng), D = random_matrix(n2, rng);
        Mat lhs = kron(A, B) * kron(C, D);
        EXPECT_LT((lhs - kron(A * C, B * D)).cwiseAbs().maxCoeff(), 1e-12 * std::max(1.0, lhs.cwiseAbs().maxCoeff()));
        Mat E = random_matrix(2, rng);
        EXPECT_LT((kron(kron(A, B), E) - kron(A, kron(B, E))).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(Displacement, ZeroIsIdentity) {
    Mat D = displacement(0.0, FockSpace{10});
    EXPECT_LT((D - identity(10)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Displacement, CoherentStateColumn) {
    const cplx lam(0.3, 0.0);
    Mat D = displacement(lam, FockSpace{30});
    double fact = 1.0;
    for (int n = 0; n < 30; ++n) {
        if (n > 0) fact *= n;
        cplx want = std::exp(-0.5 * std::norm(lam)) * std::pow(lam, n) / std::sqrt(fact);
        EXPECT_NEAR(std::abs(D(n, 0) - want), 0.0, 1e-10) << n;
    }
}

TEST(Displacement, ComplexCoherentStateColumn) {
    const cplx lam = std::polar(0.5, 0.7);
    Mat D = displacement(lam, FockSpace{40});
    double fact = 1.0;
    for (int n = 0; n < 20; ++n) {
        if (n > 0) fact *= n;
        cplx want = std::exp(-0.5 * std::norm(lam)) * std::pow(lam, n) / std::sqrt(fact);
        EXPECT_NEAR(std::abs(D(n, 0) - want), 0.0, 1e-10) << n;
    }
}

TEST(Displacement, ConjugatesNumberOperator) {
    const int M = 30;
    const cplx lam(0.3, 0.0);
    Mat D = displacement(lam, FockSpace{M});
    auto ops = boson_ops(FockSpace{M});
    Mat lhs = D.adjoint() * ops.n * D;
    Mat rhs = ops.n + lam * ops.adag + std::conj(lam) * ops.a + std::norm(lam) * identity(M);
    // retained block away from the truncation edge
    const int k = M - 10;
    EXPECT_LT((lhs - rhs).topLeftCorner(k, k).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Displacement, UnitaryInRetainedBlock) {
    const int M = 40;
    Mat D = displacement(cplx(0.4, -0.2), FockSpace{M});
    Mat U = D.adjoint() * D;
    EXPECT_LT((U - identity(M)).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Displacement, TailTooLarge) {
    try {
        displacement(cplx(3.0, 0.0), FockSpace{10});
        FAIL() << "expected TailTooLarge";
    } catch (const TailTooLarge& e) {
        EXPECT_GT(e.needed_M, 10);
        EXPECT_NO_THROW(displacement(cplx(3.0, 0.0), FockSpace{e.needed_M}));
    }
}

TEST(HoWavefunction, GroundAndOddAtOrigin) {
    EXPECT_NEAR(ho_wavefunction(0, 0.0), std::pow(std::numbers::pi, -0.25), 1e-15);
    EXPECT_NEAR(ho_wavefunction(0, 0.0), 0.7511255, 1e-7);
    EXPECT_NEAR(ho_wavefunction(1, 0.0), 0.0, 1e-15);
}

TEST(HoWavefunction, ClosedFormLowOrders) {
    // phi_2 = pi^{-1/4} (2r^2 - 1)/sqrt(2) e^{-r^2/2}
    for (double r : {-1.3, 0.2, 2.5}) {
        double want = std::pow(std::numbers::pi, -0.25) * (2 * r * r - 1) / std::sqrt(2.0) * std::exp(-r * r / 2);
        EXPECT_NEAR(ho_wavefunction(2, r), want, 1e-14);
    }
}

TEST(HoWavefunction, NormalizationByQuadrature) { EXPECT_NEAR(overlap_quadrature(5, 5, 10.0, 20001), 1.0, 1e-8); }

TEST(HoWavefunction, Orthonormality) {
    for (int m = 0; m <= 10; ++m)
        for (int n = m; n <= 10; ++n) EXPECT_NEAR(overlap_quadrature(m, n), m == n ? 1.0 : 0.0, 1e-8) << m << "," << n;
}

TEST(HoWavefunction, Parity) {
    for (int n : {0, 1, 7, 40, 200})
        for (double r : {0.3, 1.7, 5.0}) {
            double a = ho_wavefunction(n, r), b = ho_wavefunction(n, -r);
            EXPECT_NEAR(b, (n % 2 ? -1.0 : 1.0) * a, 1e-12);
        }
    EXPECT_THROW(ho_wavefunction(201, 0.0), InvalidArgument);
}
