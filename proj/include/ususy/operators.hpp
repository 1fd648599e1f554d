// Truncated operator algebra: bosons, spin-p/2 generators, tensor products,
// displacement operators and oscillator eigenfunctions.
#pragma once

#include "types.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <initializer_list>
#include <numbers>

namespace ususy {

struct FockSpace {
    int M = 1;
    explicit FockSpace(int m) : M(m) {
        if (m < 1) throw InvalidArgument("FockSpace: M must be >= 1");
    }
};

struct BosonOps {
    Mat a, adag, n;
};

inline BosonOps boson_ops(const FockSpace& space) {
    const int M = space.M;
    BosonOps ops;
    ops.a = Mat::Zero(M, M);
    for (int k = 1; k < M; ++k) ops.a(k - 1, k) = std::sqrt(static_cast<double>(k));
    ops.adag = ops.a.adjoint();
    ops.n = ops.adag * ops.a;
    return ops;
}

inline Mat annihilation(int M) { return boson_ops(FockSpace{M}).a; }
inline Mat number_op(int M) { return boson_ops(FockSpace{M}).n; }

struct SpinGenerators {
    int p = 1;
    Mat S_plus, S_minus, S_z;
};

// Indices follow the 1-based convention (S+)_{jk} = sqrt(j(p-j+1)) delta_{j+1,k}.
inline SpinGenerators spin_generators(int p) {
    if (p < 1) throw InvalidArgument("spin_generators: p must be >= 1");
    SpinGenerators s;
    s.p = p;
    s.S_plus = Mat::Zero(p + 1, p + 1);
    s.S_z = Mat::Zero(p + 1, p + 1);
    for (int j = 1; j <= p; ++j)
        s.S_plus(j - 1, j) = std::sqrt(static_cast<double>(j) * (p - j + 1));
    for (int j = 0; j <= p; ++j) s.S_z(j, j) = p - 2.0 * j;
    s.S_minus = s.S_plus.adjoint();
    return s;
}

namespace pauli {
inline Mat plus() { Mat m = Mat::Zero(2, 2); m(0, 1) = 1.0; return m; }
inline Mat minus() { return plus().adjoint(); }
inline Mat z() { Mat m = Mat::Zero(2, 2); m(0, 0) = 1.0; m(1, 1) = -1.0; return m; }
inline Mat x() { return plus() + minus(); }
inline Mat y() { return -I_unit * (plus() - minus()); }
inline Mat up_proj() { Mat m = Mat::Zero(2, 2); m(0, 0) = 1.0; return m; }
inline Mat down_proj() { Mat m = Mat::Zero(2, 2); m(1, 1) = 1.0; return m; }
}  // namespace pauli

inline Mat kron(const Mat& A, const Mat& B) {
    Mat C(A.rows() * B.rows(), A.cols() * B.cols());
    for (Eigen::Index i = 0; i < A.rows(); ++i)
        for (Eigen::Index j = 0; j < A.cols(); ++j)
            C.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
    return C;
}

inline Mat kron(std::initializer_list<Mat> factors) {
    Mat out = Mat::Identity(1, 1);
    for (const auto& f : factors) out = kron(out, f);
    return out;
}

// Operator `op` on spin `site` (0-based) of `nspins` two-level systems,
// tensored with an identity of dimension `tail`.
inline Mat site_op(const Mat& op, int site, int nspins, Eigen::Index tail = 1) {
    Mat left = identity(Eigen::Index{1} << site);
    Mat right = identity((Eigen::Index{1} << (nspins - site - 1)) * tail);
    return kron(kron(left, op), right);
}

// Probability weight of a coherent state |lambda> on levels n >= M.
inline double coherent_tail(double mu, int M) {
    if (mu == 0.0) return 0.0;
    double logp = -mu;  // log p_0
    for (int n = 1; n <= M; ++n) logp += std::log(mu) - std::log(static_cast<double>(n));
    double term = std::exp(logp), sum = 0.0;
    for (int n = M; term > 1e-300 && n < M + 100000; ++n) {
        sum += term;
        term *= mu / (n + 1);
        if (term < 1e-18 * sum && n > mu) break;
    }
    return sum;
}

inline int coherent_needed_M(double mu, double tail_tol) {
    int M = 1;
    while (coherent_tail(mu, M) > tail_tol) ++M;
    return M;
}

inline Mat displacement(cplx lambda, const FockSpace& space, double tail_tol = 1e-10) {
    const double mu = std::norm(lambda);
    if (coherent_tail(mu, space.M) > tail_tol) throw TailTooLarge(coherent_needed_M(mu, tail_tol));
    const auto ops = boson_ops(space);
    Mat X = lambda * ops.adag - std::conj(lambda) * ops.a;
    return X.exp();
}

// phi_n(r) by the normalized Hermite-function recurrence.
inline double ho_wavefunction(int n, double r) {
    if (n < 0 || n > 200) throw InvalidArgument("ho_wavefunction: n must be in [0, 200]");
    double prev = 0.0;
    double cur = std::pow(std::numbers::pi, -0.25) * std::exp(-0.5 * r * r);
    for (int k = 0; k < n; ++k) {
        double next = std::sqrt(2.0 / (k + 1)) * r * cur - std::sqrt(static_cast<double>(k) / (k + 1)) * prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

}  // namespace ususy
