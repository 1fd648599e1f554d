// Tavis-Cummings ansatz: parameter counting and the projected spectrum.
#pragma once

#include "models.hpp"
#include "spectral.hpp"

#include <cstdint>
#include <vector>

namespace ususy {

inline std::int64_t binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    std::int64_t r = 1;
    for (int j = 1; j <= k; ++j) r = r * (n - k + j) / j;
    return r;
}

// P(N, n) = sum_{j <= n} C(N, j)
inline std::int64_t tc_param_count(int N, int n) {
    if (N < 1 || n < 0) throw InvalidArgument("tc_param_count: need N >= 1, n >= 0");
    std::int64_t s = 0;
    for (int j = 0; j <= std::min(n, N); ++j) s += binomial(N, j);
    return s;
}

// prod_k [P+^{(k)} ⊗ a + P-^{(k)} ⊗ 1] applied to 1 ⊗ |n>; column s is
// |s> ⊗ a^{u(s)}|n>.
inline Mat tc_ansatz_map(int N, int n, int M) {
    if (N < 1 || n < 0) throw InvalidArgument("tc_ansatz_map: need N >= 1, n >= 0");
    if (M < n + 1) throw InvalidArgument("tc_ansatz_map: M must be >= n + 1");
    const Eigen::Index ns = Eigen::Index{1} << N;
    const Mat a = annihilation(M);
    Mat prod = identity(ns * M);
    for (int k = 0; k < N; ++k)
        prod = prod * (site_op(pauli::up_proj(), k, N, M) * kron(identity(ns), a) +
                       site_op(pauli::down_proj(), k, N, M));
    Vec fock = Vec::Zero(M);
    fock(n) = 1.0;
    return prod * kron(identity(ns), Mat(fock));
}

inline std::int64_t tc_count_oracle(int N, int n) {
    if (N < 1 || N > 6 || n < 0 || n > 6) throw InvalidArgument("tc_count_oracle: N, n must be small");
    const Mat Mn = tc_ansatz_map(N, n, n + 1);
    std::int64_t c = 0;
    for (Eigen::Index j = 0; j < Mn.cols(); ++j)
        if (Mn.col(j).norm() > 1e-12) ++c;
    return c;
}

// Normalized nonzero columns of the ansatz map.
inline Mat tc_ansatz_basis(int N, int n, int M) {
    const Mat Mn = tc_ansatz_map(N, n, M);
    std::vector<Eigen::Index> keep;
    for (Eigen::Index j = 0; j < Mn.cols(); ++j)
        if (Mn.col(j).norm() > 1e-12) keep.push_back(j);
    Mat B(Mn.rows(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) B.col(k) = Mn.col(keep[k]).normalized();
    return B;
}

inline double tc_block_overlap(const TC& spec, int n, int n2) {
    const Mat H = full_hamiltonian(spec);
    return max_abs(tc_ansatz_map(spec.N, n2, spec.M).adjoint() * H * tc_ansatz_map(spec.N, n, spec.M));
}

struct TcProjected {
    Mat projected;  // B^H H B
    RootSet roots;
};

inline TcProjected tc_projected_spectrum(const TC& spec, int n, double lo, double hi, int jobs = 1) {
    validate(spec);
    if (spec.M < n + 2) throw InvalidArgument("tc_projected_spectrum: M must be >= n + 2");
    const Mat B = tc_ansatz_basis(spec.N, n, spec.M);
    TcProjected out;
    out.projected = hermitian_part(B.adjoint() * full_hamiltonian(spec) * B);
    const Mat P = out.projected;
    const auto f = CharacteristicFn::from_matrix([P](double E) {
        Mat A = P;
        A.diagonal().array() -= E;
        return A;
    });
    ScanOptions so;
    so.jobs = jobs;
    out.roots = find_roots(f, lo, hi, {}, so);
    return out;
}

}  // namespace ususy
