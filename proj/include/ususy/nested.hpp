// Many-spin eigenvector reconstruction through nested resolvents.
#pragma once

#include "models.hpp"
#include "reduction.hpp"

namespace ususy {

inline int spin_count(const ModelSpec& spec) {
    return std::visit(
        [](const auto& s) -> int {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, SpinChain> || std::is_same_v<T, TC> || std::is_same_v<T, GenDicke>)
                return s.N;
            else if constexpr (std::is_same_v<T, SpinOne>)
                return 0;
            else
                return 1;
        },
        spec);
}

namespace detail {

// x = (E - H)^{-1} rhs where H acts on `nspins` spins ⊗ tail. Levels are
// numbered from 1 at the first resolvent. The up half is inverted by
// recursion, the down half through its Schur complement.
inline Mat nested_solve(const Mat& H, const Mat& rhs, double E, int level, int nspins, const Tolerances& tol) {
    const SpectralBlock blk(H);
    const double ptol = blk.pole_tol(tol);
    bool inert_pole = false;
    for (Eigen::Index k = 0; k < blk.ev.size(); ++k) {
        const double d = std::abs(E - blk.ev(k));
        if (d > ptol) continue;
        const double ov = (blk.V.col(k).adjoint() * rhs).norm();
        if (ov > 1e-12 * std::max(1.0, max_abs(rhs))) throw NearPole(d, blk.ev(k), level);
        inert_pole = true;
    }
    if (inert_pole || nspins == 0) return blk.sandwich(identity(H.rows()), rhs, E, tol);

    const auto h = H.rows() / 2;
    const Mat A = H.topLeftCorner(h, h), B = H.topRightCorner(h, h), C = H.bottomRightCorner(h, h);
    Mat stacked(h, B.cols() + rhs.cols());
    stacked << B, rhs.topRows(h);
    const Mat GA = nested_solve(A, stacked, E, level + 1, nspins - 1, tol);
    const Mat GAB = GA.leftCols(B.cols()), GAb = GA.rightCols(rhs.cols());
    Mat S = -C - B.adjoint() * GAB;
    S.diagonal().array() += E;
    const Mat xm = S.partialPivLu().solve(rhs.bottomRows(h) + B.adjoint() * GAb);
    Mat x(H.rows(), rhs.cols());
    x.topRows(h) = GAb + GAB * xm;
    x.bottomRows(h) = xm;
    return x;
}

}  // namespace detail

// The unknown spin-1 component is (E - H_u)^{-1} F psi_known, evaluated
// level by level over the remaining spins.
inline ReconstructedSpinor nested_reconstruct(const ModelSpec& spec, double E, const Vec& seed,
                                              Branch seed_branch = Branch::Minus,
                                              const Tolerances& tol = default_tol()) {
    const int N = spin_count(spec);
    if (N < 1 || N > 3) throw InvalidArgument("nested_reconstruct: needs 1 to 3 spins");
    const BlockHamiltonian H = build(spec);
    if (seed.size() != H.dim()) throw InvalidArgument("nested_reconstruct: seed has the wrong dimension");
    if (seed.norm() == 0.0) throw InvalidArgument("nested_reconstruct: seed is zero");
    const Branch unknown = other_branch(seed_branch);
    const Vec rhs = H.coupling_from(seed_branch) * seed;
    const Vec psi_u = detail::nested_solve(H.diag(unknown), rhs, E, 1, N - 1, tol);
    Vec full(2 * H.dim());
    if (seed_branch == Branch::Minus)
        full << psi_u, seed;
    else
        full << seed, psi_u;
    return make_spinor(H.assemble(), full, E);
}

}  // namespace ususy
