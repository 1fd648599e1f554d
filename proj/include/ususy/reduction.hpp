// Block Hamiltonians, resolvents, energy-dependent reduced Hamiltonians,
// supercharges, SU(2) rotations and eigenspinor reconstruction.
#pragma once

#include "operators.hpp"
#include "spectral.hpp"
#include "types.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace ususy {

// H = [[H+, F+], [F+^H, H-]]
struct BlockHamiltonian {
    Mat H_plus, H_minus, F_plus;

    Eigen::Index dim() const { return H_plus.rows(); }
    Mat F_minus() const { return F_plus.adjoint(); }
    const Mat& diag(Branch b) const { return b == Branch::Plus ? H_plus : H_minus; }
    // Coupling that maps the `from` component into the other one.
    Mat coupling_from(Branch from) const { return from == Branch::Minus ? F_plus : F_plus.adjoint(); }

    Mat assemble() const {
        const auto d = dim();
        Mat H(2 * d, 2 * d);
        H.topLeftCorner(d, d) = H_plus;
        H.topRightCorner(d, d) = F_plus;
        H.bottomLeftCorner(d, d) = F_plus.adjoint();
        H.bottomRightCorner(d, d) = H_minus;
        return H;
    }

    void validate() const {
        const auto d = dim();
        if (H_plus.cols() != d || H_minus.rows() != d || H_minus.cols() != d || F_plus.rows() != d ||
            F_plus.cols() != d)
            throw InvalidArgument("BlockHamiltonian: blocks must share one dimension");
        if (!is_hermitian(H_plus) || !is_hermitian(H_minus)) throw NotHermitian(std::max(hermitian_deviation(H_plus), hermitian_deviation(H_minus)));
    }

    static BlockHamiltonian split(const Mat& H) {
        if (H.rows() != H.cols() || H.rows() % 2) throw InvalidArgument("split: need an even square matrix");
        const auto d = H.rows() / 2;
        return {H.topLeftCorner(d, d), H.bottomRightCorner(d, d), H.topRightCorner(d, d)};
    }
};

struct Su2Rotation {
    double theta = 0.0;
    double phi = 0.0;

    // U(phi, theta) = [[e^{i phi} c, e^{i phi} s], [-e^{-i phi} s, e^{-i phi} c]]
    Eigen::Matrix2cd matrix() const {
        const double c = std::cos(0.5 * theta), s = std::sin(0.5 * theta);
        const cplx ep = std::polar(1.0, phi), em = std::conj(ep);
        Eigen::Matrix2cd U;
        U << ep * c, ep * s, -em * s, em * c;
        return U;
    }
};

inline double spectral_scale(const RVec& ev) { return ev.size() ? std::max(1.0, ev.cwiseAbs().maxCoeff()) : 1.0; }

// Eigen-decomposed diagonal block; evaluates resolvent sandwiches at any E.
struct SpectralBlock {
    RVec ev;
    Mat V;
    double scale = 1.0;

    SpectralBlock() = default;
    explicit SpectralBlock(const Mat& H) {
        auto ed = direct_ed(H);
        ev = ed.eigenvalues;
        V = ed.eigenvectors;
        scale = spectral_scale(ev);
    }

    double pole_tol(const Tolerances& tol = default_tol()) const { return tol.pole_rel * scale; }

    double pole_distance(double E) const {
        return ev.size() ? (ev.array() - E).abs().minCoeff() : std::numeric_limits<double>::infinity();
    }

    Mat resolvent(double E, const Tolerances& tol = default_tol()) const {
        const double d = pole_distance(E);
        if (d <= pole_tol(tol)) {
            Eigen::Index k;
            (ev.array() - E).abs().minCoeff(&k);
            throw NearPole(d, ev(k));
        }
        RVec w = (E - ev.array()).inverse();
        return V * w.asDiagonal() * V.adjoint();
    }

    // L (E - H)^{-1} R. Eigenvectors annihilated by L or R carry no pole.
    Mat sandwich(const Mat& L, const Mat& R, double E, const Tolerances& tol = default_tol()) const {
        const Mat LV = L * V;
        const Mat VR = V.adjoint() * R;
        const double lref = std::max(1.0, max_abs(L)) * 1e-12, rref = std::max(1.0, max_abs(R)) * 1e-12;
        Mat out = Mat::Zero(L.rows(), R.cols());
        for (Eigen::Index k = 0; k < ev.size(); ++k) {
            const double ln = LV.col(k).norm(), rn = VR.row(k).norm();
            if (ln <= lref || rn <= rref) continue;
            const double d = std::abs(E - ev(k));
            if (d <= pole_tol(tol)) throw NearPole(d, ev(k));
            out.noalias() += LV.col(k) * (VR.row(k) / (E - ev(k)));
        }
        return out;
    }

    // Residue rank of the eigen-group [b, e) seen through L.
    int residue_rank(const Mat& L, int b, int e) const {
        Mat LW = L * V.middleCols(b, e - b);
        if (LW.size() == 0) return 0;
        Eigen::JacobiSVD<Mat> svd(LW);
        const double thr = 1e-8 * std::max(1.0, max_abs(L));
        int r = 0;
        for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
            if (svd.singularValues()(i) > thr) ++r;
        return r;
    }

    // Eigenvalues whose eigenvectors are not annihilated by L.
    std::vector<double> active_poles(const Mat& L) const {
        std::vector<double> out;
        for (auto [b, e] : degenerate_groups(ev))
            if (residue_rank(L, b, e) > 0) out.push_back(ev(b));
        return out;
    }
};

inline Mat resolvent(const Mat& H, double E, const Tolerances& tol = default_tol()) {
    return SpectralBlock(H).resolvent(E, tol);
}

struct ReducedProblem {
    Branch branch = Branch::Plus;
    int component = 0;
    double E = 0.0;
    Mat h;
    double pole_distance = 0.0;
};

// h = H_b + F_b G_o F_b^H, the shared form behind every reduction.
inline Mat reduced_operator(const Mat& Hb, const Mat& Fb, const SpectralBlock& other, double E,
                            const Tolerances& tol = default_tol()) {
    return Hb + other.sandwich(Fb, Fb.adjoint(), E, tol);
}

inline ReducedProblem reduced_hamiltonian(const BlockHamiltonian& H, double E, Branch branch,
                                          const Tolerances& tol = default_tol()) {
    const SpectralBlock other(H.diag(other_branch(branch)));
    ReducedProblem rp;
    rp.branch = branch;
    rp.component = branch == Branch::Plus ? 0 : 1;
    rp.E = E;
    rp.h = reduced_operator(H.diag(branch), H.coupling_from(other_branch(branch)), other, E, tol);
    rp.pole_distance = other.pole_distance(E);
    return rp;
}

struct Supercharges {
    Mat Q_plus, Q_minus;
};

inline Supercharges supercharges(const BlockHamiltonian& H, double E, const Tolerances& tol = default_tol()) {
    const auto d = H.dim();
    const Mat Gp = resolvent(H.H_plus, E, tol), Gm = resolvent(H.H_minus, E, tol);
    Supercharges q;
    q.Q_plus = Mat::Zero(2 * d, 2 * d);
    q.Q_minus = Mat::Zero(2 * d, 2 * d);
    q.Q_plus.topRightCorner(d, d) = Gp * H.F_plus;
    q.Q_minus.bottomLeftCorner(d, d) = Gm * H.F_minus();
    return q;
}

// H~_ab = sum_ij conj(u_ia) H_ij u_jb over the 2x2 spin blocks.
inline BlockHamiltonian rotate_block(const BlockHamiltonian& H, const Su2Rotation& R) {
    const Eigen::Matrix2cd u = R.matrix();
    const Mat Fm = H.F_minus();
    const Mat* blk[2][2] = {{&H.H_plus, &H.F_plus}, {&Fm, &H.H_minus}};
    auto entry = [&](int a, int b) {
        Mat out = Mat::Zero(H.dim(), H.dim());
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                const cplx w = std::conj(u(i, a)) * u(j, b);
                if (w != cplx{}) out += w * *blk[i][j];
            }
        return out;
    };
    return {hermitian_part(entry(0, 0)), hermitian_part(entry(1, 1)), entry(0, 1)};
}

// Unitary acting on the assembled space, for transforming eigenvectors.
inline Mat rotation_operator(const Su2Rotation& R, Eigen::Index d) {
    const Eigen::Matrix2cd u = R.matrix();
    return kron(Mat(u), identity(d));
}

struct ReconstructedSpinor {
    Vec psi_plus, psi_minus;
    double E = 0.0;
    double residual = 0.0;

    Vec full() const {
        Vec v(psi_plus.size() + psi_minus.size());
        v << psi_plus, psi_minus;
        return v;
    }
};

// Largest-magnitude component made real and positive (first one on ties).
inline Vec fix_phase(Vec v) {
    if (v.size() == 0) return v;
    const double m = v.cwiseAbs().maxCoeff();
    if (m == 0.0) return v;
    for (Eigen::Index i = 0; i < v.size(); ++i)
        if (std::abs(v(i)) >= m * (1.0 - 1e-9)) {
            v *= std::conj(v(i)) / std::abs(v(i));
            v(i) = std::abs(v(i));
            break;
        }
    return v;
}

inline ReconstructedSpinor make_spinor(const Mat& Hfull, Vec full, double E) {
    const Eigen::Index d = full.size() / 2;
    const double n = full.norm();
    if (n == 0.0) throw InvalidArgument("cannot normalize a zero spinor");
    full = fix_phase(full / n);
    ReconstructedSpinor s;
    s.psi_plus = full.head(d);
    s.psi_minus = full.tail(d);
    s.E = E;
    s.residual = (Hfull * full - E * full).norm();
    return s;
}

// The missing component is G F psi_known. Pole
// eigenvectors orthogonal to F psi_known are skipped.
inline ReconstructedSpinor reconstruct(const BlockHamiltonian& H, double E, const Vec& psi_known, Branch known,
                                       const Tolerances& tol = default_tol()) {
    if (psi_known.norm() == 0.0) throw InvalidArgument("reconstruct: known component is zero");
    const Branch unknown = other_branch(known);
    const SpectralBlock blk(H.diag(unknown));
    const Mat F = H.coupling_from(known);
    const Vec rhs = F * psi_known;
    const Mat id = identity(blk.V.rows());
    const Vec psi_u = blk.sandwich(id, rhs, E, tol);
    Vec full(2 * H.dim());
    if (known == Branch::Minus)
        full << psi_u, psi_known;
    else
        full << psi_known, psi_u;
    return make_spinor(H.assemble(), full, E);
}

// ---------------------------------------------------------------------------
// Excluded solutions

enum class ExclusionKind { Overlap, PoleCancelled };

struct ExclusionEntry {
    int m = 0;          // index of the first eigenvector of the matching H_other group
    double E_m = 0.0;   // H_other eigenvalue
    double E = 0.0;     // full-H eigenvalue
    double overlap = 0.0;
    ExclusionKind kind = ExclusionKind::Overlap;
};

struct ExclusionReport {
    std::vector<ExclusionEntry> entries;
    int count_at(double E, double tol) const {
        int n = 0;
        for (const auto& e : entries)
            if (std::abs(e.E - E) <= tol) ++n;
        return n;
    }
};

namespace detail {
inline int numeric_rank(const Mat& A, double thr) {
    if (A.size() == 0) return 0;
    Eigen::JacobiSVD<Mat> svd(A);
    int r = 0;
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
        if (svd.singularValues()(i) > thr) ++r;
    return r;
}
}  // namespace detail

// Full-H eigenstates that the solve_branch reduced problem cannot return:
// those overlapping a coinciding H_other eigenspace and those
// whose solve-branch component is absorbed by the pole residue.
inline ExclusionReport excluded_candidates(const BlockHamiltonian& H, Branch solve_branch, const EDResult& full,
                                           double tol = -1.0, const Tolerances& tols = default_tol()) {
    ExclusionReport rep;
    const Branch ob = other_branch(solve_branch);
    const SpectralBlock other(H.diag(ob));
    const Mat Fb = H.coupling_from(ob);
    const auto d = H.dim();
    const double scale = std::max(other.scale, spectral_scale(full.eigenvalues));
    if (tol <= 0) tol = 1e-8 * scale;
    const auto ogroups = degenerate_groups(other.ev, tols.degeneracy_rel);
    for (auto [gb, ge] : degenerate_groups(full.eigenvalues, tols.degeneracy_rel)) {
        const double E = full.eigenvalues.segment(gb, ge - gb).mean();
        for (auto [ob_, oe] : ogroups) {
            const double Em = other.ev.segment(ob_, oe - ob_).mean();
            if (std::abs(E - Em) >= tol) continue;
            const Mat Psi = full.eigenvectors.middleCols(gb, ge - gb);
            const Mat psi_b = solve_branch == Branch::Plus ? Mat(Psi.topRows(d)) : Mat(Psi.bottomRows(d));
            const Mat psi_o = solve_branch == Branch::Plus ? Mat(Psi.bottomRows(d)) : Mat(Psi.topRows(d));
            const Mat O = other.V.middleCols(ob_, oe - ob_).adjoint() * psi_o;
            Eigen::JacobiSVD<Mat> svd(O);
            int n_excl = 0;
            for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) {
                const double s = svd.singularValues()(i);
                if (s > tols.exclusion) {
                    rep.entries.push_back({static_cast<int>(ob_), Em, E, s, ExclusionKind::Overlap});
                    ++n_excl;
                }
            }
            const int r_m = other.residue_rank(Fb, ob_, oe);
            const int rank_b = detail::numeric_rank(psi_b, tols.exclusion);
            const int dsz = ge - gb;
            const int missing = dsz - std::max(0, rank_b - r_m);
            for (int k = n_excl; k < missing; ++k)
                rep.entries.push_back({static_cast<int>(ob_), Em, E, 0.0, ExclusionKind::PoleCancelled});
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Block-tridiagonal reduction (spin-p/2)

// Diagonal blocks D_j and couplings C_j = block (j, j+1); block (j+1, j) = C_j^H.
struct BlockTridiagonal {
    std::vector<Mat> diag;
    std::vector<Mat> upper;

    int size() const { return static_cast<int>(diag.size()); }

    Mat assemble() const {
        const int n = size();
        const auto d = diag.front().rows();
        Mat H = Mat::Zero(n * d, n * d);
        for (int j = 0; j < n; ++j) H.block(j * d, j * d, d, d) = diag[j];
        for (int j = 0; j + 1 < n; ++j) {
            H.block(j * d, (j + 1) * d, d, d) = upper[j];
            H.block((j + 1) * d, j * d, d, d) = upper[j].adjoint();
        }
        return H;
    }
};

inline BlockTridiagonal spin_p_system(const Mat& H0, const Mat& Delta, const Mat& F_plus, int p) {
    const auto S = spin_generators(p);
    BlockTridiagonal sys;
    for (int j = 0; j <= p; ++j) sys.diag.push_back(H0 + S.S_z(j, j).real() * Delta);
    for (int j = 0; j < p; ++j) sys.upper.push_back(S.S_plus(j, j + 1).real() * F_plus);
    return sys;
}

namespace detail {

// Eliminates every block whose index has parity `drop`, keeping the h-form.
inline BlockTridiagonal eliminate(const BlockTridiagonal& s, int drop, double E, const Tolerances& tol,
                                  std::vector<int>& keep_index, double& min_dist) {
    const int n = s.size();
    std::vector<SpectralBlock> G(n);
    for (int j = drop; j < n; j += 2) {
        G[j] = SpectralBlock(s.diag[j]);
        min_dist = std::min(min_dist, G[j].pole_distance(E));
    }
    BlockTridiagonal out;
    std::vector<int> kept;
    for (int j = 1 - drop; j < n; j += 2) kept.push_back(j);
    for (std::size_t k = 0; k < kept.size(); ++k) {
        const int j = kept[k];
        Mat D = s.diag[j];
        if (j - 1 >= 0) {
            const Mat L = s.upper[j - 1].adjoint();  // block (j, j-1)
            D = D + G[j - 1].sandwich(L, L.adjoint(), E, tol);
        }
        if (j + 1 < n) D = D + G[j + 1].sandwich(s.upper[j], s.upper[j].adjoint(), E, tol);
        out.diag.push_back(D);
        if (k + 1 < kept.size()) out.upper.push_back(G[j + 1].sandwich(s.upper[j], s.upper[j + 1], E, tol));
    }
    std::vector<int> idx;
    for (int j : kept) idx.push_back(keep_index[j]);
    keep_index = idx;
    return out;
}

inline void reduce_rec(const BlockTridiagonal& s, std::vector<int> index, double E, const Tolerances& tol,
                       std::vector<ReducedProblem>& out, double dist) {
    if (s.size() == 1) {
        ReducedProblem rp;
        rp.component = index[0];
        rp.branch = index[0] % 2 == 0 ? Branch::Plus : Branch::Minus;
        rp.E = E;
        rp.h = s.diag[0];
        rp.pole_distance = dist;
        out.push_back(rp);
        return;
    }
    for (int drop : {1, 0}) {
        std::vector<int> idx = index;
        double d = dist;
        BlockTridiagonal r = eliminate(s, drop, E, tol, idx, d);
        reduce_rec(r, idx, E, tol, out, d);
    }
}

}  // namespace detail

// Recursively decouples a block-tridiagonal eigenproblem into one
// energy-dependent operator per component, ordered by component index.
inline std::vector<ReducedProblem> reduce_block_tridiagonal(const BlockTridiagonal& sys, double E,
                                                            const Tolerances& tol = default_tol()) {
    std::vector<int> index(sys.size());
    for (int j = 0; j < sys.size(); ++j) index[j] = j;
    std::vector<ReducedProblem> out;
    if (sys.size() == 1) {
        out.push_back({Branch::Plus, 0, E, sys.diag[0], std::numeric_limits<double>::infinity()});
        return out;
    }
    detail::reduce_rec(sys, index, E, tol, out, std::numeric_limits<double>::infinity());
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.component < b.component; });
    return out;
}

// Single component: only the eliminations on its own path are carried out, so
// poles of the other components' operators are never touched.
inline ReducedProblem reduce_component(const BlockTridiagonal& sys, int component, double E,
                                       const Tolerances& tol = default_tol()) {
    if (component < 0 || component >= sys.size()) throw InvalidArgument("reduce_component: component out of range");
    std::vector<int> index(sys.size());
    for (int j = 0; j < sys.size(); ++j) index[j] = j;
    double dist = std::numeric_limits<double>::infinity();
    BlockTridiagonal s = sys;
    while (s.size() > 1) {
        const int pos = static_cast<int>(std::find(index.begin(), index.end(), component) - index.begin());
        s = detail::eliminate(s, 1 - pos % 2, E, tol, index, dist);
    }
    return {component % 2 == 0 ? Branch::Plus : Branch::Minus, component, E, s.diag[0], dist};
}

inline std::vector<ReducedProblem> spin_p_reduce(const Mat& H0, const Mat& Delta, const Mat& F_plus, int p, double E,
                                                 const Tolerances& tol = default_tol()) {
    return reduce_block_tridiagonal(spin_p_system(H0, Delta, F_plus, p), E, tol);
}

// Q+- = I+- K (off-diagonal part), with K_jj = (E - D_j)^{-1}.
inline Supercharges spin_p_supercharges(const BlockTridiagonal& sys, double E, const Tolerances& tol = default_tol()) {
    const int n = sys.size();
    const auto d = sys.diag.front().rows();
    Mat K = Mat::Zero(n * d, n * d), V = Mat::Zero(n * d, n * d);
    for (int j = 0; j < n; ++j) K.block(j * d, j * d, d, d) = resolvent(sys.diag[j], E, tol);
    for (int j = 0; j + 1 < n; ++j) {
        V.block(j * d, (j + 1) * d, d, d) = sys.upper[j];
        V.block((j + 1) * d, j * d, d, d) = sys.upper[j].adjoint();
    }
    Mat Ip = Mat::Zero(n * d, n * d), Im = Mat::Zero(n * d, n * d);
    for (int j = 0; j < n; ++j) (j % 2 == 0 ? Ip : Im).block(j * d, j * d, d, d) = identity(d);
    return {Ip * K * V, Im * K * V};
}

}  // namespace ususy
