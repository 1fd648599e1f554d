// End-to-end spectrum of a block Hamiltonian through one reduced problem.
#pragma once

#include "reduction.hpp"
#include "spectral.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ususy {

// Tolerances used while scanning: the resolvent guard is left to the
// scanner's own pole exclusion.
inline Tolerances scan_tolerances(Tolerances t = default_tol()) {
    t.pole_rel = 1e-14;
    return t;
}

// A(E) = h_b(E) - E for one branch of a block Hamiltonian.
struct BranchFunction {
    Mat Hb, Fb;
    SpectralBlock other;
    std::vector<double> poles;

    BranchFunction(const BlockHamiltonian& H, Branch b)
        : Hb(H.diag(b)), Fb(H.coupling_from(other_branch(b))), other(H.diag(other_branch(b))) {
        poles = other.active_poles(Fb);
    }

    Mat operator()(double E) const {
        Mat A = reduced_operator(Hb, Fb, other, E, scan_tolerances());
        A.diagonal().array() -= E;
        return A;
    }

    CharacteristicFn characteristic() const {
        return CharacteristicFn::from_matrix([this](double E) { return (*this)(E); });
    }
};

struct SpectrumOptions {
    int grid_points = 2001;
    bool oracle = true;
    int jobs = 1;
    double pole_guard_frac = 1e-4;
    Tolerances tol = default_tol();
};

struct SpectrumResult {
    Branch branch = Branch::Plus;
    std::pair<double, double> range{0.0, 0.0};
    DetCurve curve;
    RootSet roots;
    std::vector<ReconstructedSpinor> spinors;  // one per root, multiplicity included
    std::vector<std::string> failures;         // unresolved NearPole reconstructions
    ExclusionReport exclusions;
    std::vector<double> poles;
    std::optional<EDResult> ed;
};

namespace detail {

inline std::vector<ReconstructedSpinor> orthonormal_spinors(const Mat& Hfull, std::vector<Vec> vs, double E) {
    std::vector<ReconstructedSpinor> out;
    std::vector<Vec> basis;
    for (auto& v : vs) {
        Vec w = v;
        for (const auto& b : basis) w -= b * b.dot(w);
        if (w.norm() < 1e-8 * v.norm()) continue;
        w.normalize();
        basis.push_back(w);
        out.push_back(make_spinor(Hfull, w, E));
    }
    return out;
}

// Roots sitting exactly on an active pole E_m of the other block.
inline std::optional<std::pair<Root, std::vector<Vec>>> pole_root(const BlockHamiltonian& H, Branch b,
                                                                   const SpectralBlock& other, int gb, int ge) {
    const auto d = H.dim();
    const Mat Hb = H.diag(b), Fb = H.coupling_from(other_branch(b)), Fo = Fb.adjoint();
    const double Em = other.ev.segment(gb, ge - gb).mean();
    const double scale = std::max({1.0, other.scale, max_abs(Hb), max_abs(Fb)});
    const Mat W = other.V.middleCols(gb, ge - gb);
    const int r_m = other.residue_rank(Fb, gb, ge);

    Mat Gp = Mat::Zero(other.V.rows(), other.V.rows());
    for (Eigen::Index k = 0; k < other.ev.size(); ++k) {
        if (k >= gb && k < ge) continue;
        if (std::abs(other.ev(k) - Em) <= 1e-9 * scale) continue;
        Gp += other.V.col(k) * other.V.col(k).adjoint() / (Em - other.ev(k));
    }
    Mat Areg = Hb + Fb * Gp * Fo;
    Areg.diagonal().array() -= Em;

    const Mat WF = W.adjoint() * Fo;
    Eigen::JacobiSVD<Mat> svd(WF, Eigen::ComputeFullV);
    const double thr = 1e-8 * scale;
    int rank = 0;
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
        if (svd.singularValues()(i) > thr) ++rank;
    const Mat Q = svd.matrixV().rightCols(d - rank);
    if (Q.cols() == 0) return std::nullopt;
    const Mat QAQ = Q.adjoint() * Areg * Q;
    Eigen::SelfAdjointEigenSolver<Mat> es(hermitian_part(QAQ), Eigen::EigenvaluesOnly);
    int k_all = 0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
        if (std::abs(es.eigenvalues()(i)) <= thr) ++k_all;
    const int mult = std::max(0, k_all - r_m);
    if (mult == 0) return std::nullopt;

    // Null space of [Areg Q, Fb W] gives (psi_b, pole amplitude) pairs.
    Mat M(d, Q.cols() + W.cols());
    M << Areg * Q, Fb * W;
    Eigen::JacobiSVD<Mat> ns(M, Eigen::ComputeFullV);
    std::vector<Vec> vecs;
    const auto nsv = ns.singularValues().size();
    for (Eigen::Index c = 0; c < M.cols(); ++c) {
        const double s = c < nsv ? ns.singularValues()(c) : 0.0;
        if (s > thr) continue;
        const Vec z = ns.matrixV().col(c);
        const Vec psi_b = Q * z.head(Q.cols());
        if (psi_b.norm() < 1e-6) continue;
        const Vec psi_o = Gp * Fo * psi_b + W * z.tail(W.cols());
        Vec full(2 * d);
        if (b == Branch::Plus)
            full << psi_b, psi_o;
        else
            full << psi_o, psi_b;
        vecs.push_back(full);
    }
    Root r;
    r.E = Em;
    r.lo = r.hi = Em;
    r.multiplicity = mult;
    r.at_pole = true;
    if (vecs.size() > static_cast<std::size_t>(mult)) vecs.resize(mult);
    return std::make_pair(r, vecs);
}

}  // namespace detail

inline SpectrumResult spectrum_via_reduction(const BlockHamiltonian& H, Branch branch, std::pair<double, double> range,
                                             const SpectrumOptions& opt = {}) {
    SpectrumResult res;
    res.branch = branch;
    res.range = range;
    const BranchFunction bf(H, branch);
    res.poles = bf.poles;
    const auto cf = bf.characteristic();
    ScanOptions so;
    so.jobs = opt.jobs;
    so.pole_guard_frac = opt.pole_guard_frac;
    so.root_rel = opt.tol.root_rel;
    res.curve = det_curve(cf, range.first, range.second, opt.grid_points, res.poles, so);
    res.roots = find_roots(cf, range.first, range.second, res.poles, so);

    const Mat Hfull = H.assemble();
    const auto d = H.dim();
    std::vector<std::vector<ReconstructedSpinor>> per_root(res.roots.roots.size());
    std::vector<std::string> fail(res.roots.roots.size());
    parallel_for(res.roots.roots.size(), opt.jobs, [&](std::size_t i) {
        const Root& r = res.roots.roots[i];
        try {
            Eigen::SelfAdjointEigenSolver<Mat> es(bf(r.E));
            std::vector<std::pair<double, int>> order;
            for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k)
                order.emplace_back(std::abs(es.eigenvalues()(k)), static_cast<int>(k));
            std::sort(order.begin(), order.end());
            std::vector<Vec> fulls;
            for (int k = 0; k < r.multiplicity && k < static_cast<int>(order.size()); ++k) {
                const Vec psi_b = es.eigenvectors().col(order[k].second);
                auto s = reconstruct(H, r.E, psi_b, branch, opt.tol);
                fulls.push_back(s.full());
            }
            per_root[i] = detail::orthonormal_spinors(Hfull, fulls, r.E);
        } catch (const NearPole& e) {
            fail[i] = "root " + std::to_string(r.E) + ": " + e.what();
        }
    });

    // Roots on active poles.
    for (auto [gb, ge] : degenerate_groups(bf.other.ev, opt.tol.degeneracy_rel)) {
        const double Em = bf.other.ev(gb);
        if (Em < range.first || Em > range.second) continue;
        if (bf.other.residue_rank(bf.Fb, gb, ge) == 0) continue;
        if (auto pr = detail::pole_root(H, branch, bf.other, gb, ge)) {
            res.roots.roots.push_back(pr->first);
            per_root.push_back(detail::orthonormal_spinors(Hfull, pr->second, Em));
            fail.emplace_back();
        }
    }
    // Keep roots ascending, carrying spinors along.
    std::vector<std::size_t> idx(res.roots.roots.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return res.roots.roots[a].E < res.roots.roots[b].E; });
    RootSet sorted;
    for (auto i : idx) {
        sorted.roots.push_back(res.roots.roots[i]);
        for (auto& s : per_root[i]) res.spinors.push_back(s);
        if (!fail[i].empty()) res.failures.push_back(fail[i]);
    }
    res.roots = sorted;

    if (opt.oracle) {
        res.ed = direct_ed(Hfull, true, {2, d});
        auto rep = excluded_candidates(H, branch, *res.ed, -1.0, opt.tol);
        for (auto& e : rep.entries)
            if (e.E >= range.first && e.E <= range.second) res.exclusions.entries.push_back(e);
    }
    return res;
}

}  // namespace ususy
