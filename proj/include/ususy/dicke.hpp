// Generalized Dicke model through a correlated basis of the (N-1)-spin
// subsystem.
#pragma once

#include "models.hpp"
#include "parallel.hpp"
#include "spectral.hpp"

#include <optional>
#include <vector>

namespace ususy {

struct CorrelatedBasis {
    RVec energies;  // ascending
    Mat vectors;
    Branch branch = Branch::Plus;
};

// Shared read-only data: ED of the (N-1)-spin Hamiltonian with vectors, the
// spin-1 coupling 1 ⊗ F, and optionally the full N-spin spectrum.
struct DickeContext {
    GenDicke spec;
    RVec lambda;
    Mat V;
    Mat F_plus;
    std::optional<RVec> full_ed;

    static DickeContext make(const GenDicke& spec, bool with_full_ed = true) {
        validate(spec);
        DickeContext c;
        c.spec = spec;
        GenDicke sub = spec;
        sub.N = spec.N - 1;
        const Mat Hs = sub.N >= 1 ? full_hamiltonian(sub) : number_op(spec.M);
        auto ed = direct_ed(Hs, true);
        c.lambda = ed.eigenvalues;
        c.V = ed.eigenvectors;
        const Eigen::Index ns = Eigen::Index{1} << (spec.N - 1);
        c.F_plus = kron(identity(ns), genrabi_coupling(spec.alpha, spec.beta, spec.gamma, spec.M));
        if (with_full_ed) c.full_ed = eigenvalues(full_hamiltonian(spec));
        return c;
    }

    Eigen::Index sub_dim() const { return V.rows(); }

    CorrelatedBasis basis(int script_N, Branch b) const {
        return {lambda.head(script_N), V.leftCols(script_N), b};
    }
};

// F_jk(E) = (lambda_j + s Delta - E) delta_jk + sum_i conj(Y_ij) Y_ik / (E - lambda_i + s Delta)
struct DickeMatrix {
    RVec lambda_sub;  // first script_N energies
    RVec lambda;      // all (N-1)-spin energies
    Mat Y;            // V^H F W
    double shift = 0.0;
    std::vector<double> poles;

    Mat operator()(double E) const {
        const auto n = lambda_sub.size();
        Mat A = Mat::Zero(n, n);
        RVec w = (E - lambda.array() + shift).inverse().matrix();
        A = Y.adjoint() * w.asDiagonal() * Y;
        A.diagonal().array() += (lambda_sub.array() + shift - E).matrix().cast<cplx>().array();
        return hermitian_part(A);
    }
};

inline DickeMatrix dicke_matrix(const DickeContext& ctx, int script_N, Branch b) {
    if (script_N < 1 || script_N > ctx.sub_dim())
        throw InvalidArgument("dicke: correlated basis size must be in [1, " + std::to_string(ctx.sub_dim()) + "]");
    const double s = sign_of(b) * ctx.spec.Delta;
    DickeMatrix m;
    m.lambda_sub = ctx.lambda.head(script_N);
    m.lambda = ctx.lambda;
    m.shift = s;
    const Mat Fb = b == Branch::Plus ? Mat(ctx.F_plus.adjoint()) : ctx.F_plus;
    m.Y = ctx.V.adjoint() * (Fb * ctx.V.leftCols(script_N));
    const double thr = 1e-10 * std::max(1.0, max_abs(m.Y));
    for (Eigen::Index i = 0; i < ctx.lambda.size(); ++i)
        if (m.Y.row(i).norm() > thr) m.poles.push_back(ctx.lambda(i) - s);
    std::sort(m.poles.begin(), m.poles.end());
    return m;
}

struct DickeMatch {
    double root = 0.0;
    double ed = 0.0;
    double deviation = 0.0;
    double rel = 0.0;
};

struct DickeResult {
    int script_N = 0;
    Branch branch = Branch::Plus;
    std::pair<double, double> range{0.0, 0.0};
    RootSet roots;
    std::vector<DickeMatch> matches;
    double ground_deviation = 0.0;
    int n_out = 0;
};

inline std::pair<double, double> dicke_default_range(const DickeContext& ctx) {
    if (!ctx.full_ed) throw InvalidArgument("dicke: default range needs the full spectrum");
    const double E0 = (*ctx.full_ed)(0);
    return {E0 - 1.0, E0 + 1.5};
}

// Each root, ascending, takes the nearest unused direct-ED eigenvalue.
inline std::vector<DickeMatch> greedy_match(const std::vector<double>& roots, const RVec& ed) {
    std::vector<bool> used(ed.size(), false);
    std::vector<DickeMatch> out;
    for (double r : roots) {
        Eigen::Index best = -1;
        for (Eigen::Index i = 0; i < ed.size(); ++i)
            if (!used[i] && (best < 0 || std::abs(ed(i) - r) < std::abs(ed(best) - r))) best = i;
        if (best < 0) break;
        used[best] = true;
        const double dev = std::abs(ed(best) - r);
        out.push_back({r, ed(best), dev, dev / std::max(std::abs(ed(best)), 1e-300)});
    }
    return out;
}

inline DickeResult dicke_reduced_ed(const DickeContext& ctx, int script_N, Branch b,
                                    std::optional<std::pair<double, double>> range = std::nullopt, int jobs = 1,
                                    double rel_threshold = 0.04) {
    DickeResult res;
    res.script_N = script_N;
    res.branch = b;
    res.range = range ? *range : dicke_default_range(ctx);
    const DickeMatrix m = dicke_matrix(ctx, script_N, b);
    const auto f = CharacteristicFn::from_matrix([&m](double E) { return m(E); });
    std::vector<double> inside;
    for (double p : m.poles)
        if (p > res.range.first && p < res.range.second) inside.push_back(p);
    ScanOptions so;
    so.jobs = jobs;
    res.roots = find_roots(f, res.range.first, res.range.second, inside, so);
    if (ctx.full_ed) {
        const auto vals = res.roots.values();
        res.matches = greedy_match(vals, *ctx.full_ed);
        if (!vals.empty()) res.ground_deviation = std::abs(vals.front() - (*ctx.full_ed)(0));
        for (const auto& x : res.matches)
            if (x.rel < rel_threshold) ++res.n_out;
    }
    return res;
}

inline std::vector<DickeResult> dicke_bench(const DickeContext& ctx, const std::vector<int>& sizes, Branch b,
                                            std::optional<std::pair<double, double>> range = std::nullopt,
                                            int jobs = 1) {
    std::vector<DickeResult> out(sizes.size());
    parallel_for(sizes.size(), jobs, [&](std::size_t i) { out[i] = dicke_reduced_ed(ctx, sizes[i], b, range, 1); });
    return out;
}

}  // namespace ususy
