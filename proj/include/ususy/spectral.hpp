// Root finding for energy-dependent characteristic equations and the
// dense direct-diagonalization oracle.
#pragma once

#include "parallel.hpp"
#include "types.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

namespace ususy {

// ---------------------------------------------------------------------------
// Direct ED

struct EDResult {
    RVec eigenvalues;  // ascending
    Mat eigenvectors;  // columns
    std::pair<Eigen::Index, Eigen::Index> basis_dims{0, 0};
};

inline EDResult direct_ed(const Mat& H, bool vectors = true, std::pair<Eigen::Index, Eigen::Index> dims = {0, 0}) {
    if (H.rows() != H.cols()) throw InvalidArgument("direct_ed: matrix not square");
    const double dev = hermitian_deviation(H);
    if (dev > 1e-10 * std::max(1.0, max_abs(H))) throw NotHermitian(dev);
    EDResult r;
    r.basis_dims = dims.first ? dims : std::make_pair(H.rows(), Eigen::Index{1});
    const auto opt = vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly;
    if (H.imag().cwiseAbs().maxCoeff() == 0.0) {
        RMat Hr = H.real();
        Eigen::SelfAdjointEigenSolver<RMat> es(Hr, opt);
        r.eigenvalues = es.eigenvalues();
        if (vectors) r.eigenvectors = es.eigenvectors().cast<cplx>();
    } else {
        Eigen::SelfAdjointEigenSolver<Mat> es(H, opt);
        r.eigenvalues = es.eigenvalues();
        if (vectors) r.eigenvectors = es.eigenvectors();
    }
    return r;
}

inline RVec eigenvalues(const Mat& H) { return direct_ed(H, false).eigenvalues; }

inline int negative_count(const Mat& A) {
    if (A.rows() == 0) return 0;
    if (A.rows() == 1) return A(0, 0).real() < 0.0 ? 1 : 0;
    Eigen::SelfAdjointEigenSolver<Mat> es(A, Eigen::EigenvaluesOnly);
    int n = 0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
        if (es.eigenvalues()(i) < 0.0) ++n;
    return n;
}

inline double min_abs_eigenvalue(const Mat& A) {
    if (A.rows() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<Mat> es(A, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().minCoeff();
}

// Groups of (near) degenerate eigenvalues: [begin, end) index ranges.
inline std::vector<std::pair<int, int>> degenerate_groups(const RVec& ev, double rel = 1e-9) {
    std::vector<std::pair<int, int>> g;
    const double scale = ev.size() ? std::max(1.0, ev.cwiseAbs().maxCoeff()) : 1.0;
    int start = 0;
    for (int i = 1; i <= ev.size(); ++i) {
        if (i == ev.size() || ev(i) - ev(i - 1) > rel * scale) {
            g.emplace_back(start, i);
            start = i;
        }
    }
    return g;
}

// ---------------------------------------------------------------------------
// Determinants

struct DetValue {
    int sign = 1;  // -1, 0, +1
    double log_abs = 0.0;
    double value() const { return sign == 0 ? 0.0 : sign * std::exp(log_abs); }
};

// Determinant of a Hermitian (hence real-determinant) matrix by LU.
inline DetValue det_general(const Mat& A) {
    DetValue d;
    if (A.rows() == 0) return d;
    Eigen::PartialPivLU<Mat> lu(A);
    const Mat& LU = lu.matrixLU();
    cplx phase = static_cast<double>(lu.permutationP().determinant());
    double logm = 0.0;
    for (Eigen::Index i = 0; i < LU.rows(); ++i) {
        double m = std::abs(LU(i, i));
        if (m == 0.0) return {0, -std::numeric_limits<double>::infinity()};
        logm += std::log(m);
        phase *= LU(i, i) / m;
    }
    d.sign = phase.real() >= 0.0 ? 1 : -1;
    d.log_abs = logm;
    return d;
}

inline DetValue det_general(const std::function<Mat(double)>& h_of_E, double E) { return det_general(h_of_E(E)); }

// Tridiagonal Hermitian representation at fixed E: diagonal f^{(j,j)} and
// |f^{(j,j-1)}|^2 for j = 1..q-1 (offdiag_sq[0] unused).
struct TridiagonalRep {
    std::vector<double> diag;
    std::vector<double> offdiag_sq;
    int q() const { return static_cast<int>(diag.size()); }
};

// h^{(q)} via h^{(j+1)} = f_jj h^{(j)} - |f_{j,j-1}|^2 h^{(j-1)}, rescaled.
inline DetValue continuant(const TridiagonalRep& rep) {
    if (rep.q() < 1) throw InvalidArgument("continuant: q must be >= 1");
    double hm1 = 0.0, h0 = 1.0, logscale = 0.0;
    for (int j = 0; j < rep.q(); ++j) {
        const double off = j > 0 ? rep.offdiag_sq[j] : 0.0;
        double h1 = rep.diag[j] * h0 - off * hm1;
        hm1 = h0;
        h0 = h1;
        const double m = std::max(std::abs(h0), std::abs(hm1));
        if (m > 1e100 || (m < 1e-100 && m > 0.0)) {
            h0 /= m;
            hm1 /= m;
            logscale += std::log(m);
        }
    }
    if (h0 == 0.0) return {0, -std::numeric_limits<double>::infinity()};
    return {h0 > 0 ? 1 : -1, std::log(std::abs(h0)) + logscale};
}

// Sturm count: number of negative eigenvalues of the tridiagonal matrix.
inline int continuant_negcount(const TridiagonalRep& rep) {
    int neg = 0;
    double d = 1.0;
    for (int j = 0; j < rep.q(); ++j) {
        const double off = j > 0 ? rep.offdiag_sq[j] : 0.0;
        d = rep.diag[j] - (j > 0 ? off / d : 0.0);
        if (d == 0.0) d = -1e-300;
        if (d < 0.0) ++neg;
    }
    return neg;
}

inline Mat assemble(const TridiagonalRep& rep, const std::vector<cplx>& offdiag) {
    const int q = rep.q();
    Mat T = Mat::Zero(q, q);
    for (int j = 0; j < q; ++j) T(j, j) = rep.diag[j];
    for (int j = 1; j < q; ++j) {
        T(j, j - 1) = offdiag[j];
        T(j - 1, j) = std::conj(offdiag[j]);
    }
    return T;
}

// ---------------------------------------------------------------------------
// Root scans

// Hermitian characteristic function A(E) = h(E) - E. The scanner relies on
// dA/dE being negative definite away from poles.
struct CharacteristicFn {
    std::function<Mat(double)> matrix;
    std::function<int(double)> neg_count;     // defaults to inertia of matrix
    std::function<DetValue(double)> det;      // defaults to det_general(matrix)
    std::function<double(double)> residual;   // defaults to min |eig(matrix)|

    static CharacteristicFn from_matrix(std::function<Mat(double)> m) {
        CharacteristicFn f;
        f.matrix = std::move(m);
        return f;
    }
    int count(double E) const { return neg_count ? neg_count(E) : negative_count(matrix(E)); }
    DetValue determinant(double E) const { return det ? det(E) : det_general(matrix(E)); }
    double root_residual(double E) const { return residual ? residual(E) : min_abs_eigenvalue(matrix(E)); }
};

enum class PointStatus { Ok, PoleAdjacent };

struct DetPoint {
    double E = 0.0;
    int sign = 0;
    double log_abs = 0.0;
    PointStatus status = PointStatus::Ok;
    double value() const { return sign == 0 ? 0.0 : sign * std::exp(log_abs); }
};

struct DetCurve {
    std::vector<DetPoint> grid;
};

struct Root {
    double E = 0.0;
    double lo = 0.0, hi = 0.0;
    int iterations = 0;
    double residual = 0.0;
    int multiplicity = 1;
    bool at_pole = false;
};

struct RootSet {
    std::vector<Root> roots;  // ascending, distinct
    std::vector<double> values() const {
        std::vector<double> v;
        for (const auto& r : roots)
            for (int k = 0; k < r.multiplicity; ++k) v.push_back(r.E);
        return v;
    }
    int total() const {
        int n = 0;
        for (const auto& r : roots) n += r.multiplicity;
        return n;
    }
};

struct ScanOptions {
    double pole_tol = -1.0;        // < 0: 1e-9 * max(1, scale of the range)
    double pole_guard_frac = 1e-4; // DetCurve display guard
    double root_rel = 1e-12;
    int jobs = 1;
};

struct ScanResult {
    DetCurve curve;
    RootSet roots;
};

namespace detail {

inline void bisect_count(const CharacteristicFn& f, double a, double b, int ca, int cb, double rel,
                         std::vector<Root>& out, int depth) {
    if (cb <= ca) return;
    const double mid = 0.5 * (a + b);
    if (b - a <= rel * std::max(1.0, std::abs(mid)) || depth > 200) {
        Root r;
        r.E = mid;
        r.lo = a;
        r.hi = b;
        r.iterations = depth;
        r.multiplicity = cb - ca;
        out.push_back(r);
        return;
    }
    const int cm = f.count(mid);
    bisect_count(f, a, mid, ca, cm, rel, out, depth + 1);
    bisect_count(f, mid, b, cm, cb, rel, out, depth + 1);
}

inline std::vector<double> sorted_unique(std::vector<double> v, double tol) {
    std::sort(v.begin(), v.end());
    std::vector<double> u;
    for (double x : v)
        if (u.empty() || x - u.back() > tol) u.push_back(x);
    return u;
}

}  // namespace detail

// Roots of det A(E) on [lo, hi] between the listed poles. Roots are counted
// through the inertia of A, which steps by the root multiplicity.
inline RootSet find_roots(const CharacteristicFn& f, double lo, double hi, const std::vector<double>& poles,
                          const ScanOptions& opt = {}) {
    if (!(lo < hi)) throw InvalidArgument("scan range is empty");
    const double scale = std::max({1.0, std::abs(lo), std::abs(hi)});
    const double ptol = opt.pole_tol > 0 ? opt.pole_tol : 1e-9 * scale;
    std::vector<double> inside;
    for (double p : detail::sorted_unique(poles, ptol))
        if (p > lo - ptol && p < hi + ptol) inside.push_back(p);
    std::vector<std::pair<double, double>> segs;
    double a = lo;
    for (double p : inside) {
        if (p - ptol > a) segs.emplace_back(a, p - ptol);
        a = std::max(a, p + ptol);
    }
    if (hi > a) segs.emplace_back(a, hi);

    std::vector<std::vector<Root>> found(segs.size());
    parallel_for(segs.size(), opt.jobs, [&](std::size_t i) {
        auto [s0, s1] = segs[i];
        detail::bisect_count(f, s0, s1, f.count(s0), f.count(s1), opt.root_rel, found[i], 0);
    });
    RootSet rs;
    for (auto& v : found)
        for (auto& r : v) rs.roots.push_back(r);
    std::sort(rs.roots.begin(), rs.roots.end(), [](const Root& x, const Root& y) { return x.E < y.E; });
    parallel_for(rs.roots.size(), opt.jobs, [&](std::size_t i) {
        try {
            rs.roots[i].residual = f.root_residual(rs.roots[i].E);
        } catch (const NearPole&) {
            rs.roots[i].residual = std::numeric_limits<double>::infinity();
        }
    });
    return rs;
}

inline DetCurve det_curve(const CharacteristicFn& f, double lo, double hi, int grid_points,
                          const std::vector<double>& poles, const ScanOptions& opt = {}) {
    if (grid_points < 2) throw InvalidArgument("grid_points must be >= 2");
    if (!(lo < hi)) throw InvalidArgument("scan range is empty");
    DetCurve c;
    c.grid.resize(grid_points);
    const double guard = opt.pole_guard_frac * (hi - lo);
    parallel_for(static_cast<std::size_t>(grid_points), opt.jobs, [&](std::size_t i) {
        DetPoint& pt = c.grid[i];
        pt.E = i + 1 == static_cast<std::size_t>(grid_points) ? hi : lo + (hi - lo) * static_cast<double>(i) / (grid_points - 1);
        for (double p : poles)
            if (std::abs(pt.E - p) < guard) pt.status = PointStatus::PoleAdjacent;
        try {
            DetValue d = f.determinant(pt.E);
            pt.sign = d.sign;
            pt.log_abs = d.log_abs;
        } catch (const NearPole&) {
            pt.status = PointStatus::PoleAdjacent;
            pt.sign = 0;
            pt.log_abs = std::numeric_limits<double>::infinity();
        }
    });
    return c;
}

inline ScanResult scan_roots(const CharacteristicFn& f, std::pair<double, double> range, int grid_points,
                             const std::vector<double>& poles, const ScanOptions& opt = {}) {
    ScanResult r;
    r.curve = det_curve(f, range.first, range.second, grid_points, poles, opt);
    r.roots = find_roots(f, range.first, range.second, poles, opt);
    return r;
}

}  // namespace ususy
