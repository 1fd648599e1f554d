// Generalized Rabi model in the SU(2)-rotated frame: displaced-Fock
// tridiagonal form, degeneracy locus and isolated exact solutions.
#pragma once

#include "models.hpp"
#include "parallel.hpp"
#include "spectral.hpp"

#include <array>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace ususy {

// H~+ = a^H a + lambda a^H + conj(lambda) a + Delta~
// H~- = a^H a - lambda a^H - conj(lambda) a - Delta~
// F~+ = alpha~ a + beta~ a^H + gamma~
struct RotatedParams {
    Su2Rotation rot;
    cplx lambda{}, alpha_t{}, beta_t{}, gamma_t{};
    double Delta_t = 0.0;

    double E_minus(int n) const { return n - std::norm(lambda) - Delta_t; }
    double E_plus(int n) const { return n - std::norm(lambda) + Delta_t; }
};

inline RotatedParams rotated_params(double alpha, double beta, cplx gamma, double Delta, const Su2Rotation& R) {
    const double c = std::cos(0.5 * R.theta), s = std::sin(0.5 * R.theta), st = std::sin(R.theta);
    // phases follow Su2Rotation::matrix(), whose phi enters as e^{2i phi} here
    const cplx ep = std::polar(1.0, 2.0 * R.phi), em = std::conj(ep);
    RotatedParams p;
    p.rot = R;
    p.lambda = -0.5 * st * (alpha * ep + beta * em);
    p.Delta_t = Delta * std::cos(R.theta) - 0.5 * st * (gamma * em + std::conj(gamma) * ep).real();
    p.alpha_t = alpha * em * c * c - beta * ep * s * s;
    p.beta_t = beta * em * c * c - alpha * ep * s * s;
    p.gamma_t = Delta * st + gamma * em * c * c - std::conj(gamma) * ep * s * s;
    return p;
}

inline RotatedParams rotated_params(const GenRabi& g, const Su2Rotation& R) {
    return rotated_params(g.alpha, g.beta, g.gamma, g.Delta, R);
}

// tan(theta/2) = sqrt(beta/alpha), phi = 0: removes beta~.
inline Su2Rotation beta_free_rotation(double alpha, double beta) {
    if (alpha < 0.0 || beta < 0.0 || alpha + beta == 0.0)
        throw InvalidArgument("beta_free_rotation: need alpha, beta >= 0, not both zero");
    return {2.0 * std::atan(std::sqrt(beta / alpha)), 0.0};
}

inline BlockHamiltonian rotated_hamiltonian(const RotatedParams& p, int M) {
    const auto ops = boson_ops(FockSpace{M});
    const Mat shift = p.lambda * ops.adag + std::conj(p.lambda) * ops.a + p.Delta_t * identity(M);
    return {ops.n + shift, ops.n - shift, p.alpha_t * ops.a + p.beta_t * ops.adag + p.gamma_t * identity(M)};
}

// ---------------------------------------------------------------------------
// Tridiagonal form in the |n~;-> basis

struct GenRabiTridiag {
    TridiagonalRep rep;
    std::vector<cplx> offdiag;  // f^{(j,j-1)}, entry 0 unused
    Mat matrix() const { return assemble(rep, offdiag); }
};

inline GenRabiTridiag genrabi_tridiag_full(const RotatedParams& p, double E, int q, double pole_tol = -1.0) {
    if (q < 1) throw InvalidArgument("genrabi_tridiag: q must be >= 1");
    if (std::abs(p.beta_t) > 1e-12 * std::max(1.0, std::abs(p.alpha_t)))
        throw InvalidArgument("genrabi_tridiag: rotation must remove beta~");
    if (pole_tol < 0.0) pole_tol = 1e-12 * std::max(1.0, std::abs(E));
    std::vector<double> eps(q + 1);
    for (int m = 0; m <= q; ++m) {
        const double d = E - p.E_minus(m);
        if (std::abs(d) < pole_tol) throw NearPole(std::abs(d), p.E_minus(m));
        eps[m] = 1.0 / d;
    }
    const double lam2 = std::norm(p.lambda);
    const double a2 = std::norm(p.alpha_t);
    const cplx c = p.gamma_t + p.alpha_t * p.lambda;
    GenRabiTridiag t;
    t.rep.diag.resize(q);
    t.rep.offdiag_sq.assign(q, 0.0);
    t.offdiag.assign(q, cplx{});
    for (int m = 0; m < q; ++m) {
        t.rep.diag[m] = m + 3.0 * lam2 + p.Delta_t + (m + 1) * a2 * eps[m + 1] + std::norm(c) * eps[m] - E;
        if (m > 0) {
            t.offdiag[m] = (2.0 * p.lambda + std::conj(p.alpha_t) * c * eps[m]) * std::sqrt(double(m));
            t.rep.offdiag_sq[m] = std::norm(t.offdiag[m]);
        }
    }
    return t;
}

inline TridiagonalRep genrabi_tridiag(const GenRabi& g, double E, int q) {
    return genrabi_tridiag_full(rotated_params(g, beta_free_rotation(g.alpha, g.beta)), E, q).rep;
}

inline std::vector<double> genrabi_poles(const RotatedParams& p, int q) {
    std::vector<double> poles;
    for (int m = 0; m <= q; ++m) poles.push_back(p.E_minus(m));
    return poles;
}

inline CharacteristicFn genrabi_characteristic(const RotatedParams& p, int q) {
    CharacteristicFn f;
    f.matrix = [p, q](double E) { return genrabi_tridiag_full(p, E, q, 0.0).matrix(); };
    f.neg_count = [p, q](double E) { return continuant_negcount(genrabi_tridiag_full(p, E, q, 0.0).rep); };
    f.det = [p, q](double E) { return continuant(genrabi_tridiag_full(p, E, q, 0.0).rep); };
    return f;
}

struct ContinuantScan {
    RotatedParams params;
    std::vector<double> poles;
    DetCurve curve;
    RootSet roots;
};

inline ContinuantScan genrabi_continuant_scan(const GenRabi& g, int q, double lo, double hi, int grid_points = 2001,
                                              int jobs = 1) {
    validate(g);
    ContinuantScan s;
    s.params = rotated_params(g, beta_free_rotation(g.alpha, g.beta));
    s.poles = genrabi_poles(s.params, q);
    const auto f = genrabi_characteristic(s.params, q);
    ScanOptions so;
    so.jobs = jobs;
    s.curve = det_curve(f, lo, hi, grid_points, s.poles, so);
    s.roots = find_roots(f, lo, hi, s.poles, so);
    return s;
}

// ---------------------------------------------------------------------------
// Degeneracy locus: Delta(zeta) where some eigenvalue of H equals E~-^{(n)},
// with alpha = zeta cosh(tau), beta = zeta sinh(tau).

struct LocusOptions {
    int n = 0;
    double tanh_tau = 3.0 / 7.0;
    cplx gamma{};
    int M = 40;
    double window_lo = -2.0, window_hi = 2.0;
    int window_points = 161;
    int jobs = 1;
};

struct LocusPoint {
    double zeta = 0.0;
    double Delta = 0.0;
    double residual = 0.0;
    bool found = false;
    std::string error;
};

namespace detail {

inline GenRabi locus_model(double zeta, double Delta, const LocusOptions& o) {
    const double tau = std::atanh(o.tanh_tau);
    return {zeta * std::cosh(tau), zeta * std::sinh(tau), o.gamma, Delta, o.M};
}

inline double locus_target(double zeta, double Delta, const LocusOptions& o) {
    const double tau = std::atanh(o.tanh_tau);
    const Su2Rotation R{2.0 * std::atan(std::sqrt(o.tanh_tau)), 0.0};
    return rotated_params(zeta * std::cosh(tau), zeta * std::sinh(tau), o.gamma, Delta, R).E_minus(o.n);
}

inline int locus_count(double zeta, double Delta, const LocusOptions& o) {
    const RVec ev = eigenvalues(full_hamiltonian(locus_model(zeta, Delta, o)));
    const double t = locus_target(zeta, Delta, o);
    return static_cast<int>((ev.array() < t).count());
}

inline void locus_bisect(double zeta, double a, double b, int ca, int cb, const LocusOptions& o, std::vector<double>& out) {
    if (ca == cb) return;
    const double mid = 0.5 * (a + b);
    if (b - a <= 1e-13) {
        out.push_back(mid);
        return;
    }
    const int cm = locus_count(zeta, mid, o);
    locus_bisect(zeta, a, mid, ca, cm, o, out);
    locus_bisect(zeta, mid, b, cm, cb, o, out);
}

}  // namespace detail

inline double locus_residual(double zeta, double Delta, const LocusOptions& o) {
    const RVec ev = eigenvalues(full_hamiltonian(detail::locus_model(zeta, Delta, o)));
    return (ev.array() - detail::locus_target(zeta, Delta, o)).abs().minCoeff();
}

// Every crossing inside the Delta window, ascending.
inline std::vector<double> locus_crossings(double zeta, const LocusOptions& o) {
    std::vector<double> grid(o.window_points), out;
    std::vector<int> cnt(o.window_points);
    for (int i = 0; i < o.window_points; ++i) {
        grid[i] = o.window_lo + (o.window_hi - o.window_lo) * i / (o.window_points - 1);
        cnt[i] = detail::locus_count(zeta, grid[i], o);
    }
    for (int i = 0; i + 1 < o.window_points; ++i)
        detail::locus_bisect(zeta, grid[i], grid[i + 1], cnt[i], cnt[i + 1], o, out);
    return out;
}

// Crossings per zeta in parallel; the branch is then followed from the
// crossing nearest zero at the first grid point.
inline std::vector<LocusPoint> degeneracy_locus(const std::vector<double>& zeta_grid, const LocusOptions& o = {}) {
    std::vector<std::vector<double>> all(zeta_grid.size());
    parallel_for(zeta_grid.size(), o.jobs, [&](std::size_t i) { all[i] = locus_crossings(zeta_grid[i], o); });
    std::vector<LocusPoint> out;
    std::optional<double> prev;
    for (std::size_t i = 0; i < zeta_grid.size(); ++i) {
        LocusPoint p;
        p.zeta = zeta_grid[i];
        if (all[i].empty()) {
            p.error = NoCrossing(p.zeta).what();
            out.push_back(p);
            continue;
        }
        const double ref = prev.value_or(0.0);
        p.Delta = *std::min_element(all[i].begin(), all[i].end(),
                                    [ref](double x, double y) { return std::abs(x - ref) < std::abs(y - ref); });
        p.residual = locus_residual(p.zeta, p.Delta, o);
        p.found = true;
        prev = p.Delta;
        out.push_back(p);
    }
    return out;
}

inline double locus_point(double zeta, const LocusOptions& o = {}) {
    const auto c = locus_crossings(zeta, o);
    if (c.empty()) throw NoCrossing(zeta);
    return *std::min_element(c.begin(), c.end(), [](double x, double y) { return std::abs(x) < std::abs(y); });
}

// ---------------------------------------------------------------------------
// Isolated exact solutions

struct IsolatedParams {
    double alpha = 0.0, beta = 0.0;
    double gamma = 0.0;  // real
    double Delta = 0.0;
    int eta = 1;
    int M = 60;  // Fock truncation of the witness check
};

struct Constraint {
    std::string name;
    double residual = 0.0;
};

struct IsolatedResult {
    int class_id = 0;
    int order = 0;
    RotatedParams params;
    std::vector<Constraint> constraints;
    double E = 0.0;
    Branch missing_branch = Branch::Plus;  // reduced problem that cannot return the witness
    BlockHamiltonian rotated;
    std::optional<ReconstructedSpinor> witness;  // rotated frame
    double ansatz_sv = 0.0;                      // smallest singular value of (H~ - E) B
};

namespace detail {

inline Mat det4(const std::array<std::array<cplx, 4>, 4>& a) {
    Mat m(4, 4);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) m(i, j) = a[i][j];
    return m;
}

inline cplx class3_order2_det(const RotatedParams& q) {
    const cplx g = q.gamma_t, gc = std::conj(g), lam = q.lambda;
    const cplx dl = 2.0 * q.Delta_t - 4.0 * lam * lam;
    return det4({{{2.0, -g, 0.0, 0.0},
                  {-gc, 2.0 * (1.0 + q.Delta_t - 2.0 * lam * lam), 0.0, 2.0 * lam},
                  {0.0, 0.0, 1.0, -g},
                  {0.0, 2.0 * lam, -gc, 1.0 + dl}}})
        .determinant();
}

}  // namespace detail

inline double isolated_rotation_angle(int class_id, const IsolatedParams& p) {
    if (class_id == 3) return p.eta * std::numbers::pi / 2;
    if (p.alpha <= 0.0 || p.beta < 0.0) throw InvalidArgument("isolated solutions need alpha > 0, beta >= 0");
    return 2.0 * std::atan(p.eta * std::sqrt(p.beta / p.alpha));
}

// Class 1: (0, |0~;->) at E~-^{(0)}.
// Class 2: finite ansatz in |m~;+>, m <= M on both components, at E~+^{(M)}.
// Class 3: alpha = beta, theta = pi/2; psi+ on m <= M, psi- on m < M, at E~+^{(M)}.
inline IsolatedResult isolated_solution_check(int class_id, const IsolatedParams& p, int order = 0) {
    if (class_id < 1 || class_id > 3) throw InvalidArgument("class_id must be 1, 2 or 3");
    if (order < 0) throw InvalidArgument("order must be >= 0");
    if (class_id == 1 && order != 0) throw InvalidArgument("class 1 has no order");
    if (class_id == 3 && (order < 1 || order > 2)) throw InvalidArgument("class 3 is implemented for order 1 and 2");
    if (class_id != 3 && p.alpha == p.beta) throw InvalidArgument("classes 1 and 2 need alpha != beta");
    IsolatedResult r;
    r.class_id = class_id;
    r.order = order;
    const Su2Rotation R{isolated_rotation_angle(class_id, p), 0.0};
    r.params = rotated_params(p.alpha, p.beta, p.gamma, p.Delta, R);
    const auto& q = r.params;
    const double th = R.theta;
    const double cot = std::cos(th) / std::sin(th);
    const cplx lam = q.lambda;
    auto add = [&](std::string n, double v) { r.constraints.push_back({std::move(n), v}); };

    if (class_id == 1) {
        add("beta~", std::abs(q.beta_t));
        add("(alpha^2-beta^2)/2 - Delta - gamma cot(theta)",
            std::abs(0.5 * (p.alpha * p.alpha - p.beta * p.beta) - p.Delta - p.gamma * cot));
        add("lambda alpha~ + gamma~", std::abs(lam * q.alpha_t + q.gamma_t));
        r.E = q.E_minus(0);
        r.missing_branch = Branch::Plus;
    } else if (class_id == 2) {
        add("beta~", std::abs(q.beta_t));
        add("(beta^2-alpha^2)/2 - Delta - gamma cot(theta)",
            std::abs(0.5 * (p.beta * p.beta - p.alpha * p.alpha) - p.Delta - p.gamma * cot));
        add("lambda alpha~ - gamma~", std::abs(lam * q.alpha_t - q.gamma_t));
        if (order == 0) add("2 lambda^2 - Delta~", std::abs(2.0 * lam * lam - q.Delta_t));
        r.E = q.E_plus(order);
        r.missing_branch = Branch::Minus;
    } else {
        add("alpha - beta", std::abs(p.alpha - p.beta));
        add("alpha~", std::abs(q.alpha_t));
        add("beta~", std::abs(q.beta_t));
        const cplx g = q.gamma_t;
        const cplx dl = 2.0 * q.Delta_t - 4.0 * lam * lam;
        if (order == 1) {
            add("det M=1", std::abs(1.0 + dl - std::norm(g)));
        } else {
            add("det M=2", std::abs(detail::class3_order2_det(q)));
        }
        r.E = q.E_plus(order);
        r.missing_branch = Branch::Minus;
    }

    // Ansatz basis in the rotated frame.
    const int M = p.M;
    const FockSpace fs{M};
    r.rotated = rotated_hamiltonian(q, M);
    const Mat Dp = displacement(-lam, fs);  // |m~;+> = D(-lambda)|m>
    const Mat Dm = displacement(lam, fs);   // |m~;-> = D(lambda)|m>
    std::vector<Vec> cols;
    auto push = [&](const Mat& D, int m, bool plus) {
        Vec v = Vec::Zero(2 * M);
        (plus ? v.head(M) : v.tail(M)) = D.col(m);
        cols.push_back(v);
    };
    if (class_id == 1) {
        push(Dm, 0, false);
    } else {
        const int top_minus = class_id == 2 ? order : order - 1;
        for (int m = 0; m <= order; ++m) push(Dp, m, true);
        for (int m = 0; m <= top_minus; ++m) push(Dp, m, false);
    }
    Mat B(2 * M, static_cast<Eigen::Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) B.col(static_cast<Eigen::Index>(k)) = cols[k];
    Mat A = r.rotated.assemble() * B - r.E * B;
    Eigen::JacobiSVD<Mat> svd(A, Eigen::ComputeFullV);
    const auto k = svd.singularValues().size() - 1;
    r.ansatz_sv = svd.singularValues()(k);
    const Vec v = B * svd.matrixV().col(k);
    if (class_id == 2 && order > 0) add("finite-ansatz singular value", r.ansatz_sv);

    std::vector<double> res;
    bool ok = true;
    for (const auto& c : r.constraints) {
        res.push_back(c.residual);
        if (!(c.residual < 1e-10)) ok = false;
    }
    if (!ok) {
        std::string msg = "class " + std::to_string(class_id) + " constraints violated:";
        for (const auto& c : r.constraints) msg += " [" + c.name + "] = " + std::to_string(c.residual);
        throw ConstraintViolated(msg, res);
    }

    r.witness = make_spinor(r.rotated.assemble(), v, r.E);
    return r;
}

// Parameter sets satisfying each class's constraints.
inline IsolatedParams isolated_example(int class_id, int order = 0) {
    if (class_id == 1 && order == 0) return {1.0, 0.25, 0.25, 0.28125, 1, 60};
    if (class_id == 2 && order == 0) {
        const double a = 1.0, b = 0.25;
        const double th = 2.0 * std::atan(std::sqrt(b / a));
        const double lam = -0.5 * std::sin(th) * (a + b);
        const double g = std::sin(th) * (std::cos(th) * (b * b - a * a) / 2.0 - 2.0 * lam * lam);
        return {a, b, g, (b * b - a * a) / 2.0 - g * std::cos(th) / std::sin(th), 1, 60};
    }
    if (class_id == 3 && order == 1) return {0.3, 0.3, 0.0, 0.8, 1, 60};
    if (class_id == 3 && order == 2) {
        const double al = 0.2;
        auto det = [al](double D) {
            return detail::class3_order2_det(rotated_params(al, al, 0.0, D, {std::numbers::pi / 2, 0.0})).real();
        };
        double lo = 0.8, hi = 0.9;
        for (int i = 0; i < 200 && hi - lo > 0.0; ++i) {
            const double mid = 0.5 * (lo + hi);
            ((det(lo) > 0) == (det(mid) > 0) ? lo : hi) = mid;
        }
        return {al, al, 0.0, 0.5 * (lo + hi), 1, 60};
    }
    throw InvalidArgument("no built-in example for class " + std::to_string(class_id) + " order " +
                          std::to_string(order));
}

}  // namespace ususy
