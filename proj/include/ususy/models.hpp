// Model builders: uniform field, JC, generalized Rabi, spin chains,
// Tavis-Cummings, generalized Dicke and spin-1.
#pragma once

#include "operators.hpp"
#include "reduction.hpp"
#include "types.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <variant>
#include <vector>

namespace ususy {

struct UniformField {
    double B1 = 0.0, B2 = 0.0, B3 = 0.0;
};

struct JC {
    double Delta = 0.0, alpha = 0.0;
    int M = 30;
};

struct GenRabi {
    double alpha = 0.0, beta = 0.0;
    cplx gamma{};
    double Delta = 0.0;
    int M = 40;
};

struct Rabi {
    double g = 0.0, Delta = 0.0;
    int M = 40;
};

// sigma_+^{(i)} sigma_-^{(j)} + h.c. with strength J; sites are 0-based.
struct Coupling {
    int i = 0, j = 0;
    double J = 1.0;
};

struct SpinChain {
    int N = 2;
    std::vector<Coupling> couplings;
};

struct TC {
    int N = 1;
    double Delta = 0.0;
    std::vector<double> alpha{0.0};  // one entry: uniform
    int M = 10;
    double alpha_at(int k) const { return alpha.size() == 1 ? alpha[0] : alpha.at(k); }
};

struct GenDicke {
    int N = 1;
    double alpha = 0.0, beta = 0.0;
    cplx gamma{};
    double Delta = 0.0;
    int M = 20;
};

struct SpinOne {
    Mat H0, Delta, F_plus;
};

using ModelSpec = std::variant<UniformField, JC, GenRabi, Rabi, SpinChain, TC, GenDicke, SpinOne>;

inline const char* kind_name(const ModelSpec& s) {
    static const char* names[] = {"uniform_field", "jc", "genrabi", "rabi", "spin_chain", "tc", "gendicke", "spin_one"};
    return names[s.index()];
}

namespace detail {

inline void require(bool ok, const std::string& msg) {
    if (!ok) throw InvalidArgument(msg);
}

inline bool finite(double x) { return std::isfinite(x); }
inline bool finite(cplx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

inline void check_spins(int N) { require(N >= 1 && N <= 12, "N must be in [1, 12]"); }

}  // namespace detail

inline void validate(const ModelSpec& spec) {
    using detail::finite;
    using detail::require;
    std::visit(
        [](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, UniformField>) {
                require(finite(s.B1) && finite(s.B2) && finite(s.B3), "field components must be finite");
            } else if constexpr (std::is_same_v<T, JC>) {
                require(finite(s.Delta) && finite(s.alpha), "JC parameters must be finite");
                require(s.M >= 2, "M must be >= 2");
            } else if constexpr (std::is_same_v<T, GenRabi>) {
                require(finite(s.alpha) && finite(s.beta) && finite(s.gamma) && finite(s.Delta),
                        "GenRabi parameters must be finite");
                require(s.alpha >= 0.0 && s.beta >= 0.0, "alpha and beta must be >= 0");
                require(s.M >= 2, "M must be >= 2");
            } else if constexpr (std::is_same_v<T, Rabi>) {
                require(finite(s.g) && finite(s.Delta), "Rabi parameters must be finite");
                require(s.M >= 2, "M must be >= 2");
            } else if constexpr (std::is_same_v<T, SpinChain>) {
                detail::check_spins(s.N);
                require(s.N >= 2, "spin chain needs N >= 2");
                for (const auto& c : s.couplings) {
                    require(c.i >= 0 && c.i < s.N && c.j >= 0 && c.j < s.N && c.i != c.j, "coupling sites out of range");
                    require(finite(c.J), "coupling must be finite");
                }
            } else if constexpr (std::is_same_v<T, TC>) {
                detail::check_spins(s.N);
                require(s.alpha.size() == 1 || static_cast<int>(s.alpha.size()) == s.N,
                        "alpha needs one entry or one per spin");
                for (double a : s.alpha) require(finite(a), "alpha must be finite");
                require(finite(s.Delta), "Delta must be finite");
                require(s.M >= 2, "M must be >= 2");
            } else if constexpr (std::is_same_v<T, GenDicke>) {
                detail::check_spins(s.N);
                require(finite(s.alpha) && finite(s.beta) && finite(s.gamma) && finite(s.Delta),
                        "GenDicke parameters must be finite");
                require(s.M >= 2, "M must be >= 2");
            } else {
                const auto d = s.H0.rows();
                require(d >= 1 && s.H0.cols() == d && s.Delta.rows() == d && s.Delta.cols() == d &&
                            s.F_plus.rows() == d && s.F_plus.cols() == d,
                        "spin-one blocks must share one dimension");
                require(is_hermitian(s.H0) && is_hermitian(s.Delta), "H0 and Delta must be Hermitian");
            }
        },
        spec);
}

// Spins ⊗ field with spin 1 most significant; bit 0 is up.
inline Mat many_spin_hamiltonian(int N, const Mat& H0, const std::vector<double>& Delta, const std::vector<Mat>& F_plus) {
    const Eigen::Index m = H0.rows();
    const Eigen::Index ns = Eigen::Index{1} << N;
    Mat H = Mat::Zero(ns * m, ns * m);
    for (Eigen::Index s = 0; s < ns; ++s) {
        H.block(s * m, s * m, m, m) += H0;
        for (int k = 0; k < N; ++k) {
            const Eigen::Index bit = Eigen::Index{1} << (N - 1 - k);
            const bool down = s & bit;
            H.block(s * m, s * m, m, m).diagonal().array() += down ? -Delta[k] : Delta[k];
            if (down) {
                const Eigen::Index u = s ^ bit;
                H.block(u * m, s * m, m, m) += F_plus[k];
                H.block(s * m, u * m, m, m) += F_plus[k].adjoint();
            }
        }
    }
    return H;
}

inline Mat spin_exchange(int N, const std::vector<Coupling>& couplings) {
    const Eigen::Index ns = Eigen::Index{1} << N;
    Mat H = Mat::Zero(ns, ns);
    for (const auto& c : couplings) {
        const Eigen::Index bi = Eigen::Index{1} << (N - 1 - c.i), bj = Eigen::Index{1} << (N - 1 - c.j);
        for (Eigen::Index s = 0; s < ns; ++s) {
            // sigma_+^i sigma_-^j: i down -> up, j up -> down
            if ((s & bi) && !(s & bj)) {
                const Eigen::Index t = (s ^ bi) ^ bj;
                H(t, s) += c.J;
                H(s, t) += c.J;
            }
        }
    }
    return H;
}

inline Mat genrabi_coupling(double alpha, double beta, cplx gamma, int M) {
    const auto ops = boson_ops(FockSpace{M});
    return alpha * ops.a + beta * ops.adag + gamma * identity(M);
}

inline BlockTridiagonal spin_one_system(const SpinOne& s) {
    validate(s);
    return spin_p_system(s.H0, s.Delta, s.F_plus, 2);
}

inline Mat full_hamiltonian(const ModelSpec& spec) {
    validate(spec);
    return std::visit(
        [](const auto& s) -> Mat {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, UniformField>) {
                Mat H(2, 2);
                H << s.B3, cplx(s.B1, -s.B2), cplx(s.B1, s.B2), -s.B3;
                return H;
            } else if constexpr (std::is_same_v<T, JC>) {
                return many_spin_hamiltonian(1, number_op(s.M), {s.Delta}, {s.alpha * annihilation(s.M)});
            } else if constexpr (std::is_same_v<T, GenRabi>) {
                return many_spin_hamiltonian(1, number_op(s.M), {s.Delta},
                                             {genrabi_coupling(s.alpha, s.beta, s.gamma, s.M)});
            } else if constexpr (std::is_same_v<T, Rabi>) {
                return many_spin_hamiltonian(1, number_op(s.M), {s.Delta}, {genrabi_coupling(s.g, s.g, 0.0, s.M)});
            } else if constexpr (std::is_same_v<T, SpinChain>) {
                return spin_exchange(s.N, s.couplings);
            } else if constexpr (std::is_same_v<T, TC>) {
                std::vector<Mat> F;
                for (int k = 0; k < s.N; ++k) F.push_back(s.alpha_at(k) * annihilation(s.M));
                return many_spin_hamiltonian(s.N, number_op(s.M), std::vector<double>(s.N, s.Delta), F);
            } else if constexpr (std::is_same_v<T, GenDicke>) {
                const Mat F = genrabi_coupling(s.alpha, s.beta, s.gamma, s.M);
                return many_spin_hamiltonian(s.N, number_op(s.M), std::vector<double>(s.N, s.Delta),
                                             std::vector<Mat>(s.N, F));
            } else {
                return spin_one_system(s).assemble();
            }
        },
        spec);
}

// Split on the first spin.
inline BlockHamiltonian build(const ModelSpec& spec) {
    if (std::holds_alternative<SpinOne>(spec))
        throw InvalidArgument("spin-one models are three-block systems; use spin_one_system");
    return BlockHamiltonian::split(full_hamiltonian(spec));
}

// Fock truncation of a spec, 1 for pure spin models.
inline int fock_dim(const ModelSpec& spec) {
    return std::visit(
        [](const auto& s) -> int {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, UniformField> || std::is_same_v<T, SpinChain>)
                return 1;
            else if constexpr (std::is_same_v<T, SpinOne>)
                return static_cast<int>(s.H0.rows());
            else
                return s.M;
        },
        spec);
}

// ---------------------------------------------------------------------------
// JC closed forms

inline double jc_energy(int n, int eta, double Delta, double alpha) {
    return n + 0.5 + eta * std::sqrt((Delta - 0.5) * (Delta - 0.5) + alpha * alpha * (n + 1));
}

inline double jc_secular(int n, double E, double Delta, double alpha) {
    return (E - n - 1 + Delta) * (E - n - Delta) - alpha * alpha * (n + 1);
}

struct JcEigenpair {
    double E = 0.0;
    ReconstructedSpinor spinor;
};

// (u|n>, v|n+1>) with (E - n - Delta) u = alpha sqrt(n+1) v.
inline JcEigenpair jc_analytic(int n, int eta, double Delta, double alpha, int M = -1) {
    if (n < 0) throw InvalidArgument("jc_analytic: n must be >= 0");
    if (eta != 1 && eta != -1) throw InvalidArgument("jc_analytic: eta must be +1 or -1");
    if (alpha == 0.0) throw InvalidArgument("jc_analytic: alpha must be nonzero");
    if (M < 0) M = n + 2;
    if (M < n + 2) throw InvalidArgument("jc_analytic: M must be >= n + 2");
    JcEigenpair out;
    out.E = jc_energy(n, eta, Delta, alpha);
    Vec full = Vec::Zero(2 * M);
    full(n) = alpha * std::sqrt(n + 1.0);
    full(M + n + 1) = out.E - n - Delta;
    const Mat H = full_hamiltonian(JC{Delta, alpha, M});
    out.spinor = make_spinor(H, full, out.E);
    return out;
}

// (0, |0>) at E = -Delta.
inline ReconstructedSpinor jc_excluded_state(double Delta, double alpha, int M) {
    Vec full = Vec::Zero(2 * M);
    full(M) = 1.0;
    return make_spinor(full_hamiltonian(JC{Delta, alpha, M}), full, -Delta);
}

inline double jc_spin_texture(const ReconstructedSpinor& state, double r) {
    const auto M = state.psi_plus.size();
    if (M > 201) throw InvalidArgument("jc_spin_texture: Fock expansion longer than 201");
    cplx p{}, m{};
    for (Eigen::Index n = 0; n < M; ++n) {
        const double phi = ho_wavefunction(static_cast<int>(n), r);
        p += state.psi_plus(n) * phi;
        m += state.psi_minus(n) * phi;
    }
    const double den = std::norm(p) + std::norm(m);
    if (den < 1e-300) throw ZeroDensity("jc_spin_texture: density vanishes at r = " + std::to_string(r));
    return 2.0 * (std::conj(p) * m).real() / den;
}

// ---------------------------------------------------------------------------
// Spin chains

struct SpinChainCatalog {
    SpinChain spec;
    std::vector<double> spectrum;  // full multiset, ascending
    std::vector<double> sector;    // one-up sector for N = 3
};

// N = 3 couplings: (1,2) carries tau, the others 1.
inline SpinChainCatalog spin_chain_catalog(int N, double tau = 1.0) {
    SpinChainCatalog c;
    c.spec.N = N;
    if (N == 2) {
        c.spec.couplings = {{0, 1, 1.0}};
        c.spectrum = {-1.0, 0.0, 0.0, 1.0};
        return c;
    }
    if (N != 3) throw InvalidArgument("spin_chain_catalog: N must be 2 or 3");
    c.spec.couplings = {{0, 1, tau}, {0, 2, 1.0}, {1, 2, 1.0}};
    const double r = std::sqrt(8.0 + tau * tau);
    c.sector = {-tau, 0.5 * (tau - r), 0.5 * (tau + r)};
    std::sort(c.sector.begin(), c.sector.end());
    c.spectrum = {0.0, 0.0};
    for (double e : c.sector) c.spectrum.insert(c.spectrum.end(), {e, e});
    std::sort(c.spectrum.begin(), c.spectrum.end());
    return c;
}

}  // namespace ususy
