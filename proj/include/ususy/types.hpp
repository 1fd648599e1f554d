// Basic numeric types, tolerances and error values.
#pragma once

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace ususy {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

inline constexpr cplx I_unit{0.0, 1.0};

// Dense operator on a truncated Hilbert space.
using OperatorMatrix = Mat;

enum class Branch { Plus, Minus };

inline Branch other_branch(Branch b) { return b == Branch::Plus ? Branch::Minus : Branch::Plus; }
inline const char* to_string(Branch b) { return b == Branch::Plus ? "+" : "-"; }
inline int sign_of(Branch b) { return b == Branch::Plus ? 1 : -1; }

struct Tolerances {
    double pole_rel = 1e-8;       // resolvent guard, relative to spectral scale
    double exclusion = 1e-6;      // overlap threshold for excluded states
    double degeneracy_rel = 1e-9; // grouping of eigenvalues
    double root_rel = 1e-12;      // bisection width
};

inline const Tolerances& default_tol() {
    static const Tolerances t{};
    return t;
}

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NearPole : Error {
    double distance;
    double nearest_eig;
    int level;
    NearPole(double d, double e, int lvl = 0)
        : Error("near pole: |E - " + std::to_string(e) + "| = " + std::to_string(d) +
                (lvl > 0 ? " at level " + std::to_string(lvl) : std::string{})),
          distance(d), nearest_eig(e), level(lvl) {}
};

struct TailTooLarge : Error {
    int needed_M;
    explicit TailTooLarge(int m)
        : Error("coherent-state tail too large, need M >= " + std::to_string(m)), needed_M(m) {}
};

struct NotHermitian : Error {
    double deviation;
    explicit NotHermitian(double d)
        : Error("matrix is not Hermitian, max|A - A^H| = " + std::to_string(d)), deviation(d) {}
};

struct InvalidArgument : Error {
    using Error::Error;
};

struct ConstraintViolated : Error {
    std::vector<double> residuals;
    ConstraintViolated(std::string what, std::vector<double> r)
        : Error(std::move(what)), residuals(std::move(r)) {}
};

struct ZeroDensity : Error {
    using Error::Error;
};

struct NoCrossing : Error {
    double zeta;
    explicit NoCrossing(double z) : Error("no crossing for zeta = " + std::to_string(z)), zeta(z) {}
};

inline double max_abs(const Mat& A) { return A.size() ? A.cwiseAbs().maxCoeff() : 0.0; }

inline double hermitian_deviation(const Mat& A) { return max_abs(A - A.adjoint()); }

inline bool is_hermitian(const Mat& A, double rel = 1e-12) {
    if (A.rows() != A.cols()) return false;
    return hermitian_deviation(A) <= rel * std::max(1.0, max_abs(A));
}

inline Mat hermitian_part(const Mat& A) { return 0.5 * (A + A.adjoint()); }

inline Mat identity(Eigen::Index n) { return Mat::Identity(n, n); }

}  // namespace ususy
