#pragma once

#include "eprmbl/errors.hpp"
#include "eprmbl/reduced.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <functional>

namespace eprmbl {

/// Negative partial-transpose eigenvalues above -eigen_clamp are roundoff and count as zero.
inline constexpr double eigen_clamp = 1e-12;

struct EntanglementRecord {
    double t              = 0;
    double negativity     = 0;
    double log_negativity = 0;
    double concurrence    = 0;
    double formation      = 0;
};

namespace detail {
    inline double clamp_roundoff(double x) { return x < 0.0 && x > -eigen_clamp ? 0.0 : x; }

    inline void check_density(const TwoQubitDensity &rho) {
        const auto &m = rho.entries;
        if(!m.allFinite()) throw NumericError("invalid density matrix: non-finite entries");
        if((m - m.adjoint()).cwiseAbs().maxCoeff() > 1e-12) throw NumericError("invalid density matrix: not Hermitian");
        if(std::abs(m.trace().real() - 1.0) > 1e-10 || std::abs(m.trace().imag()) > 1e-10) throw NumericError("invalid density matrix: trace differs from 1");
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> es(m, Eigen::EigenvaluesOnly);
        if(es.eigenvalues().minCoeff() < -1e-10) throw NumericError("invalid density matrix: negative eigenvalue");
    }

    inline double binary_entropy(double x) {
        if(x <= 0.0 || x >= 1.0) return 0.0;
        return -x * std::log2(x) - (1.0 - x) * std::log2(1.0 - x);
    }
} // namespace detail

/// Transpose over Bob's factor: rho^T_B[(a,b),(a',b')] = rho[(a,b'),(a',b)].
[[nodiscard]] inline Eigen::Matrix4cd partial_transpose(const Eigen::Matrix4cd &rho) {
    Eigen::Matrix4cd out;
    for(int a = 0; a < 2; ++a)
        for(int b = 0; b < 2; ++b)
            for(int ap = 0; ap < 2; ++ap)
                for(int bp = 0; bp < 2; ++bp) out(2 * a + b, 2 * ap + bp) = rho(2 * a + bp, 2 * ap + b);
    return out;
}

/// N = 2 * sum_i max(0, -mu_i) over the eigenvalues of the partial transpose.
[[nodiscard]] inline double negativity(const TwoQubitDensity &rho) {
    detail::check_density(rho);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> es(partial_transpose(rho.entries), Eigen::EigenvaluesOnly);
    double                                          n = 0.0;
    for(int i = 0; i < 4; ++i) n += std::max(0.0, -detail::clamp_roundoff(es.eigenvalues()(i)));
    return 2.0 * n;
}

[[nodiscard]] inline double log_negativity(double n) {
    if(!(n >= 0.0)) throw NumericError("negativity must be >= 0");
    return std::log2(n + 1.0);
}

namespace detail {
    inline Eigen::Matrix4cd sigma_yy() {
        Eigen::Matrix4cd yy = Eigen::Matrix4cd::Zero();
        yy(0, 3)            = -1.0;
        yy(1, 2)            = 1.0;
        yy(2, 1)            = 1.0;
        yy(3, 0)            = -1.0;
        return yy;
    }
} // namespace detail

/// sigma_y (x) sigma_y rho^* sigma_y (x) sigma_y.
[[nodiscard]] inline Eigen::Matrix4cd spin_flip(const Eigen::Matrix4cd &rho) {
    const auto yy = detail::sigma_yy();
    return yy * rho.conjugate() * yy;
}

/// Wootters concurrence. With rho = W W^dagger, the square roots of the eigenvalues of
/// rho * rho_tilde are the singular values of W^T (sigma_y (x) sigma_y) W. Taking them from an SVD
/// avoids square roots of near-zero eigenvalues, which would cost half the working precision
/// for nearly pure states.
[[nodiscard]] inline double concurrence(const TwoQubitDensity &rho) {
    detail::check_density(rho);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> es(rho.entries);
    Eigen::Vector4d                                 root;
    for(int i = 0; i < 4; ++i) root(i) = std::sqrt(std::max(0.0, es.eigenvalues()(i)));
    const Eigen::Matrix4cd w = es.eigenvectors() * root.asDiagonal();
    const Eigen::Matrix4cd b = w.transpose() * detail::sigma_yy() * w;
    const Eigen::Vector4d  s = Eigen::JacobiSVD<Eigen::Matrix4cd>(b).singularValues();
    return std::max(0.0, s(0) - s(1) - s(2) - s(3));
}

/// S_F = h((1 + sqrt(1 - C^2)) / 2) with h the binary entropy, h(0) = h(1) = 0.
[[nodiscard]] inline double entanglement_of_formation(double c) {
    if(!(c >= 0.0) || c > 1.0 + 1e-10) throw NumericError("concurrence must lie in [0, 1]");
    c = std::min(c, 1.0);
    return detail::binary_entropy(0.5 * (1.0 + std::sqrt(1.0 - c * c)));
}

[[nodiscard]] inline EntanglementRecord evaluate_all(const TwoQubitDensity &rho, double t) {
    EntanglementRecord r;
    r.t              = t;
    r.negativity     = negativity(rho);
    r.log_negativity = log_negativity(r.negativity);
    r.concurrence    = concurrence(rho);
    r.formation      = entanglement_of_formation(r.concurrence);
    return r;
}

} // namespace eprmbl
