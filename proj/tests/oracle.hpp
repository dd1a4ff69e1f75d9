#pragma once

// Brute-force full 2^L Hilbert-space reference used only by tests. Operators are assembled from
// Kronecker products of single-site spin matrices, states are propagated with a dense complex
// eigensolver, and partial traces are taken by explicit index loops, so no code path is shared
// with the sector implementation.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <vector>

namespace oracle {

using cplx = std::complex<double>;
using Mat  = Eigen::MatrixXcd;
using Vec  = Eigen::VectorXcd;

// Single-site basis: index 0 = down, index 1 = up (matches bit value).
inline Mat sz() {
    Mat m = Mat::Zero(2, 2);
    m(0, 0) = -0.5;
    m(1, 1) = 0.5;
    return m;
}
inline Mat sx() {
    Mat m = Mat::Zero(2, 2);
    m(0, 1) = m(1, 0) = 0.5;
    return m;
}
inline Mat sy() {
    Mat m = Mat::Zero(2, 2);
    m(0, 1) = cplx(0, 0.5);  // <down| s^y |up> = +i/2
    m(1, 0) = cplx(0, -0.5); // <up| s^y |down> = -i/2
    return m;
}

inline Mat kron(const Mat &a, const Mat &b) {
    Mat out(a.rows() * b.rows(), a.cols() * b.cols());
    for(Eigen::Index i = 0; i < a.rows(); ++i)
        for(Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

// Site i acts on bit i of the full-space index, so site L-1 is the leading Kronecker factor.
inline Mat embed(const Mat &op, int site, int L) {
    Mat out = Mat::Identity(1, 1);
    for(int s = L - 1; s >= 0; --s) out = kron(out, s == site ? op : Mat::Identity(2, 2));
    return out;
}

struct Params {
    int                 L;
    double              J, delta;
    std::vector<double> fields;
    bool                isolated_bob = false;
    int                 bob          = -1;
};

inline Mat hamiltonian(const Params &p) {
    const auto dim = Eigen::Index{1} << p.L;
    Mat        H   = Mat::Zero(dim, dim);
    auto       skip = [&](int i) { return p.isolated_bob && i == p.bob; };
    for(int i = 0; i + 1 < p.L; ++i) {
        if(skip(i) || skip(i + 1)) continue;
        H += p.J * (embed(sx(), i, p.L) * embed(sx(), i + 1, p.L) + embed(sy(), i, p.L) * embed(sy(), i + 1, p.L));
        H += p.delta * embed(sz(), i, p.L) * embed(sz(), i + 1, p.L);
    }
    for(int i = 0; i < p.L; ++i)
        if(!skip(i)) H += p.fields[static_cast<std::size_t>(i)] * embed(sz(), i, p.L);
    return H;
}

// Product state with the given spins, times a Bell pair on (alice, bob).
inline Vec epr_neel(int L, int alice, int bob, bool psi_plus) {
    std::vector<int> spins(static_cast<std::size_t>(L), 0);
    bool             up = true;
    for(int i = 0; i < L; ++i) {
        if(i == alice || i == bob) continue;
        spins[static_cast<std::size_t>(i)] = up ? 1 : 0;
        up                                 = !up;
    }
    auto product = [&](int a_up) {
        Vec v = Vec::Ones(1);
        for(int s = L - 1; s >= 0; --s) {
            Vec site = Vec::Zero(2);
            int bit  = spins[static_cast<std::size_t>(s)];
            if(s == alice) bit = a_up;
            if(s == bob) bit = 1 - a_up;
            site(bit) = 1.0;
            Vec nv(v.size() * 2);
            for(Eigen::Index i = 0; i < v.size(); ++i) nv.segment(2 * i, 2) = v(i) * site;
            v = nv;
        }
        return v;
    };
    return (product(1) + (psi_plus ? 1.0 : -1.0) * product(0)) / std::sqrt(2.0);
}

inline Vec evolve(const Mat &H, const Vec &psi, double t) {
    Eigen::ComplexEigenSolver<Mat> es(H);
    Vec                            phase(es.eigenvalues().size());
    for(Eigen::Index i = 0; i < phase.size(); ++i) phase(i) = std::exp(cplx(0, -1) * es.eigenvalues()(i) * t);
    const Mat V = es.eigenvectors();
    return V * phase.asDiagonal() * V.inverse() * psi;
}

// rho[(a,b),(a',b')] with index 2*(1-a_up) + (1-b_up), i.e. order uu, ud, du, dd.
inline Eigen::Matrix4cd partial_trace(const Vec &psi, int L, int alice, int bob) {
    const Mat        full = psi * psi.adjoint();
    Eigen::Matrix4cd rho  = Eigen::Matrix4cd::Zero();
    const auto       dim  = Eigen::Index{1} << L;
    auto             pair = [&](Eigen::Index s) { return 2 * (1 - ((s >> alice) & 1)) + (1 - ((s >> bob) & 1)); };
    auto             env  = [&](Eigen::Index s) { return s & ~((Eigen::Index{1} << alice) | (Eigen::Index{1} << bob)); };
    for(Eigen::Index r = 0; r < dim; ++r)
        for(Eigen::Index c = 0; c < dim; ++c)
            if(env(r) == env(c)) rho(pair(r), pair(c)) += full(r, c);
    return rho;
}

inline double negativity(const Eigen::Matrix4cd &rho) {
    // Partial transpose over the second factor via explicit tensor indices.
    Eigen::Matrix4cd pt;
    for(int i = 0; i < 4; ++i)
        for(int j = 0; j < 4; ++j) {
            const int a = i / 2, b = i % 2, ap = j / 2, bp = j % 2;
            pt(i, j) = rho(a * 2 + bp, ap * 2 + b);
        }
    Eigen::ComplexEigenSolver<Eigen::Matrix4cd> es(pt);
    double                                      n = 0;
    for(int i = 0; i < 4; ++i) n += std::max(0.0, -es.eigenvalues()(i).real());
    return 2 * n;
}

// Concurrence from the non-Hermitian product rho * rho_tilde with a general eigensolver.
inline double concurrence(const Eigen::Matrix4cd &rho) {
    Eigen::Matrix2cd sy2;
    sy2 << 0, cplx(0, -1), cplx(0, 1), 0;
    Eigen::Matrix4cd yy = kron(sy2, sy2);
    Eigen::Matrix4cd rt = yy * rho.conjugate() * yy;
    Eigen::ComplexEigenSolver<Eigen::Matrix4cd> es(rho * rt);
    std::vector<double>                         s;
    for(int i = 0; i < 4; ++i) s.push_back(std::sqrt(std::max(0.0, es.eigenvalues()(i).real())));
    std::sort(s.begin(), s.end(), std::greater<>());
    return std::max(0.0, s[0] - s[1] - s[2] - s[3]);
}

// Closed forms for X-shaped states (only diagonal, (1,2) and (0,3) coherences), the shape every
// pair state of a fixed-magnetization global state has. No eigensolver is involved.
inline bool is_x_state(const Eigen::Matrix4cd &rho, double tol = 1e-14) {
    for(int r = 0; r < 4; ++r)
        for(int c = 0; c < 4; ++c) {
            const bool allowed = r == c || r + c == 3;
            if(!allowed && std::abs(rho(r, c)) > tol) return false;
        }
    return true;
}

inline double x_negativity(const Eigen::Matrix4cd &rho) {
    // The partial transpose pairs populations (0,3) with coherence |rho_12| and (1,2) with |rho_03|.
    auto lowest = [](double a, double d, double coh) { return (a + d) / 2 - std::sqrt((a - d) * (a - d) / 4 + coh * coh); };
    const double m1 = lowest(rho(0, 0).real(), rho(3, 3).real(), std::abs(rho(1, 2)));
    const double m2 = lowest(rho(1, 1).real(), rho(2, 2).real(), std::abs(rho(0, 3)));
    return 2 * (std::max(0.0, -m1) + std::max(0.0, -m2));
}

inline double x_concurrence(const Eigen::Matrix4cd &rho) {
    const double a = std::abs(rho(1, 2)) - std::sqrt(std::max(0.0, rho(0, 0).real() * rho(3, 3).real()));
    const double b = std::abs(rho(0, 3)) - std::sqrt(std::max(0.0, rho(1, 1).real() * rho(2, 2).real()));
    return 2 * std::max({0.0, a, b});
}

inline double formation(double c) {
    const double x = (1 + std::sqrt(std::max(0.0, 1 - c * c))) / 2;
    if(x <= 0 || x >= 1) return 0;
    return -x * std::log2(x) - (1 - x) * std::log2(1 - x);
}

} // namespace oracle
