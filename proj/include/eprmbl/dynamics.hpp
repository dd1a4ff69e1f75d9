#pragma once

#include "eprmbl/basis.hpp"
#include "eprmbl/errors.hpp"
#include "eprmbl/model.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace eprmbl {

using cplx = std::complex<double>;

/// Complex amplitudes over the states of a SectorBasis.
struct StateVector {
    Eigen::VectorXcd amplitudes;

    [[nodiscard]] Eigen::Index dim() const noexcept { return amplitudes.size(); }
    [[nodiscard]] double       norm() const { return amplitudes.norm(); }
};

/// |EPR>_AB (x) |Neel>_E: the pair in the chosen Sz = 0 Bell state, environment sites
/// alternating in increasing site order, starting up unless neel_first_up is false.
[[nodiscard]] inline StateVector initial_state(const ChainConfig &config, const SectorBasis &basis) {
    if(basis.sites() != config.L) throw NumericError("basis/config mismatch: basis has " + std::to_string(basis.sites()) + " sites, chain has " + std::to_string(config.L));
    if(basis.sz_twice() != 0) throw NumericError("basis/config mismatch: initial state lives in the Sz = 0 sector");
    if(config.L % 2 != 0) throw NumericError("initial state needs an even number of sites");
    if(config.alice_site == config.bob_site || config.alice_site < 0 || config.bob_site < 0 || config.alice_site >= config.L || config.bob_site >= config.L)
        throw NumericError("invalid Alice/Bob placement");

    std::uint64_t env  = 0;
    bool          next = config.neel_first_up;
    for(int i = 0; i < config.L; ++i) {
        if(i == config.alice_site || i == config.bob_site) continue;
        if(next) env |= std::uint64_t{1} << i;
        next = !next;
    }
    const SpinConfiguration up_down{env | (std::uint64_t{1} << config.alice_site)};
    const SpinConfiguration down_up{env | (std::uint64_t{1} << config.bob_site)};

    const double s = 1.0 / std::sqrt(2.0);
    StateVector  psi{Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(basis.size()))};
    psi.amplitudes(static_cast<Eigen::Index>(basis.index(up_down))) = s;
    psi.amplitudes(static_cast<Eigen::Index>(basis.index(down_up))) = config.bell_state == BellState::PsiPlus ? s : -s;
    return psi;
}

/// Eigendecomposition organized by independent blocks of H. Each block holds the basis
/// ordinals it acts on, its ascending energies and its orthonormal eigenvectors (columns).
class SpectralDecomposition {
  public:
    struct Block {
        std::vector<Eigen::Index> members;
        Eigen::VectorXd           energies;
        Eigen::MatrixXd           vectors;
    };

    SpectralDecomposition(Eigen::Index dim, std::vector<Block> blocks) : dim_(dim), blocks_(std::move(blocks)) {}

    [[nodiscard]] Eigen::Index             dim() const noexcept { return dim_; }
    [[nodiscard]] const std::vector<Block> &blocks() const noexcept { return blocks_; }

    /// All energies, ascending.
    [[nodiscard]] Eigen::VectorXd eigenvalues() const {
        Eigen::VectorXd e(dim_);
        Eigen::Index    o = 0;
        for(const auto &b : blocks_) {
            e.segment(o, b.energies.size()) = b.energies;
            o += b.energies.size();
        }
        std::sort(e.data(), e.data() + e.size());
        return e;
    }

    /// Dense eigenvector matrix with columns matching eigenvalues().
    [[nodiscard]] Eigen::MatrixXd eigenvectors() const {
        std::vector<std::pair<double, Eigen::VectorXd>> cols;
        cols.reserve(static_cast<std::size_t>(dim_));
        for(const auto &b : blocks_) {
            for(Eigen::Index j = 0; j < b.energies.size(); ++j) {
                Eigen::VectorXd v = Eigen::VectorXd::Zero(dim_);
                for(std::size_t r = 0; r < b.members.size(); ++r) v(b.members[r]) = b.vectors(static_cast<Eigen::Index>(r), j);
                cols.emplace_back(b.energies(j), std::move(v));
            }
        }
        std::stable_sort(cols.begin(), cols.end(), [](const auto &a, const auto &b) { return a.first < b.first; });
        Eigen::MatrixXd V(dim_, dim_);
        for(Eigen::Index j = 0; j < dim_; ++j) V.col(j) = cols[static_cast<std::size_t>(j)].second;
        return V;
    }

  private:
    Eigen::Index       dim_;
    std::vector<Block> blocks_;
};

namespace detail {
    // Connected components of the coupling graph of H, each listed in ascending ordinal order.
    inline std::vector<std::vector<Eigen::Index>> coupled_blocks(const Eigen::MatrixXd &H) {
        const auto                dim = H.rows();
        std::vector<Eigen::Index> parent(static_cast<std::size_t>(dim));
        std::iota(parent.begin(), parent.end(), Eigen::Index{0});
        auto root = [&](Eigen::Index i) {
            while(parent[static_cast<std::size_t>(i)] != i) {
                parent[static_cast<std::size_t>(i)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(i)])];
                i                                   = parent[static_cast<std::size_t>(i)];
            }
            return i;
        };
        for(Eigen::Index j = 0; j < dim; ++j)
            for(Eigen::Index i = 0; i < j; ++i)
                if(H(i, j) != 0.0 || H(j, i) != 0.0) {
                    const auto a = root(i), b = root(j);
                    if(a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
                }

        std::vector<std::vector<Eigen::Index>> blocks;
        std::vector<Eigen::Index>              slot(static_cast<std::size_t>(dim), -1);
        for(Eigen::Index i = 0; i < dim; ++i) {
            const auto r = root(i);
            auto      &s = slot[static_cast<std::size_t>(r)];
            if(s < 0) {
                s = static_cast<Eigen::Index>(blocks.size());
                blocks.emplace_back();
            }
            blocks[static_cast<std::size_t>(s)].push_back(i);
        }
        return blocks;
    }
} // namespace detail

/// Full eigendecomposition of H. The seed only annotates solver failures.
[[nodiscard]] inline SpectralDecomposition diagonalize(const HermitianOperator &H, std::uint64_t seed = 0) {
    const auto dim = H.dim();
    if(H.entries.cols() != dim) throw NumericError("Hamiltonian is not square");
    const double scale = dim > 0 ? std::max(1.0, H.entries.cwiseAbs().maxCoeff()) : 1.0;
    if(hermiticity_check(H) > 1e-10 * scale) throw NumericError("Hamiltonian is not Hermitian within tolerance");

    std::vector<SpectralDecomposition::Block> blocks;
    for(auto &members : detail::coupled_blocks(H.entries)) {
        const auto      n = static_cast<Eigen::Index>(members.size());
        Eigen::MatrixXd sub(n, n);
        for(Eigen::Index j = 0; j < n; ++j)
            for(Eigen::Index i = 0; i < n; ++i) sub(i, j) = H.entries(members[static_cast<std::size_t>(i)], members[static_cast<std::size_t>(j)]);

        SpectralDecomposition::Block b;
        b.members = std::move(members);
        if(n == 1) {
            b.energies = sub.diagonal();
            b.vectors  = Eigen::MatrixXd::Identity(1, 1);
        } else {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sub);
            if(solver.info() != Eigen::Success) throw SolverError("eigensolver did not converge on a block of size " + std::to_string(n), seed);
            b.energies = solver.eigenvalues();
            b.vectors  = solver.eigenvectors();
        }
        blocks.push_back(std::move(b));
    }
    return {dim, std::move(blocks)};
}

/// exp(-i H t) |psi0> with hbar = 1.
[[nodiscard]] inline StateVector evolve(const SpectralDecomposition &spec, const StateVector &psi0, double t) {
    if(psi0.dim() != spec.dim()) throw NumericError("dimension mismatch between state and spectrum");
    if(!(t >= 0) || !std::isfinite(t)) throw NumericError("evolution time must be finite and >= 0");
    StateVector out{Eigen::VectorXcd::Zero(spec.dim())};
    for(const auto &b : spec.blocks()) {
        const auto       n = static_cast<Eigen::Index>(b.members.size());
        Eigen::VectorXcd local(n);
        for(Eigen::Index i = 0; i < n; ++i) local(i) = psi0.amplitudes(b.members[static_cast<std::size_t>(i)]);
        if(local.cwiseAbs2().sum() == 0.0) continue;
        Eigen::VectorXcd c = b.vectors.transpose().cast<cplx>() * local;
        for(Eigen::Index j = 0; j < n; ++j) c(j) *= std::polar(1.0, -b.energies(j) * t);
        const Eigen::VectorXcd evolved = b.vectors.cast<cplx>() * c;
        for(Eigen::Index i = 0; i < n; ++i) out.amplitudes(b.members[static_cast<std::size_t>(i)]) = evolved(i);
    }
    return out;
}

/// States at every requested time, one column per time. Each block costs one real matrix
/// product against the stacked phase factors, so many time points are cheap.
[[nodiscard]] inline Eigen::MatrixXcd evolve_many(const SpectralDecomposition &spec, const StateVector &psi0, std::span<const double> times) {
    if(psi0.dim() != spec.dim()) throw NumericError("dimension mismatch between state and spectrum");
    for(double t : times)
        if(!(t >= 0) || !std::isfinite(t)) throw NumericError("evolution time must be finite and >= 0");
    const auto       T = static_cast<Eigen::Index>(times.size());
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(spec.dim(), T);
    for(const auto &b : spec.blocks()) {
        const auto       n = static_cast<Eigen::Index>(b.members.size());
        Eigen::VectorXcd local(n);
        for(Eigen::Index i = 0; i < n; ++i) local(i) = psi0.amplitudes(b.members[static_cast<std::size_t>(i)]);
        if(local.cwiseAbs2().sum() == 0.0) continue;
        const Eigen::VectorXd re0 = b.vectors.transpose() * local.real();
        const Eigen::VectorXd im0 = b.vectors.transpose() * local.imag();
        // [Re | Im] coefficient columns for all times.
        Eigen::MatrixXd coeff(n, 2 * T);
        for(Eigen::Index k = 0; k < T; ++k) {
            const double t = times[static_cast<std::size_t>(k)];
            for(Eigen::Index j = 0; j < n; ++j) {
                const double ph = -b.energies(j) * t;
                const double c = std::cos(ph), s = std::sin(ph);
                coeff(j, k)     = c * re0(j) - s * im0(j);
                coeff(j, T + k) = s * re0(j) + c * im0(j);
            }
        }
        const Eigen::MatrixXd evolved = b.vectors * coeff;
        for(Eigen::Index i = 0; i < n; ++i) {
            const auto row = b.members[static_cast<std::size_t>(i)];
            for(Eigen::Index k = 0; k < T; ++k) out(row, k) = cplx(evolved(i, k), evolved(i, T + k));
        }
    }
    return out;
}

enum class Spacing { Logarithmic, Linear };

[[nodiscard]] inline std::string_view to_string(Spacing s) { return s == Spacing::Logarithmic ? "log" : "linear"; }

/// Evaluation times in units of 1/J, strictly increasing.
struct TimeGrid {
    std::vector<double> times;
    Spacing             spacing = Spacing::Logarithmic;

    [[nodiscard]] std::size_t size() const noexcept { return times.size(); }
};

[[nodiscard]] inline TimeGrid make_time_grid(double t_min, double t_max, int n_points, Spacing spacing = Spacing::Logarithmic) {
    if(!(t_min > 0) || !(t_max > t_min) || !std::isfinite(t_max)) throw NumericError("invalid time range: need 0 < t_min < t_max");
    if(n_points < 2) throw NumericError("invalid time grid: need at least 2 points");
    TimeGrid g;
    g.spacing = spacing;
    g.times.resize(static_cast<std::size_t>(n_points));
    const double lo = std::log10(t_min), hi = std::log10(t_max);
    for(int k = 0; k < n_points; ++k) {
        const double f = static_cast<double>(k) / (n_points - 1);
        g.times[static_cast<std::size_t>(k)] = spacing == Spacing::Logarithmic ? std::pow(10.0, lo + (hi - lo) * f) : t_min + (t_max - t_min) * f;
    }
    g.times.front() = t_min;
    g.times.back()  = t_max;
    return g;
}

/// Upper end of the default grid: 10^(ceil(log10(1/delta)) + 3), or 10^6 without interactions.
[[nodiscard]] inline double default_t_max(double delta) {
    if(delta <= 0) return 1e6;
    return std::pow(10.0, std::ceil(std::log10(1.0 / delta) - 1e-12) + 3.0);
}

/// Ten points per decade from 0.1 to default_t_max(delta).
[[nodiscard]] inline TimeGrid default_time_grid(double delta) {
    const double t_max   = default_t_max(delta);
    const int    decades = static_cast<int>(std::lround(std::log10(t_max / 0.1)));
    return make_time_grid(0.1, t_max, 10 * decades + 1, Spacing::Logarithmic);
}

} // namespace eprmbl
