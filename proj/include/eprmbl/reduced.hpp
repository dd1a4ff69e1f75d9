#pragma once

#include "eprmbl/basis.hpp"
#include "eprmbl/dynamics.hpp"
#include "eprmbl/errors.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace eprmbl {

/// Density matrix of the (Alice, Bob) pair in the product basis
/// {|up,up>, |up,down>, |down,up>, |down,down>}, Alice's spin as the leading factor.
struct TwoQubitDensity {
    Eigen::Matrix4cd entries = Eigen::Matrix4cd::Zero();

    /// Row-major, interleaved (re, im) pairs.
    [[nodiscard]] std::array<double, 32> interleaved() const {
        std::array<double, 32> out{};
        for(int r = 0; r < 4; ++r)
            for(int c = 0; c < 4; ++c) {
                out[static_cast<std::size_t>(2 * (4 * r + c))]     = entries(r, c).real();
                out[static_cast<std::size_t>(2 * (4 * r + c) + 1)] = entries(r, c).imag();
            }
        return out;
    }
};

/// Precomputed grouping of sector states by environment configuration. Reduction is then one
/// pass over the basis per state vector.
class PairLayout {
  public:
    PairLayout(const SectorBasis &basis, int alice_site, int bob_site) : dim_(static_cast<Eigen::Index>(basis.size())) {
        const int L = basis.sites();
        if(alice_site < 0 || alice_site >= L || bob_site < 0 || bob_site >= L) throw NumericError("pair site out of range");
        if(alice_site == bob_site) throw NumericError("Alice and Bob must occupy distinct sites");
        const std::uint64_t pair_mask = (std::uint64_t{1} << alice_site) | (std::uint64_t{1} << bob_site);

        std::vector<std::pair<std::uint64_t, Eigen::Index>> keyed;
        keyed.reserve(basis.size());
        for(std::size_t k = 0; k < basis.size(); ++k) keyed.emplace_back(basis[k].bits & ~pair_mask, static_cast<Eigen::Index>(k));
        std::sort(keyed.begin(), keyed.end());

        for(std::size_t i = 0; i < keyed.size();) {
            std::array<Eigen::Index, 4> slots{-1, -1, -1, -1};
            std::size_t                 j = i;
            for(; j < keyed.size() && keyed[j].first == keyed[i].first; ++j) {
                const auto c                    = basis[static_cast<std::size_t>(keyed[j].second)];
                const int  p                    = (c.up(alice_site) ? 0 : 2) + (c.up(bob_site) ? 0 : 1);
                slots[static_cast<std::size_t>(p)] = keyed[j].second;
            }
            groups_.push_back(slots);
            i = j;
        }
    }

    [[nodiscard]] Eigen::Index dim() const noexcept { return dim_; }

    template<typename Derived>
    [[nodiscard]] TwoQubitDensity reduce(const Eigen::MatrixBase<Derived> &psi) const {
        if(psi.size() != dim_) throw NumericError("mismatched basis: state has dimension " + std::to_string(psi.size()) + ", basis has " + std::to_string(dim_));
        TwoQubitDensity rho;
        for(const auto &g : groups_) {
            std::array<cplx, 4> a{};
            for(std::size_t p = 0; p < 4; ++p) a[p] = g[p] >= 0 ? cplx(psi(g[p])) : cplx(0.0);
            for(int p = 0; p < 4; ++p) {
                if(a[static_cast<std::size_t>(p)] == 0.0) continue;
                for(int q = 0; q < 4; ++q) rho.entries(p, q) += a[static_cast<std::size_t>(p)] * std::conj(a[static_cast<std::size_t>(q)]);
            }
        }
        return rho;
    }

  private:
    Eigen::Index                             dim_;
    std::vector<std::array<Eigen::Index, 4>> groups_;
};

/// Partial trace over every environment spin.
[[nodiscard]] inline TwoQubitDensity reduce_to_pair(const StateVector &psi, const SectorBasis &basis, int alice_site, int bob_site) {
    return PairLayout(basis, alice_site, bob_site).reduce(psi.amplitudes);
}

} // namespace eprmbl
