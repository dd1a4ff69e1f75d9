#pragma once

#include "eprmbl/errors.hpp"

#include <algorithm>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace eprmbl {

inline constexpr int max_sites = 30;

/// Bitmask over chain sites. Bit i set means site i is spin-up (s^z = +1/2).
struct SpinConfiguration {
    std::uint64_t bits = 0;

    [[nodiscard]] constexpr bool up(int site) const noexcept { return ((bits >> site) & 1U) != 0; }
    [[nodiscard]] constexpr int popcount() const noexcept { return std::popcount(bits); }
    [[nodiscard]] constexpr SpinConfiguration flipped(int site) const noexcept { return {bits ^ (std::uint64_t{1} << site)}; }
    friend constexpr auto operator<=>(const SpinConfiguration &, const SpinConfiguration &) = default;
};

/// s^z eigenvalue (+1/2 or -1/2) of one site of an L-site configuration.
[[nodiscard]] inline double site_spin(SpinConfiguration config, int site, int L) {
    if(site < 0 || site >= L) throw NumericError("site " + std::to_string(site) + " out of range [0, " + std::to_string(L) + ")");
    return config.up(site) ? 0.5 : -0.5;
}

/// Fixed-magnetization sector of an L-site spin-1/2 chain.
/// States are stored in ascending integer order, so the ordinal of a configuration is
/// independent of how the sector was enumerated.
class SectorBasis {
  public:
    SectorBasis(int L, int sz_twice, std::vector<std::uint64_t> states) : L_(L), sz_twice_(sz_twice), states_(std::move(states)) {}

    [[nodiscard]] int sites() const noexcept { return L_; }
    [[nodiscard]] int sz_twice() const noexcept { return sz_twice_; }
    [[nodiscard]] std::size_t size() const noexcept { return states_.size(); }
    [[nodiscard]] std::span<const std::uint64_t> states() const noexcept { return states_; }
    [[nodiscard]] SpinConfiguration operator[](std::size_t k) const noexcept { return {states_[k]}; }

    [[nodiscard]] std::optional<std::size_t> find(SpinConfiguration c) const noexcept {
        auto it = std::lower_bound(states_.begin(), states_.end(), c.bits);
        if(it == states_.end() || *it != c.bits) return std::nullopt;
        return static_cast<std::size_t>(it - states_.begin());
    }

    /// Ordinal of a member configuration; throws for non-members.
    [[nodiscard]] std::size_t index(SpinConfiguration c) const {
        if(auto k = find(c)) return *k;
        throw NumericError("configuration " + std::to_string(c.bits) + " is not in the sector");
    }

    [[nodiscard]] bool contains(SpinConfiguration c) const noexcept { return find(c).has_value(); }

  private:
    int                        L_;
    int                        sz_twice_;
    std::vector<std::uint64_t> states_;
};

/// All L-bit masks (L even) with popcount (L + sz_twice)/2, ascending.
[[nodiscard]] inline SectorBasis enumerate_sector(int L, int sz_twice) {
    if(L < 2 || L > max_sites || L % 2 != 0)
        throw NumericError("invalid dimension: L = " + std::to_string(L) + " must be even and in [2, " + std::to_string(max_sites) + "]");
    if(sz_twice < -L || sz_twice > L || (L + sz_twice) % 2 != 0)
        throw NumericError("invalid dimension: sz_twice = " + std::to_string(sz_twice) + " incompatible with L = " + std::to_string(L));
    const int n_up = (L + sz_twice) / 2;

    std::vector<std::uint64_t> states;
    if(n_up == 0) {
        states.push_back(0);
    } else {
        // Gosper's hack walks same-popcount masks in increasing order.
        std::uint64_t       v     = (std::uint64_t{1} << n_up) - 1;
        const std::uint64_t limit = std::uint64_t{1} << L;
        while(v < limit) {
            states.push_back(v);
            const std::uint64_t c = v & (~v + 1);
            const std::uint64_t r = v + c;
            v                     = (((r ^ v) >> 2) / c) | r;
        }
    }
    return {L, sz_twice, std::move(states)};
}

} // namespace eprmbl
