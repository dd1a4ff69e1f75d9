#pragma once

#include "eprmbl/basis.hpp"
#include "eprmbl/errors.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace eprmbl {

enum class Scenario { IsolatedBob, SharedEnvironment };
enum class BellState { PsiPlus, PsiMinus };
enum class Boundary { Open };

[[nodiscard]] inline std::string_view to_string(Scenario s) {
    return s == Scenario::IsolatedBob ? "isolated_bob" : "shared_environment";
}
[[nodiscard]] inline std::string_view to_string(BellState b) { return b == BellState::PsiPlus ? "psi_plus" : "psi_minus"; }
[[nodiscard]] inline std::string_view to_string(Boundary) { return "open"; }

/// Parameters of the random-field XXZ chain and the placement of the EPR pair.
/// Energies are in units of J; L counts every site including Alice and Bob.
struct ChainConfig {
    int       L          = 8;
    double    J          = 1.0;
    double    delta      = 0.0;
    double    h_bound    = 3.0;
    Scenario  scenario   = Scenario::IsolatedBob;
    int       alice_site = 0;
    int       bob_site   = 7;
    BellState bell_state = BellState::PsiPlus;
    Boundary  boundary   = Boundary::Open;
    // Spin of the lowest-index environment site in the Neel pattern.
    bool neel_first_up = true;

    /// Bob sits at the far end when isolated and next to Alice when sharing the environment.
    [[nodiscard]] static int default_bob_site(Scenario s, int L) { return s == Scenario::IsolatedBob ? L - 1 : 1; }
};

/// L = 16 (dimension 12870) needs an explicit opt-in.
inline void validate(const ChainConfig &c, bool allow_l16 = false) {
    if(c.L % 2 != 0) throw ConfigError("chain.L: L must be even (got " + std::to_string(c.L) + ")");
    if(c.L < 4) throw ConfigError("chain.L: L must be >= 4 (got " + std::to_string(c.L) + ")");
    const int l_max = allow_l16 ? 16 : 14;
    if(c.L > l_max) throw ConfigError("chain.L: L must be <= " + std::to_string(l_max) + " (got " + std::to_string(c.L) + ")");
    if(!(c.J > 0) || !std::isfinite(c.J)) throw ConfigError("chain.J must be > 0");
    if(!(c.delta >= 0) || !std::isfinite(c.delta)) throw ConfigError("chain.delta must be >= 0");
    if(!(c.h_bound >= 0) || !std::isfinite(c.h_bound)) throw ConfigError("chain.h must be >= 0");
    if(c.alice_site < 0 || c.alice_site >= c.L) throw ConfigError("chain.alice_site out of range");
    if(c.bob_site < 0 || c.bob_site >= c.L) throw ConfigError("chain.bob_site out of range");
    if(c.alice_site == c.bob_site) throw ConfigError("chain.alice_site and chain.bob_site must differ");
}

/// One draw of the random fields h_i, uniform on [-h, h], one per site.
struct DisorderRealization {
    std::vector<double> fields;
    std::uint64_t       seed              = 0;
    std::size_t         realization_index = 0;
};

/// Uniform double on [0, 1) from the top 53 bits of one 64-bit draw.
/// mt19937_64 output is fixed by the standard, so this stays bit-identical across toolchains
/// (unlike std::uniform_real_distribution).
[[nodiscard]] inline double uniform_unit(std::mt19937_64 &rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

[[nodiscard]] inline DisorderRealization draw_fields(const ChainConfig &config, std::mt19937_64 &rng) {
    DisorderRealization r;
    r.fields.resize(static_cast<std::size_t>(config.L));
    for(auto &h : r.fields) {
        const double u = uniform_unit(rng);
        h              = config.h_bound == 0.0 ? 0.0 : config.h_bound * (2.0 * u - 1.0);
    }
    return r;
}

[[nodiscard]] inline DisorderRealization draw_fields(const ChainConfig &config, std::uint64_t seed, std::size_t index = 0) {
    std::mt19937_64 rng(seed);
    auto            r   = draw_fields(config, rng);
    r.seed              = seed;
    r.realization_index = index;
    return r;
}

/// Half-open range [begin, end) of chain sites kept by a truncated Hamiltonian.
struct SiteWindow {
    int begin = 0;
    int end   = 0;

    [[nodiscard]] bool contains(int site) const noexcept { return site >= begin && site < end; }
    [[nodiscard]] int  size() const noexcept { return end - begin; }

    /// Builds a window from an explicit site list, which must be contiguous.
    [[nodiscard]] static SiteWindow from_sites(std::span<const int> sites) {
        if(sites.empty()) throw NumericError("active site list is empty");
        std::vector<int> s(sites.begin(), sites.end());
        std::sort(s.begin(), s.end());
        for(std::size_t i = 1; i < s.size(); ++i)
            if(s[i] != s[i - 1] + 1) throw NumericError("active sites are not contiguous");
        return {s.front(), s.back() + 1};
    }
};

/// Dense Hamiltonian in a sector basis. The XXZ model has only real matrix elements in the
/// s^z basis, so the Hermitian operator is stored as a real symmetric matrix.
struct HermitianOperator {
    Eigen::MatrixXd entries;

    [[nodiscard]] Eigen::Index dim() const noexcept { return entries.rows(); }
};

[[nodiscard]] inline double hermiticity_check(const HermitianOperator &op) {
    if(op.entries.size() == 0) return 0.0;
    return (op.entries - op.entries.transpose()).cwiseAbs().maxCoeff();
}

namespace detail {
    struct TermMask {
        std::vector<bool> bond;  // bond i couples sites i and i+1
        std::vector<bool> field; // field term of site i
    };

    inline TermMask included_terms(const ChainConfig &config, const std::optional<SiteWindow> &active) {
        TermMask m{std::vector<bool>(static_cast<std::size_t>(config.L - 1), true), std::vector<bool>(static_cast<std::size_t>(config.L), true)};
        const bool isolated = config.scenario == Scenario::IsolatedBob;
        for(int i = 0; i < config.L; ++i) {
            bool keep = !active || active->contains(i);
            if(isolated && i == config.bob_site) keep = false;
            m.field[static_cast<std::size_t>(i)] = keep;
        }
        for(int i = 0; i + 1 < config.L; ++i) {
            bool keep = !active || (active->contains(i) && active->contains(i + 1));
            if(isolated && (i == config.bob_site || i + 1 == config.bob_site)) keep = false;
            m.bond[static_cast<std::size_t>(i)] = keep;
        }
        return m;
    }
} // namespace detail

/// H = sum_i J (s^x_i s^x_{i+1} + s^y_i s^y_{i+1}) + delta s^z_i s^z_{i+1} + h_i s^z_i with open
/// boundaries, restricted to the given sector. IsolatedBob drops every bond touching Bob and Bob's
/// field; an active window keeps only bonds and fields inside it.
[[nodiscard]] inline HermitianOperator build_hamiltonian(const ChainConfig &config, const DisorderRealization &realization, const SectorBasis &basis,
                                                         std::optional<SiteWindow> active = std::nullopt) {
    if(basis.sites() != config.L) throw NumericError("dimension mismatch: basis has " + std::to_string(basis.sites()) + " sites, chain has " + std::to_string(config.L));
    if(realization.fields.size() != static_cast<std::size_t>(config.L))
        throw NumericError("dimension mismatch: realization has " + std::to_string(realization.fields.size()) + " fields, chain has " + std::to_string(config.L));
    if(active && (active->begin < 0 || active->end > config.L || active->begin >= active->end))
        throw NumericError("active window [" + std::to_string(active->begin) + ", " + std::to_string(active->end) + ") is not a valid site range");

    const auto terms = detail::included_terms(config, active);
    const auto dim   = static_cast<Eigen::Index>(basis.size());
    const auto L     = config.L;

    HermitianOperator H{Eigen::MatrixXd::Zero(dim, dim)};
    for(Eigen::Index k = 0; k < dim; ++k) {
        const auto c    = basis[static_cast<std::size_t>(k)];
        double     diag = 0.0;
        for(int i = 0; i < L; ++i) {
            if(terms.field[static_cast<std::size_t>(i)]) diag += realization.fields[static_cast<std::size_t>(i)] * (c.up(i) ? 0.5 : -0.5);
        }
        for(int i = 0; i + 1 < L; ++i) {
            if(!terms.bond[static_cast<std::size_t>(i)]) continue;
            const bool a = c.up(i);
            const bool b = c.up(i + 1);
            diag += config.delta * (a == b ? 0.25 : -0.25);
            if(a != b) {
                const auto partner                                = basis.index(c.flipped(i).flipped(i + 1));
                H.entries(k, static_cast<Eigen::Index>(partner)) += 0.5 * config.J;
            }
        }
        H.entries(k, k) += diag;
    }
    return H;
}

} // namespace eprmbl
