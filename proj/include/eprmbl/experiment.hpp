#pragma once

#include "eprmbl/basis.hpp"
#include "eprmbl/dynamics.hpp"
#include "eprmbl/errors.hpp"
#include "eprmbl/format.hpp"
#include "eprmbl/measures.hpp"
#include "eprmbl/model.hpp"
#include "eprmbl/reduced.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace eprmbl {

/// Seed of realization k: SplitMix64 finalizer applied to master + (k + 1) * 0x9E3779B97F4A7C15,
/// with multipliers 0xBF58476D1CE4E5B9 and 0x94D049BB133111EB and shifts 30, 27, 31.
[[nodiscard]] constexpr std::uint64_t realization_seed(std::uint64_t master_seed, std::uint64_t k) noexcept {
    std::uint64_t z = master_seed + (k + 1) * 0x9E3779B97F4A7C15ULL;
    z               = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z               = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

struct EnsembleSpec {
    ChainConfig   chain;
    TimeGrid      grid;
    std::size_t   n_realizations = 200;
    std::uint64_t master_seed    = 0x9E3779B97F4A7C15ULL;
};

enum class Measure : std::size_t { negativity = 0, log_negativity = 1, concurrence = 2, formation = 3 };
inline constexpr std::size_t n_measures = 4;

[[nodiscard]] inline double measure_value(const EntanglementRecord &r, Measure m) {
    switch(m) {
        case Measure::negativity: return r.negativity;
        case Measure::log_negativity: return r.log_negativity;
        case Measure::concurrence: return r.concurrence;
        case Measure::formation: return r.formation;
    }
    return 0.0;
}

/// Per-time disorder statistics of one measure. Variance is the unbiased estimator, 0 when n = 1.
struct MeasureStats {
    std::vector<double> mean;
    std::vector<double> variance;
};

struct EnsembleResult {
    TimeGrid                              grid;
    std::array<MeasureStats, n_measures>  stats;
    std::size_t                           n = 0;
    std::uint64_t                         master_seed = 0;
    std::string                           config_digest;
    std::vector<std::uint64_t>            seeds;

    [[nodiscard]] const MeasureStats &operator[](Measure m) const { return stats[static_cast<std::size_t>(m)]; }
    [[nodiscard]] const MeasureStats &log_negativity() const { return (*this)[Measure::log_negativity]; }
};

/// Canonical text of everything that determines an ensemble's output.
[[nodiscard]] inline std::string canonical_description(const EnsembleSpec &spec) {
    const auto &c = spec.chain;
    std::string s;
    s += "L=" + std::to_string(c.L) + ";J=" + format_double(c.J) + ";delta=" + format_double(c.delta) + ";h=" + format_double(c.h_bound);
    s += ";scenario=" + std::string(to_string(c.scenario)) + ";alice=" + std::to_string(c.alice_site) + ";bob=" + std::to_string(c.bob_site);
    s += ";bell=" + std::string(to_string(c.bell_state)) + ";boundary=" + std::string(to_string(c.boundary));
    s += ";neel_first_up=" + std::string(c.neel_first_up ? "1" : "0");
    s += ";n=" + std::to_string(spec.n_realizations) + ";seed=" + std::to_string(spec.master_seed) + ";times=";
    for(double t : spec.grid.times) s += format_double(t) + ",";
    return s;
}

[[nodiscard]] inline std::string config_digest(const EnsembleSpec &spec) { return hex64(fnv1a64(canonical_description(spec))); }

/// Immutable per-configuration data shared by all realizations: sector basis, pair layout and
/// initial state.
class RealizationContext {
  public:
    explicit RealizationContext(const ChainConfig &chain)
        : chain_(chain), basis_(enumerate_sector(chain.L, 0)), layout_(basis_, chain.alice_site, chain.bob_site), psi0_(initial_state(chain, basis_)) {}

    [[nodiscard]] const ChainConfig &chain() const noexcept { return chain_; }
    [[nodiscard]] const SectorBasis &basis() const noexcept { return basis_; }
    [[nodiscard]] const PairLayout  &layout() const noexcept { return layout_; }
    [[nodiscard]] const StateVector &initial() const noexcept { return psi0_; }

    /// Build H, diagonalize once, then evolve, reduce and measure at every grid time.
    [[nodiscard]] std::vector<EntanglementRecord> run(const DisorderRealization &realization, const TimeGrid &grid) const {
        const auto H    = build_hamiltonian(chain_, realization, basis_);
        const auto spec = diagonalize(H, realization.seed);
        const auto psi  = evolve_many(spec, psi0_, grid.times);
        std::vector<EntanglementRecord> out;
        out.reserve(grid.size());
        for(std::size_t k = 0; k < grid.size(); ++k) {
            try {
                out.push_back(evaluate_all(layout_.reduce(psi.col(static_cast<Eigen::Index>(k))), grid.times[k]));
            } catch(const NumericError &e) { throw SolverError(std::string(e.what()) + " at t = " + format_double(grid.times[k]), realization.seed); }
        }
        return out;
    }

  private:
    ChainConfig chain_;
    SectorBasis basis_;
    PairLayout  layout_;
    StateVector psi0_;
};

[[nodiscard]] inline std::vector<EntanglementRecord> run_realization(const ChainConfig &chain, const DisorderRealization &realization, const TimeGrid &grid) {
    return RealizationContext(chain).run(realization, grid);
}

[[nodiscard]] inline unsigned default_workers() { return std::max(1U, std::thread::hardware_concurrency()); }

/// Runs task(k) for k in [0, n) on up to `workers` threads. Tasks must write only to their own
/// slot. If any task throws, remaining tasks are skipped and the exception of the lowest failing
/// k is rethrown.
inline void parallel_for_index(std::size_t n, unsigned workers, const std::function<void(std::size_t)> &task) {
    workers = std::max(1U, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
    std::atomic<std::size_t> next{0};
    std::atomic<bool>        failed{false};
    std::mutex               err_mutex;
    std::size_t              err_k = n;
    std::exception_ptr       err;

    auto worker = [&] {
        while(!failed.load(std::memory_order_relaxed)) {
            const std::size_t k = next.fetch_add(1);
            if(k >= n) return;
            try {
                task(k);
            } catch(...) {
                std::lock_guard lock(err_mutex);
                if(k < err_k) {
                    err_k = k;
                    err   = std::current_exception();
                }
                failed = true;
            }
        }
    };
    if(workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for(unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    }
    if(err) std::rethrow_exception(err);
}

/// Mean and unbiased variance over samples[k][t], folded in ascending k.
[[nodiscard]] inline MeasureStats aggregate(const std::vector<std::vector<double>> &samples, std::size_t n_times) {
    MeasureStats s{std::vector<double>(n_times, 0.0), std::vector<double>(n_times, 0.0)};
    const auto   n = samples.size();
    if(n == 0) return s;
    for(std::size_t t = 0; t < n_times; ++t) {
        double sum = 0.0;
        for(std::size_t k = 0; k < n; ++k) sum += samples[k][t];
        const double mean = sum / static_cast<double>(n);
        double       ss   = 0.0;
        for(std::size_t k = 0; k < n; ++k) {
            const double d = samples[k][t] - mean;
            ss += d * d;
        }
        s.mean[t]     = mean;
        s.variance[t] = n > 1 ? ss / static_cast<double>(n - 1) : 0.0;
    }
    return s;
}

[[nodiscard]] inline EnsembleResult run_ensemble(const EnsembleSpec &spec, unsigned workers = default_workers()) {
    if(spec.n_realizations < 1) throw ConfigError("ensemble.realizations must be >= 1");
    const RealizationContext ctx(spec.chain);
    const auto               n = spec.n_realizations;
    const auto               T = spec.grid.size();

    EnsembleResult result;
    result.grid          = spec.grid;
    result.n             = n;
    result.master_seed   = spec.master_seed;
    result.config_digest = config_digest(spec);
    result.seeds.resize(n);
    for(std::size_t k = 0; k < n; ++k) result.seeds[k] = realization_seed(spec.master_seed, k);

    std::vector<std::vector<EntanglementRecord>> records(n);
    parallel_for_index(n, workers, [&](std::size_t k) { records[k] = ctx.run(draw_fields(spec.chain, result.seeds[k], k), spec.grid); });

    for(std::size_t m = 0; m < n_measures; ++m) {
        std::vector<std::vector<double>> samples(n, std::vector<double>(T));
        for(std::size_t k = 0; k < n; ++k)
            for(std::size_t t = 0; t < T; ++t) samples[k][t] = measure_value(records[k][t], static_cast<Measure>(m));
        result.stats[m] = aggregate(samples, T);
    }
    return result;
}

} // namespace eprmbl
