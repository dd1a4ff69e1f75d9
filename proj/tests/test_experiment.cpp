#include "eprmbl/experiment.hpp"
#include "oracle.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

using namespace eprmbl;

namespace {

EnsembleSpec spec(int L, double delta, double h, Scenario s, std::size_t n) {
    EnsembleSpec e;
    e.chain.L        = L;
    e.chain.delta    = delta;
    e.chain.h_bound  = h;
    e.chain.scenario = s;
    e.chain.bob_site = ChainConfig::default_bob_site(s, L);
    e.grid           = make_time_grid(0.1, 1e4, 41);
    e.n_realizations = n;
    return e;
}

} // namespace

TEST(Seeds, SplitMixGoldenValues) {
    // Reference values from an independent implementation of the same mixing function.
    EXPECT_EQ(realization_seed(0x9E3779B97F4A7C15ULL, 0), 0x6e789e6aa1b965f4ULL);
    EXPECT_EQ(realization_seed(0x9E3779B97F4A7C15ULL, 1), 0x06c45d188009454fULL);
    EXPECT_EQ(realization_seed(0x9E3779B97F4A7C15ULL, 7), 0x3ee5789041c98ac3ULL);
}

TEST(Seeds, DistinctAcrossRealizations) {
    std::vector<std::uint64_t> s;
    for(std::uint64_t k = 0; k < 1000; ++k) s.push_back(realization_seed(42, k));
    std::sort(s.begin(), s.end());
    EXPECT_EQ(std::unique(s.begin(), s.end()), s.end());
}

TEST(Ensemble, TimeZeroIsMaximallyEntangled) {
    auto e = spec(8, 0.1, 3.0, Scenario::SharedEnvironment, 5);
    e.grid = make_time_grid(1e-12, 1.0, 3);
    const auto r = run_ensemble(e, 1);
    for(std::size_t m = 0; m < n_measures; ++m) EXPECT_NEAR(r.stats[m].mean[0], 1.0, 1e-10) << m;
}

TEST(Ensemble, SingleRealizationHasZeroVariance) {
    const auto r = run_ensemble(spec(6, 0.5, 3.0, Scenario::IsolatedBob, 1), 1);
    for(const auto &s : r.stats)
        for(double v : s.variance) EXPECT_EQ(v, 0.0);
}

TEST(Ensemble, CleanChainHasZeroVariance) {
    const auto r = run_ensemble(spec(6, 0.5, 0.0, Scenario::SharedEnvironment, 4), 2);
    for(const auto &s : r.stats)
        for(double v : s.variance) EXPECT_NEAR(v, 0.0, 1e-28);
}

TEST(Ensemble, WorkerCountDoesNotChangeResults) {
    const auto e  = spec(8, 0.2, 3.0, Scenario::SharedEnvironment, 16);
    const auto r1 = run_ensemble(e, 1);
    const auto r8 = run_ensemble(e, 8);
    for(std::size_t m = 0; m < n_measures; ++m) {
        EXPECT_EQ(r1.stats[m].mean, r8.stats[m].mean);
        EXPECT_EQ(r1.stats[m].variance, r8.stats[m].variance);
    }
    EXPECT_EQ(r1.seeds, r8.seeds);
    EXPECT_EQ(r1.config_digest, r8.config_digest);
}

TEST(Ensemble, MeanAndVarianceMatchPerRealizationRuns) {
    const auto e = spec(6, 0.3, 2.0, Scenario::IsolatedBob, 5);
    const auto r = run_ensemble(e, 3);
    const std::size_t t = 20;
    std::vector<double> v;
    for(std::size_t k = 0; k < e.n_realizations; ++k)
        v.push_back(run_realization(e.chain, draw_fields(e.chain, realization_seed(e.master_seed, k), k), e.grid)[t].log_negativity);
    double mean = 0;
    for(double x : v) mean += x;
    mean /= 5;
    double var = 0;
    for(double x : v) var += (x - mean) * (x - mean);
    var /= 4;
    EXPECT_NEAR(r.log_negativity().mean[t], mean, 1e-15);
    EXPECT_NEAR(r.log_negativity().variance[t], var, 1e-15);
}

TEST(Ensemble, CleanFourSiteChainMatchesBruteForce) {
    auto       e = spec(4, 0.0, 0.0, Scenario::SharedEnvironment, 1);
    const auto r = run_ensemble(e, 1);
    const auto F = oracle::hamiltonian({4, 1.0, 0.0, {0, 0, 0, 0}, false, 1});
    const auto v0 = oracle::epr_neel(4, 0, 1, true);
    for(std::size_t k = 0; k < e.grid.size(); ++k) {
        const auto   rho = oracle::partial_trace(oracle::evolve(F, v0, e.grid.times[k]), 4, 0, 1);
        const double n   = oracle::negativity(rho);
        const double c   = oracle::concurrence(rho);
        EXPECT_NEAR(r[Measure::negativity].mean[k], n, 1e-9);
        EXPECT_NEAR(r[Measure::log_negativity].mean[k], std::log2(1 + n), 1e-9);
        EXPECT_NEAR(r[Measure::concurrence].mean[k], c, 1e-6);
        EXPECT_NEAR(r[Measure::formation].mean[k], oracle::formation(c), 1e-5);
    }
}

TEST(Ensemble, DigestTracksInputs) {
    auto a = spec(6, 0.3, 2.0, Scenario::IsolatedBob, 5);
    auto b = a;
    EXPECT_EQ(config_digest(a), config_digest(b));
    b.master_seed += 1;
    EXPECT_NE(config_digest(a), config_digest(b));
    b = a;
    b.chain.h_bound = 2.5;
    EXPECT_NE(config_digest(a), config_digest(b));
}

TEST(Ensemble, RejectsEmptyEnsemble) { EXPECT_THROW((void)run_ensemble(spec(6, 0.3, 2.0, Scenario::IsolatedBob, 0), 1), ConfigError); }

TEST(Parallel, LowestFailingIndexWins) {
    for(unsigned w : {1U, 4U}) {
        try {
            parallel_for_index(50, w, [](std::size_t k) {
                if(k == 13 || k == 31) throw std::runtime_error("fail " + std::to_string(k));
            });
            FAIL();
        } catch(const std::runtime_error &e) {
            // Indices are claimed in ascending order, so 13 always runs once 31 has been claimed.
            EXPECT_STREQ(e.what(), "fail 13");
        }
    }
}

TEST(Errors, SolverErrorCarriesSeed) {
    const SolverError e("eigensolver failed", 0xDEADBEEFULL);
    EXPECT_EQ(e.seed(), 0xDEADBEEFULL);
    EXPECT_NE(std::string(e.what()).find("3735928559"), std::string::npos);
    EXPECT_EQ(e.exit_code(), 3);
}

TEST(Errors, MeasureFailureIsReportedWithSeed) {
    // A NaN field poisons the spectrum; the failure must name the realization seed.
    auto                     e = spec(4, 0.0, 1.0, Scenario::SharedEnvironment, 1);
    const RealizationContext ctx(e.chain);
    DisorderRealization      r{{std::nan(""), 0, 0, 0}, 0x1234, 0};
    try {
        (void)ctx.run(r, e.grid);
        FAIL() << "NaN field accepted";
    } catch(const NumericError &err) {
        EXPECT_NE(std::string(err.what()).find("4660"), std::string::npos) << err.what();
    }
}
