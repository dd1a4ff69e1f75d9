#include "eprmbl/dynamics.hpp"
#include "eprmbl/reduced.hpp"
#include "oracle.hpp"
#include "random_states.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace eprmbl;

namespace {

StateVector random_sector_state(std::size_t dim, std::mt19937_64 &rng) {
    StateVector psi{Eigen::VectorXcd(static_cast<Eigen::Index>(dim))};
    for(Eigen::Index i = 0; i < psi.dim(); ++i) psi.amplitudes(i) = testing_states::gaussian(rng);
    psi.amplitudes.normalize();
    return psi;
}

// Embed a sector state into the full 2^L space.
oracle::Vec to_full(const StateVector &psi, const SectorBasis &b) {
    oracle::Vec v = oracle::Vec::Zero(Eigen::Index{1} << b.sites());
    for(std::size_t k = 0; k < b.size(); ++k) v(static_cast<Eigen::Index>(b[k].bits)) = psi.amplitudes(static_cast<Eigen::Index>(k));
    return v;
}

} // namespace

TEST(Reduce, InitialStateIsBellProjector) {
    for(auto bell : {BellState::PsiPlus, BellState::PsiMinus}) {
        ChainConfig c;
        c.L          = 10;
        c.bob_site   = 9;
        c.bell_state = bell;
        const auto b   = enumerate_sector(10, 0);
        const auto rho = reduce_to_pair(initial_state(c, b), b, c.alice_site, c.bob_site).entries;
        Eigen::Matrix4cd ref = Eigen::Matrix4cd::Zero();
        const double     sgn = bell == BellState::PsiPlus ? 1.0 : -1.0;
        ref(1, 1) = ref(2, 2) = 0.5;
        ref(1, 2) = ref(2, 1) = 0.5 * sgn;
        EXPECT_LT((rho - ref).cwiseAbs().maxCoeff(), 1e-15);
    }
}

TEST(Reduce, MatchesFullSpacePartialTrace) {
    std::mt19937_64 rng(2024);
    for(int L : {4, 6, 8}) {
        const auto b = enumerate_sector(L, 0);
        for(auto [a, bob] : {std::pair{0, L - 1}, std::pair{0, 1}, std::pair{2, 1}, std::pair{L - 1, 1}}) {
            const auto psi = random_sector_state(b.size(), rng);
            const auto rho = reduce_to_pair(psi, b, a, bob).entries;
            const auto ref = oracle::partial_trace(to_full(psi, b), L, a, bob);
            EXPECT_LT((rho - ref).cwiseAbs().maxCoeff(), 1e-14) << "L=" << L << " alice=" << a << " bob=" << bob;
        }
    }
}

TEST(Reduce, ValidDensityMatrix) {
    std::mt19937_64 rng(7);
    const auto      b = enumerate_sector(12, 0);
    const PairLayout layout(b, 0, 11);
    for(int trial = 0; trial < 20; ++trial) {
        const auto rho = layout.reduce(random_sector_state(b.size(), rng).amplitudes).entries;
        EXPECT_NEAR(rho.trace().real(), 1.0, 1e-12);
        EXPECT_NEAR(rho.trace().imag(), 0.0, 1e-12);
        EXPECT_LT((rho - rho.adjoint()).cwiseAbs().maxCoeff(), 1e-15);
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> es(rho);
        EXPECT_GT(es.eigenvalues().minCoeff(), -1e-14);
        const double purity = (rho * rho).trace().real();
        EXPECT_GE(purity, 0.25 - 1e-12);
        EXPECT_LE(purity, 1.0 + 1e-12);
    }
}

TEST(Reduce, MagnetizationBlockStructure) {
    // In a fixed-Sz sector the pair state has no coherence between different pair magnetizations.
    std::mt19937_64 rng(99);
    const auto      b   = enumerate_sector(8, 0);
    const auto      rho = reduce_to_pair(random_sector_state(b.size(), rng), b, 0, 5).entries;
    for(int r = 0; r < 4; ++r)
        for(int c = 0; c < 4; ++c) {
            const bool same = (r == c) || (r == 1 && c == 2) || (r == 2 && c == 1);
            if(!same) EXPECT_EQ(std::abs(rho(r, c)), 0.0) << r << "," << c;
        }
}

TEST(Reduce, InterleavedLayout) {
    TwoQubitDensity rho;
    rho.entries(1, 2) = cplx(0.25, -0.5);
    const auto v      = rho.interleaved();
    EXPECT_EQ(v[2 * (4 * 1 + 2)], 0.25);
    EXPECT_EQ(v[2 * (4 * 1 + 2) + 1], -0.5);
}

TEST(Reduce, Errors) {
    const auto b = enumerate_sector(6, 0);
    EXPECT_THROW(PairLayout(b, 0, 0), NumericError);
    EXPECT_THROW(PairLayout(b, 0, 6), NumericError);
    const PairLayout layout(b, 0, 5);
    EXPECT_THROW((void)layout.reduce(Eigen::VectorXcd::Zero(5)), NumericError);
}
