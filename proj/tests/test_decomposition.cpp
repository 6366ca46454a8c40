#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bns/decomposition.hpp"

using namespace bns;

namespace {

const LevyMeasureSpec kIg = LevyMeasureSpec::ig_ou(2.4958, 0.0872, 11.98);
constexpr double kRho = -4.7039;

BnsParams reference_params(double T = 0.25, double rho = kRho) { return {468.44, 0.064262 * 0.064262, rho, 0.01, T, kIg}; }

SimConfig sim(std::size_t n, std::uint64_t seed = 314) {
    SimConfig c;
    c.n_paths = n;
    c.seed = seed;
    return c;
}

// One shared moderate run reused by several tests.
const DecompositionReport& reference_run() {
    static const DecompositionReport r = [] {
        const auto p = reference_params();
        return decompose(p, p.initial_state(), 460.0, sim(4000));
    }();
    return r;
}

}  // namespace

TEST(TimeRule, IntegratesSmoothFunctionsAndCoversInterval) {
    const auto r = make_time_rule(0.1, 0.35, 32);
    double s = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < r.u.size(); ++i) {
        EXPECT_GT(r.u[i], 0.1);
        EXPECT_LT(r.u[i], 0.35);
        if (i) {
            EXPECT_GT(r.u[i], r.u[i - 1]);
        }
        s += r.w[i];
        s2 += r.w[i] * std::exp(r.u[i]);
    }
    EXPECT_NEAR(s, 0.25, 1e-14);
    EXPECT_NEAR(s2, std::exp(0.35) - std::exp(0.1), 1e-13);
    // sqrt(T - u) behaviour is handled exactly by the quadratic map.
    double s3 = 0.0;
    for (std::size_t i = 0; i < r.u.size(); ++i) s3 += r.w[i] * std::sqrt(0.35 - r.u[i]);
    EXPECT_NEAR(s3, 2.0 / 3.0 * std::pow(0.25, 1.5), 1e-13);
}

TEST(Decompose, IdentityHoldsOnReferencePoint) {
    const auto& r = reference_run();
    EXPECT_TRUE(r.residual_passes()) << r.residual << " +/- " << r.residual_se;
    EXPECT_TRUE(r.lbar_identity_passes()) << r.lbar_identity_gap.estimate << " +/- " << r.lbar_identity_gap.std_error;
    EXPECT_NEAR(r.residual, r.reference_price.estimate - r.decomposition_total(), 0.0);
}

TEST(Decompose, SplitOfI2IsExact) {
    const auto& r = reference_run();
    EXPECT_EQ(r.i2.estimate, r.i2_vol_jump.estimate + r.i2_joint_jump.estimate);
}

TEST(Decompose, SignFacts) {
    const auto& r = reference_run();
    EXPECT_LT(r.i1.estimate + 3.0 * r.i1.std_error, 0.0);                 // vega > 0, -lambda Sigma^2 < 0
    EXPECT_GT(r.i2_vol_jump.estimate - 3.0 * r.i2_vol_jump.std_error, 0.0);  // variance jumps raise the price
    EXPECT_LT(std::abs(r.i1.estimate), r.bs_term);
}

TEST(Decompose, TermsAreFiniteAndReferencePriceMatchesMcPrice) {
    const auto& r = reference_run();
    const auto p = reference_params();
    const auto m = mc_price(p, p.initial_state(), 460.0, sim(4000));
    EXPECT_EQ(r.reference_price.estimate, m.price);  // same jump streams
    EXPECT_EQ(r.reference_price.std_error, m.std_error);
    EXPECT_NEAR(r.jump_principal, 2.5377, 1e-3);
    EXPECT_NEAR(r.bs_term, 11.927, 1e-3);
}

TEST(Decompose, ZeroLeverageCollapse) {
    const auto p = reference_params(0.25, 0.0);
    const auto r = decompose(p, p.initial_state(), 460.0, sim(3000));
    EXPECT_EQ(r.jump_principal, 0.0);
    EXPECT_EQ(r.i3.estimate, 0.0);
    EXPECT_EQ(r.i4.estimate, 0.0);
    EXPECT_EQ(r.i5.estimate, 0.0);
    EXPECT_EQ(r.i2_joint_jump.estimate, 0.0);
    EXPECT_EQ(r.i2.estimate, r.i2_vol_jump.estimate);
    EXPECT_TRUE(r.residual_passes());
}

TEST(Decompose, GammaZeroLeverageSmallActivity) {
    const auto nu = LevyMeasureSpec::gamma_ou(2.4958, 0.01, 11.98);
    const BnsParams p{468.44, 0.064262 * 0.064262, 0.0, 0.01, 0.25, nu};
    const auto r = decompose(p, p.initial_state(), 460.0, sim(3000));
    EXPECT_EQ(r.jump_principal, 0.0);
    EXPECT_EQ(r.i3.estimate + r.i4.estimate + r.i5.estimate, 0.0);
    EXPECT_TRUE(r.residual_passes()) << r.residual << " +/- " << r.residual_se;
}

TEST(Decompose, GammaMeasureWithLeverage) {
    const BnsParams p{468.44, 0.064262 * 0.064262, kRho, 0.01, 0.25, LevyMeasureSpec::gamma_ou(2.4958, 0.0872, 11.98)};
    const auto r = decompose(p, p.initial_state(), 460.0, sim(3000));
    EXPECT_TRUE(r.residual_passes()) << r.residual << " +/- " << r.residual_se;
    EXPECT_TRUE(r.lbar_identity_passes());
}

TEST(Decompose, PathwiseModeAgrees) {
    DecompositionConfig cfg;
    cfg.mode = EstimatorMode::Pathwise;
    const auto p = reference_params();
    const auto r = decompose(p, p.initial_state(), 460.0, sim(3000), cfg);
    EXPECT_TRUE(r.residual_passes()) << r.residual << " +/- " << r.residual_se;
    const auto& c = reference_run();
    EXPECT_NEAR(r.i1.estimate, c.i1.estimate, 3.0 * std::hypot(r.i1.std_error, c.i1.std_error));
}

TEST(Decompose, DeterministicOuterRuleAgreesWithSampledI5) {
    const auto p = reference_params();
    DecompositionConfig det;
    det.i5_outer_samples = 0;
    det.time_nodes = 16;
    DecompositionConfig rnd = det;
    rnd.i5_outer_samples = 2;
    const auto a = estimate_i3_i4_i5(p, p.initial_state(), 460.0, sim(300), det);
    const auto b = estimate_i3_i4_i5(p, p.initial_state(), 460.0, sim(300), rnd);
    EXPECT_EQ(a.i3.estimate, b.i3.estimate);
    EXPECT_EQ(a.i4.estimate, b.i4.estimate);
    // Both see the same jump paths; only the outer z-integral differs.
    EXPECT_NEAR(a.i5.estimate, b.i5.estimate, 3.0 * std::max(a.i5.std_error, b.i5.std_error));
}

TEST(Decompose, DoublingTimeGridIsWithinNoise) {
    DecompositionConfig cfg;
    cfg.grid_check = true;
    const auto p = reference_params();
    const auto r = decompose(p, p.initial_state(), 460.0, sim(1500), cfg);
    EXPECT_FALSE(r.grid_too_coarse);
}

TEST(Decompose, AtMaturityDegenerates) {
    const auto p = reference_params();
    const MarketState s{0.25, std::log(470.0), 0.004};
    const auto r = decompose(p, s, 460.0, sim(10));
    EXPECT_NEAR(r.bs_term, 10.0, 1e-12);
    EXPECT_EQ(r.reference_price.estimate, r.bs_term);
    EXPECT_EQ(r.jump_principal, 0.0);
    EXPECT_EQ(r.i1.estimate + r.i2.estimate + r.i3.estimate + r.i4.estimate + r.i5.estimate, 0.0);
    EXPECT_EQ(r.residual, 0.0);
}

TEST(Decompose, SeparateEstimatorsShareThePathSet) {
    const auto p = reference_params();
    const auto cfg = sim(400);
    const auto full = decompose(p, p.initial_state(), 460.0, cfg);
    EXPECT_EQ(estimate_i1(p, p.initial_state(), 460.0, cfg).estimate, full.i1.estimate);
    const auto i2 = estimate_i2(p, p.initial_state(), 460.0, cfg);
    EXPECT_EQ(i2.total.estimate, full.i2.estimate);
    EXPECT_EQ(i2.vol_jump.estimate, full.i2_vol_jump.estimate);
}

TEST(Decompose, RejectsBadInput) {
    const auto p = reference_params();
    EXPECT_THROW(decompose(p, p.initial_state(), 0.0, sim(10)), std::invalid_argument);
    EXPECT_THROW(decompose(p, p.initial_state(), 460.0, sim(1)), std::invalid_argument);
    DecompositionConfig cfg;
    cfg.time_nodes = 1;
    EXPECT_THROW(decompose(p, p.initial_state(), 460.0, sim(10), cfg), std::invalid_argument);
}

TEST(Decompose, ThreadCountDoesNotChangeResults) {
    const auto p = reference_params();
    auto a = sim(300), b = sim(300);
    a.threads = 1;
    b.threads = 3;
    EXPECT_EQ(decomposition_csv_row(decompose(p, p.initial_state(), 460.0, a)),
              decomposition_csv_row(decompose(p, p.initial_state(), 460.0, b)));
}

TEST(Serialization, CsvRowMatchesHeaderAndText) {
    const auto& r = reference_run();
    const auto header = decomposition_csv_header();
    const auto row = decomposition_csv_row(r);
    EXPECT_EQ(std::count(header.begin(), header.end(), ','), std::count(row.begin(), row.end(), ','));
    std::ostringstream os;
    write_decomposition_text(os, r);
    EXPECT_NE(os.str().find("residual"), std::string::npos);
    EXPECT_NE(os.str().find("I5"), std::string::npos);
}
