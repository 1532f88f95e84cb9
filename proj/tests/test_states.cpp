#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "qkd/detection.hpp"
#include "qkd/states.hpp"
#include "qkd/tomography.hpp"
#include "support.hpp"

using namespace qkd;
using namespace qkd::states;
using namespace testing_support;
using optics::MeasBasis;
using optics::PolState;

namespace {

CMat4 bob_side(const CMat2& p) { return tensor(CMat2::identity(), p); }

// Brute-force dephasing: sandwich with I (x) P for both outcomes, written out.
CMat4 dephase_oracle(const CMat4& rho, const CMat2& p_plus, const CMat2& p_minus, double gamma) {
    const CMat4 a = bob_side(p_plus), b = bob_side(p_minus);
    return (1.0 - gamma) * rho + gamma * (a * rho * a + b * rho * b);
}

}  // namespace

TEST(BellPhiPlus, CornersAreOneHalf) {
    EXPECT_EQ(max_abs_diff(bell_phi_plus().rho(), bell_matrix()), 0.0);
}

TEST(BellPhiPlus, SameStateInDiagonalBasis) {
    const CMat4 dd = tensor(optics::projector(PolState::D), optics::projector(PolState::D));
    const CMat4 aa = tensor(optics::projector(PolState::A), optics::projector(PolState::A));
    EXPECT_NEAR(bell_phi_plus().expectation(dd + aa), 1.0, 1e-14);
}

TEST(BellPhiPlus, JointHVProbabilities) {
    const auto p = detection::joint_probs(bell_phi_plus(), MeasBasis::HV, MeasBasis::HV);
    EXPECT_NEAR(p.p11, 0.5, 1e-15);
    EXPECT_NEAR(p.p00, 0.5, 1e-15);
    EXPECT_NEAR(p.p10, 0.0, 1e-15);
    EXPECT_NEAR(p.p01, 0.0, 1e-15);
}

TEST(WhiteNoise, Endpoints) {
    EXPECT_LT(max_abs_diff(add_white_noise(bell_phi_plus(), 0.0).rho(), bell_matrix()), 1e-15);
    EXPECT_LT(max_abs_diff(add_white_noise(bell_phi_plus(), 1.0).rho(), 0.25 * CMat4::identity()), 1e-15);
    EXPECT_THROW(add_white_noise(bell_phi_plus(), 1.5), std::invalid_argument);
}

TEST(WhiteNoise, FourPercentGivesFidelity097) {
    const auto s = add_white_noise(bell_phi_plus(), 0.04);
    const CVec4 psi = phi_plus_ket();
    const Complex f = inner(psi, s.rho() * psi);
    EXPECT_NEAR(f.real(), 0.97, 1e-14);
    EXPECT_NEAR(f.real(), 1.0 - 3.0 * 0.04 / 4.0, 1e-14);
}

TEST(Dephase, FullHVGivesDiagonalMixture) {
    EXPECT_LT(max_abs_diff(dephase_bob(bell_phi_plus(), 0.0, 1.0).rho(), dephased_hv()), 1e-15);
}

TEST(Dephase, FullDAPattern) {
    const double q = 0.25;
    const CMat4 expected = real4({{q, 0, 0, q}, {0, q, q, 0}, {0, q, q, 0}, {q, 0, 0, q}});
    EXPECT_LT(max_abs_diff(dephase_bob(bell_phi_plus(), 45.0, 1.0).rho(), expected), 1e-15);
    EXPECT_LT(max_abs_diff(dephase_bob(bell_phi_plus(), MeasBasis::DA, 1.0).rho(), expected), 1e-15);
}

TEST(DephaseProperty, ZeroStrengthIsIdentity) {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> angle(-90.0, 90.0);
    for (int t = 0; t < 100; ++t) {
        const auto s = random_state(rng);
        EXPECT_LT(max_abs_diff(dephase_bob(s, angle(rng), 0.0).rho(), s.rho()), 1e-15);
    }
}

TEST(DephaseProperty, MatchesOracleAndPreservesDensity) {
    std::mt19937_64 rng(22);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int t = 0; t < 300; ++t) {
        const auto s = random_state(rng);
        const double gamma = unit(rng);
        const auto basis = t % 2 ? MeasBasis::HV : MeasBasis::DA;
        const auto [pp, pm] = basis_projectors(basis);
        const CMat4 out = dephase_bob(s, basis, gamma).rho();
        EXPECT_LT(max_abs_diff(out, dephase_oracle(s.rho(), pp, pm, gamma)), 1e-14);
        EXPECT_NEAR(out.trace().real(), 1.0, 1e-12);
        EXPECT_TRUE(is_hermitian(out));
    }
}

TEST(DephaseProperty, FullStrengthKillsCrossBranchCoherence) {
    std::mt19937_64 rng(23);
    for (int t = 0; t < 200; ++t) {
        const auto s = random_state(rng);
        for (auto basis : {MeasBasis::HV, MeasBasis::DA}) {
            const auto [pp, pm] = basis_projectors(basis);
            const CMat4 out = dephase_bob(s, basis, 1.0).rho();
            EXPECT_LT(max_abs_diff(bob_side(pp) * out * bob_side(pm), CMat4{}), 1e-14);
            EXPECT_LT(max_abs_diff(dephase_bob(TwoQubitState(out), basis, 1.0).rho(), out), 1e-14);
        }
    }
}

TEST(DephaseProperty, CoherenceDecaysLinearlyInGamma) {
    for (double gamma : {0.0, 0.25, 0.5, 1.0}) {
        const CMat4 out = dephase_bob(bell_phi_plus(), 0.0, gamma).rho();
        EXPECT_NEAR(out(0, 3).real(), (1.0 - gamma) / 2.0, 1e-15);
        EXPECT_NEAR(out(3, 0).real(), (1.0 - gamma) / 2.0, 1e-15);
    }
}

TEST(DephaseProperty, BothBasesAtFullStrengthCannotViolateChsh) {
    std::mt19937_64 rng(24);
    for (int t = 0; t < 50; ++t) {
        const auto s = random_state(rng);
        const auto out = dephase_bob(dephase_bob(s, 0.0, 1.0), 45.0, 1.0);
        EXPECT_LE(tomography::chsh_max(out), 2.0 + 1e-9);
    }
    EXPECT_LE(tomography::chsh_max(dephase_bob(dephase_bob(bell_phi_plus(), 0.0, 1.0), 45.0, 1.0)), 2.0 + 1e-9);
}

TEST(InterceptResend, DiagonalBasisOnBellIsFairCoin) {
    Rng rng(25);
    const int n = 20000;
    int ones = 0;
    for (int i = 0; i < n; ++i) ones += intercept_resend(bell_phi_plus(), MeasBasis::DA, rng).eve_bit;
    EXPECT_NEAR(static_cast<double>(ones) / n, 0.5, 4 * binomial_sigma(0.5, n));
}

TEST(InterceptResend, EigenstateInputIsUntouched) {
    Rng rng(26);
    const CMat4 hh = real4({{1, 0, 0, 0}, {0, 0, 0, 0}, {0, 0, 0, 0}, {0, 0, 0, 0}});
    for (int i = 0; i < 200; ++i) {
        const auto r = intercept_resend(TwoQubitState(hh), MeasBasis::HV, rng);
        EXPECT_EQ(r.eve_bit, 1);
        EXPECT_LT(max_abs_diff(r.post.rho(), hh), 1e-15);
    }
}

TEST(InterceptResendProperty, BranchAverageEqualsFullDephasing) {
    std::mt19937_64 gen(27);
    Rng rng(28);
    for (int t = 0; t < 100; ++t) {
        const auto s = random_state(gen);
        for (auto basis : {MeasBasis::HV, MeasBasis::DA}) {
            const auto [pp, pm] = basis_projectors(basis);
            const double prob[2] = {s.expectation(bob_side(pm)), s.expectation(bob_side(pp))};
            // Sample until both branches have been seen, then mix them exactly.
            std::optional<CMat4> post[2];
            for (int k = 0; k < 200 && !(post[0] && post[1]); ++k) {
                auto r = intercept_resend(s, basis, rng);
                post[r.eve_bit] = r.post.rho();
            }
            ASSERT_TRUE(post[0] && post[1]);
            const CMat4 mixed = prob[1] * *post[1] + prob[0] * *post[0];
            EXPECT_LT(max_abs_diff(mixed, dephase_bob(s, basis, 1.0).rho()), 1e-12);
        }
    }
}

TEST(InterceptResendProperty, MonteCarloMatchesDephasedJointProbabilities) {
    Rng rng(29);
    const auto source = bell_phi_plus();
    const auto analytic = detection::joint_probs(dephase_bob(source, MeasBasis::DA, 1.0), MeasBasis::HV, MeasBasis::HV);
    const int n = 100000;
    std::array<int, 4> cells{};
    for (int i = 0; i < n; ++i) {
        const auto post = intercept_resend(source, MeasBasis::DA, rng).post;
        const auto bits = detection::sample_trial(post, MeasBasis::HV, MeasBasis::HV, rng);
        ++cells[2 * (1 - bits.alice) + (1 - bits.bob)];
    }
    const double p[4] = {analytic.p11, analytic.p10, analytic.p01, analytic.p00};
    for (int k = 0; k < 4; ++k)
        EXPECT_NEAR(static_cast<double>(cells[k]) / n, p[k], 4 * binomial_sigma(p[k], n) + 1e-12) << k;
}

TEST(QuartzPlateGamma, EightMillimetresIsFullEve) {
    QuartzPlate p;
    EXPECT_NEAR(plate_delay_fs(p), 207.0, 0.5);
    const double tau = 0.00776 * 8.0 / 2.99792458e-4;
    EXPECT_NEAR(plate_delay_fs(p), tau, 1e-9);
    EXPECT_GT(plate_gamma(p), 0.999);
}

TEST(QuartzPlateGamma, ZeroThicknessIsNoEve) {
    QuartzPlate p;
    p.thickness_mm = 0.0;
    EXPECT_EQ(plate_gamma(p), 0.0);
}

TEST(QuartzPlateGamma, OneMillimetreIsPartialEve) {
    QuartzPlate p;
    p.thickness_mm = 1.0;
    EXPECT_NEAR(plate_delay_fs(p), 25.9, 0.05);
    const double tau = plate_delay_fs(p);
    const double gamma = 1.0 - std::exp(-(tau / 54.0) * (tau / 54.0));
    EXPECT_NEAR(plate_gamma(p), gamma, 1e-15);
    EXPECT_NEAR(plate_gamma(p), 0.205, 0.001);
    EXPECT_NEAR((1 - gamma) * (1 - gamma), 0.63, 0.005);
}

TEST(QuartzPlateGamma, RejectsBadPlates) {
    QuartzPlate p;
    p.coherence_time_fs = 0.0;
    EXPECT_THROW(plate_gamma(p), std::invalid_argument);
    p = QuartzPlate{};
    p.thickness_mm = -1.0;
    EXPECT_THROW(plate_gamma(p), std::invalid_argument);
}

TEST(EveConfigValidation, RangesAndBasis) {
    EveConfig e;
    e.strength = 1.2;
    EXPECT_THROW(e.validate(), std::invalid_argument);
    e = EveConfig{};
    e.intercept_fraction = -0.1;
    EXPECT_THROW(e.validate(), std::invalid_argument);
    e = EveConfig{};
    e.mode = EveMode::InterceptResend;
    e.basis_angle_deg = 30.0;
    EXPECT_THROW(e.validate(), std::invalid_argument);
    e.basis_angle_deg = 135.0;
    EXPECT_EQ(e.fixed_basis(), MeasBasis::DA);
    e.basis_angle_deg = 90.0;
    EXPECT_EQ(e.fixed_basis(), MeasBasis::HV);
    EXPECT_EQ(eve_mode_from_string("intercept_resend"), EveMode::InterceptResend);
    EXPECT_THROW(eve_mode_from_string("loud"), std::invalid_argument);
}

TEST(AveragedChannel, FoldsInFractionAndRandomBasis) {
    EveConfig e;
    e.mode = EveMode::InterceptResend;
    e.basis_policy = EveBasisPolicy::RandomPerTrial;
    e.intercept_fraction = 0.5;
    const CMat4 hv = dephase_bob(bell_phi_plus(), 0.0, 1.0).rho();
    const CMat4 da = dephase_bob(bell_phi_plus(), 45.0, 1.0).rho();
    const CMat4 expected = 0.5 * bell_matrix() + 0.25 * (hv + da);
    EXPECT_LT(max_abs_diff(averaged_channel(bell_phi_plus(), e).rho(), expected), 1e-15);
    e.mode = EveMode::Absent;
    EXPECT_LT(max_abs_diff(averaged_channel(bell_phi_plus(), e).rho(), bell_matrix()), 1e-15);
}
