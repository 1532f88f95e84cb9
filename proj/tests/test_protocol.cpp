#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "qkd/privacy.hpp"
#include "qkd/protocol.hpp"
#include "qkd/reconcile.hpp"
#include "support.hpp"

using namespace qkd;
using namespace qkd::protocol;
using detection::TrialRecord;
using optics::MeasBasis;
using testing_support::binomial_sigma;

namespace {

TrialRecord kept(std::size_t idx, MeasBasis a, MeasBasis b, int x, int y) {
    TrialRecord r;
    r.trial_index = idx;
    r.alice_basis = a;
    r.bob_basis = b;
    r.alice_bit = x;
    r.bob_bit = y;
    r.kept = true;
    return r;
}

BitString random_bits(std::size_t n, std::mt19937_64& rng) {
    BitString b(n);
    for (std::size_t i = 0; i < n; ++i) b.set(i, rng() & 1u);
    return b;
}

BitString with_errors(const BitString& a, std::size_t errors, std::mt19937_64& rng) {
    std::vector<std::size_t> idx(a.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    BitString b = a;
    for (std::size_t i = 0; i < errors; ++i) b.flip(idx[i]);
    return b;
}

// Full m x n Toeplitz matrix, built row by row from the same bit source.
BitString toeplitz_oracle(const BitString& key, std::size_t m, std::uint64_t seed) {
    const std::size_t n = key.size();
    std::vector<int> diag;
    std::mt19937_64 gen(seed);
    std::uint64_t word = 0;
    for (std::size_t k = 0; k < n + m - 1; ++k) {
        if (k % 64 == 0) word = gen();
        diag.push_back(static_cast<int>((word >> (k % 64)) & 1u));
    }
    std::vector<std::vector<int>> t(m, std::vector<int>(n));
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) t[i][j] = diag[i + n - 1 - j];
    BitString out(m);
    for (std::size_t i = 0; i < m; ++i) {
        int sum = 0;
        for (std::size_t j = 0; j < n; ++j) sum += t[i][j] * key[j];
        out.set(i, sum % 2);
    }
    return out;
}

SessionConfig ideal_config(std::uint64_t seed) {
    SessionConfig c;
    c.seed = seed;
    c.n_intervals = 10000;
    c.detector.dark_rate_hz = 0.0;
    return c;
}

}  // namespace

TEST(Sift, TableRowsAllRetained) {
    const int alice[] = {0, 0, 0, 1, 1, 0, 1, 0, 0, 0};
    const int bob[] = {0, 0, 0, 1, 1, 0, 1, 0, 0, 0};
    std::vector<TrialRecord> recs;
    for (int i = 0; i < 10; ++i) recs.push_back(kept(i + 1, MeasBasis::HV, MeasBasis::HV, alice[i], bob[i]));
    const auto s = sift(recs);
    EXPECT_EQ(s.alice.size(), 10u);
    EXPECT_EQ(s.alice.hamming_distance(s.bob), 0u);
    EXPECT_EQ(s.alice.to_binary(), "0001101000");
}

TEST(Sift, DifferentBasesDropEverything) {
    std::vector<TrialRecord> recs;
    for (int i = 0; i < 6; ++i) recs.push_back(kept(i + 1, MeasBasis::HV, MeasBasis::DA, 1, 1));
    const auto s = sift(recs);
    EXPECT_TRUE(s.alice.empty());
    EXPECT_TRUE(s.bob.empty());
}

TEST(Sift, MixedListKeepsMatchingInOrder) {
    std::vector<TrialRecord> recs{kept(1, MeasBasis::HV, MeasBasis::HV, 1, 1), kept(2, MeasBasis::HV, MeasBasis::DA, 0, 1),
                                  kept(3, MeasBasis::DA, MeasBasis::DA, 0, 0), kept(4, MeasBasis::DA, MeasBasis::HV, 1, 0),
                                  kept(5, MeasBasis::DA, MeasBasis::HV, 1, 1), kept(6, MeasBasis::HV, MeasBasis::HV, 0, 1)};
    TrialRecord dropped;
    dropped.trial_index = 7;
    recs.push_back(dropped);
    const auto s = sift(recs);
    EXPECT_EQ(s.trial_indices, (std::vector<std::size_t>{1, 3, 6}));
    EXPECT_EQ(s.alice.to_binary(), "100");
    EXPECT_EQ(s.bob.to_binary(), "101");
}

TEST(EstimateQber, IdenticalAndComplementary) {
    Rng rng(51);
    std::mt19937_64 gen(52);
    const BitString a = random_bits(500, gen);
    BitString c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c.flip(i);
    EXPECT_EQ(estimate_qber(a, a, 0.2, rng).qber, 0.0);
    EXPECT_EQ(estimate_qber(a, c, 0.2, rng).qber, 1.0);
}

TEST(EstimateQber, PlantedErrorsFullSample) {
    Rng rng(53);
    std::mt19937_64 gen(54);
    const BitString a = random_bits(1000, gen);
    const BitString b = with_errors(a, 250, gen);
    const auto est = estimate_qber(a, b, 1.0, rng);
    EXPECT_EQ(est.qber, 0.25);
    EXPECT_EQ(est.sample_size, 1000u);
    EXPECT_TRUE(est.remaining_alice.empty());
}

TEST(EstimateQber, SampleSizeAndRemovedPositions) {
    Rng rng(55);
    std::mt19937_64 gen(56);
    const BitString a = random_bits(101, gen);
    const BitString b = with_errors(a, 10, gen);
    const auto est = estimate_qber(a, b, 0.2, rng);
    EXPECT_EQ(est.sample_size, 20u);
    EXPECT_EQ(est.disclosed_positions.size(), 20u);
    EXPECT_EQ(est.remaining_alice.size(), 81u);
    // Remaining bits are the undisclosed ones, in order.
    std::size_t k = 0, mism = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::binary_search(est.disclosed_positions.begin(), est.disclosed_positions.end(), i)) {
            mism += a[i] != b[i];
            continue;
        }
        EXPECT_EQ(est.remaining_alice[k], a[i]);
        EXPECT_EQ(est.remaining_bob[k], b[i]);
        ++k;
    }
    EXPECT_EQ(mism, est.mismatches);
    EXPECT_EQ(estimate_qber(a, b, 0.0, rng).sample_size, 1u);
}

TEST(EstimateQber, RejectsBadInput) {
    Rng rng(57);
    EXPECT_THROW(estimate_qber(BitString{}, BitString{}, 0.2, rng), std::invalid_argument);
    EXPECT_THROW(estimate_qber(BitString{1, 0}, BitString{1}, 0.2, rng), std::invalid_argument);
}

TEST(Decide, ThresholdRule) {
    EXPECT_EQ(decide(0.08, 0.11), Decision::Proceed);
    EXPECT_EQ(decide(0.25, 0.11), Decision::Abort);
    EXPECT_EQ(decide(0.11, 0.11), Decision::Proceed);
}

TEST(Reconcile, IdenticalStringsOnlyDiscloseBlockParities) {
    Rng rng(58);
    std::mt19937_64 gen(59);
    const BitString a = random_bits(64, gen);
    const auto r = reconcile(a, a, 0.05, 4, rng);
    EXPECT_EQ(r.flips, 0u);
    EXPECT_EQ(r.corrected, a);
    // k = 15, 30, 60, 120 -> ceil(64/k) blocks per pass
    EXPECT_EQ(first_block_size(0.05), 15u);
    EXPECT_EQ(r.leaked_bits, 5u + 3u + 2u + 1u);
}

TEST(Reconcile, PlantedErrorsAreCorrected) {
    Rng rng(60);
    std::mt19937_64 gen(61);
    const BitString a = random_bits(256, gen);
    const BitString b = with_errors(a, 8, gen);
    const auto r = reconcile(a, b, 8.0 / 256.0, 4, rng);
    EXPECT_EQ(r.corrected, a);
    EXPECT_GE(r.flips, 8u);
}

TEST(Reconcile, SingleErrorInOneBlockCostsFiveParities) {
    Rng rng(62);
    BitString a(16);
    for (std::size_t i = 0; i < 16; i += 3) a.set(i, true);
    BitString b = a;
    b.flip(9);
    const auto r = reconcile(a, b, 0.01, 1, rng);
    EXPECT_EQ(r.corrected, a);
    EXPECT_EQ(r.flips, 1u);
    EXPECT_EQ(r.leaked_bits, 1u + 4u);
}

TEST(Reconcile, RejectsLengthMismatch) {
    Rng rng(63);
    EXPECT_THROW(reconcile(BitString{1, 0}, BitString{1}, 0.1, 4, rng), std::invalid_argument);
    EXPECT_THROW(reconcile(BitString{1}, BitString{1}, 0.1, 0, rng), std::invalid_argument);
}

TEST(ReconcileProperty, LeakCounterEqualsParityQueries) {
    std::mt19937_64 gen(64);
    for (int t = 0; t < 50; ++t) {
        const BitString a = random_bits(300, gen);
        const BitString b = with_errors(a, 1 + t % 30, gen);
        std::size_t queries = 0;
        auto parity = [&](std::span<const std::size_t> pos) {
            ++queries;
            int p = 0;
            for (auto i : pos) p ^= a[i];
            return p;
        };
        Rng rng(gen());
        const auto r = reconcile_with(parity, b, (1 + t % 30) / 300.0, 4, rng);
        EXPECT_EQ(r.leaked_bits, queries);
    }
}

TEST(ReconcileProperty, SucceedsAtElevenPercent) {
    std::mt19937_64 gen(65);
    const int trials = 1000;
    int ok = 0;
    for (int t = 0; t < trials; ++t) {
        const BitString a = random_bits(256, gen);
        const BitString b = with_errors(a, 28, gen);
        Rng rng(gen());
        ok += reconcile(a, b, 0.11, 4, rng).corrected == a;
    }
    EXPECT_GE(ok, 990) << ok << "/" << trials;
}

TEST(PrivacyAmplification, BinaryEntropy) {
    EXPECT_EQ(h2(0.0), 0.0);
    EXPECT_EQ(h2(1.0), 0.0);
    EXPECT_NEAR(h2(0.5), 1.0, 1e-15);
    for (double x : {0.1, 0.25, 0.4}) EXPECT_NEAR(h2(x), h2(1.0 - x), 1e-15);
    EXPECT_NEAR(h2(0.11), -0.11 * std::log2(0.11) - 0.89 * std::log2(0.89), 1e-15);
}

TEST(PrivacyAmplification, SecureLengthClamps) {
    EXPECT_EQ(secure_length(128, 0.0, 0, 0), 128u);
    EXPECT_EQ(secure_length(128, 0.0, 128, 0), 0u);
    EXPECT_EQ(secure_length(128, 0.0, 500, 0), 0u);
    EXPECT_EQ(secure_length(128, 0.5, 0, 0), 0u);
    EXPECT_EQ(secure_length(1000, 0.05, 100, 30), static_cast<std::size_t>(std::floor(1000 * (1 - h2(0.05)) - 130)));
}

TEST(PrivacyAmplification, GoldenVectorSeedZero) {
    const BitString key = BitString::from_hex("0123456789abcdeffedcba9876543210");
    ASSERT_EQ(key.size(), 128u);
    const BitString out = privacy_amplify(key, 0.0, 0, 0, 0);
    ASSERT_EQ(out.size(), 128u);
    EXPECT_EQ(out, toeplitz_oracle(key, 128, 0));
    EXPECT_EQ(out.to_hex(), "fa01ed0417d6142edb9ba526afbded94");
}

TEST(PrivacyAmplification, EmptyOutputs) {
    const BitString key = BitString::from_hex("ffff");
    EXPECT_TRUE(privacy_amplify(key, 0.0, 16, 0, 1).empty());
    EXPECT_TRUE(privacy_amplify(key, 0.5, 0, 0, 1).empty());
    EXPECT_THROW(privacy_amplify(BitString{}, 0.0, 0, 0, 1), std::invalid_argument);
}

TEST(PrivacyAmplificationProperty, MatchesMatrixOracle) {
    std::mt19937_64 gen(66);
    std::uniform_int_distribution<std::size_t> len(1, 200);
    for (int t = 0; t < 100; ++t) {
        const BitString key = random_bits(len(gen), gen);
        std::uniform_int_distribution<std::size_t> out_len(1, key.size());
        const std::size_t m = out_len(gen);
        const std::uint64_t seed = gen();
        EXPECT_EQ(toeplitz_hash(key, m, seed), toeplitz_oracle(key, m, seed));
    }
}

TEST(PrivacyAmplificationProperty, Linear) {
    std::mt19937_64 gen(67);
    for (int t = 0; t < 100; ++t) {
        const BitString a = random_bits(150, gen), b = random_bits(150, gen);
        BitString x(150);
        for (std::size_t i = 0; i < 150; ++i) x.set(i, a[i] ^ b[i]);
        const auto ha = toeplitz_hash(a, 60, 9), hb = toeplitz_hash(b, 60, 9), hx = toeplitz_hash(x, 60, 9);
        for (std::size_t i = 0; i < 60; ++i) EXPECT_EQ(hx[i], ha[i] ^ hb[i]);
    }
}

TEST(Session, IdealRunAgreesCompletely) {
    const auto t = run_session(ideal_config(70));
    EXPECT_FALSE(t.aborted);
    EXPECT_EQ(t.sifted_alice, t.sifted_bob);
    EXPECT_EQ(t.sifted_agreement(), 1.0);
    EXPECT_FALSE(t.final_key.empty());
    EXPECT_TRUE(t.reconciled);
    EXPECT_TRUE(t.keys_match);
}

TEST(Session, FullDephasingFixedBasisGivesQuarterErrors) {
    SessionConfig c = ideal_config(71);
    c.n_intervals = 30000;
    c.eve.mode = states::EveMode::Dephasing;
    c.eve.strength = 1.0;
    c.eve.basis_angle_deg = 45.0;
    const auto t = run_session(c);
    const double n = static_cast<double>(t.sifted_alice.size());
    EXPECT_NEAR(t.sifted_error_rate(), 0.25, 4 * binomial_sigma(0.25, n));
    EXPECT_TRUE(t.aborted);
    EXPECT_TRUE(t.final_key.empty());
}

TEST(Session, HalfInterceptRandomBasisGivesOneEighth) {
    SessionConfig c = ideal_config(72);
    c.n_intervals = 30000;
    c.eve.mode = states::EveMode::InterceptResend;
    c.eve.basis_policy = states::EveBasisPolicy::RandomPerTrial;
    c.eve.intercept_fraction = 0.5;
    const auto t = run_session(c);
    const double n = static_cast<double>(t.sifted_alice.size());
    EXPECT_NEAR(t.sifted_error_rate(), 0.125, 4 * binomial_sigma(0.125, n));
}

TEST(SessionProperty, FixedEveCaseIAndCaseII) {
    for (auto mode : {states::EveMode::Dephasing, states::EveMode::InterceptResend}) {
        SessionConfig c = ideal_config(73);
        c.n_intervals = 30000;
        c.eve.mode = mode;
        c.eve.basis_angle_deg = 0.0;
        const auto t = run_session(c);
        std::size_t same = 0, same_err = 0, wrong = 0, wrong_err = 0;
        for (const auto& r : t.records) {
            if (!r.kept || r.alice_basis != r.bob_basis) continue;
            const bool err = *r.alice_bit != *r.bob_bit;
            if (r.bob_basis == MeasBasis::HV) {
                ++same;
                same_err += err;
            } else {
                ++wrong;
                wrong_err += err;
            }
        }
        EXPECT_GT(same, 1000u);
        EXPECT_EQ(same_err, 0u);
        EXPECT_NEAR(static_cast<double>(wrong_err) / wrong, 0.5, 4 * binomial_sigma(0.5, wrong));
    }
}

TEST(SessionProperty, AbortsAtQuarterErrorForIndependentSeeds) {
    for (std::uint64_t seed : {81u, 82u}) {
        SessionConfig c = ideal_config(seed);
        c.eve.mode = states::EveMode::InterceptResend;
        c.eve.basis_policy = states::EveBasisPolicy::RandomPerTrial;
        const auto t = run_session(c);
        EXPECT_TRUE(t.aborted);
        EXPECT_EQ(t.abort_reason, "qber above threshold");
        EXPECT_TRUE(t.final_key.empty());
    }
}

TEST(SessionProperty, SameSeedSameTranscript) {
    SessionConfig c = ideal_config(90);
    c.source_noise = 0.04;
    c.detector.dark_rate_hz = 0.87;
    const auto a = run_session(c), b = run_session(c);
    EXPECT_EQ(a.records, b.records);
    EXPECT_EQ(a.final_key, b.final_key);
    EXPECT_EQ(a.leaked_bits, b.leaked_bits);
}

TEST(SessionConfigValidation, RejectsOutOfRange) {
    SessionConfig c;
    c.abort_threshold = 0.5;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = SessionConfig{};
    c.qber_sample_fraction = 1.5;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = SessionConfig{};
    c.n_intervals = 0;
    EXPECT_THROW(run_session(c), std::invalid_argument);
}
