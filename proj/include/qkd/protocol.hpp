// protocol.hpp - BB84 session engine over the entangled source.
//
// source -> Eve -> detectors -> sifting -> sampled QBER -> abort/proceed
//        -> reconciliation -> privacy amplification.
// A session is a pure function of its config; all randomness comes from one
// mt19937_64 stream seeded with SessionConfig::seed.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "qkd/bitstring.hpp"
#include "qkd/detection.hpp"
#include "qkd/privacy.hpp"
#include "qkd/reconcile.hpp"
#include "qkd/states.hpp"

namespace qkd::protocol {

using detection::TrialRecord;

struct SiftResult {
    BitString alice;
    BitString bob;
    std::vector<std::size_t> trial_indices;  // record trial_index of each sifted bit
};

/// Keeps kept records whose bases match, in order.
inline SiftResult sift(const std::vector<TrialRecord>& records) {
    SiftResult out;
    for (const auto& r : records) {
        if (!r.kept || r.alice_basis != r.bob_basis) continue;
        if (!r.alice_bit || !r.bob_bit) throw std::invalid_argument("sift: kept record without both bits");
        out.alice.push_back(*r.alice_bit != 0);
        out.bob.push_back(*r.bob_bit != 0);
        out.trial_indices.push_back(r.trial_index);
    }
    return out;
}

struct QberEstimate {
    double qber = 0.0;
    std::size_t sample_size = 0;
    std::size_t mismatches = 0;
    BitString remaining_alice;
    BitString remaining_bob;
    std::vector<std::size_t> disclosed_positions;  // ascending
};

/// Publicly compares a random sample of max(1, round(fraction * n)) positions
/// and drops them from both keys.
inline QberEstimate estimate_qber(const BitString& alice, const BitString& bob, double sample_fraction, Rng& rng) {
    if (alice.size() != bob.size()) throw std::invalid_argument("estimate_qber: length mismatch");
    if (alice.empty()) throw std::invalid_argument("estimate_qber: empty key");
    if (!(sample_fraction >= 0.0 && sample_fraction <= 1.0))
        throw std::invalid_argument("estimate_qber: sample_fraction must be in [0,1]");

    const std::size_t n = alice.size();
    const auto wanted = static_cast<std::size_t>(std::llround(sample_fraction * static_cast<double>(n)));
    const std::size_t sample = std::clamp<std::size_t>(wanted, 1, n);

    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::shuffle(idx.begin(), idx.end(), rng);
    std::vector<std::size_t> disclosed(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(sample));
    std::sort(disclosed.begin(), disclosed.end());

    QberEstimate est;
    est.sample_size = sample;
    std::vector<bool> is_disclosed(n, false);
    for (auto p : disclosed) {
        is_disclosed[p] = true;
        est.mismatches += alice[p] != bob[p];
    }
    est.qber = static_cast<double>(est.mismatches) / static_cast<double>(sample);
    for (std::size_t i = 0; i < n; ++i) {
        if (is_disclosed[i]) continue;
        est.remaining_alice.push_back(alice[i] != 0);
        est.remaining_bob.push_back(bob[i] != 0);
    }
    est.disclosed_positions = std::move(disclosed);
    return est;
}

enum class Decision { Proceed, Abort };

/// Abort iff qber > threshold; the boundary proceeds.
inline Decision decide(double qber, double threshold) {
    return qber > threshold ? Decision::Abort : Decision::Proceed;
}

struct SessionConfig {
    std::size_t n_intervals = 10000;
    double source_noise = 0.0;
    states::EveConfig eve;
    detection::DetectorConfig detector;
    double qber_sample_fraction = 0.2;
    double abort_threshold = 0.11;
    int reconciliation_passes = 4;
    std::size_t pa_safety_bits = 30;
    std::uint64_t seed = 0;

    void validate() const {
        if (n_intervals < 1) throw std::invalid_argument("session: n_intervals must be >= 1");
        if (!(source_noise >= 0.0 && source_noise <= 1.0))
            throw std::invalid_argument("session: source_noise must be in [0,1]");
        if (!(qber_sample_fraction >= 0.0 && qber_sample_fraction <= 1.0))
            throw std::invalid_argument("session: qber_sample_fraction must be in [0,1]");
        if (!(abort_threshold > 0.0 && abort_threshold < 0.5))
            throw std::invalid_argument("session: abort_threshold must be in (0, 0.5)");
        if (reconciliation_passes < 1) throw std::invalid_argument("session: reconciliation_passes must be >= 1");
        eve.validate();
        detector.validate();
    }
};

struct SessionTranscript {
    std::vector<TrialRecord> records;
    BitString sifted_alice;
    BitString sifted_bob;
    std::size_t sifted_errors = 0;
    double qber_estimate = 0.0;
    std::size_t qber_sample_size = 0;
    bool aborted = false;
    std::string abort_reason;
    std::size_t leaked_bits = 0;
    bool reconciled = false;  // Bob's corrected key equals Alice's
    BitString final_key;      // Alice's copy
    bool keys_match = false;  // Alice's and Bob's final keys agree

    std::size_t kept() const {
        return static_cast<std::size_t>(std::count_if(records.begin(), records.end(),
                                                      [](const TrialRecord& r) { return r.kept; }));
    }
    /// Error rate over the whole sifted key, before sampling.
    double sifted_error_rate() const {
        return sifted_alice.empty() ? 0.0
                                    : static_cast<double>(sifted_errors) / static_cast<double>(sifted_alice.size());
    }
    double sifted_agreement() const { return 1.0 - sifted_error_rate(); }
};

inline SessionTranscript run_session(const SessionConfig& config) {
    config.validate();
    Rng rng(config.seed);

    const TwoQubitState source = states::add_white_noise(states::bell_phi_plus(), config.source_noise);

    SessionTranscript t;
    t.records = detection::simulate_dwell_stream(source, config.detector, config.n_intervals,
                                                 detection::BasisPolicy::uniform(), config.eve, rng);
    SiftResult sifted = sift(t.records);
    t.sifted_alice = std::move(sifted.alice);
    t.sifted_bob = std::move(sifted.bob);
    if (t.sifted_alice.empty()) {
        t.aborted = true;
        t.abort_reason = "no sifted bits";
        return t;
    }
    t.sifted_errors = t.sifted_alice.hamming_distance(t.sifted_bob);

    QberEstimate est = estimate_qber(t.sifted_alice, t.sifted_bob, config.qber_sample_fraction, rng);
    t.qber_estimate = est.qber;
    t.qber_sample_size = est.sample_size;
    if (decide(est.qber, config.abort_threshold) == Decision::Abort) {
        t.aborted = true;
        t.abort_reason = "qber above threshold";
        return t;
    }
    if (est.remaining_alice.empty()) {
        t.abort_reason = "no bits left after qber sampling";
        return t;
    }

    const ReconcileResult rec =
        reconcile(est.remaining_alice, est.remaining_bob, est.qber, config.reconciliation_passes, rng);
    t.leaked_bits = rec.leaked_bits;
    t.reconciled = rec.corrected == est.remaining_alice;

    const std::uint64_t pa_seed = rng();
    t.final_key = privacy_amplify(est.remaining_alice, est.qber, rec.leaked_bits, config.pa_safety_bits, pa_seed);
    const BitString bob_key =
        privacy_amplify(rec.corrected, est.qber, rec.leaked_bits, config.pa_safety_bits, pa_seed);
    t.keys_match = t.final_key == bob_key;
    return t;
}

}  // namespace qkd::protocol
