// detection.hpp - detector events per dwell interval and the record-keeping rule.

#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <random>
#include <stdexcept>
#include <vector>

#include "qkd/optics.hpp"
#include "qkd/states.hpp"

namespace qkd::detection {

using optics::MeasBasis;

struct DetectorConfig {
    double dwell_s = 0.1;
    double pair_rate_hz = 10.0;
    double dark_rate_hz = 0.1;  // per detector

    void validate() const {
        if (!(dwell_s >= 0.0 && pair_rate_hz >= 0.0 && dark_rate_hz >= 0.0))
            throw std::invalid_argument("detector: dwell, pair_rate and dark_rate must be >= 0");
    }
};

struct TrialRecord {
    std::size_t trial_index = 0;
    MeasBasis alice_basis = MeasBasis::HV;
    MeasBasis bob_basis = MeasBasis::HV;
    bool eve_applied = false;
    std::optional<MeasBasis> eve_basis;
    std::optional<int> alice_bit;
    std::optional<int> bob_bit;
    bool kept = false;

    friend bool operator==(const TrialRecord&, const TrialRecord&) = default;
};

/// Joint outcome probabilities, first index Alice, 1 = plus state.
struct JointProbs {
    double p11 = 0.0;
    double p10 = 0.0;
    double p01 = 0.0;
    double p00 = 0.0;

    double sum() const { return p11 + p10 + p01 + p00; }
    double agree() const { return p11 + p00; }
};

inline JointProbs joint_probs(const TwoQubitState& s, MeasBasis a, MeasBasis b) {
    const auto [a_plus, a_minus] = states::basis_projectors(a);
    const auto [b_plus, b_minus] = states::basis_projectors(b);
    return {s.expectation(tensor(a_plus, b_plus)), s.expectation(tensor(a_plus, b_minus)),
            s.expectation(tensor(a_minus, b_plus)), s.expectation(tensor(a_minus, b_minus))};
}

struct BitPair {
    int alice;
    int bob;
};

inline BitPair sample_trial(const TwoQubitState& s, MeasBasis a, MeasBasis b, Rng& rng) {
    const JointProbs p = joint_probs(s, a, b);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    const double u = uniform(rng) * p.sum();
    // Zero-probability cells are never returned.
    if (u < p.p11 && p.p11 > 0.0) return {1, 1};
    if (u < p.p11 + p.p10 && p.p10 > 0.0) return {1, 0};
    if (u < p.p11 + p.p10 + p.p01 && p.p01 > 0.0) return {0, 1};
    if (p.p00 > 0.0) return {0, 0};
    if (p.p01 > 0.0) return {0, 1};
    if (p.p10 > 0.0) return {1, 0};
    return {1, 1};
}

/// How Alice and Bob pick their analyzer bases each interval.
struct BasisPolicy {
    bool random = true;
    MeasBasis alice = MeasBasis::HV;  // used when !random
    MeasBasis bob = MeasBasis::HV;

    static BasisPolicy uniform() { return {}; }
    static BasisPolicy fixed(MeasBasis a, MeasBasis b) { return {false, a, b}; }
};

/// One record per dwell interval. An interval is kept iff exactly one
/// detector event happened on each side: a single pair and no dark counts,
/// or no pair and exactly one dark count per side (an accidental with
/// independent random bits).
inline std::vector<TrialRecord> simulate_dwell_stream(const TwoQubitState& source,
                                                      const DetectorConfig& config,
                                                      std::size_t n_intervals, const BasisPolicy& bases,
                                                      const states::EveConfig& eve, Rng& rng) {
    if (n_intervals < 1) throw std::invalid_argument("simulate_dwell_stream: n_intervals must be >= 1");
    config.validate();
    eve.validate();

    std::bernoulli_distribution coin(0.5);
    std::bernoulli_distribution gate(eve.mode == states::EveMode::Absent ? 0.0 : eve.intercept_fraction);
    const double pair_mean = config.pair_rate_hz * config.dwell_s;
    std::poisson_distribution<int> pairs(pair_mean > 0.0 ? pair_mean : 1.0);
    const double dark_mean = config.dark_rate_hz * config.dwell_s;
    std::poisson_distribution<int> darks(dark_mean > 0.0 ? dark_mean : 1.0);
    auto dark_count = [&]() { return dark_mean > 0.0 ? darks(rng) : 0; };
    auto pick_basis = [&]() { return coin(rng) ? MeasBasis::DA : MeasBasis::HV; };

    // Dephasing with a fixed basis does not depend on the trial; precompute it.
    std::optional<TwoQubitState> fixed_dephased;
    if (eve.mode == states::EveMode::Dephasing && eve.basis_policy == states::EveBasisPolicy::Fixed)
        fixed_dephased = states::dephase_bob(source, eve.basis_angle_deg, eve.strength);

    std::vector<TrialRecord> records;
    records.reserve(n_intervals);
    for (std::size_t t = 0; t < n_intervals; ++t) {
        TrialRecord rec;
        rec.trial_index = t + 1;
        rec.alice_basis = bases.random ? pick_basis() : bases.alice;
        rec.bob_basis = bases.random ? pick_basis() : bases.bob;

        rec.eve_applied = eve.mode != states::EveMode::Absent && gate(rng);
        std::optional<double> eve_angle;
        if (rec.eve_applied) {
            if (eve.basis_policy == states::EveBasisPolicy::RandomPerTrial) {
                rec.eve_basis = pick_basis();
                eve_angle = states::basis_angle_deg(*rec.eve_basis);
            } else {
                rec.eve_basis = eve.fixed_basis();
                eve_angle = eve.basis_angle_deg;
            }
        }

        const int n_pairs = pair_mean > 0.0 ? pairs(rng) : 0;
        const int dark_a_plus = dark_count();
        const int dark_a_minus = dark_count();
        const int dark_b_plus = dark_count();
        const int dark_b_minus = dark_count();
        const int alice_events = n_pairs + dark_a_plus + dark_a_minus;
        const int bob_events = n_pairs + dark_b_plus + dark_b_minus;

        if (alice_events == 1 && bob_events == 1) {
            rec.kept = true;
            if (n_pairs == 1) {
                std::optional<TwoQubitState> state;
                if (!rec.eve_applied) {
                    state = source;
                } else if (eve.mode == states::EveMode::InterceptResend) {
                    const auto basis = rec.eve_basis.value_or(MeasBasis::HV);
                    state = states::intercept_resend(source, basis, rng).post;
                } else if (fixed_dephased) {
                    state = *fixed_dephased;
                } else {
                    state = states::dephase_bob(source, *eve_angle, eve.strength);
                }
                const BitPair bits = sample_trial(*state, rec.alice_basis, rec.bob_basis, rng);
                rec.alice_bit = bits.alice;
                rec.bob_bit = bits.bob;
            } else {
                rec.alice_bit = dark_a_plus == 1 ? 1 : 0;
                rec.bob_bit = dark_b_plus == 1 ? 1 : 0;
            }
        }
        records.push_back(rec);
    }
    return records;
}

namespace detail {
inline void write_opt_bit(std::ostream& os, const std::optional<int>& b) {
    if (b) os << *b;
}
}  // namespace detail

/// CSV: trial_index,alice_basis,bob_basis,eve_basis,alice_bit,bob_bit,kept,agree
/// Missing values are empty fields.
inline void write_records_csv(std::ostream& os, const std::vector<TrialRecord>& records) {
    os << "trial_index,alice_basis,bob_basis,eve_basis,alice_bit,bob_bit,kept,agree\n";
    for (const auto& r : records) {
        os << r.trial_index << ',' << optics::to_string(r.alice_basis) << ','
           << optics::to_string(r.bob_basis) << ',';
        if (r.eve_basis) os << optics::to_string(*r.eve_basis);
        os << ',';
        detail::write_opt_bit(os, r.alice_bit);
        os << ',';
        detail::write_opt_bit(os, r.bob_bit);
        os << ',' << (r.kept ? 1 : 0) << ',';
        if (r.kept) os << (r.alice_bit == r.bob_bit ? 1 : 0);
        os << '\n';
    }
}

}  // namespace qkd::detection
