// tomography.hpp - two-photon state tomography, state metrics and CHSH.
//
// Reconstruction is linear inversion followed by a physicality projection:
// the flux is estimated from the HH/HV/VV/VH settings (a complete basis),
// the 16 Pauli coefficients of rho are solved by least squares against the
// normalized counts, and negative eigenvalues are clipped.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "qkd/optics.hpp"
#include "qkd/qmath.hpp"
#include "qkd/states.hpp"

namespace qkd::tomography {

using optics::PolState;

inline constexpr std::size_t kSettings = 16;
using Setting = std::pair<PolState, PolState>;  // (Alice, Bob)
using Counts = std::array<double, kSettings>;

/// Measurement order used for every counts array.
inline constexpr std::array<Setting, kSettings> kSchedule{{
    {PolState::H, PolState::H}, {PolState::H, PolState::V}, {PolState::V, PolState::V},
    {PolState::V, PolState::H}, {PolState::R, PolState::H}, {PolState::R, PolState::V},
    {PolState::D, PolState::V}, {PolState::D, PolState::H}, {PolState::D, PolState::R},
    {PolState::D, PolState::D}, {PolState::R, PolState::D}, {PolState::H, PolState::D},
    {PolState::V, PolState::D}, {PolState::V, PolState::L}, {PolState::H, PolState::L},
    {PolState::R, PolState::L},
}};

inline std::string setting_label(const Setting& s) {
    return {optics::to_char(s.first), optics::to_char(s.second)};
}

class ReconstructionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Two-photon POVM element of setting k, built from the physical analyzer chains.
inline CMat4 setting_effect(const Setting& s) {
    return tensor(optics::analyzer_effect(optics::table_setting(s.first)),
                  optics::analyzer_effect(optics::table_setting(s.second)));
}

inline Counts expected_counts(const TwoQubitState& s, double n_per_setting) {
    Counts c{};
    for (std::size_t k = 0; k < kSettings; ++k)
        c[k] = n_per_setting * std::max(0.0, s.expectation(setting_effect(kSchedule[k])));
    return c;
}

/// counts[k] ~ Poisson(n * Tr[rho Pi_k]).
inline Counts simulate_counts(const TwoQubitState& s, double n_per_setting, Rng& rng) {
    if (!(n_per_setting > 0.0)) throw std::invalid_argument("simulate_counts: n_per_setting must be > 0");
    const Counts mean = expected_counts(s, n_per_setting);
    Counts c{};
    for (std::size_t k = 0; k < kSettings; ++k) {
        if (mean[k] <= 0.0) continue;
        std::poisson_distribution<std::int64_t> poisson(mean[k]);
        c[k] = static_cast<double>(poisson(rng));
    }
    return c;
}

// ---------------------------------------------------------------------------
// Linear inversion
// ---------------------------------------------------------------------------

/// sigma_0..3 = I, X, Y, Z.
inline CMat2 pauli(int i) {
    CMat2 m;
    switch (i) {
        case 0: m(0, 0) = 1.0; m(1, 1) = 1.0; break;
        case 1: m(0, 1) = 1.0; m(1, 0) = 1.0; break;
        case 2: m(0, 1) = Complex(0.0, -1.0); m(1, 0) = Complex(0.0, 1.0); break;
        case 3: m(0, 0) = 1.0; m(1, 1) = -1.0; break;
        default: throw std::out_of_range("pauli: index must be 0..3");
    }
    return m;
}

namespace detail {

using Square16 = std::array<std::array<double, kSettings>, kSettings>;

// p_k = sum_{mu,nu} r[4 mu + nu] Tr[sigma_mu E_a] Tr[sigma_nu E_b] / 4,
// with rho = sum r[4 mu + nu] sigma_mu (x) sigma_nu / 4.
inline Square16 design_matrix() {
    Square16 b{};
    for (std::size_t k = 0; k < kSettings; ++k) {
        const CMat2 ea = optics::projector(kSchedule[k].first);
        const CMat2 eb = optics::projector(kSchedule[k].second);
        for (int mu = 0; mu < 4; ++mu)
            for (int nu = 0; nu < 4; ++nu)
                b[k][4 * mu + nu] =
                    0.25 * (trace_product(pauli(mu), ea) * trace_product(pauli(nu), eb)).real();
    }
    return b;
}

/// Householder QR of the design matrix, factored once.
class LeastSquares {
public:
    explicit LeastSquares(Square16 a) : qr_(a) {
        for (std::size_t k = 0; k < kSettings; ++k) {
            double norm = 0.0;
            for (std::size_t i = k; i < kSettings; ++i) norm += qr_[i][k] * qr_[i][k];
            norm = std::sqrt(norm);
            if (norm < 1e-12) throw std::logic_error("tomography: singular design matrix");
            const double alpha = qr_[k][k] > 0.0 ? -norm : norm;
            qr_[k][k] -= alpha;
            double vnorm = 0.0;
            for (std::size_t i = k; i < kSettings; ++i) vnorm += qr_[i][k] * qr_[i][k];
            beta_[k] = 2.0 / vnorm;
            for (std::size_t j = k + 1; j < kSettings; ++j) {
                double dot = 0.0;
                for (std::size_t i = k; i < kSettings; ++i) dot += qr_[i][k] * qr_[i][j];
                dot *= beta_[k];
                for (std::size_t i = k; i < kSettings; ++i) qr_[i][j] -= dot * qr_[i][k];
            }
            diag_[k] = alpha;
        }
        for (std::size_t k = 0; k < kSettings; ++k)
            if (std::abs(diag_[k]) < 1e-10) throw std::logic_error("tomography: singular design matrix");
    }

    std::array<double, kSettings> solve(std::array<double, kSettings> y) const {
        for (std::size_t k = 0; k < kSettings; ++k) {
            double dot = 0.0;
            for (std::size_t i = k; i < kSettings; ++i) dot += qr_[i][k] * y[i];
            dot *= beta_[k];
            for (std::size_t i = k; i < kSettings; ++i) y[i] -= dot * qr_[i][k];
        }
        std::array<double, kSettings> x{};
        for (std::size_t k = kSettings; k-- > 0;) {
            double s = y[k];
            for (std::size_t j = k + 1; j < kSettings; ++j) s -= qr_[k][j] * x[j];
            x[k] = s / diag_[k];
        }
        return x;
    }

private:
    Square16 qr_;
    std::array<double, kSettings> beta_{};
    std::array<double, kSettings> diag_{};
};

inline const LeastSquares& solver() {
    static const LeastSquares ls(design_matrix());
    return ls;
}

}  // namespace detail

/// Estimated total flux: sum of the HH, HV, VV, VH counts.
inline double flux_estimate(const Counts& counts) { return counts[0] + counts[1] + counts[2] + counts[3]; }

/// Hermitian estimate before the physicality projection.
inline CMat4 linear_estimate(const Counts& counts) {
    for (double c : counts)
        if (!(c >= 0.0) || !std::isfinite(c)) throw std::invalid_argument("counts must be finite and nonnegative");
    const double flux = flux_estimate(counts);
    if (!(flux > 0.0)) throw ReconstructionError("zero flux in the HH/HV/VV/VH settings");

    std::array<double, kSettings> p{};
    for (std::size_t k = 0; k < kSettings; ++k) p[k] = counts[k] / flux;
    const auto r = detail::solver().solve(p);

    CMat4 rho;
    for (int mu = 0; mu < 4; ++mu)
        for (int nu = 0; nu < 4; ++nu) rho += (0.25 * r[4 * mu + nu]) * tensor(pauli(mu), pauli(nu));
    return 0.5 * (rho + rho.adjoint());
}

/// Largest tolerated fraction of the linear estimate's weight sitting in
/// negative eigenvalues. Beyond it the counts describe no quantum state and
/// clipping would invent one.
inline constexpr double kMaxNegativeMass = 0.25;

inline TwoQubitState reconstruct(const Counts& counts) {
    const CMat4 linear = linear_estimate(counts);
    double negative = 0.0;
    double positive = 0.0;
    for (double lambda : herm_eig(linear).values) (lambda < 0.0 ? negative : positive) += std::abs(lambda);
    if (negative > kMaxNegativeMass * positive)
        throw ReconstructionError("counts are inconsistent with any physical state");
    try {
        return TwoQubitState(nearest_physical(linear));
    } catch (const LinalgError& e) {
        throw ReconstructionError(e.what());
    }
}

// ---------------------------------------------------------------------------
// State metrics
// ---------------------------------------------------------------------------

inline double concurrence(const TwoQubitState& s) {
    const CMat4 yy = tensor(pauli(2), pauli(2));
    const CMat4 flipped = yy * s.rho().conjugate() * yy;

    // sqrt(rho) rho~ sqrt(rho) is Hermitian PSD with the same spectrum as rho rho~.
    auto eig = herm_eig(s.rho());
    for (auto& v : eig.values) v = std::sqrt(std::max(v, 0.0));
    const CMat4 root = eig.reconstruct();
    const CMat4 r = root * flipped * root;
    const auto spectrum = herm_eig(0.5 * (r + r.adjoint())).values;

    std::array<double, 4> lambda{};
    for (std::size_t i = 0; i < 4; ++i) lambda[i] = std::sqrt(std::max(spectrum[i], 0.0));
    std::sort(lambda.begin(), lambda.end(), std::greater<>());
    return std::max(0.0, lambda[0] - lambda[1] - lambda[2] - lambda[3]);
}

/// Squared concurrence.
inline double tangle(const TwoQubitState& s) {
    const double c = concurrence(s);
    return c * c;
}

/// -sum lambda log2 lambda, with 0 log 0 = 0.
inline double von_neumann(const TwoQubitState& s) {
    double entropy = 0.0;
    for (double lambda : herm_eig(s.rho()).values)
        if (lambda > 1e-15) entropy -= lambda * std::log2(lambda);
    return std::max(entropy, 0.0);
}

/// (4/3)(1 - Tr rho^2): 0 pure, 2/3 for an equal two-state mixture, 1 at I/4.
inline double linear_entropy(const TwoQubitState& s) {
    const double purity = trace_product(s.rho(), s.rho()).real();
    return (4.0 / 3.0) * (1.0 - purity);
}

inline double fidelity(const TwoQubitState& s, const CVec4& target) {
    return std::real(inner(target, s.rho() * target));
}

struct Estimate {
    double value = 0.0;
    double sigma = 0.0;
};

struct StateMetrics {
    Estimate tangle;
    Estimate von_neumann;
    Estimate linear_entropy;
    Estimate fidelity;
    std::size_t replicas = 0;
    std::size_t failed_replicas = 0;
    std::size_t clamp_events = 0;
};

inline constexpr double kMaxVonNeumann = 2.0;  // log2 of the dimension

namespace detail {

struct PointMetrics {
    std::array<double, 4> v{};  // tangle, S, S_L, F
    std::size_t clamps = 0;
};

inline double clamp_counted(double x, double lo, double hi, std::size_t& events) {
    if (x < lo || x > hi) ++events;
    return std::clamp(x, lo, hi);
}

inline PointMetrics point_metrics(const TwoQubitState& s, const CVec4& target) {
    PointMetrics m;
    m.v[0] = clamp_counted(tangle(s), 0.0, 1.0, m.clamps);
    m.v[1] = clamp_counted(von_neumann(s), 0.0, kMaxVonNeumann, m.clamps);
    m.v[2] = clamp_counted(linear_entropy(s), 0.0, 1.0, m.clamps);
    m.v[3] = clamp_counted(fidelity(s, target), 0.0, 1.0, m.clamps);
    return m;
}

// Pairwise summation keeps the aggregate independent of how replicas were scheduled.
inline double pairwise_sum(const double* x, std::size_t n) {
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += x[i];
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(x, half) + pairwise_sum(x + half, n - half);
}

}  // namespace detail

/// Metrics of a single state, no uncertainty.
inline StateMetrics metrics(const TwoQubitState& s, const CVec4& target = states::phi_plus_ket()) {
    const auto m = detail::point_metrics(s, target);
    StateMetrics out;
    out.tangle.value = m.v[0];
    out.von_neumann.value = m.v[1];
    out.linear_entropy.value = m.v[2];
    out.fidelity.value = m.v[3];
    out.replicas = 1;
    out.clamp_events = m.clamps;
    return out;
}

/// Stream for one bootstrap replica, derived from (seed, replica index).
inline Rng replica_rng(std::uint64_t seed, std::size_t replica) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(replica), static_cast<std::uint32_t>(replica >> 32)};
    return Rng(seq);
}

/// Poisson parametric bootstrap: resample counts'_k ~ Poisson(counts_k),
/// reconstruct, and report mean and standard deviation of each metric.
/// Throws ReconstructionError if the counts themselves cannot be reconstructed
/// or every replica fails.
inline StateMetrics bootstrap_metrics(const Counts& counts, std::size_t replicas, std::uint64_t seed,
                                      const CVec4& target = states::phi_plus_ket(), unsigned threads = 0) {
    if (replicas < 2) throw std::invalid_argument("bootstrap_metrics: replicas must be >= 2");
    (void)reconstruct(counts);  // surfaces degenerate input before any resampling

    struct Slot {
        bool ok = false;
        detail::PointMetrics m;
    };
    std::vector<Slot> slots(replicas);
    auto run = [&](std::size_t r) {
        Rng rng = replica_rng(seed, r);
        Counts resampled{};
        for (std::size_t k = 0; k < kSettings; ++k) {
            if (counts[k] <= 0.0) continue;
            std::poisson_distribution<std::int64_t> poisson(counts[k]);
            resampled[k] = static_cast<double>(poisson(rng));
        }
        try {
            slots[r].m = detail::point_metrics(reconstruct(resampled), target);
            slots[r].ok = true;
        } catch (const ReconstructionError&) {
            slots[r].ok = false;
        }
    };

    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, replicas));
    if (threads <= 1) {
        for (std::size_t r = 0; r < replicas; ++r) run(r);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (unsigned w = 0; w < threads; ++w)
            pool.emplace_back([&, w] {
                for (std::size_t r = w; r < replicas; r += threads) run(r);
            });
        for (auto& t : pool) t.join();
    }

    StateMetrics out;
    out.replicas = replicas;
    std::array<std::vector<double>, 4> samples;
    for (const auto& s : slots) {
        if (!s.ok) {
            ++out.failed_replicas;
            continue;
        }
        out.clamp_events += s.m.clamps;
        for (std::size_t i = 0; i < 4; ++i) samples[i].push_back(s.m.v[i]);
    }
    const std::size_t good = samples[0].size();
    if (good < 2) throw ReconstructionError("bootstrap: fewer than two replicas reconstructed");

    std::array<Estimate*, 4> fields{&out.tangle, &out.von_neumann, &out.linear_entropy, &out.fidelity};
    for (std::size_t i = 0; i < 4; ++i) {
        const double mean = detail::pairwise_sum(samples[i].data(), good) / static_cast<double>(good);
        std::vector<double> sq(good);
        for (std::size_t j = 0; j < good; ++j) sq[j] = (samples[i][j] - mean) * (samples[i][j] - mean);
        fields[i]->value = mean;
        fields[i]->sigma = std::sqrt(detail::pairwise_sum(sq.data(), good) / static_cast<double>(good - 1));
    }
    return out;
}

// ---------------------------------------------------------------------------
// CHSH
// ---------------------------------------------------------------------------

/// E(alpha, beta) for linear analyzers at the given angles from horizontal.
inline double correlation(const TwoQubitState& s, double alpha_deg, double beta_deg) {
    const auto [a_plus, a_minus] = states::linear_basis_projectors(alpha_deg);
    const auto [b_plus, b_minus] = states::linear_basis_projectors(beta_deg);
    return s.expectation(tensor(a_plus, b_plus)) - s.expectation(tensor(a_plus, b_minus)) -
           s.expectation(tensor(a_minus, b_plus)) + s.expectation(tensor(a_minus, b_minus));
}

struct ChshAngles {
    double a = 0.0;
    double a_prime = 45.0;
    double b = 22.5;
    double b_prime = 67.5;
};

/// S = E(a,b) - E(a,b') + E(a',b) + E(a',b').
inline double chsh(const TwoQubitState& s, const ChshAngles& x) {
    return correlation(s, x.a, x.b) - correlation(s, x.a, x.b_prime) + correlation(s, x.a_prime, x.b) +
           correlation(s, x.a_prime, x.b_prime);
}

/// Maximum CHSH value over all analyzer directions: 2 sqrt(u1 + u2), with
/// u1 >= u2 the top eigenvalues of T^T T, T_ij = Tr[rho sigma_i (x) sigma_j].
inline double chsh_max(const TwoQubitState& s) {
    std::array<std::array<double, 3>, 3> t{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) t[i][j] = s.expectation(tensor(pauli(i + 1), pauli(j + 1)));
    Matrix<3> m;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double acc = 0.0;
            for (int k = 0; k < 3; ++k) acc += t[k][i] * t[k][j];
            m(i, j) = acc;
        }
    const auto u = herm_eig(m).values;
    return 2.0 * std::sqrt(std::max(0.0, u[0] + u[1]));
}

}  // namespace qkd::tomography
