// states.hpp - entangled source, source noise and the eavesdropper channels.
//
// Eve always acts on photon 2 (Bob's arm).

#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

#include "qkd/optics.hpp"
#include "qkd/qmath.hpp"

namespace qkd {

using Rng = std::mt19937_64;

/// Validated two-qubit density matrix.
class TwoQubitState {
public:
    explicit TwoQubitState(const CMat4& rho) : rho_(rho) {
        if (!is_density(rho_)) throw LinalgError("TwoQubitState: not a density matrix");
    }

    static TwoQubitState pure(const CVec4& psi) {
        if (std::abs(psi.norm2() - 1.0) > tol::kUnitNorm)
            throw LinalgError("TwoQubitState: pure state vector is not normalized");
        return TwoQubitState(CMat4::outer(psi));
    }

    const CMat4& rho() const { return rho_; }

    /// Tr[rho * op]; real for Hermitian op.
    double expectation(const CMat4& op) const { return trace_product(rho_, op).real(); }

private:
    CMat4 rho_;
};

namespace states {

/// (|HH> + |VV>)/sqrt2
inline CVec4 phi_plus_ket() {
    const double r = 1.0 / std::numbers::sqrt2;
    return CVec4({r, 0.0, 0.0, r});
}

inline TwoQubitState bell_phi_plus() {
    CMat4 rho;
    rho(0, 0) = rho(0, 3) = rho(3, 0) = rho(3, 3) = 0.5;
    return TwoQubitState(rho);
}

/// (1 - p) rho + p I/4
inline TwoQubitState add_white_noise(const TwoQubitState& s, double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("add_white_noise: p must be in [0,1]");
    return TwoQubitState((1.0 - p) * s.rho() + (p / 4.0) * CMat4::identity());
}

/// Projectors (P+, P-) onto the linear basis whose plus state sits at
/// `basis_angle_deg` from the horizontal (0 = HV, 45 = DA).
inline std::pair<CMat2, CMat2> linear_basis_projectors(double basis_angle_deg) {
    const auto plus = optics::AxisAngle::from_horizontal(basis_angle_deg);
    const auto minus = optics::AxisAngle::from_horizontal(basis_angle_deg + 90.0);
    return {optics::linear_projector(plus), optics::linear_projector(minus)};
}

inline std::pair<CMat2, CMat2> basis_projectors(optics::MeasBasis b) {
    const auto [plus, minus] = optics::basis_states(b);
    return {optics::projector(plus), optics::projector(minus)};
}

namespace detail {

inline CMat4 conjugate_bob(const CMat4& rho, const CMat2& p) {
    const CMat4 op = tensor(CMat2::identity(), p);
    return op * rho * op;
}

inline TwoQubitState dephase_bob(const TwoQubitState& s, const std::pair<CMat2, CMat2>& proj,
                                 double gamma) {
    if (!(gamma >= 0.0 && gamma <= 1.0))
        throw std::invalid_argument("dephase_bob: gamma must be in [0,1]");
    const CMat4 measured = conjugate_bob(s.rho(), proj.first) + conjugate_bob(s.rho(), proj.second);
    return TwoQubitState((1.0 - gamma) * s.rho() + gamma * measured);
}

}  // namespace detail

/// rho' = (1-g) rho + g sum_k (I (x) P_k) rho (I (x) P_k) for the linear basis at basis_angle_deg.
inline TwoQubitState dephase_bob(const TwoQubitState& s, double basis_angle_deg, double gamma) {
    return detail::dephase_bob(s, linear_basis_projectors(basis_angle_deg), gamma);
}

inline TwoQubitState dephase_bob(const TwoQubitState& s, optics::MeasBasis basis, double gamma) {
    return detail::dephase_bob(s, basis_projectors(basis), gamma);
}

struct InterceptResult {
    int eve_bit;  // 1 = plus state of her basis
    TwoQubitState post;
};

/// Projective measurement of photon 2 in `basis`; the photon is resent in the
/// state Eve observed.
inline InterceptResult intercept_resend(const TwoQubitState& s, optics::MeasBasis basis, Rng& rng) {
    const auto [p_plus, p_minus] = basis_projectors(basis);
    const CMat4 branch_plus = detail::conjugate_bob(s.rho(), p_plus);
    const CMat4 branch_minus = detail::conjugate_bob(s.rho(), p_minus);
    const double prob_plus = branch_plus.trace().real();
    const double prob_minus = branch_minus.trace().real();

    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    const double u = uniform(rng) * (prob_plus + prob_minus);
    const bool plus = prob_minus <= 0.0 || (prob_plus > 0.0 && u < prob_plus);
    const CMat4& branch = plus ? branch_plus : branch_minus;
    const double p = plus ? prob_plus : prob_minus;
    return {plus ? 1 : 0, TwoQubitState((1.0 / p) * branch)};
}

/// Birefringent plate used as a dephasing eavesdropper.
struct QuartzPlate {
    double thickness_mm = 8.0;
    double birefringence = 0.00776;  // reproduces a 207 fs walk-off for 8 mm
    double coherence_time_fs = 54.0;
    double axis_angle_deg = 0.0;  // from horizontal; 0 = HV, 45 = DA

    void validate() const {
        if (!(thickness_mm >= 0.0)) throw std::invalid_argument("quartz plate: thickness must be >= 0");
        if (!(birefringence >= 0.0)) throw std::invalid_argument("quartz plate: birefringence must be >= 0");
        if (!(coherence_time_fs > 0.0))
            throw std::invalid_argument("quartz plate: coherence time must be > 0");
    }
};

inline constexpr double kSpeedOfLightMmPerFs = 2.99792458e-4;

/// Group walk-off between fast and slow axis, in fs.
inline double plate_delay_fs(const QuartzPlate& p) {
    return p.birefringence * p.thickness_mm / kSpeedOfLightMmPerFs;
}

/// Gaussian coherence decay: gamma = 1 - exp(-(tau/tau_c)^2), clamped to [0,1].
inline double plate_gamma(const QuartzPlate& p) {
    p.validate();
    const double x = plate_delay_fs(p) / p.coherence_time_fs;
    return std::clamp(1.0 - std::exp(-x * x), 0.0, 1.0);
}

enum class EveMode { Absent, InterceptResend, Dephasing };
enum class EveBasisPolicy { Fixed, RandomPerTrial };

inline std::string_view to_string(EveMode m) {
    switch (m) {
        case EveMode::Absent: return "absent";
        case EveMode::InterceptResend: return "intercept_resend";
        case EveMode::Dephasing: return "dephasing";
    }
    return "?";
}

inline EveMode eve_mode_from_string(std::string_view s) {
    if (s == "absent") return EveMode::Absent;
    if (s == "intercept_resend") return EveMode::InterceptResend;
    if (s == "dephasing") return EveMode::Dephasing;
    throw std::invalid_argument("unknown eve mode '" + std::string(s) + "'");
}

inline std::string_view to_string(EveBasisPolicy p) {
    return p == EveBasisPolicy::Fixed ? "fixed" : "random_per_trial";
}

inline EveBasisPolicy eve_basis_policy_from_string(std::string_view s) {
    if (s == "fixed") return EveBasisPolicy::Fixed;
    if (s == "random_per_trial") return EveBasisPolicy::RandomPerTrial;
    throw std::invalid_argument("unknown eve basis policy '" + std::string(s) + "'");
}

struct EveConfig {
    EveMode mode = EveMode::Absent;
    double basis_angle_deg = 0.0;  // from horizontal; 0 = HV, 45 = DA
    double strength = 1.0;         // gamma, dephasing mode only
    double intercept_fraction = 1.0;
    EveBasisPolicy basis_policy = EveBasisPolicy::Fixed;

    void validate() const {
        if (!(strength >= 0.0 && strength <= 1.0)) throw std::invalid_argument("eve: strength must be in [0,1]");
        if (!(intercept_fraction >= 0.0 && intercept_fraction <= 1.0))
            throw std::invalid_argument("eve: intercept_fraction must be in [0,1]");
        if (mode == EveMode::InterceptResend && basis_policy == EveBasisPolicy::Fixed && !fixed_basis())
            throw std::invalid_argument("eve: intercept_resend needs basis_angle 0 (HV) or 45 (DA)");
    }

    /// HV or DA when basis_angle_deg is congruent to 0 or 45 modulo 90.
    std::optional<optics::MeasBasis> fixed_basis() const {
        const double r = std::remainder(basis_angle_deg, 90.0);
        if (std::abs(r) < 1e-9) return optics::MeasBasis::HV;
        if (std::abs(std::abs(r) - 45.0) < 1e-9) return optics::MeasBasis::DA;
        return std::nullopt;
    }
};

inline double basis_angle_deg(optics::MeasBasis b) {
    switch (b) {
        case optics::MeasBasis::HV: return 0.0;
        case optics::MeasBasis::DA: return 45.0;
        case optics::MeasBasis::RL: break;
    }
    throw std::invalid_argument("basis_angle_deg: RL is not a linear basis");
}

/// Outcome-averaged state Bob's arm carries once Eve's gating, basis policy and
/// channel are folded in. Intercept-resend averages to full dephasing.
inline TwoQubitState averaged_channel(const TwoQubitState& s, const EveConfig& eve) {
    eve.validate();
    if (eve.mode == EveMode::Absent || eve.intercept_fraction == 0.0) return s;
    const double gamma = eve.mode == EveMode::Dephasing ? eve.strength : 1.0;

    CMat4 attacked;
    if (eve.basis_policy == EveBasisPolicy::RandomPerTrial) {
        attacked = 0.5 * (dephase_bob(s, 0.0, gamma).rho() + dephase_bob(s, 45.0, gamma).rho());
    } else {
        attacked = dephase_bob(s, eve.basis_angle_deg, gamma).rho();
    }
    const double f = eve.intercept_fraction;
    return TwoQubitState((1.0 - f) * s.rho() + f * attacked);
}

}  // namespace states
}  // namespace qkd
