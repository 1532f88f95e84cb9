// optics.hpp - Jones calculus for the polarization analyzers.
//
// Angle convention: wave-plate axes are stored as degrees from the vertical,
// positive counter-clockwise looking into the beam. In the (H, V) component
// basis a linear polarization at angle a from vertical is (-sin a, cos a),
// which puts D = (H + V)/sqrt2 at -45 deg and A = (H - V)/sqrt2 at +45 deg.
// Angles quoted from the horizontal convert with AxisAngle::from_horizontal.
//
// Circular handedness: R = (H - iV)/sqrt2, L = (H + iV)/sqrt2. This is the
// sign for which a QWP at 0 deg, a HWP at +22.5 deg and a vertical polarizer
// transmit R and block L (see table_setting).
//
// Global phases are never compared; states are equal when |<a|b>|^2 = 1.

#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

#include "qkd/qmath.hpp"

namespace qkd::optics {

enum class PolState { H, V, D, A, R, L };

inline constexpr std::array<PolState, 6> kAllStates{PolState::H, PolState::V, PolState::D,
                                                    PolState::A, PolState::R, PolState::L};

/// Bit convention: the plus state (H, D, R) reads as 1, the minus state as 0.
enum class MeasBasis { HV, DA, RL };

inline constexpr char to_char(PolState s) {
    switch (s) {
        case PolState::H: return 'H';
        case PolState::V: return 'V';
        case PolState::D: return 'D';
        case PolState::A: return 'A';
        case PolState::R: return 'R';
        case PolState::L: return 'L';
    }
    return '?';
}

inline PolState pol_state_from_char(char c) {
    switch (c) {
        case 'H': return PolState::H;
        case 'V': return PolState::V;
        case 'D': return PolState::D;
        case 'A': return PolState::A;
        case 'R': return PolState::R;
        case 'L': return PolState::L;
        default: break;
    }
    throw std::invalid_argument(std::string("unknown polarization state '") + c + "'");
}

inline std::string_view to_string(MeasBasis b) {
    switch (b) {
        case MeasBasis::HV: return "HV";
        case MeasBasis::DA: return "DA";
        case MeasBasis::RL: return "RL";
    }
    return "?";
}

inline MeasBasis meas_basis_from_string(std::string_view s) {
    if (s == "HV") return MeasBasis::HV;
    if (s == "DA") return MeasBasis::DA;
    if (s == "RL") return MeasBasis::RL;
    throw std::invalid_argument("unknown measurement basis '" + std::string(s) + "'");
}

/// (plus, minus) states of a basis.
inline constexpr std::pair<PolState, PolState> basis_states(MeasBasis b) {
    switch (b) {
        case MeasBasis::HV: return {PolState::H, PolState::V};
        case MeasBasis::DA: return {PolState::D, PolState::A};
        case MeasBasis::RL: return {PolState::R, PolState::L};
    }
    return {PolState::H, PolState::V};
}

inline CVec2 ket(PolState s) {
    const double r = 1.0 / std::numbers::sqrt2;
    const Complex i{0.0, 1.0};
    switch (s) {
        case PolState::H: return CVec2({1.0, 0.0});
        case PolState::V: return CVec2({0.0, 1.0});
        case PolState::D: return CVec2({r, r});
        case PolState::A: return CVec2({r, -r});
        case PolState::R: return CVec2({r, -i * r});
        case PolState::L: return CVec2({r, i * r});
    }
    return {};
}

inline CMat2 projector(PolState s) { return CMat2::outer(ket(s)); }

/// Wave-plate / polarizer axis orientation, stored from the vertical.
class AxisAngle {
public:
    constexpr AxisAngle() = default;

    static constexpr AxisAngle from_vertical(double degrees) { return AxisAngle(degrees); }
    static constexpr AxisAngle from_horizontal(double degrees) { return AxisAngle(degrees - 90.0); }

    constexpr double from_vertical_deg() const { return deg_; }
    constexpr double from_horizontal_deg() const { return deg_ + 90.0; }

    /// Unit Jones vector of linear polarization along this axis.
    CVec2 direction() const {
        const double a = deg_ * std::numbers::pi / 180.0;
        return CVec2({-std::sin(a), std::cos(a)});
    }

private:
    constexpr explicit AxisAngle(double d) : deg_(d) {}
    double deg_ = 0.0;
};

namespace detail {

// Retarder with the fast axis along `fast`: the slow component picks up e^{i delta}.
inline CMat2 retarder(AxisAngle fast, double delta) {
    const CVec2 f = fast.direction();
    const CVec2 s({-f[1], f[0]});
    return CMat2::outer(f) + std::polar(1.0, delta) * CMat2::outer(s);
}

}  // namespace detail

inline CMat2 hwp(AxisAngle fast_axis) { return detail::retarder(fast_axis, std::numbers::pi); }
inline CMat2 qwp(AxisAngle fast_axis) { return detail::retarder(fast_axis, std::numbers::pi / 2.0); }

/// Linear polarization at `axis` -> projector onto it.
inline CMat2 linear_projector(AxisAngle axis) { return CMat2::outer(axis.direction()); }

/// QWP then HWP in front of a fixed vertical polarizer.
struct AnalyzerSetting {
    double qwp_deg = 0.0;  // from vertical
    double hwp_deg = 0.0;  // from vertical
};

/// Effective Jones operator P_V * HWP * QWP of one analyzer arm.
inline CMat2 analyzer_chain(const AnalyzerSetting& s) {
    const CMat2 pv = projector(PolState::V);
    return pv * hwp(AxisAngle::from_vertical(s.hwp_deg)) * qwp(AxisAngle::from_vertical(s.qwp_deg));
}

/// POVM element M^dagger M of an analyzer: transmission probability is <psi|E|psi>.
inline CMat2 analyzer_effect(const AnalyzerSetting& s) {
    const CMat2 m = analyzer_chain(s);
    return m.adjoint() * m;
}

/// Waveplate angles selecting each state with the vertical polarizer.
///
/// H, V, D, A follow the lab table verbatim. The circular rows use
/// HWP +/-22.5 deg: the printed +/-45 deg pair is one and the same filter
/// (HWPs 90 deg apart differ by a global phase) and selects H.
inline AnalyzerSetting table_setting(PolState s) {
    switch (s) {
        case PolState::H: return {90.0, 45.0};
        case PolState::V: return {0.0, 0.0};
        case PolState::D: return {-45.0, -22.5};
        case PolState::A: return {45.0, 22.5};
        case PolState::R: return {0.0, 22.5};
        case PolState::L: return {0.0, -22.5};
    }
    return {};
}

/// Transmission probability of a pure input through an analyzer.
inline double transmission(const AnalyzerSetting& s, const CVec2& input) {
    return (analyzer_chain(s) * input).norm2();
}

}  // namespace qkd::optics
