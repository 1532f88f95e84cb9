// cli.hpp - run configs and the commands behind the qkdsim tool.
//
// A command is a pure function of (config, seed): it writes its files into the
// output directory in a fixed order and returns an exit code
// (0 success, 1 usage/config error, 2 protocol abort).

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "qkd/io.hpp"
#include "qkd/otp.hpp"
#include "qkd/protocol.hpp"
#include "qkd/states.hpp"
#include "qkd/tomography.hpp"

namespace qkd::cli {

using nlohmann::json;
namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kUsage = 1, kAbort = 2 };

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Kind { Session, Tomo, Bell, Otp };

inline std::string_view to_string(Kind k) {
    switch (k) {
        case Kind::Session: return "session";
        case Kind::Tomo: return "tomo";
        case Kind::Bell: return "bell";
        case Kind::Otp: return "otp";
    }
    return "?";
}

inline Kind kind_from_string(std::string_view s) {
    if (s == "session") return Kind::Session;
    if (s == "tomo") return Kind::Tomo;
    if (s == "bell") return Kind::Bell;
    if (s == "otp") return Kind::Otp;
    throw ConfigError("kind must be one of session, tomo, bell, otp (got '" + std::string(s) + "')");
}

struct TomoOptions {
    double n_per_setting = 1e4;
    std::size_t bootstrap_replicas = 200;
    std::optional<fs::path> counts_file;  // measured counts instead of simulated ones
};

struct RunConfig {
    Kind kind = Kind::Session;
    protocol::SessionConfig session;
    std::optional<states::QuartzPlate> plate;  // already folded into session.eve
    TomoOptions tomo;
    tomography::ChshAngles bell_angles;
    std::string otp_message = "QKD";
    fs::path out_dir = "out";
};

namespace detail {

inline void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw ConfigError(where + ": expected a JSON object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, _] : obj.items())
        if (!ok.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
}

template <class T>
void read_opt(const json& obj, const char* key, T& out) {
    if (obj.contains(key)) out = obj.at(key).get<T>();
}

inline states::QuartzPlate parse_plate(const json& j) {
    check_keys(j, "eve.plate", {"thickness_mm", "birefringence", "coherence_time_fs", "axis_angle_deg"});
    states::QuartzPlate p;
    read_opt(j, "thickness_mm", p.thickness_mm);
    read_opt(j, "birefringence", p.birefringence);
    read_opt(j, "coherence_time_fs", p.coherence_time_fs);
    read_opt(j, "axis_angle_deg", p.axis_angle_deg);
    p.validate();
    return p;
}

inline void parse_eve(const json& j, RunConfig& rc) {
    check_keys(j, "eve", {"mode", "basis_angle_deg", "strength", "intercept_fraction", "basis_policy", "plate"});
    auto& eve = rc.session.eve;
    if (j.contains("mode")) eve.mode = states::eve_mode_from_string(j.at("mode").get<std::string>());
    read_opt(j, "basis_angle_deg", eve.basis_angle_deg);
    read_opt(j, "strength", eve.strength);
    read_opt(j, "intercept_fraction", eve.intercept_fraction);
    if (j.contains("basis_policy"))
        eve.basis_policy = states::eve_basis_policy_from_string(j.at("basis_policy").get<std::string>());
    if (j.contains("plate")) {
        if (j.contains("strength") || j.contains("basis_angle_deg"))
            throw ConfigError("eve: give either plate or strength/basis_angle_deg, not both");
        if (j.contains("mode") && eve.mode != states::EveMode::Dephasing)
            throw ConfigError("eve: a plate implies mode 'dephasing'");
        rc.plate = parse_plate(j.at("plate"));
        eve.mode = states::EveMode::Dephasing;
        eve.strength = states::plate_gamma(*rc.plate);
        eve.basis_angle_deg = rc.plate->axis_angle_deg;
    }
}

}  // namespace detail

/// Strict parse: unknown keys, wrong types and out-of-range values all throw
/// ConfigError. `base_dir` resolves a relative tomography counts_file.
inline RunConfig parse_run_config(const json& j, const fs::path& base_dir = {}) {
    using detail::check_keys;
    using detail::read_opt;
    RunConfig rc;
    try {
        check_keys(j, "config",
                   {"kind", "seed", "n_intervals", "source_noise", "eve", "detector", "qber_sample_fraction",
                    "abort_threshold", "reconciliation_passes", "pa_safety_bits", "tomography", "bell", "otp",
                    "outputs"});
        if (!j.contains("seed")) throw ConfigError("config: 'seed' is required");
        rc.session.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("kind")) rc.kind = kind_from_string(j.at("kind").get<std::string>());
        read_opt(j, "n_intervals", rc.session.n_intervals);
        read_opt(j, "source_noise", rc.session.source_noise);
        read_opt(j, "qber_sample_fraction", rc.session.qber_sample_fraction);
        read_opt(j, "abort_threshold", rc.session.abort_threshold);
        read_opt(j, "reconciliation_passes", rc.session.reconciliation_passes);
        read_opt(j, "pa_safety_bits", rc.session.pa_safety_bits);
        if (j.contains("eve")) detail::parse_eve(j.at("eve"), rc);
        if (j.contains("detector")) {
            const auto& d = j.at("detector");
            check_keys(d, "detector", {"dwell_s", "pair_rate_hz", "dark_rate_hz"});
            read_opt(d, "dwell_s", rc.session.detector.dwell_s);
            read_opt(d, "pair_rate_hz", rc.session.detector.pair_rate_hz);
            read_opt(d, "dark_rate_hz", rc.session.detector.dark_rate_hz);
        }
        if (j.contains("tomography")) {
            const auto& t = j.at("tomography");
            check_keys(t, "tomography", {"n_per_setting", "bootstrap_replicas", "counts_file"});
            read_opt(t, "n_per_setting", rc.tomo.n_per_setting);
            read_opt(t, "bootstrap_replicas", rc.tomo.bootstrap_replicas);
            if (t.contains("counts_file")) {
                fs::path p = t.at("counts_file").get<std::string>();
                rc.tomo.counts_file = p.is_absolute() ? p : base_dir / p;
            }
            if (!(rc.tomo.n_per_setting > 0.0)) throw ConfigError("tomography: n_per_setting must be > 0");
            if (rc.tomo.bootstrap_replicas < 2) throw ConfigError("tomography: bootstrap_replicas must be >= 2");
        }
        if (j.contains("bell")) {
            const auto& b = j.at("bell");
            check_keys(b, "bell", {"angles_deg"});
            if (b.contains("angles_deg")) {
                const auto a = b.at("angles_deg").get<std::array<double, 4>>();
                rc.bell_angles = {a[0], a[1], a[2], a[3]};
            }
        }
        if (j.contains("otp")) {
            const auto& o = j.at("otp");
            check_keys(o, "otp", {"message_text"});
            read_opt(o, "message_text", rc.otp_message);
        }
        if (j.contains("outputs")) {
            const auto& o = j.at("outputs");
            check_keys(o, "outputs", {"dir"});
            if (o.contains("dir")) rc.out_dir = o.at("dir").get<std::string>();
        }
        rc.session.validate();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return rc;
}

inline RunConfig load_run_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return parse_run_config(j, path.parent_path());
}

namespace detail {

inline void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

inline std::string fixed(double x, int digits) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(digits) << x;
    return os.str();
}

}  // namespace detail

/// Source state of the tomography and Bell experiments: the noisy pair with
/// Eve's channel averaged in.
inline TwoQubitState experiment_state(const RunConfig& rc) {
    return states::averaged_channel(states::add_white_noise(states::bell_phi_plus(), rc.session.source_noise),
                                    rc.session.eve);
}

inline std::string session_summary(const protocol::SessionTranscript& t) {
    std::ostringstream os;
    os << "intervals: " << t.records.size() << "\n"
       << "kept: " << t.kept() << "\n"
       << "sifted: " << t.sifted_alice.size() << "\n"
       << "agreement_percent: " << detail::fixed(100.0 * t.sifted_agreement(), 4) << "\n"
       << "sifted_qber: " << detail::fixed(t.sifted_error_rate(), 6) << "\n"
       << "qber_estimate: " << detail::fixed(t.qber_estimate, 6) << "\n"
       << "status: " << (t.aborted ? "aborted (" + t.abort_reason + ")" : std::string("ok")) << "\n"
       << "leaked_bits: " << t.leaked_bits << "\n"
       << "key_bits: " << t.final_key.size() << "\n";
    return os.str();
}

/// trials.csv, transcript.json, summary.txt. Exit 2 when the session aborts.
inline int cmd_session(const RunConfig& rc, std::ostream& log = std::cout) {
    const auto t = protocol::run_session(rc.session);
    fs::create_directories(rc.out_dir);
    {
        std::ostringstream csv;
        detection::write_records_csv(csv, t.records);
        detail::write_text(rc.out_dir / "trials.csv", csv.str());
    }
    detail::write_text(rc.out_dir / "transcript.json", detail::dump(io::transcript_to_json(t, rc.session.seed)));
    const std::string summary = session_summary(t);
    detail::write_text(rc.out_dir / "summary.txt", summary);
    log << summary;
    return t.aborted ? kAbort : kOk;
}

/// counts.csv, density.json, metrics.json, bars.csv.
inline int cmd_tomo(const RunConfig& rc, std::ostream& log = std::cout) {
    Rng rng(rc.session.seed);
    tomography::Counts counts{};
    if (rc.tomo.counts_file) {
        std::ifstream in(*rc.tomo.counts_file);
        if (!in) throw ConfigError("cannot open counts file " + rc.tomo.counts_file->string());
        counts = io::read_counts_csv(in);
    } else {
        counts = tomography::simulate_counts(experiment_state(rc), rc.tomo.n_per_setting, rng);
    }
    const std::uint64_t bootstrap_seed = rng();

    const TwoQubitState rho = tomography::reconstruct(counts);
    const auto point = tomography::metrics(rho);
    const auto boot = tomography::bootstrap_metrics(counts, rc.tomo.bootstrap_replicas, bootstrap_seed);

    fs::create_directories(rc.out_dir);
    {
        std::ostringstream csv;
        io::write_counts_csv(csv, counts);
        detail::write_text(rc.out_dir / "counts.csv", csv.str());
    }
    detail::write_text(rc.out_dir / "density.json",
                       detail::dump({{"basis", {"HH", "HV", "VH", "VV"}}, {"rho", io::matrix_to_json(rho.rho())}}));
    json metrics = {{"point",
                     {{"tangle", point.tangle.value},
                      {"von_neumann", point.von_neumann.value},
                      {"linear_entropy", point.linear_entropy.value},
                      {"fidelity", point.fidelity.value}}},
                    {"bootstrap", io::metrics_to_json(boot)},
                    {"seed", rc.session.seed}};
    detail::write_text(rc.out_dir / "metrics.json", detail::dump(metrics));
    {
        std::ostringstream csv;
        io::write_bar_csv(csv, rho.rho());
        detail::write_text(rc.out_dir / "bars.csv", csv.str());
    }
    log << "tangle: " << detail::fixed(point.tangle.value, 6) << " +/- " << detail::fixed(boot.tangle.sigma, 6) << "\n"
        << "von_neumann: " << detail::fixed(point.von_neumann.value, 6) << " +/- "
        << detail::fixed(boot.von_neumann.sigma, 6) << "\n"
        << "linear_entropy: " << detail::fixed(point.linear_entropy.value, 6) << " +/- "
        << detail::fixed(boot.linear_entropy.sigma, 6) << "\n"
        << "fidelity: " << detail::fixed(point.fidelity.value, 6) << " +/- " << detail::fixed(boot.fidelity.sigma, 6)
        << "\n";
    return kOk;
}

/// bell.json and bell.csv (one row per correlator); prints S to 6 decimals.
inline int cmd_bell(const RunConfig& rc, std::ostream& log = std::cout) {
    const TwoQubitState s = experiment_state(rc);
    const auto& x = rc.bell_angles;
    struct Row {
        const char* name;
        double alpha, beta, sign;
    };
    const std::array<Row, 4> rows{{{"E(a,b)", x.a, x.b, 1.0},
                                   {"E(a,b')", x.a, x.b_prime, -1.0},
                                   {"E(a',b)", x.a_prime, x.b, 1.0},
                                   {"E(a',b')", x.a_prime, x.b_prime, 1.0}}};
    const double S = tomography::chsh(s, x);

    fs::create_directories(rc.out_dir);
    std::ostringstream csv;
    csv << "correlator,alpha_deg,beta_deg,sign,value\n";
    json table = json::array();
    for (const auto& r : rows) {
        const double e = tomography::correlation(s, r.alpha, r.beta);
        csv << r.name << ',' << io::fmt_double(r.alpha) << ',' << io::fmt_double(r.beta) << ','
            << (r.sign > 0 ? "+1" : "-1") << ',' << io::fmt_double(e) << '\n';
        table.push_back({{"correlator", r.name}, {"alpha_deg", r.alpha}, {"beta_deg", r.beta}, {"value", e}});
    }
    detail::write_text(rc.out_dir / "bell.csv", csv.str());
    detail::write_text(rc.out_dir / "bell.json",
                       detail::dump({{"S", S}, {"S_max", tomography::chsh_max(s)}, {"correlators", table}}));
    log << "S = " << detail::fixed(S, 6) << "\n";
    return kOk;
}

/// Runs a session and pads the configured message with its key; otp.json.
inline int cmd_otp_session(const RunConfig& rc, std::ostream& log = std::cout) {
    const auto t = protocol::run_session(rc.session);
    if (t.aborted) {
        log << "session aborted: " << t.abort_reason << "\n";
        return kAbort;
    }
    const BitString message = BitString::from_text(rc.otp_message);
    const auto enc = otp::encrypt(message, t.final_key);
    const auto dec = otp::decrypt(enc.output, t.final_key);
    fs::create_directories(rc.out_dir);
    detail::write_text(rc.out_dir / "otp.json", detail::dump({{"message_text", rc.otp_message},
                                                              {"key_bits", t.final_key.size()},
                                                              {"ciphertext_hex", enc.output.to_hex()},
                                                              {"key_bits_used", enc.next_offset},
                                                              {"decrypted_text", dec.output.to_text()}}));
    log << "ciphertext: " << enc.output.to_hex() << "\n" << "decrypted: " << dec.output.to_text() << "\n";
    return kOk;
}

inline int run(const RunConfig& rc, std::ostream& log = std::cout) {
    switch (rc.kind) {
        case Kind::Session: return cmd_session(rc, log);
        case Kind::Tomo: return cmd_tomo(rc, log);
        case Kind::Bell: return cmd_bell(rc, log);
        case Kind::Otp: return cmd_otp_session(rc, log);
    }
    return kUsage;
}

/// A key file holds either a session transcript JSON or bare hex.
inline BitString load_key_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open key file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    const json j = json::parse(text, nullptr, false);
    if (!j.is_discarded() && j.is_object()) return io::key_from_transcript(j);
    return BitString::from_hex(io::detail::trim(text));
}

struct OtpArgs {
    bool decrypt = false;
    BitString key;
    std::size_t offset = 0;
    BitString payload;
    bool as_text = false;
};

/// Prints the output as hex (or text with as_text) and the next key offset on a
/// second line.
inline int cmd_otp(const OtpArgs& a, std::ostream& out = std::cout) {
    const auto r = a.decrypt ? otp::decrypt(a.payload, a.key, a.offset) : otp::encrypt(a.payload, a.key, a.offset);
    out << (a.as_text ? r.output.to_text() : r.output.to_hex()) << "\n";
    out << "next_offset: " << r.next_offset << "\n";
    return kOk;
}

}  // namespace qkd::cli
