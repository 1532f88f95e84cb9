// io.hpp - file formats: matrix JSON, counts CSV, bar data, transcripts.

#pragma once

#include <array>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "qkd/protocol.hpp"
#include "qkd/qmath.hpp"
#include "qkd/tomography.hpp"

namespace qkd::io {

using nlohmann::json;

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Row-major array of rows, each entry a [re, im] pair.
template <std::size_t N>
json matrix_to_json(const Matrix<N>& m) {
    json rows = json::array();
    for (std::size_t i = 0; i < N; ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < N; ++j) row.push_back({m(i, j).real(), m(i, j).imag()});
        rows.push_back(std::move(row));
    }
    return rows;
}

template <std::size_t N>
Matrix<N> matrix_from_json(const json& j) {
    if (!j.is_array() || j.size() != N) throw FormatError("matrix JSON: expected " + std::to_string(N) + " rows");
    Matrix<N> m;
    for (std::size_t i = 0; i < N; ++i) {
        const auto& row = j[i];
        if (!row.is_array() || row.size() != N) throw FormatError("matrix JSON: bad row length");
        for (std::size_t k = 0; k < N; ++k) {
            const auto& z = row[k];
            if (!z.is_array() || z.size() != 2 || !z[0].is_number() || !z[1].is_number())
                throw FormatError("matrix JSON: entries must be [re, im] pairs");
            m(i, k) = Complex(z[0].get<double>(), z[1].get<double>());
        }
    }
    return m;
}

/// Fixed %.10g formatting so text outputs are reproducible.
inline std::string fmt_double(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

namespace detail {

inline std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

}  // namespace detail

/// CSV with header `setting_a,setting_b,count` and one row per schedule setting
/// (any order). Returned counts follow the schedule order.
inline tomography::Counts read_counts_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw FormatError("counts CSV: empty input");
    if (detail::split_csv(line) != std::vector<std::string>{"setting_a", "setting_b", "count"})
        throw FormatError("counts CSV: header must be setting_a,setting_b,count");

    std::map<std::string, double> seen;
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto cells = detail::split_csv(line);
        const std::string where = "counts CSV line " + std::to_string(line_no) + ": ";
        if (cells.size() != 3) throw FormatError(where + "expected 3 fields");
        if (cells[0].size() != 1 || cells[1].size() != 1) throw FormatError(where + "settings are single letters");
        try {
            optics::pol_state_from_char(cells[0][0]);
            optics::pol_state_from_char(cells[1][0]);
        } catch (const std::invalid_argument& e) {
            throw FormatError(where + e.what());
        }
        double count = 0.0;
        std::size_t used = 0;
        try {
            count = std::stod(cells[2], &used);
        } catch (const std::exception&) {
            throw FormatError(where + "count is not a number");
        }
        if (used != cells[2].size() || !(count >= 0.0)) throw FormatError(where + "count must be a nonnegative number");
        const std::string key = cells[0] + cells[1];
        if (!seen.emplace(key, count).second) throw FormatError(where + "duplicate setting " + key);
    }

    tomography::Counts counts{};
    for (std::size_t k = 0; k < tomography::kSettings; ++k) {
        const auto label = tomography::setting_label(tomography::kSchedule[k]);
        const auto it = seen.find(label);
        if (it == seen.end()) throw FormatError("counts CSV: missing setting " + label);
        counts[k] = it->second;
        seen.erase(it);
    }
    if (!seen.empty()) throw FormatError("counts CSV: setting " + seen.begin()->first + " is not in the schedule");
    return counts;
}

inline void write_counts_csv(std::ostream& os, const tomography::Counts& counts) {
    os << "setting_a,setting_b,count\n";
    for (std::size_t k = 0; k < tomography::kSettings; ++k)
        os << optics::to_char(tomography::kSchedule[k].first) << ','
           << optics::to_char(tomography::kSchedule[k].second) << ',' << fmt_double(counts[k]) << '\n';
}

inline constexpr std::array<const char*, 4> kProductLabels{"HH", "HV", "VH", "VV"};

/// Real parts of rho as (row_label, col_label, real_part), one line per entry.
inline void write_bar_csv(std::ostream& os, const CMat4& rho) {
    os << "row_label,col_label,real_part\n";
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j)
            os << kProductLabels[i] << ',' << kProductLabels[j] << ',' << fmt_double(rho(i, j).real()) << '\n';
}

inline json estimate_to_json(const tomography::Estimate& e) { return {{"value", e.value}, {"sigma", e.sigma}}; }

inline json metrics_to_json(const tomography::StateMetrics& m) {
    return {{"tangle", estimate_to_json(m.tangle)},
            {"von_neumann", estimate_to_json(m.von_neumann)},
            {"linear_entropy", estimate_to_json(m.linear_entropy)},
            {"fidelity", estimate_to_json(m.fidelity)},
            {"replicas", m.replicas},
            {"failed_replicas", m.failed_replicas},
            {"clamp_events", m.clamp_events}};
}

inline json transcript_to_json(const protocol::SessionTranscript& t, std::uint64_t seed) {
    return {{"seed", seed},
            {"n_intervals", t.records.size()},
            {"n_kept", t.kept()},
            {"n_sifted", t.sifted_alice.size()},
            {"sifted_errors", t.sifted_errors},
            {"sifted_agreement", t.sifted_agreement()},
            {"qber_estimate", t.qber_estimate},
            {"qber_sample_size", t.qber_sample_size},
            {"aborted", t.aborted},
            {"abort_reason", t.abort_reason},
            {"leaked_bits", t.leaked_bits},
            {"reconciled", t.reconciled},
            {"keys_match", t.keys_match},
            {"final_key_bits", t.final_key.size()},
            {"final_key_hex", t.final_key.to_hex()},
            {"sifted_alice", t.sifted_alice.to_binary()},
            {"sifted_bob", t.sifted_bob.to_binary()}};
}

/// Final key of a transcript JSON, trimmed to its recorded bit length.
inline BitString key_from_transcript(const json& j) {
    if (!j.contains("final_key_hex") || !j.contains("final_key_bits"))
        throw FormatError("transcript: missing final_key_hex/final_key_bits");
    const BitString padded = BitString::from_hex(j.at("final_key_hex").get<std::string>());
    const auto bits = j.at("final_key_bits").get<std::size_t>();
    if (bits > padded.size()) throw FormatError("transcript: final_key_bits exceeds the hex payload");
    return padded.slice(0, bits);
}

}  // namespace qkd::io
