// privacy.hpp - privacy amplification by Toeplitz hashing.

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "qkd/bitstring.hpp"

namespace qkd::protocol {

/// Binary entropy in bits, h2(0) = h2(1) = 0.
inline double h2(double x) {
    if (x <= 0.0 || x >= 1.0) return 0.0;
    return -x * std::log2(x) - (1.0 - x) * std::log2(1.0 - x);
}

/// floor(n (1 - h2(qber)) - leaked - safety), clamped at zero.
inline std::size_t secure_length(std::size_t n, double qber, std::size_t leaked_bits, std::size_t safety_bits) {
    const double m = std::floor(static_cast<double>(n) * (1.0 - h2(qber)) - static_cast<double>(leaked_bits) -
                                static_cast<double>(safety_bits));
    return m > 0.0 ? static_cast<std::size_t>(m) : 0;
}

/// Diagonal bits r[0 .. n+m-2] of the Toeplitz matrix T[i][j] = r[i - j + n - 1].
/// Drawn from mt19937_64(seed), 64 bits per word, least significant bit first.
inline std::vector<std::uint8_t> toeplitz_diagonals(std::size_t n, std::size_t m, std::uint64_t seed) {
    std::vector<std::uint8_t> r;
    if (n == 0 || m == 0) return r;
    const std::size_t count = n + m - 1;
    r.reserve(count);
    std::mt19937_64 gen(seed);
    while (r.size() < count) {
        const std::uint64_t word = gen();
        for (int k = 0; k < 64 && r.size() < count; ++k) r.push_back(static_cast<std::uint8_t>((word >> k) & 1u));
    }
    return r;
}

/// out = T key (mod 2) with T an m x n Toeplitz matrix.
inline BitString toeplitz_hash(const BitString& key, std::size_t m, std::uint64_t seed) {
    const std::size_t n = key.size();
    const auto r = toeplitz_diagonals(n, m, seed);
    BitString out(m);
    for (std::size_t i = 0; i < m; ++i) {
        int acc = 0;
        // T[i][j] = r[i - j + n - 1]; j runs over the key.
        const std::size_t base = i + n - 1;
        for (std::size_t j = 0; j < n; ++j) acc ^= r[base - j] & key[j];
        out.set(i, acc != 0);
    }
    return out;
}

inline BitString privacy_amplify(const BitString& key, double qber, std::size_t leaked_bits,
                                 std::size_t safety_bits, std::uint64_t seed) {
    if (key.empty()) throw std::invalid_argument("privacy_amplify: key is empty");
    const std::size_t m = secure_length(key.size(), qber, leaked_bits, safety_bits);
    if (m == 0) return {};
    return toeplitz_hash(key, m, seed);
}

}  // namespace qkd::protocol
