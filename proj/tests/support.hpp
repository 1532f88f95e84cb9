// Shared generators and brute-force oracles for the test suite.
#pragma once

#include <cmath>
#include <complex>
#include <random>

#include "qkd/qmath.hpp"
#include "qkd/states.hpp"

namespace testing_support {

using qkd::CMat2;
using qkd::CMat4;
using qkd::Complex;
using qkd::CVec2;
using qkd::CVec4;

inline Complex gaussian_complex(std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    return {g(rng), g(rng)};
}

template <std::size_t N>
qkd::Matrix<N> random_matrix(std::mt19937_64& rng) {
    qkd::Matrix<N> m;
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j) m(i, j) = gaussian_complex(rng);
    return m;
}

template <std::size_t N>
qkd::Matrix<N> random_hermitian(std::mt19937_64& rng) {
    const auto g = random_matrix<N>(rng);
    return 0.5 * (g + g.adjoint());
}

/// Ginibre ensemble: G G^dagger / Tr, optionally rank-deficient.
template <std::size_t N>
qkd::Matrix<N> random_density(std::mt19937_64& rng, std::size_t rank = N) {
    qkd::Matrix<N> g;
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < rank; ++j) g(i, j) = gaussian_complex(rng);
    qkd::Matrix<N> rho = g * g.adjoint();
    return (1.0 / rho.trace().real()) * rho;
}

inline CVec4 random_ket4(std::mt19937_64& rng) {
    CVec4 v;
    double n = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
        v[i] = gaussian_complex(rng);
        n += std::norm(v[i]);
    }
    return (1.0 / std::sqrt(n)) * v;
}

inline qkd::TwoQubitState random_state(std::mt19937_64& rng) {
    std::uniform_int_distribution<std::size_t> rank(1, 4);
    return qkd::TwoQubitState(random_density<4>(rng, rank(rng)));
}

/// Entry-wise builder for 4x4 real matrices in HH, HV, VH, VV order.
inline CMat4 real4(const double (&e)[4][4]) {
    CMat4 m;
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) m(i, j) = e[i][j];
    return m;
}

/// (|HH><HH| + |VV><VV|)/2: the Bell pair after full HV dephasing.
inline CMat4 dephased_hv() {
    return real4({{0.5, 0, 0, 0}, {0, 0, 0, 0}, {0, 0, 0, 0}, {0, 0, 0, 0.5}});
}

inline CMat4 bell_matrix() {
    return real4({{0.5, 0, 0, 0.5}, {0, 0, 0, 0}, {0, 0, 0, 0}, {0.5, 0, 0, 0.5}});
}

/// Binomial standard deviation of a proportion.
inline double binomial_sigma(double p, double n) { return std::sqrt(p * (1.0 - p) / n); }

}  // namespace testing_support
