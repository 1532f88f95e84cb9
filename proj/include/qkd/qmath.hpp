// qmath.hpp - small dense complex linear algebra for one- and two-qubit objects.
//
// Two-qubit operators use the fixed product-basis order HH, HV, VH, VV
// (index 2*i + k for photon-1 state i and photon-2 state k, H = 0, V = 1).
// Every module in the library relies on that layout.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>

namespace qkd {

using Complex = std::complex<double>;

/// Thrown when a matrix fails a precondition (Hermiticity, density invariants).
class LinalgError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

namespace tol {
inline constexpr double kHermitian = 1e-10;
inline constexpr double kTrace = 1e-10;
inline constexpr double kNegativeEigen = 1e-8;
inline constexpr double kUnitNorm = 1e-12;
}  // namespace tol

template <std::size_t N>
class Vector {
public:
    constexpr Vector() = default;
    constexpr explicit Vector(const std::array<Complex, N>& c) : c_(c) {}

    static constexpr std::size_t size() { return N; }

    constexpr Complex& operator[](std::size_t i) { return c_[i]; }
    constexpr const Complex& operator[](std::size_t i) const { return c_[i]; }

    double norm2() const {
        double s = 0.0;
        for (const auto& z : c_) s += std::norm(z);
        return s;
    }

    friend Vector operator+(Vector a, const Vector& b) {
        for (std::size_t i = 0; i < N; ++i) a[i] += b[i];
        return a;
    }
    friend Vector operator-(Vector a, const Vector& b) {
        for (std::size_t i = 0; i < N; ++i) a[i] -= b[i];
        return a;
    }
    friend Vector operator*(Complex s, Vector a) {
        for (auto& z : a.c_) z *= s;
        return a;
    }

private:
    std::array<Complex, N> c_{};
};

/// <a|b>, conjugate-linear in the first argument.
template <std::size_t N>
Complex inner(const Vector<N>& a, const Vector<N>& b) {
    Complex s{};
    for (std::size_t i = 0; i < N; ++i) s += std::conj(a[i]) * b[i];
    return s;
}

/// |<a|b>|^2; the only state comparison that ignores global phase.
template <std::size_t N>
double overlap(const Vector<N>& a, const Vector<N>& b) {
    return std::norm(inner(a, b));
}

template <std::size_t N>
class Matrix {
public:
    constexpr Matrix() = default;

    static constexpr std::size_t dim() { return N; }

    static Matrix identity() {
        Matrix m;
        for (std::size_t i = 0; i < N; ++i) m(i, i) = 1.0;
        return m;
    }

    static Matrix diagonal(const std::array<double, N>& d) {
        Matrix m;
        for (std::size_t i = 0; i < N; ++i) m(i, i) = d[i];
        return m;
    }

    /// |v><v|
    static Matrix outer(const Vector<N>& v) { return outer(v, v); }

    /// |a><b|
    static Matrix outer(const Vector<N>& a, const Vector<N>& b) {
        Matrix m;
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t j = 0; j < N; ++j) m(i, j) = a[i] * std::conj(b[j]);
        return m;
    }

    Complex& operator()(std::size_t r, std::size_t c) { return e_[r * N + c]; }
    const Complex& operator()(std::size_t r, std::size_t c) const { return e_[r * N + c]; }

    Matrix adjoint() const {
        Matrix m;
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t j = 0; j < N; ++j) m(i, j) = std::conj((*this)(j, i));
        return m;
    }

    Matrix conjugate() const {
        Matrix m;
        for (std::size_t k = 0; k < N * N; ++k) m.e_[k] = std::conj(e_[k]);
        return m;
    }

    Complex trace() const {
        Complex t{};
        for (std::size_t i = 0; i < N; ++i) t += (*this)(i, i);
        return t;
    }

    Matrix& operator+=(const Matrix& o) {
        for (std::size_t k = 0; k < N * N; ++k) e_[k] += o.e_[k];
        return *this;
    }
    Matrix& operator-=(const Matrix& o) {
        for (std::size_t k = 0; k < N * N; ++k) e_[k] -= o.e_[k];
        return *this;
    }
    Matrix& operator*=(Complex s) {
        for (auto& z : e_) z *= s;
        return *this;
    }

    friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
    friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
    friend Matrix operator*(Complex s, Matrix a) { return a *= s; }
    friend Matrix operator*(Matrix a, Complex s) { return a *= s; }

    friend Matrix operator*(const Matrix& a, const Matrix& b) {
        Matrix m;
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t k = 0; k < N; ++k) {
                const Complex aik = a(i, k);
                if (aik == Complex{}) continue;
                for (std::size_t j = 0; j < N; ++j) m(i, j) += aik * b(k, j);
            }
        return m;
    }

    friend Vector<N> operator*(const Matrix& a, const Vector<N>& v) {
        Vector<N> out;
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t j = 0; j < N; ++j) out[i] += a(i, j) * v[j];
        return out;
    }

private:
    std::array<Complex, N * N> e_{};
};

using CVec2 = Vector<2>;
using CVec4 = Vector<4>;
using CMat2 = Matrix<2>;
using CMat4 = Matrix<4>;

/// Largest absolute entry of a - b.
template <std::size_t N>
double max_abs_diff(const Matrix<N>& a, const Matrix<N>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j) m = std::max(m, std::abs(a(i, j) - b(i, j)));
    return m;
}

template <std::size_t N>
double frobenius_diff(const Matrix<N>& a, const Matrix<N>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j) s += std::norm(a(i, j) - b(i, j));
    return std::sqrt(s);
}

template <std::size_t N>
bool is_hermitian(const Matrix<N>& m, double tolerance = tol::kHermitian) {
    return max_abs_diff(m, m.adjoint()) < tolerance;
}

/// Tr[a b] without forming the product.
template <std::size_t N>
Complex trace_product(const Matrix<N>& a, const Matrix<N>& b) {
    Complex t{};
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t k = 0; k < N; ++k) t += a(i, k) * b(k, i);
    return t;
}

/// (a (x) b)[2i+k, 2j+l] = a[i,j] * b[k,l].
inline CMat4 tensor(const CMat2& a, const CMat2& b) {
    CMat4 m;
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j)
            for (std::size_t k = 0; k < 2; ++k)
                for (std::size_t l = 0; l < 2; ++l) m(2 * i + k, 2 * j + l) = a(i, j) * b(k, l);
    return m;
}

inline CVec4 tensor(const CVec2& a, const CVec2& b) {
    CVec4 v;
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t k = 0; k < 2; ++k) v[2 * i + k] = a[i] * b[k];
    return v;
}

// ---------------------------------------------------------------------------
// Hermitian eigendecomposition
// ---------------------------------------------------------------------------

template <std::size_t N>
struct EigenSystem {
    std::array<double, N> values{};   // descending
    std::array<Vector<N>, N> vectors;  // vectors[k] belongs to values[k]

    Matrix<N> reconstruct() const {
        Matrix<N> m;
        for (std::size_t k = 0; k < N; ++k) m += values[k] * Matrix<N>::outer(vectors[k]);
        return m;
    }
};

namespace detail {

template <std::size_t N>
double off_diagonal_norm(const Matrix<N>& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j)
            if (i != j) s += std::norm(a(i, j));
    return std::sqrt(s);
}

}  // namespace detail

/// Cyclic complex Jacobi. Each rotation first removes the phase of the pivot,
/// then applies the real symmetric Jacobi rotation to the (p, q) plane.
template <std::size_t N>
EigenSystem<N> herm_eig(const Matrix<N>& m) {
    if (!is_hermitian(m)) throw LinalgError("herm_eig: matrix is not Hermitian");

    // Symmetrize so that rounding noise in the input cannot bias the result.
    Matrix<N> a = 0.5 * (m + m.adjoint());
    Matrix<N> v = Matrix<N>::identity();

    double scale = 0.0;
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j) scale = std::max(scale, std::abs(a(i, j)));
    const double target = 1e-15 * std::max(scale, 1e-300);

    for (int sweep = 0; sweep < 100 && detail::off_diagonal_norm(a) > target; ++sweep) {
        for (std::size_t p = 0; p + 1 < N; ++p) {
            for (std::size_t q = p + 1; q < N; ++q) {
                const Complex g = a(p, q);
                const double mag = std::abs(g);
                if (mag <= 1e-300) continue;
                const Complex phase = g / mag;  // e^{i phi}

                const double app = a(p, p).real();
                const double aqq = a(q, q).real();
                const double tau = (aqq - app) / (2.0 * mag);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;

                // Columns p, q of the unitary J = D * R, D = diag(.., 1, .., e^{-i phi}, ..).
                // J(p,p) = c, J(p,q) = s, J(q,p) = -s e^{-i phi}, J(q,q) = c e^{-i phi}.
                const Complex jpp = c;
                const Complex jpq = s;
                const Complex jqp = -s * std::conj(phase);
                const Complex jqq = c * std::conj(phase);

                // a <- a J
                for (std::size_t k = 0; k < N; ++k) {
                    const Complex akp = a(k, p);
                    const Complex akq = a(k, q);
                    a(k, p) = akp * jpp + akq * jqp;
                    a(k, q) = akp * jpq + akq * jqq;
                }
                // a <- J^dagger a
                for (std::size_t k = 0; k < N; ++k) {
                    const Complex apk = a(p, k);
                    const Complex aqk = a(q, k);
                    a(p, k) = std::conj(jpp) * apk + std::conj(jqp) * aqk;
                    a(q, k) = std::conj(jpq) * apk + std::conj(jqq) * aqk;
                }
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                a(p, p) = a(p, p).real();
                a(q, q) = a(q, q).real();
                // v <- v J
                for (std::size_t k = 0; k < N; ++k) {
                    const Complex vkp = v(k, p);
                    const Complex vkq = v(k, q);
                    v(k, p) = vkp * jpp + vkq * jqp;
                    v(k, q) = vkp * jpq + vkq * jqq;
                }
            }
        }
    }

    std::array<std::size_t, N> order{};
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return a(x, x).real() > a(y, y).real(); });

    EigenSystem<N> out;
    for (std::size_t k = 0; k < N; ++k) {
        const std::size_t col = order[k];
        out.values[k] = a(col, col).real();
        for (std::size_t r = 0; r < N; ++r) out.vectors[k][r] = v(r, col);
    }
    return out;
}

/// Density invariants: Hermitian, unit trace, eigenvalues >= -1e-8.
template <std::size_t N>
bool is_density(const Matrix<N>& m) {
    if (!is_hermitian(m)) return false;
    const Complex t = m.trace();
    if (std::abs(t.real() - 1.0) > tol::kTrace || std::abs(t.imag()) > tol::kTrace) return false;
    return herm_eig(m).values[N - 1] >= -tol::kNegativeEigen;
}

/// Trace out photon `subsystem` (1 or 2) of a two-qubit density matrix.
inline CMat2 partial_trace(const CMat4& rho, int subsystem) {
    if (subsystem != 1 && subsystem != 2)
        throw std::invalid_argument("partial_trace: subsystem must be 1 or 2");
    if (!is_density(rho)) throw LinalgError("partial_trace: input is not a density matrix");
    CMat2 out;
    for (std::size_t a = 0; a < 2; ++a)
        for (std::size_t b = 0; b < 2; ++b)
            for (std::size_t k = 0; k < 2; ++k) {
                if (subsystem == 2)
                    out(a, b) += rho(2 * a + k, 2 * b + k);
                else
                    out(a, b) += rho(2 * k + a, 2 * k + b);
            }
    return out;
}

/// Clip negative eigenvalues to zero and renormalize the trace.
template <std::size_t N>
Matrix<N> nearest_physical(const Matrix<N>& m) {
    auto eig = herm_eig(m);
    double total = 0.0;
    for (auto& lambda : eig.values) {
        lambda = std::max(lambda, 0.0);
        total += lambda;
    }
    if (total <= 1e-12) throw LinalgError("unphysical reconstruction");
    for (auto& lambda : eig.values) lambda /= total;
    return eig.reconstruct();
}

}  // namespace qkd
