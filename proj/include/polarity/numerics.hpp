#pragma once

// Dense matrices, activations, seeded randomness and plain SGD.
//
// Everything that consumes randomness goes through SeededRng, which wraps
// std::mt19937_64 (a generator whose output sequence is fixed by the C++
// standard) and derives uniforms from raw 64-bit draws so streams are
// identical across platforms and standard libraries.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <functional>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace polarity {

template <typename Real = double>
class Matrix {
    static_assert(std::is_floating_point_v<Real>);

public:
    using value_type = Real;

    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, Real fill = Real(0))
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<Real> data)
        : rows_(rows), cols_(cols), data_(std::move(data))
    {
        if (data_.size() != rows_ * cols_)
            throw std::invalid_argument("Matrix: data length does not match shape");
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    Real& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    Real operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    std::span<Real> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
    std::span<const Real> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

    std::span<Real> flat() noexcept { return data_; }
    std::span<const Real> flat() const noexcept { return data_; }
    const std::vector<Real>& data() const noexcept { return data_; }

    void fill(Real v) { std::fill(data_.begin(), data_.end(), v); }
    bool same_shape(const Matrix& o) const noexcept { return rows_ == o.rows_ && cols_ == o.cols_; }

    bool all_finite() const
    {
        return std::all_of(data_.begin(), data_.end(), [](Real v) { return std::isfinite(v); });
    }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<Real> data_;
};

using Vector = std::vector<double>;

// ---------------------------------------------------------------------------
// Random numbers

inline std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Derives the seed of the index-th child stream from a base seed.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) noexcept
{
    return splitmix64(splitmix64(base) ^ splitmix64(index + 0x5851f42d4c957f2dULL));
}

class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Unbiased integer in [0, n).
    std::uint64_t below(std::uint64_t n)
    {
        if (n == 0)
            throw std::invalid_argument("SeededRng::below: empty range");
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                    std::numeric_limits<std::uint64_t>::max() % n;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    bool bernoulli(double p) { return uniform() < p; }

    /// Standard normal via Box-Muller (one value per call, no caching).
    double normal()
    {
        double u1 = uniform();
        while (u1 <= 0.0)
            u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    template <typename T>
    void shuffle(std::vector<T>& v)
    {
        for (std::size_t i = v.size(); i > 1; --i)
            std::swap(v[i - 1], v[below(i)]);
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

// ---------------------------------------------------------------------------
// Activations

template <typename Real>
Real sigmoid(Real x) noexcept
{
    // exp() only ever sees a non-positive argument
    if (x >= Real(0))
        return Real(1) / (Real(1) + std::exp(-x));
    const Real e = std::exp(x);
    return e / (Real(1) + e);
}

/// log(sigmoid(x)) without underflow for large |x|.
template <typename Real>
Real log_sigmoid(Real x) noexcept
{
    if (x >= Real(0))
        return -std::log1p(std::exp(-x));
    return x - std::log1p(std::exp(x));
}

template <typename Real>
Real log_sum_exp(std::span<const Real> v)
{
    if (v.empty())
        throw std::invalid_argument("log_sum_exp: empty vector");
    const Real m = *std::max_element(v.begin(), v.end());
    Real s = 0;
    for (Real x : v)
        s += std::exp(x - m);
    return m + std::log(s);
}

template <typename Real>
std::vector<Real> softmax(std::span<const Real> v)
{
    if (v.empty())
        throw std::invalid_argument("softmax: empty vector");
    const Real m = *std::max_element(v.begin(), v.end());
    std::vector<Real> out(v.size());
    Real s = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = std::exp(v[i] - m);
        s += out[i];
    }
    for (Real& x : out)
        x /= s;
    return out;
}

template <typename Real>
std::vector<Real> softmax(const std::vector<Real>& v)
{
    return softmax(std::span<const Real>(v));
}

// ---------------------------------------------------------------------------
// Small BLAS-like kernels. Loops are written with a fixed summation order so
// results do not depend on vectorization decisions.

template <typename A, typename B>
auto dot(const A& a, const B& b) noexcept
{
    using Real = std::remove_cvref_t<decltype(a[0])>;
    const std::size_t n = std::size(a);
    Real s0 = 0, s1 = 0, s2 = 0, s3 = 0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    for (; i < n; ++i)
        s0 += a[i] * b[i];
    return (s0 + s1) + (s2 + s3);
}

/// y += alpha * x
template <typename Real, typename X, typename Y>
void axpy(Real alpha, const X& x, Y&& y) noexcept
{
    const std::size_t n = std::size(x);
    for (std::size_t i = 0; i < n; ++i)
        y[i] += alpha * x[i];
}

/// y = M x (+ y if accumulate)
template <typename Real, typename X, typename Y>
void gemv(const Matrix<Real>& m, const X& x, Y&& y, bool accumulate = false)
{
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const Real v = dot(m.row(r), x);
        y[r] = accumulate ? y[r] + v : v;
    }
}

/// y += M^T x
template <typename Real, typename X, typename Y>
void gemv_t_acc(const Matrix<Real>& m, const X& x, Y&& y)
{
    for (std::size_t r = 0; r < m.rows(); ++r)
        if (x[r] != Real(0))
            axpy(static_cast<Real>(x[r]), m.row(r), y);
}

/// M += a b^T
template <typename Real, typename A, typename B>
void outer_acc(const A& a, const B& b, Matrix<Real>& m)
{
    for (std::size_t r = 0; r < m.rows(); ++r)
        if (a[r] != Real(0))
            axpy(static_cast<Real>(a[r]), b, m.row(r));
}

template <typename A>
auto squared_norm(const A& v) noexcept
{
    return dot(v, v);
}

template <typename A, typename B>
auto cosine(const A& a, const B& b) noexcept
{
    using Real = std::remove_cvref_t<decltype(a[0])>;
    const Real na = std::sqrt(dot(a, a));
    const Real nb = std::sqrt(dot(b, b));
    if (na == Real(0) || nb == Real(0))
        return Real(0);
    return dot(a, b) / (na * nb);
}

// ---------------------------------------------------------------------------
// Initialization and optimization

/// Uniform Xavier/Glorot initialization with bound sqrt(6 / (rows + cols)).
template <typename Real = double>
Matrix<Real> xavier_init(std::size_t rows, std::size_t cols, SeededRng& rng)
{
    if (rows == 0 || cols == 0)
        throw std::invalid_argument("xavier_init: rows and cols must be >= 1");
    const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
    Matrix<Real> m(rows, cols);
    for (Real& v : m.flat())
        v = static_cast<Real>(rng.uniform(-bound, bound));
    return m;
}

template <typename Real = double>
Matrix<Real> uniform_init(std::size_t rows, std::size_t cols, double bound, SeededRng& rng)
{
    Matrix<Real> m(rows, cols);
    for (Real& v : m.flat())
        v = static_cast<Real>(rng.uniform(-bound, bound));
    return m;
}

template <typename Real>
void sgd_step(Matrix<Real>& param, const Matrix<Real>& grad, Real lr)
{
    if (!param.same_shape(grad))
        throw std::invalid_argument("sgd_step: parameter and gradient shapes differ");
    if (!(lr > Real(0)))
        throw std::invalid_argument("sgd_step: learning rate must be positive");
    axpy(-lr, grad.flat(), param.flat());
}

/// Central-difference gradient of f at x.
inline Vector finite_difference_gradient(const std::function<double(std::span<const double>)>& f,
                                         std::span<const double> x, double eps = 1e-5)
{
    if (!(eps > 0))
        throw std::invalid_argument("finite_difference_gradient: eps must be positive");
    Vector probe(x.begin(), x.end());
    Vector grad(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double orig = probe[i];
        probe[i] = orig + eps;
        const double fp = f(probe);
        probe[i] = orig - eps;
        const double fm = f(probe);
        probe[i] = orig;
        if (!std::isfinite(fp) || !std::isfinite(fm))
            throw std::domain_error("finite_difference_gradient: non-finite function value");
        grad[i] = (fp - fm) / (2 * eps);
    }
    return grad;
}

/// Relative error between two gradient vectors:
/// ||a - b|| / max(||a||, ||b||), and 0 when both norms are below `floor`.
inline double gradient_relative_error(std::span<const double> a, std::span<const double> b,
                                      double floor = 1e-10)
{
    if (a.size() != b.size())
        throw std::invalid_argument("gradient_relative_error: length mismatch");
    double diff = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff += (a[i] - b[i]) * (a[i] - b[i]);
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    const double denom = std::sqrt(std::max(na, nb));
    if (denom < floor)
        return 0.0;
    return std::sqrt(diff) / denom;
}

// ---------------------------------------------------------------------------
// Serialization
//
// Binary layout, all little-endian:
//   magic  "PPMX"  (4 bytes)
//   rows   uint64
//   cols   uint64
//   dtype  uint32  (1 = float32, 2 = float64)
//   payload rows*cols values, row-major

namespace detail {

inline void write_le(std::ostream& os, std::uint64_t v, int bytes)
{
    char buf[8];
    for (int i = 0; i < bytes; ++i)
        buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    os.write(buf, bytes);
}

inline std::uint64_t read_le(std::istream& is, int bytes)
{
    unsigned char buf[8];
    if (!is.read(reinterpret_cast<char*>(buf), bytes))
        throw std::runtime_error("matrix stream truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i)
        v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
}

}  // namespace detail

enum class DType : std::uint32_t { f32 = 1, f64 = 2 };

template <typename Real>
constexpr DType dtype_of() noexcept
{
    return sizeof(Real) == 4 ? DType::f32 : DType::f64;
}

template <typename Real>
void write_matrix(std::ostream& os, const Matrix<Real>& m)
{
    os.write("PPMX", 4);
    detail::write_le(os, m.rows(), 8);
    detail::write_le(os, m.cols(), 8);
    detail::write_le(os, static_cast<std::uint32_t>(dtype_of<Real>()), 4);
    for (Real v : m.flat()) {
        if constexpr (sizeof(Real) == 4)
            detail::write_le(os, std::bit_cast<std::uint32_t>(v), 4);
        else
            detail::write_le(os, std::bit_cast<std::uint64_t>(v), 8);
    }
}

/// Reads a matrix stored in either dtype, converting to Real.
template <typename Real = double>
Matrix<Real> read_matrix(std::istream& is)
{
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, "PPMX", 4) != 0)
        throw std::runtime_error("matrix stream: bad magic");
    const auto rows = detail::read_le(is, 8);
    const auto cols = detail::read_le(is, 8);
    const auto dtype = static_cast<DType>(detail::read_le(is, 4));
    if (dtype != DType::f32 && dtype != DType::f64)
        throw std::runtime_error("matrix stream: unknown dtype");
    if (cols != 0 && rows > (std::uint64_t(1) << 40) / cols)
        throw std::runtime_error("matrix stream: implausible shape");
    Matrix<Real> m(rows, cols);
    for (Real& v : m.flat()) {
        if (dtype == DType::f32)
            v = static_cast<Real>(std::bit_cast<float>(static_cast<std::uint32_t>(detail::read_le(is, 4))));
        else
            v = static_cast<Real>(std::bit_cast<double>(detail::read_le(is, 8)));
    }
    return m;
}

/// Text export for inspection: one row per line, tab separated.
template <typename Real>
void write_matrix_tsv(std::ostream& os, const Matrix<Real>& m)
{
    std::ostringstream line;
    line.precision(std::numeric_limits<Real>::max_digits10);
    for (std::size_t r = 0; r < m.rows(); ++r) {
        line.str({});
        for (std::size_t c = 0; c < m.cols(); ++c) {
            if (c)
                line << '\t';
            line << m(r, c);
        }
        os << line.str() << '\n';
    }
}

}  // namespace polarity
