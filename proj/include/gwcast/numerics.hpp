#pragma once

// Dense row-major matrix/vector kernels and the seeded generator shared by
// all model code. Everything is 64-bit float; sizes here are at most a few
// hundred per side, so no attempt is made at blocked or vectorized kernels.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace gwcast {

using Vector = std::vector<double>;

class Matrix {
public:
    Matrix() = default;

    Matrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {
        if (rows == 0 || cols == 0)
            throw std::invalid_argument("Matrix: dimensions must be positive");
    }

    Matrix(std::size_t rows, std::size_t cols, Vector data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (rows == 0 || cols == 0)
            throw std::invalid_argument("Matrix: dimensions must be positive");
        if (data_.size() != rows * cols)
            throw std::invalid_argument("Matrix: data length " +
                                        std::to_string(data_.size()) +
                                        " does not match " + shape_str());
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    Vector& data() { return data_; }
    const Vector& data() const { return data_; }

    std::string shape_str() const {
        return std::to_string(rows_) + "x" + std::to_string(cols_);
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    Vector data_;
};

inline Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows())
        throw std::invalid_argument("matmul: incompatible shapes " + a.shape_str() +
                                    " * " + b.shape_str());
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            for (std::size_t j = 0; j < b.cols(); ++j)
                out(i, j) += aik * b(k, j);
        }
    return out;
}

// y = m * x
inline Vector matvec(const Matrix& m, const Vector& x) {
    if (m.cols() != x.size())
        throw std::invalid_argument("matvec: incompatible shapes " + m.shape_str() +
                                    " * " + std::to_string(x.size()));
    Vector y(m.rows(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < m.cols(); ++j)
            acc += m(i, j) * x[j];
        y[i] = acc;
    }
    return y;
}

// y += m^T * x, with x of length m.rows()
inline void add_matvec_transposed(const Matrix& m, const Vector& x, Vector& y) {
    if (m.rows() != x.size() || m.cols() != y.size())
        throw std::invalid_argument("add_matvec_transposed: incompatible shapes " +
                                    m.shape_str() + "^T * " + std::to_string(x.size()));
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const double xi = x[i];
        for (std::size_t j = 0; j < m.cols(); ++j)
            y[j] += m(i, j) * xi;
    }
}

// m += a * b^T (outer product accumulate)
inline void add_outer(Matrix& m, const Vector& a, const Vector& b) {
    if (m.rows() != a.size() || m.cols() != b.size())
        throw std::invalid_argument("add_outer: incompatible shapes " + m.shape_str());
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double ai = a[i];
        for (std::size_t j = 0; j < b.size(); ++j)
            m(i, j) += ai * b[j];
    }
}

// Numerically stable logistic function; never overflows for finite x.
inline double sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

inline Vector tanh_elem(const Vector& v) {
    Vector out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        out[i] = std::tanh(v[i]);
    return out;
}

inline bool all_finite(const Vector& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

inline bool all_finite(const Matrix& m) { return all_finite(m.data()); }

// xoshiro256++ seeded through splitmix64. Fixed algorithm so that the same
// seed yields the same stream on every platform.
class Prng {
public:
    explicit Prng(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& word : state_)
            word = splitmix64(sm);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // uniform in [0, 1), 53 bits of precision
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * next_double();
    }

    // Box-Muller; consumes exactly two draws per call.
    double gaussian(double mean, double stddev) {
        const double u1 = 1.0 - next_double();  // (0, 1]
        const double u2 = next_double();
        const double r = std::sqrt(-2.0 * std::log(u1));
        return mean + stddev * r * std::cos(6.283185307179586476925286766559 * u2);
    }

    double exponential(double mean) {
        const double u = 1.0 - next_double();  // (0, 1]
        return -mean * std::log(u);
    }

private:
    static std::uint64_t splitmix64(std::uint64_t& x) {
        x += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = x;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t state_[4];
};

// Entries i.i.d. uniform in [-scale, +scale], consuming the prng row by row.
inline Matrix uniform_init(Prng& prng, std::size_t rows, std::size_t cols, double scale) {
    if (scale <= 0.0)
        throw std::invalid_argument("uniform_init: scale must be positive");
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows * cols; ++i)
        m.data()[i] = prng.uniform(-scale, scale);
    return m;
}

}  // namespace gwcast
