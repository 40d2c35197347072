#pragma once

// Dense row-major f64 tensors of rank 1 or 2. Vectors are stored as n x 1
// columns. All training math runs in double; only checkpoint payloads are
// narrowed to f32.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mhgin {

struct Tensor {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Tensor() = default;
    Tensor(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}
    Tensor(int r, int c, std::vector<double> d) : rows(r), cols(c), data(std::move(d)) {
        if (data.size() != static_cast<std::size_t>(r) * c)
            throw std::invalid_argument("tensor: data length " + std::to_string(data.size()) +
                                        " does not match shape " + std::to_string(r) + "x" +
                                        std::to_string(c));
    }

    static Tensor zeros(int r, int c = 1) { return Tensor(r, c); }
    static Tensor scalar(double v) {
        Tensor t(1, 1);
        t.data[0] = v;
        return t;
    }
    static Tensor column(std::vector<double> v) {
        const int n = static_cast<int>(v.size());
        return Tensor(n, 1, std::move(v));
    }

    int size() const { return rows * cols; }
    bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }
    std::string shape_str() const { return std::to_string(rows) + "x" + std::to_string(cols); }

    double& at(int i, int j) { return data[static_cast<std::size_t>(i) * cols + j]; }
    double at(int i, int j) const { return data[static_cast<std::size_t>(i) * cols + j]; }
    double& operator[](int i) { return data[i]; }
    double operator[](int i) const { return data[i]; }

    bool empty() const { return data.empty(); }
};

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.same_shape(b))
        throw std::invalid_argument(std::string(op) + ": shape mismatch " + a.shape_str() +
                                    " vs " + b.shape_str());
}

/// c = a * b for row-major dense matrices, optionally transposing either side.
/// Accumulates into `out` when `accumulate` is set (used by backward rules).
inline void matmul_into(Tensor& out, const Tensor& a, const Tensor& b, bool trans_a,
                        bool trans_b, bool accumulate) {
    const int m = trans_a ? a.cols : a.rows;
    const int k = trans_a ? a.rows : a.cols;
    const int kb = trans_b ? b.cols : b.rows;
    const int n = trans_b ? b.rows : b.cols;
    if (k != kb)
        throw std::invalid_argument("matmul: inner dimension mismatch " + a.shape_str() +
                                    (trans_a ? "^T" : "") + " * " + b.shape_str() +
                                    (trans_b ? "^T" : ""));
    if (out.rows != m || out.cols != n) {
        out = Tensor(m, n);
    } else if (!accumulate) {
        std::fill(out.data.begin(), out.data.end(), 0.0);
    }
    // i-k-j loop keeps the inner access contiguous for the common NN case.
    for (int i = 0; i < m; ++i) {
        double* orow = &out.data[static_cast<std::size_t>(i) * n];
        for (int kk = 0; kk < k; ++kk) {
            const double av = trans_a ? a.at(kk, i) : a.at(i, kk);
            if (av == 0.0) continue;
            if (trans_b) {
                for (int j = 0; j < n; ++j) orow[j] += av * b.at(j, kk);
            } else {
                const double* brow = &b.data[static_cast<std::size_t>(kk) * n];
                for (int j = 0; j < n; ++j) orow[j] += av * brow[j];
            }
        }
    }
}

inline Tensor matmul(const Tensor& a, const Tensor& b, bool trans_a = false,
                     bool trans_b = false) {
    Tensor out;
    matmul_into(out, a, b, trans_a, trans_b, false);
    return out;
}

inline double frobenius_norm(const Tensor& t) {
    double s = 0.0;
    for (double v : t.data) s += v * v;
    return std::sqrt(s);
}

} // namespace mhgin
