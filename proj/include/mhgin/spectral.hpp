#pragma once

// Dominant-eigenvalue-modulus estimation by power iteration.
//
// Plain power iteration stalls when the dominant eigenvalue is a complex
// pair (typical for random recurrent matrices), so alongside the growth
// ratio we fit x_{k+1} ~ alpha*x_k + beta*x_{k-1} and take the larger root
// modulus of mu^2 - alpha*mu - beta. Whichever estimate stabilizes wins.

#include "mhgin/tensor.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>

namespace mhgin {

struct SpectralEstimate {
    double rho = 0.0;
    int iterations = 0;
    bool converged = false;
    double last_estimates[2] = {0.0, 0.0};
};

namespace detail {

inline double pair_root_modulus(const Tensor& xm1, const Tensor& x0, const Tensor& x1) {
    // Least squares for x1 = alpha*x0 + beta*xm1 (2x2 normal equations).
    double a00 = 0, a01 = 0, a11 = 0, b0 = 0, b1 = 0;
    for (int i = 0; i < x0.size(); ++i) {
        a00 += x0[i] * x0[i];
        a01 += x0[i] * xm1[i];
        a11 += xm1[i] * xm1[i];
        b0 += x0[i] * x1[i];
        b1 += xm1[i] * x1[i];
    }
    const double det = a00 * a11 - a01 * a01;
    if (std::abs(det) < 1e-300) return -1.0;
    const double alpha = (b0 * a11 - b1 * a01) / det;
    const double beta = (a00 * b1 - a01 * b0) / det;
    const std::complex<double> disc = std::sqrt(std::complex<double>(alpha * alpha + 4.0 * beta));
    const double r1 = std::abs((alpha + disc) / 2.0);
    const double r2 = std::abs((alpha - disc) / 2.0);
    return std::max(r1, r2);
}

} // namespace detail

/// Estimates the spectral radius of square matrix `p`.
/// Throws on non-convergence, reporting the last two iterates' estimates.
inline SpectralEstimate spectral_radius(const Tensor& p, double tol = 1e-10,
                                        int max_iters = 10000) {
    if (p.rows != p.cols)
        throw std::invalid_argument("spectral_radius: matrix must be square, got " +
                                    p.shape_str());
    const int n = p.rows;
    SpectralEstimate est;
    if (n == 0) {
        est.converged = true;
        return est;
    }

    Tensor xm1(n, 1), x0(n, 1), x1;
    // Fixed pseudo-random start; deterministic and almost surely not orthogonal
    // to the dominant eigenspace.
    for (int i = 0; i < n; ++i) x0[i] = std::cos(0.7 * (i + 1)) + 0.1;
    double nrm = frobenius_norm(x0);
    for (int i = 0; i < n; ++i) x0[i] /= nrm;

    double prev_estimate = -1.0;
    for (int k = 0; k < max_iters; ++k) {
        matmul_into(x1, p, x0, false, false, false);
        const double growth = frobenius_norm(x1);
        est.iterations = k + 1;
        if (growth < 1e-300) { // reached (numerically) the null space
            est.rho = 0.0;
            est.converged = true;
            return est;
        }

        double estimate = growth;
        if (k >= 1) {
            const double pr = detail::pair_root_modulus(xm1, x0, x1);
            if (pr >= 0.0) estimate = pr;
        }
        est.last_estimates[0] = prev_estimate;
        est.last_estimates[1] = estimate;
        if (k >= 2 && std::abs(estimate - prev_estimate) <= tol * std::max(1.0, estimate)) {
            est.rho = estimate;
            est.converged = true;
            return est;
        }
        prev_estimate = estimate;

        xm1 = x0;
        for (int i = 0; i < n; ++i) x0[i] = x1[i] / growth;
        // Keep xm1 in the same normalization frame as x0.
        for (int i = 0; i < n; ++i) xm1[i] /= growth;
    }
    throw std::runtime_error("spectral_radius: no convergence after " +
                             std::to_string(max_iters) + " iterations; last estimates " +
                             std::to_string(est.last_estimates[0]) + ", " +
                             std::to_string(est.last_estimates[1]));
}

} // namespace mhgin
