#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "sccl/matrix.hpp"
#include "sccl/rng.hpp"

namespace sccl {

/// Largest singular value by power iteration on m^T m. The start vector is
/// drawn from a fixed-seed RngStream so repeated calls on the same matrix
/// give the same iterate sequence.
inline double spectral_norm(const Matrix& m, double tol = 1e-10, std::size_t max_iter = 1000) {
    require(!m.empty(), "spectral_norm: empty matrix");
    require(tol > 0.0, "spectral_norm: tol must be positive");

    RngStream rng(0x5CC1'0001);
    std::vector<double> v(m.cols());
    for (double& x : v) x = rng.normal();
    double nv = norm2(v);
    for (double& x : v) x /= nv;

    double lambda = 0.0;
    std::vector<double> w(m.cols());
    for (std::size_t it = 0; it < max_iter; ++it) {
        // w = m^T (m v)
        std::vector<double> mv = matvec(m, v);
        w = matvec_transposed(m, mv);
        double nw = norm2(w);
        if (nw == 0.0) return 0.0;
        double prev = lambda;
        lambda = nw; // Rayleigh estimate of lambda_max(m^T m) for unit v
        for (std::size_t i = 0; i < w.size(); ++i) v[i] = w[i] / nw;
        if (it > 0 && std::fabs(lambda - prev) <= tol * lambda) break;
    }
    return std::sqrt(lambda);
}

/// Eigenvalues of a symmetric matrix by the cyclic Jacobi method,
/// ascending order. Intended for the small Gram blocks used in the
/// isometry-constant search.
inline std::vector<double> symmetric_eigenvalues(Matrix a, double tol = 1e-13,
                                                 std::size_t max_sweeps = 64) {
    require(a.rows() == a.cols(), "symmetric_eigenvalues: matrix not square");
    const std::size_t n = a.rows();
    for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        if (off <= tol * tol) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double apq = a(p, q);
                if (std::fabs(apq) < 1e-300) continue;
                double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                double t = (theta >= 0 ? 1.0 : -1.0) /
                           (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
            }
        }
    }
    std::vector<double> eig(n);
    for (std::size_t i = 0; i < n; ++i) eig[i] = a(i, i);
    std::sort(eig.begin(), eig.end());
    return eig;
}

} // namespace sccl
