#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "sccl/error.hpp"
#include "sccl/matrix.hpp"
#include "sccl/rng.hpp"

namespace sccl {

/// Which per-sample weight the reconstruction loss carries: observed-count
/// over dimension (as printed in the source model) or its inverse.
enum class J1Scale { as_paper, inverse };

inline double j1_weight(std::size_t observed, std::size_t n_features, J1Scale scale) {
    double m = static_cast<double>(observed);
    double n = static_cast<double>(n_features);
    return scale == J1Scale::as_paper ? m / n : n / m;
}

/// Overcomplete dictionary, one atom per column, columns kept unit-norm.
struct Dictionary {
    Matrix d; // N x P

    std::size_t n_features() const { return d.rows(); }
    std::size_t n_atoms() const { return d.cols(); }

    static Dictionary random(RngStream& rng, std::size_t n, std::size_t p) {
        require(p >= n, "dictionary: need at least as many atoms as features");
        Dictionary dict{gaussian_fill(rng, n, p, 1.0)};
        dict.normalize_columns();
        return dict;
    }

    void normalize_columns() {
        const std::size_t n = d.rows(), p = d.cols();
        for (std::size_t j = 0; j < p; ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += d(i, j) * d(i, j);
            if (s == 0.0)
                throw degeneracy_error("dictionary column " + std::to_string(j) +
                                       " collapsed to zero norm");
            double inv = 1.0 / std::sqrt(s);
            for (std::size_t i = 0; i < n; ++i) d(i, j) *= inv;
        }
    }
};

/// Per-sample representation coefficients, one row per sample.
struct SparseCodes {
    Matrix s; // I x P

    static SparseCodes random(RngStream& rng, std::size_t samples, std::size_t atoms,
                              double stddev = 0.1) {
        return SparseCodes{gaussian_fill(rng, samples, atoms, stddev)};
    }

    std::size_t nonzeros(std::size_t i) const {
        std::size_t c = 0;
        for (double v : s.row(i)) c += v != 0.0;
        return c;
    }

    double mean_nonzeros() const {
        if (s.rows() == 0) return 0.0;
        std::size_t c = 0;
        for (double v : s.values()) c += v != 0.0;
        return static_cast<double>(c) / static_cast<double>(s.rows());
    }
};

/// x_hat = D s. Zero coefficients contribute nothing and are skipped.
inline std::vector<double> reconstruct(const Dictionary& dict, std::span<const double> code) {
    require(code.size() == dict.n_atoms(), "reconstruct: code length != atom count");
    std::vector<double> x(dict.n_features(), 0.0);
    for (std::size_t j = 0; j < code.size(); ++j) {
        const double sj = code[j];
        if (sj == 0.0) continue;
        for (std::size_t i = 0; i < x.size(); ++i) x[i] += dict.d(i, j) * sj;
    }
    return x;
}

/// Masked reconstruction error: weight * sum over observed coordinates of
/// the squared residual. Masked coordinates never enter the sum.
inline double recon_loss_j1(const Dictionary& dict, std::span<const double> code,
                            std::span<const double> sample, const std::uint8_t* mask,
                            J1Scale scale = J1Scale::as_paper) {
    const std::size_t n = dict.n_features();
    require(sample.size() == n, "recon_loss_j1: sample length mismatch");
    std::vector<double> xh = reconstruct(dict, code);
    std::size_t observed = 0;
    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!mask[i]) continue;
        ++observed;
        double r = sample[i] - xh[i];
        err += r * r;
    }
    require(observed >= 1, "recon_loss_j1: sample has no observed feature");
    return j1_weight(observed, n, scale) * err;
}

/// Sparsity penalty: l1 norm of the code over the data dimension.
inline double l1_penalty_j2(std::span<const double> code, std::size_t n_features) {
    return norm1(code) / static_cast<double>(n_features);
}

/// Gradient of lambda1*J1 + lambda2*J2 with respect to the code row.
/// The l1 subgradient at exactly zero is taken as zero.
inline std::vector<double> grad_code(const Dictionary& dict, std::span<const double> code,
                                     std::span<const double> sample, const std::uint8_t* mask,
                                     double lambda1, double lambda2,
                                     J1Scale scale = J1Scale::as_paper) {
    const std::size_t n = dict.n_features(), p = dict.n_atoms();
    require(code.size() == p && sample.size() == n, "grad_code: dimension mismatch");

    std::vector<double> xh = reconstruct(dict, code);
    std::size_t observed = 0;
    std::vector<double> masked_resid(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (!mask[i]) continue;
        ++observed;
        masked_resid[i] = sample[i] - xh[i];
    }
    require(observed >= 1, "grad_code: sample has no observed feature");

    const double c1 = lambda1 * j1_weight(observed, n, scale) * -2.0;
    std::vector<double> g(p, 0.0);
    if (lambda1 != 0.0) {
        for (std::size_t i = 0; i < n; ++i) {
            const double r = masked_resid[i];
            if (r == 0.0) continue;
            const double ci = c1 * r;
            const double* di = dict.d.data() + i * p;
            for (std::size_t j = 0; j < p; ++j) g[j] += ci * di[j];
        }
    }
    if (lambda2 != 0.0) {
        const double c2 = lambda2 / static_cast<double>(n);
        for (std::size_t j = 0; j < p; ++j) {
            if (code[j] > 0.0)
                g[j] += c2;
            else if (code[j] < 0.0)
                g[j] -= c2;
        }
    }
    return g;
}

/// Gradient of lambda1 * J1 with respect to the dictionary, averaged over a
/// batch of sample indices. Accumulation is index-ascending so results do
/// not depend on scheduling.
inline Matrix grad_dict(const Dictionary& dict, const Matrix& codes, const Matrix& samples,
                        const std::vector<std::uint8_t>& masks,
                        std::span<const std::size_t> batch, double lambda1,
                        J1Scale scale = J1Scale::as_paper) {
    const std::size_t n = dict.n_features(), p = dict.n_atoms();
    require(!batch.empty(), "grad_dict: empty batch");
    require(samples.cols() == n && codes.cols() == p, "grad_dict: dimension mismatch");

    Matrix g(n, p);
    const double inv_batch = 1.0 / static_cast<double>(batch.size());
    for (std::size_t i : batch) {
        std::span<const double> code = codes.row(i);
        std::vector<double> xh = reconstruct(dict, code);
        const std::uint8_t* m = masks.data() + i * n;
        std::size_t observed = 0;
        for (std::size_t r = 0; r < n; ++r) observed += m[r];
        require(observed >= 1, "grad_dict: sample has no observed feature");
        const double c = lambda1 * j1_weight(observed, n, scale) * -2.0 * inv_batch;
        for (std::size_t r = 0; r < n; ++r) {
            if (!m[r]) continue;
            const double cr = c * (samples(i, r) - xh[r]);
            if (cr == 0.0) continue;
            double* gr = g.data() + r * p;
            for (std::size_t j = 0; j < p; ++j) gr[j] += cr * code[j];
        }
    }
    return g;
}

} // namespace sccl
