#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sccl/error.hpp"
#include "sccl/matrix.hpp"
#include "sccl/rng.hpp"

namespace sccl {

/// Feature matrix with a per-entry observation mask. Entries whose mask bit
/// is false are undefined and must never enter any computation; they are
/// stored as 0.0 purely so the matrix stays finite.
struct MaskedDataset {
    Matrix features;                // I x N
    std::vector<std::uint8_t> mask; // I x N row-major, 1 = observed
    std::vector<int> labels;        // length I, values in [0, num_classes)
    int num_classes = 0;

    std::size_t num_samples() const { return features.rows(); }
    std::size_t num_features() const { return features.cols(); }

    bool is_observed(std::size_t i, std::size_t n) const {
        return mask[i * features.cols() + n] != 0;
    }
    std::uint8_t* mask_row(std::size_t i) { return mask.data() + i * features.cols(); }
    const std::uint8_t* mask_row(std::size_t i) const { return mask.data() + i * features.cols(); }

    /// Number of observed features M_i of sample i.
    std::size_t observed_count(std::size_t i) const {
        const std::uint8_t* m = mask_row(i);
        std::size_t c = 0;
        for (std::size_t n = 0; n < features.cols(); ++n) c += m[n];
        return c;
    }

    bool has_full_mask() const {
        for (std::uint8_t b : mask)
            if (!b) return false;
        return true;
    }

    void validate() const {
        require(mask.size() == features.size(), "dataset: mask shape mismatch");
        require(labels.size() == features.rows(), "dataset: label count mismatch");
        require(num_classes >= 2, "dataset: need at least two classes");
        for (std::size_t i = 0; i < num_samples(); ++i) {
            require(labels[i] >= 0 && labels[i] < num_classes,
                    "dataset: label out of range at sample " + std::to_string(i));
            std::size_t m = 0;
            for (std::size_t n = 0; n < num_features(); ++n) {
                if (is_observed(i, n)) {
                    ++m;
                    require(std::isfinite(features(i, n)),
                            "dataset: non-finite observed value at sample " + std::to_string(i));
                }
            }
            require(m >= 1, "dataset: sample " + std::to_string(i) + " has no observed feature");
        }
    }
};

struct MaskSpec {
    enum class Kind { full, uniform_random, occlusion };
    Kind kind = Kind::full;
    double missing_fraction = 0.0;
    std::size_t image_height = 0; // occlusion only
    std::size_t image_width = 0;
    std::uint64_t seed = 0;
};

struct SyntheticSpec {
    std::size_t n_features = 100;  // N
    std::size_t dict_atoms = 200;  // P >= N
    std::size_t sparsity = 4;      // K <= P
    std::size_t n_train = 0;
    std::size_t n_test = 0;
    double separation = 0.0;       // margin threshold d
    double coefficient_stddev = 1.0;
    bool normalize_samples = false;
    std::uint64_t seed = 0;

    void validate() const {
        require(n_features > 0 && dict_atoms >= n_features,
                "synthetic: need dict_atoms >= n_features >= 1");
        require(sparsity >= 1 && sparsity <= dict_atoms, "synthetic: need 1 <= K <= P");
        require(n_train + n_test > 0, "synthetic: no samples requested");
        require(separation >= 0.0, "synthetic: separation must be >= 0");
        require(coefficient_stddev > 0.0, "synthetic: coefficient stddev must be > 0");
    }
};

/// What generate_synthetic used to build the data.
struct GroundTruth {
    Matrix dictionary;        // N x P, unit-norm columns
    std::vector<double> hyperplane_w; // length N
    double hyperplane_b = 0.0;
    Matrix codes;             // I x P, each row exactly K-sparse
};

struct SyntheticData {
    MaskedDataset dataset; // full mask, n_train + n_test samples
    GroundTruth truth;
};

namespace detail {

inline void normalize_dictionary_columns(Matrix& d) {
    for (std::size_t j = 0; j < d.cols(); ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < d.rows(); ++i) s += d(i, j) * d(i, j);
        double n = std::sqrt(s);
        require(n > 0.0, "dictionary column with zero norm");
        for (std::size_t i = 0; i < d.rows(); ++i) d(i, j) /= n;
    }
}

/// Uniformly random K-subset of [0, p) by partial Fisher-Yates.
inline std::vector<std::size_t> random_support(RngStream& rng, std::size_t p, std::size_t k) {
    std::vector<std::size_t> idx(p);
    for (std::size_t i = 0; i < p; ++i) idx[i] = i;
    for (std::size_t i = 0; i < k; ++i) {
        std::size_t j = i + static_cast<std::size_t>(rng.uniform_below(p - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return idx;
}

} // namespace detail

/// K-sparse samples over a random unit-column dictionary, labelled by a
/// random hyperplane, rejection-sampled so every sample keeps a margin of
/// at least `separation` (exact-zero margins are always rejected).
inline SyntheticData generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    const std::size_t n = spec.n_features, p = spec.dict_atoms, k = spec.sparsity;
    const std::size_t total = spec.n_train + spec.n_test;

    RngStream rng(spec.seed);
    Matrix dict = gaussian_fill(rng, n, p, 1.0);
    detail::normalize_dictionary_columns(dict);

    std::vector<double> w(n);
    for (double& x : w) x = rng.normal();
    double b = rng.normal();

    SyntheticData out;
    out.dataset.features = Matrix(total, n);
    out.dataset.mask.assign(total * n, 1);
    out.dataset.labels.resize(total);
    out.dataset.num_classes = 2;
    out.truth.dictionary = dict;
    out.truth.hyperplane_w = w;
    out.truth.hyperplane_b = b;
    out.truth.codes = Matrix(total, p);

    const std::size_t budget = 1000 * total;
    std::size_t attempts = 0, accepted = 0;
    std::vector<double> x(n), s(p);
    while (accepted < total) {
        if (++attempts > budget)
            throw generation_error(
                "synthetic generation exhausted " + std::to_string(budget) +
                " attempts; separation d=" + std::to_string(spec.separation) +
                " is likely too large for this dictionary");
        std::fill(s.begin(), s.end(), 0.0);
        for (std::size_t j : detail::random_support(rng, p, k))
            s[j] = rng.normal(spec.coefficient_stddev);
        std::fill(x.begin(), x.end(), 0.0);
        for (std::size_t j = 0; j < p; ++j) {
            if (s[j] == 0.0) continue;
            for (std::size_t i = 0; i < n; ++i) x[i] += dict(i, j) * s[j];
        }
        double f = dot(w, x) + b;
        if (std::fabs(f) < spec.separation || f == 0.0) continue;
        for (std::size_t i = 0; i < n; ++i) out.dataset.features(accepted, i) = x[i];
        for (std::size_t j = 0; j < p; ++j) out.truth.codes(accepted, j) = s[j];
        out.dataset.labels[accepted] = f > 0.0 ? 1 : 0;
        ++accepted;
    }

    if (spec.normalize_samples) {
        // Rescale so max ||x|| = 1. Codes and bias shrink by the same factor,
        // keeping x = D s and the label rule sign(<w,x>+b) intact.
        double max_norm = 0.0;
        for (std::size_t i = 0; i < total; ++i)
            max_norm = std::max(max_norm, norm2(out.dataset.features.row(i)));
        if (max_norm > 1.0) {
            const double inv = 1.0 / max_norm;
            for (double& v : out.dataset.features.values()) v *= inv;
            for (double& v : out.truth.codes.values()) v *= inv;
            out.truth.hyperplane_b *= inv;
        }
    }
    return out;
}

namespace detail {

/// Picks the most nearly square h x w factorization of `target` cells that
/// fits in an H x W frame, relaxing the target outward one cell at a time
/// when it has no fitting divisor pair.
inline std::pair<std::size_t, std::size_t> occlusion_shape(std::size_t target, std::size_t h,
                                                           std::size_t w) {
    for (std::size_t slack = 0; slack <= target; ++slack) {
        for (int sign = 0; sign < (slack == 0 ? 1 : 2); ++sign) {
            std::size_t t = sign == 0 ? target - slack : target + slack;
            if (t < 1 || t > h * w) continue;
            std::size_t best_h = 0, best_w = 0;
            for (std::size_t rh = 1; rh <= h; ++rh) {
                if (t % rh != 0) continue;
                std::size_t rw = t / rh;
                if (rw > w) continue;
                std::size_t d = rh > rw ? rh - rw : rw - rh;
                std::size_t bd = best_h > best_w ? best_h - best_w : best_w - best_h;
                if (best_h == 0 || d < bd || (d == bd && rh > best_h)) {
                    best_h = rh;
                    best_w = rw;
                }
            }
            if (best_h != 0) return {best_h, best_w};
        }
    }
    return {1, 1};
}

} // namespace detail

/// Hide features of a fully observed dataset. uniform_random hides each
/// entry independently (rows are redrawn until at least one feature stays
/// observed); occlusion hides one uniformly placed rectangle per sample.
inline MaskedDataset apply_mask(const MaskedDataset& dataset, const MaskSpec& spec) {
    require(dataset.has_full_mask(), "apply_mask: input must be fully observed");
    MaskedDataset out = dataset;
    if (spec.kind == MaskSpec::Kind::full || spec.missing_fraction == 0.0) return out;

    const std::size_t n = dataset.num_features();
    RngStream rng(spec.seed);

    if (spec.kind == MaskSpec::Kind::uniform_random) {
        require(spec.missing_fraction >= 0.0 && spec.missing_fraction < 1.0,
                "apply_mask: missing_fraction must be in [0,1)");
        for (std::size_t i = 0; i < out.num_samples(); ++i) {
            std::uint8_t* m = out.mask_row(i);
            while (true) {
                std::size_t observed = 0;
                for (std::size_t j = 0; j < n; ++j) {
                    m[j] = rng.uniform() >= spec.missing_fraction ? 1 : 0;
                    observed += m[j];
                }
                if (observed >= 1) break;
            }
        }
    } else { // occlusion
        require(spec.image_height * spec.image_width == n,
                "apply_mask: occlusion frame does not match feature count");
        std::size_t target = static_cast<std::size_t>(
            std::llround(spec.missing_fraction * static_cast<double>(n)));
        if (target >= n) target = n - 1; // keep M_i >= 1
        if (target > 0) {
            auto [rh, rw] = detail::occlusion_shape(target, spec.image_height, spec.image_width);
            for (std::size_t i = 0; i < out.num_samples(); ++i) {
                std::size_t top = rng.uniform_below(spec.image_height - rh + 1);
                std::size_t left = rng.uniform_below(spec.image_width - rw + 1);
                std::uint8_t* m = out.mask_row(i);
                for (std::size_t r = top; r < top + rh; ++r)
                    for (std::size_t c = left; c < left + rw; ++c)
                        m[r * spec.image_width + c] = 0;
            }
        }
    }

    // Scrub hidden values; the mask is the only source of truth.
    for (std::size_t i = 0; i < out.num_samples(); ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (!out.is_observed(i, j)) out.features(i, j) = 0.0;
    return out;
}

} // namespace sccl
