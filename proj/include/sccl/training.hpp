#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "sccl/classifier.hpp"
#include "sccl/dataset.hpp"
#include "sccl/error.hpp"
#include "sccl/matrix.hpp"
#include "sccl/rng.hpp"
#include "sccl/sparse_model.hpp"

namespace sccl {

struct TrainConfig {
    double lambda1 = 0.5;
    double lambda2 = 0.2;
    double sigma_theta = 0.1;  // classifier learning rate
    double sigma_dict = 0.5;   // dictionary update rate
    double sigma_code = 0.5;   // code update rate (training)
    double sigma_code_test = 1.0;
    double momentum = 0.5;     // classifier only
    std::size_t n_iter = 1000;
    std::size_t n_iter_test = 200;
    std::size_t batch_size = 250;
    std::size_t dict_atoms = 0; // 0 = square dictionary (P = N)
    std::uint64_t seed = 0;
    J1Scale j1_scale = J1Scale::as_paper;
    bool pin_zeros = true;
    std::size_t log_stride = 10;

    void validate() const {
        require(lambda1 >= 0.0 && lambda2 >= 0.0, "config: lambdas must be >= 0");
        require(sigma_theta > 0.0 && sigma_dict > 0.0 && sigma_code > 0.0 &&
                    sigma_code_test > 0.0,
                "config: update rates must be > 0");
        require(momentum >= 0.0 && momentum < 1.0, "config: momentum must be in [0,1)");
        require(batch_size >= 1, "config: batch size must be >= 1");
    }
};

struct ClassifierArch {
    std::vector<std::size_t> hidden_widths; // empty = logistic regression
};

struct LossPoint {
    std::size_t iteration;
    double j0, j1, j2;   // batch means
    double mean_nnz;     // mean nonzeros per code row, whole training set
};

struct TrainedModel {
    MlpClassifier classifier;
    Dictionary dictionary;
    SparseCodes train_codes;
    std::vector<LossPoint> loss_trace;
};

/// Per-iteration observer; fires after the parameter and code updates.
struct TrainHooks {
    std::function<void(std::size_t iteration, const MlpClassifier&, const Dictionary&,
                       const SparseCodes&)>
        on_iteration;
};

/// Sub-gradient step with the zero-crossing rule: a coordinate whose step
/// would change its sign lands exactly on zero instead. With pinning on,
/// coordinates already at zero are never moved again.
inline void zero_crossing_step(std::span<double> code, std::span<const double> grad,
                               double sigma, bool pin_zeros = true) {
    require(code.size() == grad.size(), "zero_crossing_step: length mismatch");
    for (std::size_t j = 0; j < code.size(); ++j) {
        const double s = code[j];
        const double delta = -sigma * grad[j];
        if (s == 0.0) {
            if (!pin_zeros) code[j] = delta;
            continue;
        }
        const double next = s + delta;
        code[j] = s * next < 0.0 ? 0.0 : next;
    }
}

namespace detail {

/// Momentum state shaped like the classifier parameters.
struct ThetaVelocity {
    std::vector<LayerGrads> hidden;
    Matrix head_weights;
    std::vector<double> head_biases;

    explicit ThetaVelocity(const MlpClassifier& clf) {
        hidden.resize(clf.hidden.size());
        for (std::size_t l = 0; l < clf.hidden.size(); ++l) {
            hidden[l].weights = Matrix(clf.hidden[l].weights.rows(), clf.hidden[l].weights.cols());
            hidden[l].biases.assign(clf.hidden[l].biases.size(), 0.0);
        }
        head_weights = Matrix(clf.head_weights.rows(), clf.head_weights.cols());
        head_biases.assign(clf.head_biases.size(), 0.0);
    }

    void apply(MlpClassifier& clf, const ParamGrads& g, double momentum, double rate) {
        auto step = [&](Matrix& v, Matrix& theta, const Matrix& grad) {
            for (std::size_t i = 0; i < v.size(); ++i) {
                v.values()[i] = momentum * v.values()[i] - rate * grad.values()[i];
                theta.values()[i] += v.values()[i];
            }
        };
        auto step_vec = [&](std::vector<double>& v, std::vector<double>& theta,
                            const std::vector<double>& grad) {
            for (std::size_t i = 0; i < v.size(); ++i) {
                v[i] = momentum * v[i] - rate * grad[i];
                theta[i] += v[i];
            }
        };
        for (std::size_t l = 0; l < hidden.size(); ++l) {
            step(hidden[l].weights, clf.hidden[l].weights, g.hidden[l].weights);
            step_vec(hidden[l].biases, clf.hidden[l].biases, g.hidden[l].biases);
        }
        step(head_weights, clf.head_weights, g.head_weights);
        step_vec(head_biases, clf.head_biases, g.head_biases);
    }
};

inline void accumulate_params(ParamGrads& acc, const ParamGrads& g, double scale) {
    if (acc.hidden.empty() && acc.head_weights.empty()) {
        acc = g;
        for (auto& layer : acc.hidden) {
            for (double& v : layer.weights.values()) v *= scale;
            for (double& v : layer.biases) v *= scale;
        }
        for (double& v : acc.head_weights.values()) v *= scale;
        for (double& v : acc.head_biases) v *= scale;
        return;
    }
    for (std::size_t l = 0; l < acc.hidden.size(); ++l) {
        for (std::size_t i = 0; i < acc.hidden[l].weights.size(); ++i)
            acc.hidden[l].weights.values()[i] += scale * g.hidden[l].weights.values()[i];
        for (std::size_t i = 0; i < acc.hidden[l].biases.size(); ++i)
            acc.hidden[l].biases[i] += scale * g.hidden[l].biases[i];
    }
    for (std::size_t i = 0; i < acc.head_weights.size(); ++i)
        acc.head_weights.values()[i] += scale * g.head_weights.values()[i];
    for (std::size_t i = 0; i < acc.head_biases.size(); ++i)
        acc.head_biases[i] += scale * g.head_biases[i];
}

/// Epoch-shuffled mini-batch index source.
class MiniBatcher {
public:
    MiniBatcher(std::size_t count, std::size_t batch_size, RngStream& rng)
        : order_(count), batch_size_(std::min(batch_size, count)), rng_(&rng) {
        std::iota(order_.begin(), order_.end(), std::size_t{0});
        pos_ = count; // force shuffle on first batch
    }

    std::span<const std::size_t> next() {
        if (pos_ + batch_size_ > order_.size()) {
            for (std::size_t i = order_.size(); i-- > 1;) {
                std::size_t j = rng_->uniform_below(i + 1);
                std::swap(order_[i], order_[j]);
            }
            pos_ = 0;
        }
        std::span<const std::size_t> b(order_.data() + pos_, batch_size_);
        pos_ += batch_size_;
        return b;
    }

private:
    std::vector<std::size_t> order_;
    std::size_t batch_size_;
    std::size_t pos_ = 0;
    RngStream* rng_;
};

} // namespace detail

/// Gradients of the joint objective J = mean[J0 + l1*J1] + mean[l2*J2] over
/// one batch, with respect to classifier parameters, dictionary, and the
/// batch members' codes. Also reports the batch-mean loss components.
struct JointGrads {
    ParamGrads theta;
    Matrix dict;       // N x P
    Matrix codes;      // |batch| x P, row order follows the batch
    double j0 = 0.0, j1 = 0.0, j2 = 0.0;
};

inline JointGrads joint_gradients(const MlpClassifier& clf, const Dictionary& dict,
                                  const Matrix& codes, const MaskedDataset& data,
                                  std::span<const std::size_t> batch, double lambda1,
                                  double lambda2, J1Scale scale) {
    const std::size_t n = dict.n_features(), p = dict.n_atoms();
    require(!batch.empty(), "joint_gradients: empty batch");
    JointGrads out;
    out.dict = Matrix(n, p);
    out.codes = Matrix(batch.size(), p);
    const double inv_batch = 1.0 / static_cast<double>(batch.size());
    const double inv_n = 1.0 / static_cast<double>(n);

    std::vector<double> u(n);
    for (std::size_t bi = 0; bi < batch.size(); ++bi) {
        const std::size_t i = batch[bi];
        std::span<const double> code = codes.row(i);
        std::vector<double> xh = reconstruct(dict, code);

        ForwardCache fc = forward(clf, xh);
        BackwardResult bw = backward(clf, fc, data.labels[i]);
        out.j0 += cross_entropy_j0(fc.prediction, data.labels[i]) * inv_batch;

        const std::uint8_t* m = data.mask_row(i);
        std::size_t observed = 0;
        double err = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            if (m[r]) {
                ++observed;
                double res = data.features(i, r) - xh[r];
                err += res * res;
            }
        }
        const double w_i = j1_weight(observed, n, scale);
        out.j1 += w_i * err * inv_batch;
        out.j2 += norm1(code) * inv_n * inv_batch;

        // u = dJ/dx_hat for this sample: classifier pull plus masked residual.
        const double c1 = -2.0 * lambda1 * w_i;
        for (std::size_t r = 0; r < n; ++r) {
            double v = bw.grad_input[r];
            if (m[r]) v += c1 * (data.features(i, r) - xh[r]);
            u[r] = v;
        }

        detail::accumulate_params(out.theta, bw.params, inv_batch);

        // dJ/dD += u s^T / |B|
        for (std::size_t r = 0; r < n; ++r) {
            const double ur = u[r] * inv_batch;
            if (ur == 0.0) continue;
            double* gr = out.dict.data() + r * p;
            for (std::size_t j = 0; j < p; ++j) gr[j] += ur * code[j];
        }

        // dJ/ds_i = D^T u + (l2/N) sign(s)
        std::vector<double> gs = matvec_transposed(dict.d, u);
        if (lambda2 != 0.0) {
            const double c2 = lambda2 * inv_n;
            for (std::size_t j = 0; j < p; ++j) {
                if (code[j] > 0.0)
                    gs[j] += c2;
                else if (code[j] < 0.0)
                    gs[j] -= c2;
            }
        }
        for (std::size_t j = 0; j < p; ++j) out.codes(bi, j) = gs[j];
    }
    return out;
}

namespace detail {

inline void check_finite_losses(double j0, double j1, double j2, std::size_t iteration) {
    if (!std::isfinite(j0) || !std::isfinite(j1) || !std::isfinite(j2))
        throw divergence_error("training diverged at iteration " + std::to_string(iteration) +
                               " (J0=" + std::to_string(j0) + ", J1=" + std::to_string(j1) +
                               ", J2=" + std::to_string(j2) + ")");
}

} // namespace detail

/// Joint training: per mini-batch, update the classifier (SGD + momentum)
/// and the dictionary (plain step, then column renormalization) at fixed
/// codes, then re-evaluate the gradient and move the batch codes with the
/// zero-crossing rule at the new parameters.
inline TrainedModel train_simultaneous(const MaskedDataset& train, const ClassifierArch& arch,
                                       const TrainConfig& cfg, const TrainHooks& hooks = {}) {
    cfg.validate();
    require(train.num_samples() > 0, "train_simultaneous: empty dataset");
    const std::size_t n = train.num_features();

    RngStream rng(cfg.seed);
    TrainedModel model;
    model.classifier = MlpClassifier::random(rng, n, arch.hidden_widths,
                                             static_cast<std::size_t>(train.num_classes));
    model.dictionary = Dictionary::random(rng, n, std::max(train.num_features(),
                                                           dict_atoms_hint(train, cfg)));
    model.train_codes =
        SparseCodes::random(rng, train.num_samples(), model.dictionary.n_atoms());

    detail::ThetaVelocity velocity(model.classifier);
    detail::MiniBatcher batcher(train.num_samples(), cfg.batch_size, rng);

    for (std::size_t it = 0; it < cfg.n_iter; ++it) {
        std::span<const std::size_t> batch = batcher.next();

        JointGrads jg = joint_gradients(model.classifier, model.dictionary, model.train_codes.s,
                                        train, batch, cfg.lambda1, cfg.lambda2, cfg.j1_scale);
        detail::check_finite_losses(jg.j0, jg.j1, jg.j2, it);

        velocity.apply(model.classifier, jg.theta, cfg.momentum, cfg.sigma_theta);
        for (std::size_t i = 0; i < model.dictionary.d.size(); ++i)
            model.dictionary.d.values()[i] -= cfg.sigma_dict * jg.dict.values()[i];
        model.dictionary.normalize_columns();

        // Codes move at the updated classifier and dictionary.
        JointGrads jg2 = joint_gradients(model.classifier, model.dictionary, model.train_codes.s,
                                         train, batch, cfg.lambda1, cfg.lambda2, cfg.j1_scale);
        for (std::size_t bi = 0; bi < batch.size(); ++bi)
            zero_crossing_step(model.train_codes.s.row(batch[bi]), jg2.codes.row(bi),
                               cfg.sigma_code, cfg.pin_zeros);

        if (it % cfg.log_stride == 0 || it + 1 == cfg.n_iter)
            model.loss_trace.push_back(
                {it, jg.j0, jg.j1, jg.j2, model.train_codes.mean_nonzeros()});
        if (hooks.on_iteration)
            hooks.on_iteration(it, model.classifier, model.dictionary, model.train_codes);
    }
    return model;
}

/// Atom-count choice for trainers: datasets remember no P, so trainers use
/// the configured dictionary width when present. Kept as a hook so callers
/// can thread SyntheticSpec.dict_atoms through TrainConfig-free paths.
inline std::size_t dict_atoms_hint(const MaskedDataset&, const TrainConfig&);

struct TestCoding {
    Matrix reconstructions;      // I x N
    std::vector<int> predicted;  // argmax labels
    SparseCodes codes;
};

/// Test-time path: fit codes to the observed entries (labels unused), then
/// classify the reconstructions. A fully observed dataset skips coding and
/// is classified directly.
inline TestCoding code_and_classify_test(const MaskedDataset& test, const MlpClassifier& clf,
                                         const Dictionary& dict, const TrainConfig& cfg) {
    TestCoding out;
    const std::size_t count = test.num_samples();
    if (test.has_full_mask()) {
        out.reconstructions = test.features;
        out.predicted.resize(count);
        for (std::size_t i = 0; i < count; ++i)
            out.predicted[i] = forward(clf, test.features.row(i)).prediction.predicted_label;
        return out;
    }

    RngStream rng(RngStream(cfg.seed).derived(0x7e57));
    out.codes = SparseCodes::random(rng, count, dict.n_atoms());
    for (std::size_t it = 0; it < cfg.n_iter_test; ++it) {
        for (std::size_t i = 0; i < count; ++i) {
            std::vector<double> g =
                grad_code(dict, out.codes.s.row(i), test.features.row(i), test.mask_row(i),
                          cfg.lambda1, cfg.lambda2, cfg.j1_scale);
            zero_crossing_step(out.codes.s.row(i), g, cfg.sigma_code_test, cfg.pin_zeros);
        }
    }

    out.reconstructions = Matrix(count, test.num_features());
    out.predicted.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        std::vector<double> xh = reconstruct(dict, out.codes.s.row(i));
        for (std::size_t r = 0; r < xh.size(); ++r) out.reconstructions(i, r) = xh[r];
        out.predicted[i] = forward(clf, xh).prediction.predicted_label;
    }
    return out;
}

/// Plain mini-batch SGD (momentum) on the cross-entropy of fixed inputs;
/// the classifier trainer used by the sequential stage 2 and the imputation
/// baselines.
inline MlpClassifier train_classifier(const Matrix& features, std::span<const int> labels,
                                      int num_classes, const ClassifierArch& arch,
                                      const TrainConfig& cfg, RngStream& rng) {
    require(features.rows() == labels.size(), "train_classifier: sample/label mismatch");
    MlpClassifier clf = MlpClassifier::random(rng, features.cols(), arch.hidden_widths,
                                              static_cast<std::size_t>(num_classes));
    detail::ThetaVelocity velocity(clf);
    detail::MiniBatcher batcher(features.rows(), cfg.batch_size, rng);
    const double inv_n = 1.0;

    for (std::size_t it = 0; it < cfg.n_iter; ++it) {
        std::span<const std::size_t> batch = batcher.next();
        ParamGrads acc;
        double j0 = 0.0;
        const double inv_batch = inv_n / static_cast<double>(batch.size());
        for (std::size_t i : batch) {
            ForwardCache fc = forward(clf, features.row(i));
            BackwardResult bw = backward(clf, fc, labels[i]);
            j0 += cross_entropy_j0(fc.prediction, labels[i]) * inv_batch;
            detail::accumulate_params(acc, bw.params, inv_batch);
        }
        detail::check_finite_losses(j0, 0.0, 0.0, it);
        velocity.apply(clf, acc, cfg.momentum, cfg.sigma_theta);
    }
    return clf;
}

/// Two-stage baseline: unsupervised dictionary/code fit on the observations
/// first, then a classifier trained on the frozen reconstructions.
inline TrainedModel train_sequential(const MaskedDataset& train, const ClassifierArch& arch,
                                     const TrainConfig& cfg, const TrainHooks& hooks = {}) {
    cfg.validate();
    require(train.num_samples() > 0, "train_sequential: empty dataset");
    const std::size_t n = train.num_features();

    RngStream rng(cfg.seed);
    TrainedModel model;
    model.dictionary = Dictionary::random(rng, n, std::max(train.num_features(),
                                                           dict_atoms_hint(train, cfg)));
    model.train_codes =
        SparseCodes::random(rng, train.num_samples(), model.dictionary.n_atoms());

    detail::MiniBatcher batcher(train.num_samples(), cfg.batch_size, rng);
    for (std::size_t it = 0; it < cfg.n_iter; ++it) {
        std::span<const std::size_t> batch = batcher.next();

        Matrix gd = grad_dict(model.dictionary, model.train_codes.s, train.features, train.mask,
                              batch, cfg.lambda1, cfg.j1_scale);
        for (std::size_t i = 0; i < model.dictionary.d.size(); ++i)
            model.dictionary.d.values()[i] -= cfg.sigma_dict * gd.values()[i];
        model.dictionary.normalize_columns();

        double j1 = 0.0, j2 = 0.0;
        const double inv_batch = 1.0 / static_cast<double>(batch.size());
        for (std::size_t i : batch) {
            std::vector<double> g =
                grad_code(model.dictionary, model.train_codes.s.row(i), train.features.row(i),
                          train.mask_row(i), cfg.lambda1, cfg.lambda2, cfg.j1_scale);
            zero_crossing_step(model.train_codes.s.row(i), g, cfg.sigma_code, cfg.pin_zeros);
            j1 += recon_loss_j1(model.dictionary, model.train_codes.s.row(i),
                                train.features.row(i), train.mask_row(i), cfg.j1_scale) *
                  inv_batch;
            j2 += l1_penalty_j2(model.train_codes.s.row(i), n) * inv_batch;
        }
        detail::check_finite_losses(0.0, j1, j2, it);
        if (it % cfg.log_stride == 0 || it + 1 == cfg.n_iter)
            model.loss_trace.push_back({it, 0.0, j1, j2, model.train_codes.mean_nonzeros()});
        if (hooks.on_iteration)
            hooks.on_iteration(it, model.classifier, model.dictionary, model.train_codes);
    }

    // Training stage: classifier on the frozen reconstructions.
    Matrix recon(train.num_samples(), n);
    for (std::size_t i = 0; i < train.num_samples(); ++i) {
        std::vector<double> xh = reconstruct(model.dictionary, model.train_codes.s.row(i));
        for (std::size_t r = 0; r < n; ++r) recon(i, r) = xh[r];
    }
    model.classifier =
        train_classifier(recon, train.labels, train.num_classes, arch, cfg, rng);
    return model;
}

} // namespace sccl
