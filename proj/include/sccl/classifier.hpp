#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "sccl/error.hpp"
#include "sccl/linalg.hpp"
#include "sccl/matrix.hpp"
#include "sccl/rng.hpp"

namespace sccl {

struct Prediction {
    std::vector<double> class_probabilities; // sums to 1
    std::vector<double> logits;
    int predicted_label = 0;
    double binary_margin = 0.0; // logit(1) - logit(0), defined for C = 2
};

/// Activations cached by forward() for the matching backward() call.
struct ForwardCache {
    std::vector<std::vector<double>> activations; // x^(0) .. x^(L)
    Prediction prediction;
};

struct LayerGrads {
    Matrix weights;
    std::vector<double> biases;
};

struct ParamGrads {
    std::vector<LayerGrads> hidden;
    Matrix head_weights;
    std::vector<double> head_biases;
};

/// ReLU multilayer perceptron with a softmax head. Zero hidden layers makes
/// it a plain logistic-regression / softmax classifier on the raw input.
struct MlpClassifier {
    struct Layer {
        Matrix weights;              // N_{l-1} x N_l, applied transposed
        std::vector<double> biases;  // N_l
    };
    std::vector<Layer> hidden;
    Matrix head_weights;             // C x N_L
    std::vector<double> head_biases; // C

    std::size_t input_width() const {
        return hidden.empty() ? head_weights.cols() : hidden.front().weights.rows();
    }
    std::size_t num_classes() const { return head_weights.rows(); }
    std::size_t depth() const { return hidden.size(); } // L

    /// Gaussian init with stddev 1/sqrt(fan_in); biases zero.
    static MlpClassifier random(RngStream& rng, std::size_t input_width,
                                std::span<const std::size_t> hidden_widths,
                                std::size_t num_classes) {
        require(num_classes >= 2, "classifier: need at least two classes");
        MlpClassifier clf;
        std::size_t prev = input_width;
        for (std::size_t w : hidden_widths) {
            require(w >= 1, "classifier: zero-width hidden layer");
            Layer layer;
            layer.weights = gaussian_fill(rng, prev, w, 1.0 / std::sqrt(double(prev)));
            layer.biases.assign(w, 0.0);
            clf.hidden.push_back(std::move(layer));
            prev = w;
        }
        clf.head_weights = gaussian_fill(rng, num_classes, prev, 1.0 / std::sqrt(double(prev)));
        clf.head_biases.assign(num_classes, 0.0);
        return clf;
    }

    /// Head weight-difference vector w = W_head(1,:) - W_head(0,:); this is
    /// the hyperplane normal of the equivalent single-output binary form.
    std::vector<double> binary_weight_vector() const {
        require(num_classes() == 2, "binary_weight_vector: classifier is not binary");
        std::vector<double> w(head_weights.cols());
        for (std::size_t j = 0; j < w.size(); ++j)
            w[j] = head_weights(1, j) - head_weights(0, j);
        return w;
    }
    double binary_bias() const {
        require(num_classes() == 2, "binary_bias: classifier is not binary");
        return head_biases[1] - head_biases[0];
    }
};

namespace detail {

inline void softmax_from_logits(const std::vector<double>& logits, std::vector<double>& probs) {
    double mx = logits[0];
    for (double v : logits) mx = std::max(mx, v);
    double sum = 0.0;
    probs.resize(logits.size());
    for (std::size_t c = 0; c < logits.size(); ++c) {
        probs[c] = std::exp(logits[c] - mx);
        sum += probs[c];
    }
    for (double& p : probs) p /= sum;
}

} // namespace detail

inline ForwardCache forward(const MlpClassifier& clf, std::span<const double> x) {
    require(x.size() == clf.input_width(), "forward: input width mismatch");
    ForwardCache cache;
    cache.activations.reserve(clf.hidden.size() + 1);
    cache.activations.emplace_back(x.begin(), x.end());

    for (const auto& layer : clf.hidden) {
        std::vector<double> z = matvec_transposed(layer.weights, cache.activations.back());
        for (std::size_t j = 0; j < z.size(); ++j) {
            z[j] += layer.biases[j];
            if (z[j] < 0.0) z[j] = 0.0; // ReLU
        }
        cache.activations.push_back(std::move(z));
    }

    Prediction& pred = cache.prediction;
    pred.logits = matvec(clf.head_weights, cache.activations.back());
    for (std::size_t c = 0; c < pred.logits.size(); ++c) pred.logits[c] += clf.head_biases[c];
    detail::softmax_from_logits(pred.logits, pred.class_probabilities);

    pred.predicted_label = 0;
    for (std::size_t c = 1; c < pred.logits.size(); ++c)
        if (pred.class_probabilities[c] > pred.class_probabilities[pred.predicted_label])
            pred.predicted_label = static_cast<int>(c); // ties keep the smaller label
    if (clf.num_classes() == 2) pred.binary_margin = pred.logits[1] - pred.logits[0];
    return cache;
}

/// Cross-entropy -log p(y), computed from logits through log-sum-exp.
inline double cross_entropy_j0(const Prediction& pred, int y) {
    require(y >= 0 && static_cast<std::size_t>(y) < pred.logits.size(),
            "cross_entropy_j0: label out of range");
    double mx = pred.logits[0];
    for (double v : pred.logits) mx = std::max(mx, v);
    double sum = 0.0;
    for (double v : pred.logits) sum += std::exp(v - mx);
    return mx + std::log(sum) - pred.logits[y];
}

struct BackwardResult {
    ParamGrads params;
    std::vector<double> grad_input;
};

/// Exact gradients of J0 with respect to every parameter and the input.
/// ReLU derivative at exactly zero is zero.
inline BackwardResult backward(const MlpClassifier& clf, const ForwardCache& cache, int y) {
    const std::size_t c_count = clf.num_classes();
    require(y >= 0 && static_cast<std::size_t>(y) < c_count, "backward: label out of range");

    BackwardResult out;
    std::vector<double> dlogits = cache.prediction.class_probabilities;
    dlogits[y] -= 1.0;

    const std::vector<double>& top = cache.activations.back();
    out.params.head_weights = Matrix(c_count, top.size());
    for (std::size_t c = 0; c < c_count; ++c)
        for (std::size_t j = 0; j < top.size(); ++j)
            out.params.head_weights(c, j) = dlogits[c] * top[j];
    out.params.head_biases = dlogits;

    std::vector<double> dx = matvec_transposed(clf.head_weights, dlogits);

    out.params.hidden.resize(clf.hidden.size());
    for (std::size_t l = clf.hidden.size(); l-- > 0;) {
        const auto& layer = clf.hidden[l];
        const std::vector<double>& act = cache.activations[l + 1];
        const std::vector<double>& below = cache.activations[l];
        std::vector<double> dz(act.size());
        for (std::size_t j = 0; j < act.size(); ++j) dz[j] = act[j] > 0.0 ? dx[j] : 0.0;

        LayerGrads& g = out.params.hidden[l];
        g.weights = Matrix(layer.weights.rows(), layer.weights.cols());
        for (std::size_t i = 0; i < below.size(); ++i) {
            if (below[i] == 0.0) continue;
            double* gi = g.weights.data() + i * dz.size();
            for (std::size_t j = 0; j < dz.size(); ++j) gi[j] = below[i] * dz[j];
        }
        g.biases = dz;
        dx = matvec(layer.weights, dz);
    }
    out.grad_input = std::move(dx);
    return out;
}

/// Fraction of argmax-correct predictions, ties toward the smaller label.
inline double accuracy(const MlpClassifier& clf, const Matrix& samples,
                       std::span<const int> labels) {
    require(samples.rows() == labels.size(), "accuracy: sample/label count mismatch");
    require(samples.rows() > 0, "accuracy: empty sample set");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < samples.rows(); ++i) {
        ForwardCache c = forward(clf, samples.row(i));
        correct += c.prediction.predicted_label == labels[i];
    }
    return static_cast<double>(correct) / static_cast<double>(samples.rows());
}

/// ||w|| times the product of spectral norms of the hidden weight matrices
/// from the second layer on (empty product for depth <= 1).
inline double product_constant_A(const MlpClassifier& clf) {
    double a = norm2(clf.binary_weight_vector());
    for (std::size_t l = 1; l < clf.hidden.size(); ++l)
        a *= spectral_norm(clf.hidden[l].weights);
    return a;
}

} // namespace sccl
