#include "sceneparse/visual_layer.hpp"

#include <algorithm>
#include <cmath>

#include "sceneparse/errors.hpp"
#include "sceneparse/parallel.hpp"

namespace sceneparse {

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

namespace {

// log(1 + exp(z)) without overflow.
double softplus(double z) {
    return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

double raw_score(const std::vector<double>& w, const double* x, std::size_t n_features) {
    double z = w[n_features]; // bias
    for (std::size_t j = 0; j < n_features; ++j) z += w[j] * x[j];
    return z;
}

} // namespace

double BinaryClassifier::score(std::span<const double> x) const {
    if (degenerate) return 0.0;
    if (x.size() + 1 != weights.size()) throw ModelError("feature width does not match classifier");
    return sigmoid(raw_score(weights, x.data(), x.size()));
}

double logistic_loss(const std::vector<double>& w, const Matrix& x,
                     const std::vector<std::uint8_t>& targets, double l2) {
    const std::size_t n = x.rows, d = x.cols;
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double z = raw_score(w, x.row(i).data(), d);
        loss += softplus(z) - (targets[i] ? z : 0.0);
    }
    loss /= static_cast<double>(n);
    for (std::size_t j = 0; j < d; ++j) loss += 0.5 * l2 * w[j] * w[j];
    return loss;
}

std::vector<double> logistic_grad(const std::vector<double>& w, const Matrix& x,
                                  const std::vector<std::uint8_t>& targets, double l2) {
    const std::size_t n = x.rows, d = x.cols;
    std::vector<double> grad(d + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double* xi = x.row(i).data();
        const double err = sigmoid(raw_score(w, xi, d)) - (targets[i] ? 1.0 : 0.0);
        for (std::size_t j = 0; j < d; ++j) grad[j] += err * xi[j];
        grad[d] += err;
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    for (auto& g : grad) g *= inv_n;
    for (std::size_t j = 0; j < d; ++j) grad[j] += l2 * w[j];
    return grad;
}

std::vector<BinaryClassifier> train_ova(const Matrix& x, const std::vector<std::int32_t>& labels,
                                        int n_classes, const OvaConfig& cfg, OvaTrainReport* report) {
    if (labels.size() != x.rows) throw DataError("label count does not match feature rows");
    if (n_classes < 1) throw ConfigError("class count must be >= 1");
    if (x.rows == 0) throw DataError("cannot train on an empty feature matrix");
    for (const auto y : labels)
        if (y < 0 || y >= n_classes) throw DataError("training label out of class range");

    std::vector<BinaryClassifier> out(static_cast<std::size_t>(n_classes));
    std::vector<int> iterations(static_cast<std::size_t>(n_classes), 0);
    std::vector<double> worst_increase(static_cast<std::size_t>(n_classes), 0.0);

    parallel_for(static_cast<std::size_t>(n_classes), [&](std::size_t c) {
        BinaryClassifier clf;
        clf.class_index = static_cast<int>(c);
        clf.l2 = cfg.l2;
        clf.weights.assign(x.cols + 1, 0.0);

        std::vector<std::uint8_t> targets(x.rows);
        std::int64_t positives = 0;
        for (std::size_t i = 0; i < x.rows; ++i) {
            targets[i] = labels[i] == static_cast<std::int32_t>(c) ? 1 : 0;
            positives += targets[i];
        }
        if (positives == 0) {
            clf.degenerate = true;
            out[c] = std::move(clf);
            return;
        }

        double prev_loss = logistic_loss(clf.weights, x, targets, cfg.l2);
        for (int it = 0; it < cfg.max_iters; ++it) {
            const auto grad = logistic_grad(clf.weights, x, targets, cfg.l2);
            double norm_sq = 0.0;
            for (const auto g : grad) norm_sq += g * g;
            if (std::sqrt(norm_sq) < cfg.grad_tol) break;
            for (std::size_t j = 0; j < grad.size(); ++j) clf.weights[j] -= cfg.step * grad[j];
            ++iterations[c];
            const double loss = logistic_loss(clf.weights, x, targets, cfg.l2);
            worst_increase[c] = std::max(worst_increase[c], loss - prev_loss);
            prev_loss = loss;
        }
        out[c] = std::move(clf);
    });

    if (report) {
        report->total_iterations = 0;
        report->max_loss_increase = 0.0;
        for (int c = 0; c < n_classes; ++c) {
            report->total_iterations += iterations[static_cast<std::size_t>(c)];
            report->max_loss_increase = std::max(report->max_loss_increase, worst_increase[static_cast<std::size_t>(c)]);
        }
    }
    return out;
}

VisualProbability predict_visual(std::span<const double> x,
                                 const std::vector<BinaryClassifier>& classifiers) {
    if (classifiers.empty()) throw ModelError("no classifiers loaded");
    VisualProbability vp;
    vp.p.resize(classifiers.size());
    for (std::size_t c = 0; c < classifiers.size(); ++c) vp.p[c] = classifiers[c].score(x);
    vp.argmax = 0;
    for (std::size_t c = 1; c < classifiers.size(); ++c)
        if (vp.p[c] > vp.p[static_cast<std::size_t>(vp.argmax)]) vp.argmax = static_cast<int>(c);
    return vp;
}

} // namespace sceneparse
