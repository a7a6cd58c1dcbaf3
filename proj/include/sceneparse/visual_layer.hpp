#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sceneparse/matrix.hpp"

namespace sceneparse {

struct BinaryClassifier {
    std::vector<double> weights; // feature weights then bias, length = n_features + 1
    int class_index = 0;
    double l2 = 1e-4;
    bool degenerate = false; // no positive examples seen; predicts 0.0

    double score(std::span<const double> x) const;
};

struct VisualProbability {
    std::vector<double> p; // independent one-vs-all sigmoids, not renormalized
    int argmax = 0;        // ties resolve to the lowest class index
};

struct OvaConfig {
    double l2 = 1e-4;
    double step = 0.1;
    int max_iters = 500;
    double grad_tol = 1e-6;
};

struct OvaTrainReport {
    int total_iterations = 0;
    double max_loss_increase = 0.0; // largest single-step loss increase seen
};

// Mean cross-entropy plus (l2/2)*|w|^2 with the bias excluded from the
// penalty. Exposed so gradients can be checked against finite differences.
double logistic_loss(const std::vector<double>& weights_with_bias, const Matrix& x,
                     const std::vector<std::uint8_t>& targets, double l2);
std::vector<double> logistic_grad(const std::vector<double>& weights_with_bias, const Matrix& x,
                                  const std::vector<std::uint8_t>& targets, double l2);

// Full-batch gradient descent per class, fixed step, stopping on the
// gradient norm or the iteration cap.
std::vector<BinaryClassifier> train_ova(const Matrix& x, const std::vector<std::int32_t>& labels,
                                        int n_classes, const OvaConfig& cfg,
                                        OvaTrainReport* report = nullptr);

VisualProbability predict_visual(std::span<const double> x,
                                 const std::vector<BinaryClassifier>& classifiers);

double sigmoid(double z);

} // namespace sceneparse
