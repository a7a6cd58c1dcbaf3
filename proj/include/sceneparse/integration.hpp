#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sceneparse/matrix.hpp"
#include "sceneparse/superpixels.hpp"

namespace sceneparse {

struct IntegrationMLP {
    int n_inputs = 0;  // 3 * n_classes
    int n_hidden = 0;
    int n_classes = 0;
    Matrix w1;              // hidden x inputs
    std::vector<double> b1; // hidden
    Matrix w2;              // classes x hidden
    std::vector<double> b2; // classes
};

struct TrainSchedule {
    double lr0 = 1e-4;
    double decay = 0.1; // multiplied in once per decay_every epochs
    int decay_every = 30;
    int batch = 4;
    int epochs = 60;
    int hidden = 64;
    std::uint64_t seed = 0;

    void validate() const;
};

double schedule_lr(const TrainSchedule& s, int epoch);

// Softmax class distribution for one 3C input vector.
std::vector<double> mlp_forward(const IntegrationMLP& mlp, std::span<const double> x);

struct MlpGradients {
    Matrix w1;
    std::vector<double> b1;
    Matrix w2;
    std::vector<double> b2;
};

// Mean cross-entropy over the rows of x; gradient exposed for the
// finite-difference tests.
double mlp_loss(const IntegrationMLP& mlp, const Matrix& x, const std::vector<std::int32_t>& y);
MlpGradients mlp_loss_gradient(const IntegrationMLP& mlp, const Matrix& x,
                               const std::vector<std::int32_t>& y, double* loss_out = nullptr);

// Mini-batch SGD with seeded epoch shuffles and Glorot-uniform weight init.
IntegrationMLP train_integration(const Matrix& inputs, const std::vector<std::int32_t>& targets,
                                 int n_classes, const TrainSchedule& schedule,
                                 std::vector<double>* epoch_loss = nullptr);

// Argmax labels per input row; ties resolve to the lowest class index.
std::vector<std::int32_t> assign_labels(const Matrix& inputs, const IntegrationMLP& mlp);

// Broadcast per-superpixel labels back to a pixel raster.
std::vector<std::int32_t> pixelize(const SuperpixelMap& map, const std::vector<std::int32_t>& sp_labels);

} // namespace sceneparse
