#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sceneparse/bundle.hpp"
#include "sceneparse/dataset.hpp"
#include "sceneparse/metrics.hpp"

namespace sceneparse {

struct TrainResult {
    ModelBundle bundle;
    bool ga_skipped = false;
    GAResult ga;
    OvaTrainReport ova_report;
    std::vector<double> epoch_loss;
    EvalReport train_eval;
    std::vector<std::pair<std::string, double>> timings_seconds;
};

// Full training pass over an already loaded dataset: resize, segment,
// extract, standardize, select features, train classifiers, fit priors,
// train the integration mlp, then score the training set.
TrainResult run_train(const Dataset& train_data, const RunConfig& cfg);

struct SelectionResult {
    GAResult ga;
    Matrix labeled_features;   // standardized, one row per labeled superpixel
    std::vector<std::int32_t> labels;
};

// Runs only the stages needed for feature selection. For a given dataset and
// config the returned mask is identical to the one run_train would pick.
SelectionResult run_select_features(const Dataset& data, const RunConfig& cfg);

struct PredictionDetail {
    LabeledImage resized; // input resized to the bundle's working resolution
    SuperpixelMap map;
    std::vector<VisualProbability> visual;
    std::vector<ContextProbability> context;
    std::vector<std::int32_t> sp_labels;
    std::vector<std::int32_t> pixel_labels;
};

PredictionDetail predict_detail(const ModelBundle& bundle, const LabeledImage& img);

struct AblationAccuracies {
    double visual_only = 0.0;
    double with_adjacent = 0.0;
    double with_block = 0.0;
    double full = 0.0;
};

struct EvalResult {
    EvalReport report;
    std::optional<AblationAccuracies> ablation;
};

EvalResult evaluate_images(const ModelBundle& bundle, const std::vector<LabeledImage>& images,
                           bool with_ablation);

// Report text; timings go in a trailing [timings] section so reports from
// identical runs differ only there.
std::string render_train_report(const TrainResult& result);

void write_ga_history_csv(std::ostream& out, const GAResult& ga);
void write_epoch_loss_csv(std::ostream& out, const std::vector<double>& epoch_loss);

// 40% class-color blend over the resized input.
Raster8 render_overlay(const LabeledImage& resized, const std::vector<std::int32_t>& pixel_labels);

} // namespace sceneparse
