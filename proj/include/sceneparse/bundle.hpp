#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "sceneparse/context_layer.hpp"
#include "sceneparse/dataset.hpp"
#include "sceneparse/features.hpp"
#include "sceneparse/ga_select.hpp"
#include "sceneparse/integration.hpp"
#include "sceneparse/visual_layer.hpp"

namespace sceneparse {

struct RunConfig {
    std::uint64_t seed = 0;
    int image_side = 256;
    double split_ratio = 0.8;
    std::string segmenter = "grid"; // grid | slic
    int superpixels = 256;
    int blocks_per_side = 4;
    double compactness = 10.0;
    int slic_iters = 10;

    bool use_ga = true;
    int ga_population = 10;
    int ga_generations = 1000;
    double ga_crossover = 0.8;
    double ga_mutation = 0.1;
    double ga_alpha = 0.99;
    double ga_beta = 0.01;
    int ga_elitism = 1;
    double ga_val_fraction = 0.25;
    int ga_sample_cap = 2000;

    double ova_l2 = 1e-4;

    bool use_context = true;
    int mlp_hidden = 64;
    int mlp_epochs = 60;
    double mlp_lr0 = 1e-4;
    int mlp_batch = 4;

    void validate() const;
};

struct ModelBundle {
    int format_version = 1;
    RunConfig config;
    ClassTable classes;
    int catalog_version = 1;
    Standardizer standardizer;
    FeatureMask mask;
    std::vector<BinaryClassifier> classifiers;
    ContextPriors priors;
    IntegrationMLP mlp;

    int n_classes() const { return static_cast<int>(classes.names.size()); }
    void validate() const; // dimensional consistency; throws ModelError
};

// Shortest decimal form that parses back to the identical double.
std::string fmt_double(double v);

void save_bundle(const std::filesystem::path& path, const ModelBundle& bundle);
ModelBundle load_bundle(const std::filesystem::path& path);

} // namespace sceneparse
