#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sceneparse/matrix.hpp"

namespace sceneparse {

struct FeatureMask {
    std::vector<std::uint8_t> bits; // one entry per feature column, 0 or 1

    int s_count() const;
    bool any() const { return s_count() > 0; }
};

std::string mask_to_string(const FeatureMask& mask);
FeatureMask mask_from_string(const std::string& text);

struct GAConfig {
    int population = 10;
    int generations = 1000;
    double p_crossover = 0.8;
    double p_mutation = 0.1;
    double alpha = 0.99;
    double beta = 0.01;
    int elitism = 1;
    std::uint64_t seed = 0;

    void validate() const;
};

struct FitnessRecord {
    FeatureMask mask;
    double error = 0.0;   // 1-NN validation error rate
    double fitness = 0.0; // alpha*error + beta*S/T
};

struct GenerationStat {
    double best = 0.0;
    double mean = 0.0;
};

struct GAResult {
    FitnessRecord best;
    std::vector<GenerationStat> history;
};

// Rows of x restricted to the mask's selected columns.
Matrix apply_mask_columns(const Matrix& x, const FeatureMask& mask);

// Fraction of validation rows misclassified by 1-NN over the masked columns.
// Equidistant neighbors resolve to the lowest train-row index.
double masked_nn_error(const FeatureMask& mask, const Matrix& train_x,
                       const std::vector<std::int32_t>& train_y, const Matrix& val_x,
                       const std::vector<std::int32_t>& val_y);

FitnessRecord fitness(const FeatureMask& mask, const Matrix& train_x,
                      const std::vector<std::int32_t>& train_y, const Matrix& val_x,
                      const std::vector<std::int32_t>& val_y, const GAConfig& cfg);

// Generational GA with roulette-wheel selection, single-point crossover,
// per-bit mutation and elitism. Deterministic for a fixed cfg.seed.
GAResult run_ga(const Matrix& train_x, const std::vector<std::int32_t>& train_y,
                const Matrix& val_x, const std::vector<std::int32_t>& val_y, const GAConfig& cfg);

} // namespace sceneparse
