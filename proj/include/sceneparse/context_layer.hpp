#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "sceneparse/superpixels.hpp"
#include "sceneparse/visual_layer.hpp"

namespace sceneparse {

// Adjacency vote prior: counts[a][b] = ordered adjacent pairs with labels
// (a, b) in training; probs = rows of (counts + 1) normalized.
struct AdjacencyPrior {
    int n_classes = 0;
    std::vector<std::int64_t> counts; // C*C row-major
    std::vector<double> probs;        // C*C row-major, row-stochastic

    std::int64_t& count(int a, int b);
    std::int64_t count(int a, int b) const;
    double prob(int a, int b) const;
    void recompute_probs();
};

// Blockwise co-occurrence prior over ordered block pairs p != q:
// counts[p][a][q][c] = training pairs (superpixel in block p labeled a,
// superpixel in block q labeled c). probs normalize over the last axis.
struct BlockPrior {
    int n_blocks = 0;
    int n_classes = 0;
    std::vector<std::int64_t> counts;
    std::vector<double> probs;

    std::size_t index(int p, int a, int q, int c) const;
    std::int64_t& count(int p, int a, int q, int c);
    std::int64_t count(int p, int a, int q, int c) const;
    double prob(int p, int a, int q, int c) const;
    void recompute_probs();
};

struct ContextPriors {
    AdjacencyPrior m1;
    BlockPrior m2;
};

struct ContextProbability {
    std::vector<double> p_adj; // sums to 1
    std::vector<double> p_blk; // sums to 1
};

// Maps must carry neighbors and block_of; labels are per-superpixel majority
// ground truth with -1 for unknown (skipped as voter and votee).
ContextPriors fit_priors(const std::vector<const SuperpixelMap*>& maps,
                         const std::vector<std::vector<std::int32_t>>& sp_labels, int n_classes,
                         int blocks_per_side);

std::vector<ContextProbability> predict_context(const SuperpixelMap& map,
                                                const std::vector<VisualProbability>& visual,
                                                const ContextPriors& priors);

void write_m1_csv(std::ostream& out, const AdjacencyPrior& m1);

} // namespace sceneparse
