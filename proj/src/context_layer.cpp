#include "sceneparse/context_layer.hpp"

#include <ostream>

#include "sceneparse/errors.hpp"

namespace sceneparse {

std::int64_t& AdjacencyPrior::count(int a, int b) {
    return counts[static_cast<std::size_t>(a) * n_classes + b];
}

std::int64_t AdjacencyPrior::count(int a, int b) const {
    return counts[static_cast<std::size_t>(a) * n_classes + b];
}

double AdjacencyPrior::prob(int a, int b) const {
    return probs[static_cast<std::size_t>(a) * n_classes + b];
}

void AdjacencyPrior::recompute_probs() {
    probs.assign(counts.size(), 0.0);
    for (int a = 0; a < n_classes; ++a) {
        std::int64_t row_total = 0;
        for (int b = 0; b < n_classes; ++b) row_total += count(a, b) + 1;
        for (int b = 0; b < n_classes; ++b)
            probs[static_cast<std::size_t>(a) * n_classes + b] =
                static_cast<double>(count(a, b) + 1) / static_cast<double>(row_total);
    }
}

std::size_t BlockPrior::index(int p, int a, int q, int c) const {
    return ((static_cast<std::size_t>(p) * n_classes + a) * n_blocks + q) * n_classes + c;
}

std::int64_t& BlockPrior::count(int p, int a, int q, int c) { return counts[index(p, a, q, c)]; }

std::int64_t BlockPrior::count(int p, int a, int q, int c) const { return counts[index(p, a, q, c)]; }

double BlockPrior::prob(int p, int a, int q, int c) const { return probs[index(p, a, q, c)]; }

void BlockPrior::recompute_probs() {
    probs.assign(counts.size(), 0.0);
    for (int p = 0; p < n_blocks; ++p) {
        for (int a = 0; a < n_classes; ++a) {
            for (int q = 0; q < n_blocks; ++q) {
                std::int64_t row_total = 0;
                for (int c = 0; c < n_classes; ++c) row_total += count(p, a, q, c) + 1;
                for (int c = 0; c < n_classes; ++c)
                    probs[index(p, a, q, c)] =
                        static_cast<double>(count(p, a, q, c) + 1) / static_cast<double>(row_total);
            }
        }
    }
}

ContextPriors fit_priors(const std::vector<const SuperpixelMap*>& maps,
                         const std::vector<std::vector<std::int32_t>>& sp_labels, int n_classes,
                         int blocks_per_side) {
    if (n_classes < 1) throw ConfigError("class count must be >= 1");
    if (blocks_per_side < 1) throw ConfigError("blocks per side must be >= 1");
    if (maps.size() != sp_labels.size()) throw DataError("map and label collections differ in size");

    const int n_blocks = blocks_per_side * blocks_per_side;
    ContextPriors priors;
    priors.m1.n_classes = n_classes;
    priors.m1.counts.assign(static_cast<std::size_t>(n_classes) * n_classes, 0);
    priors.m2.n_blocks = n_blocks;
    priors.m2.n_classes = n_classes;
    priors.m2.counts.assign(static_cast<std::size_t>(n_blocks) * n_classes * n_blocks * n_classes, 0);

    std::vector<std::int64_t> block_hist(static_cast<std::size_t>(n_blocks) * n_classes);
    for (std::size_t img = 0; img < maps.size(); ++img) {
        const SuperpixelMap& map = *maps[img];
        const auto& labels = sp_labels[img];
        if (labels.size() != static_cast<std::size_t>(map.n_actual))
            throw DataError("superpixel label count does not match map");
        if (map.neighbors.size() != static_cast<std::size_t>(map.n_actual) ||
            map.block_of.size() != static_cast<std::size_t>(map.n_actual))
            throw DataError("map is missing adjacency or block assignment");

        for (std::int32_t s = 0; s < map.n_actual; ++s) {
            const std::int32_t a = labels[static_cast<std::size_t>(s)];
            if (a < 0) continue;
            if (a >= n_classes) throw DataError("superpixel label out of class range");
            for (const std::int32_t nb : map.neighbors[static_cast<std::size_t>(s)]) {
                const std::int32_t b = labels[static_cast<std::size_t>(nb)];
                if (b < 0) continue;
                priors.m1.count(a, b)++;
            }
        }

        // Pair counts over distinct blocks factor through per-block label
        // histograms: pairs(p,a,q,c) = hist[p][a] * hist[q][c] for p != q.
        std::fill(block_hist.begin(), block_hist.end(), 0);
        for (std::int32_t s = 0; s < map.n_actual; ++s) {
            const std::int32_t a = labels[static_cast<std::size_t>(s)];
            if (a < 0) continue;
            const std::int32_t p = map.block_of[static_cast<std::size_t>(s)];
            block_hist[static_cast<std::size_t>(p) * n_classes + a]++;
        }
        for (int p = 0; p < n_blocks; ++p) {
            for (int a = 0; a < n_classes; ++a) {
                const std::int64_t votes = block_hist[static_cast<std::size_t>(p) * n_classes + a];
                if (votes == 0) continue;
                for (int q = 0; q < n_blocks; ++q) {
                    if (q == p) continue;
                    for (int c = 0; c < n_classes; ++c)
                        priors.m2.count(p, a, q, c) +=
                            votes * block_hist[static_cast<std::size_t>(q) * n_classes + c];
                }
            }
        }
    }

    priors.m1.recompute_probs();
    priors.m2.recompute_probs();
    return priors;
}

std::vector<ContextProbability> predict_context(const SuperpixelMap& map,
                                                const std::vector<VisualProbability>& visual,
                                                const ContextPriors& priors) {
    const int n_classes = priors.m1.n_classes;
    if (visual.size() != static_cast<std::size_t>(map.n_actual))
        throw DataError("visual prediction count does not match map");
    if (map.neighbors.size() != static_cast<std::size_t>(map.n_actual) ||
        map.block_of.size() != static_cast<std::size_t>(map.n_actual))
        throw DataError("map is missing adjacency or block assignment");

    std::vector<std::int32_t> voter(static_cast<std::size_t>(map.n_actual));
    for (std::size_t s = 0; s < voter.size(); ++s) voter[s] = visual[s].argmax;

    const int n_blocks = priors.m2.n_blocks;
    std::vector<std::int64_t> block_hist(static_cast<std::size_t>(n_blocks) * n_classes, 0);
    for (std::size_t s = 0; s < voter.size(); ++s)
        block_hist[static_cast<std::size_t>(map.block_of[s]) * n_classes + voter[s]]++;

    // Block vote scores are shared by every superpixel in the same block.
    std::vector<std::vector<double>> block_scores(static_cast<std::size_t>(n_blocks));
    for (int q = 0; q < n_blocks; ++q) {
        std::vector<double> score(static_cast<std::size_t>(n_classes), 0.0);
        double total = 0.0;
        for (int p = 0; p < n_blocks; ++p) {
            if (p == q) continue;
            for (int a = 0; a < n_classes; ++a) {
                const auto votes =
                    static_cast<double>(block_hist[static_cast<std::size_t>(p) * n_classes + a]);
                if (votes == 0.0) continue;
                for (int c = 0; c < n_classes; ++c) score[static_cast<std::size_t>(c)] += votes * priors.m2.prob(p, a, q, c);
                total += votes;
            }
        }
        if (total > 0.0) {
            for (auto& v : score) v /= total;
        } else {
            std::fill(score.begin(), score.end(), 1.0 / n_classes);
        }
        block_scores[static_cast<std::size_t>(q)] = std::move(score);
    }

    std::vector<ContextProbability> out(static_cast<std::size_t>(map.n_actual));
    for (std::int32_t s = 0; s < map.n_actual; ++s) {
        ContextProbability& cp = out[static_cast<std::size_t>(s)];
        cp.p_adj.assign(static_cast<std::size_t>(n_classes), 0.0);
        const auto& nbrs = map.neighbors[static_cast<std::size_t>(s)];
        if (nbrs.empty()) {
            std::fill(cp.p_adj.begin(), cp.p_adj.end(), 1.0 / n_classes);
        } else {
            for (const std::int32_t nb : nbrs) {
                const std::int32_t a = voter[static_cast<std::size_t>(nb)];
                for (int c = 0; c < n_classes; ++c)
                    cp.p_adj[static_cast<std::size_t>(c)] += priors.m1.prob(a, c);
            }
            for (auto& v : cp.p_adj) v /= static_cast<double>(nbrs.size());
        }
        cp.p_blk = block_scores[static_cast<std::size_t>(map.block_of[static_cast<std::size_t>(s)])];
    }
    return out;
}

void write_m1_csv(std::ostream& out, const AdjacencyPrior& m1) {
    out << "class_a,class_b,count,prob\n";
    out.precision(17);
    for (int a = 0; a < m1.n_classes; ++a)
        for (int b = 0; b < m1.n_classes; ++b)
            out << a << "," << b << "," << m1.count(a, b) << "," << m1.prob(a, b) << "\n";
}

} // namespace sceneparse
