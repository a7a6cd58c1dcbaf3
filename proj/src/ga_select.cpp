#include "sceneparse/ga_select.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>

#include "sceneparse/errors.hpp"
#include "sceneparse/parallel.hpp"
#include "sceneparse/rng.hpp"

namespace sceneparse {

namespace {

constexpr double kRouletteEps = 1e-9;

// Selected columns gathered into a contiguous buffer; the 1-NN scan then
// runs over short rows instead of strided full-width ones.
Matrix gather_columns(const Matrix& x, const std::vector<std::size_t>& cols) {
    Matrix out(x.rows, cols.size());
    for (std::size_t r = 0; r < x.rows; ++r) {
        const double* src = x.row(r).data();
        double* dst = out.row(r).data();
        for (std::size_t j = 0; j < cols.size(); ++j) dst[j] = src[cols[j]];
    }
    return out;
}

std::vector<std::size_t> selected_columns(const FeatureMask& mask) {
    std::vector<std::size_t> cols;
    for (std::size_t j = 0; j < mask.bits.size(); ++j)
        if (mask.bits[j]) cols.push_back(j);
    return cols;
}

} // namespace

Matrix apply_mask_columns(const Matrix& x, const FeatureMask& mask) {
    if (mask.bits.size() != x.cols) throw DataError("feature mask width does not match feature matrix");
    return gather_columns(x, selected_columns(mask));
}

int FeatureMask::s_count() const {
    int n = 0;
    for (const auto b : bits) n += b ? 1 : 0;
    return n;
}

std::string mask_to_string(const FeatureMask& mask) {
    std::string s(mask.bits.size(), '0');
    for (std::size_t j = 0; j < mask.bits.size(); ++j)
        if (mask.bits[j]) s[j] = '1';
    return s;
}

FeatureMask mask_from_string(const std::string& text) {
    FeatureMask mask;
    mask.bits.reserve(text.size());
    for (const char ch : text) {
        if (ch != '0' && ch != '1') throw ConfigError("feature mask must be a string of 0/1");
        mask.bits.push_back(ch == '1' ? 1 : 0);
    }
    return mask;
}

void GAConfig::validate() const {
    if (population < 2) throw ConfigError("ga population must be >= 2");
    if (generations < 1) throw ConfigError("ga generations must be >= 1");
    if (p_crossover < 0.0 || p_crossover > 1.0) throw ConfigError("ga crossover probability must be in [0,1]");
    if (p_mutation < 0.0 || p_mutation > 1.0) throw ConfigError("ga mutation probability must be in [0,1]");
    if (alpha <= 0.0 || beta < 0.0) throw ConfigError("ga fitness weights must be positive");
    if (elitism < 0 || elitism >= population) throw ConfigError("ga elitism must be in [0, population)");
}

double masked_nn_error(const FeatureMask& mask, const Matrix& train_x,
                       const std::vector<std::int32_t>& train_y, const Matrix& val_x,
                       const std::vector<std::int32_t>& val_y) {
    if (mask.bits.size() != train_x.cols || train_x.cols != val_x.cols)
        throw DataError("feature mask width does not match feature matrices");
    if (train_y.size() != train_x.rows || val_y.size() != val_x.rows)
        throw DataError("label count does not match feature rows");
    if (val_x.rows == 0) throw DataError("validation set is empty");
    if (train_x.rows == 0) throw DataError("training set is empty");
    if (mask.s_count() == 0) throw ConfigError("feature mask selects no features");

    const auto cols = selected_columns(mask);
    const Matrix train_sel = gather_columns(train_x, cols);
    const Matrix val_sel = gather_columns(val_x, cols);

    std::vector<std::uint8_t> wrong(val_sel.rows, 0);
    parallel_for(val_sel.rows, [&](std::size_t v) {
        const double* q = val_sel.row(v).data();
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_row = 0;
        for (std::size_t t = 0; t < train_sel.rows; ++t) {
            const double* p = train_sel.row(t).data();
            double d = 0.0;
            for (std::size_t j = 0; j < cols.size(); ++j) {
                const double diff = q[j] - p[j];
                d += diff * diff;
            }
            if (d < best) {
                best = d;
                best_row = t;
            }
        }
        wrong[v] = train_y[best_row] != val_y[v] ? 1 : 0;
    });
    const auto n_wrong = std::accumulate(wrong.begin(), wrong.end(), std::int64_t{0});
    return static_cast<double>(n_wrong) / static_cast<double>(val_sel.rows);
}

FitnessRecord fitness(const FeatureMask& mask, const Matrix& train_x,
                      const std::vector<std::int32_t>& train_y, const Matrix& val_x,
                      const std::vector<std::int32_t>& val_y, const GAConfig& cfg) {
    FitnessRecord rec;
    rec.mask = mask;
    rec.error = masked_nn_error(mask, train_x, train_y, val_x, val_y);
    rec.fitness = cfg.alpha * rec.error +
                  cfg.beta * static_cast<double>(mask.s_count()) / static_cast<double>(mask.bits.size());
    return rec;
}

namespace {

void repair_all_zero(FeatureMask& mask, Rng& rng) {
    if (mask.any()) return;
    mask.bits[static_cast<std::size_t>(rng.below(mask.bits.size()))] = 1;
}

std::size_t roulette_pick(const std::vector<double>& weights, double total, Rng& rng) {
    const double u = rng.uniform() * total;
    double cum = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        cum += weights[i];
        if (u < cum) return i;
    }
    return weights.size() - 1;
}

} // namespace

GAResult run_ga(const Matrix& train_x, const std::vector<std::int32_t>& train_y,
                const Matrix& val_x, const std::vector<std::int32_t>& val_y, const GAConfig& cfg) {
    cfg.validate();
    const std::size_t t_features = train_x.cols;
    if (t_features < 2) throw ConfigError("ga needs at least 2 feature columns");

    std::vector<FeatureMask> population(static_cast<std::size_t>(cfg.population));
    {
        Rng init_rng(derive_seed(cfg.seed, "ga-init"));
        for (auto& mask : population) {
            mask.bits.resize(t_features);
            do {
                for (auto& b : mask.bits) b = init_rng.bernoulli(0.5) ? 1 : 0;
            } while (!mask.any());
        }
    }

    std::map<std::vector<std::uint8_t>, FitnessRecord> cache;
    auto evaluate = [&](const FeatureMask& mask) -> const FitnessRecord& {
        auto it = cache.find(mask.bits);
        if (it == cache.end())
            it = cache.emplace(mask.bits, fitness(mask, train_x, train_y, val_x, val_y, cfg)).first;
        return it->second;
    };

    GAResult result;
    result.best.fitness = std::numeric_limits<double>::infinity();
    result.history.reserve(static_cast<std::size_t>(cfg.generations));

    for (int gen = 0; gen < cfg.generations; ++gen) {
        std::vector<double> fits(population.size());
        for (std::size_t i = 0; i < population.size(); ++i) {
            const FitnessRecord& rec = evaluate(population[i]);
            fits[i] = rec.fitness;
            if (rec.fitness < result.best.fitness) result.best = rec;
        }

        GenerationStat stat;
        stat.best = *std::min_element(fits.begin(), fits.end());
        stat.mean = std::accumulate(fits.begin(), fits.end(), 0.0) / static_cast<double>(fits.size());
        result.history.push_back(stat);

        if (gen + 1 == cfg.generations) break;

        std::vector<std::size_t> order(population.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return fits[a] < fits[b]; });

        const double f_max = *std::max_element(fits.begin(), fits.end());
        std::vector<double> weights(population.size());
        double total = 0.0;
        for (std::size_t i = 0; i < population.size(); ++i) {
            weights[i] = f_max - fits[i] + kRouletteEps;
            total += weights[i];
        }

        Rng gen_rng(derive_seed(cfg.seed, "ga-gen", static_cast<std::uint64_t>(gen)));
        std::vector<FeatureMask> next;
        next.reserve(population.size());
        for (int e = 0; e < cfg.elitism; ++e) next.push_back(population[order[static_cast<std::size_t>(e)]]);

        while (next.size() < population.size()) {
            const FeatureMask& p1 = population[roulette_pick(weights, total, gen_rng)];
            const FeatureMask& p2 = population[roulette_pick(weights, total, gen_rng)];
            FeatureMask c1 = p1, c2 = p2;
            if (gen_rng.bernoulli(cfg.p_crossover)) {
                const auto cut = static_cast<std::size_t>(gen_rng.uniform_int(1, static_cast<std::int64_t>(t_features) - 1));
                for (std::size_t j = cut; j < t_features; ++j) std::swap(c1.bits[j], c2.bits[j]);
            }
            for (FeatureMask* child : {&c1, &c2}) {
                for (auto& b : child->bits)
                    if (gen_rng.bernoulli(cfg.p_mutation)) b ^= 1;
                repair_all_zero(*child, gen_rng);
            }
            next.push_back(std::move(c1));
            if (next.size() < population.size()) next.push_back(std::move(c2));
        }
        population = std::move(next);
    }
    return result;
}

} // namespace sceneparse
