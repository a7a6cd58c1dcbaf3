#include "doctest.h"

#include <cmath>
#include <limits>
#include <vector>

#include "sceneparse/errors.hpp"
#include "sceneparse/ga_select.hpp"
#include "sceneparse/rng.hpp"

using namespace sceneparse;

namespace {

// Independent 1-NN restatement: full all-pairs scan, strict-improvement
// updates so the earliest train row wins ties.
double nn_error_oracle(const FeatureMask& mask, const Matrix& tx, const std::vector<std::int32_t>& ty,
                       const Matrix& vx, const std::vector<std::int32_t>& vy) {
    std::size_t wrong = 0;
    for (std::size_t v = 0; v < vx.rows; ++v) {
        double best = std::numeric_limits<double>::infinity();
        std::int32_t pred = -1;
        for (std::size_t t = 0; t < tx.rows; ++t) {
            double d2 = 0.0;
            for (std::size_t col = 0; col < tx.cols; ++col) {
                if (!mask.bits[col]) continue;
                const double diff = tx.at(t, col) - vx.at(v, col);
                d2 += diff * diff;
            }
            if (d2 < best) {
                best = d2;
                pred = ty[t];
            }
        }
        wrong += pred != vy[v];
    }
    return static_cast<double>(wrong) / static_cast<double>(vx.rows);
}

struct TabularTask {
    Matrix train_x{0, 0};
    std::vector<std::int32_t> train_y;
    Matrix val_x{0, 0};
    std::vector<std::int32_t> val_y;
};

// Two informative dimensions fully determine the class via a tight
// four-cluster layout; the remaining dims are pure noise.
TabularTask informative_task(std::size_t n_train, std::size_t n_val, std::size_t dims,
                             std::uint64_t seed) {
    TabularTask task;
    task.train_x = Matrix(n_train, dims);
    task.val_x = Matrix(n_val, dims);
    Rng rng(seed);
    auto fill = [&](Matrix& x, std::vector<std::int32_t>& y, std::size_t n) {
        y.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const int quadrant = static_cast<int>(rng.below(4));
            const double cy = quadrant / 2 == 0 ? -1.0 : 1.0;
            const double cx = quadrant % 2 == 0 ? -1.0 : 1.0;
            x.at(i, 0) = cy + rng.uniform(-0.05, 0.05);
            x.at(i, 1) = cx + rng.uniform(-0.05, 0.05);
            for (std::size_t d = 2; d < dims; ++d) x.at(i, d) = rng.uniform(-1.0, 1.0);
            y[i] = quadrant;
        }
    };
    fill(task.train_x, task.train_y, n_train);
    fill(task.val_x, task.val_y, n_val);
    return task;
}

FeatureMask ones(std::size_t n) {
    FeatureMask mask;
    mask.bits.assign(n, 1);
    return mask;
}

} // namespace

TEST_CASE("mask text round trips") {
    FeatureMask mask;
    mask.bits = {1, 0, 0, 1, 1};
    CHECK(mask.s_count() == 3);
    CHECK(mask_to_string(mask) == "10011");
    const FeatureMask back = mask_from_string("10011");
    CHECK(back.bits == mask.bits);
    CHECK_THROWS_AS(mask_from_string("10x1"), ConfigError);
}

TEST_CASE("fitness follows the weighted sum exactly") {
    GAConfig cfg;
    Matrix tx(2, 10);
    Matrix vx(1, 10);
    std::vector<std::int32_t> ty{0, 1}, vy{0};
    tx.at(1, 0) = 5.0; // val row (all zeros) matches train row 0
    FeatureMask mask = ones(10);
    const FitnessRecord rec = fitness(mask, tx, ty, vx, vy, cfg);
    CHECK(rec.error == 0.0);
    CHECK(rec.fitness == 0.99 * 0.0 + 0.01 * 1.0);
}

TEST_CASE("zero-distance neighbors classify correctly under any mask") {
    Rng rng(3);
    Matrix tx(6, 4);
    for (double& v : tx.data) v = rng.uniform(-1.0, 1.0);
    std::vector<std::int32_t> ty{0, 1, 2, 0, 1, 2};
    Matrix vx(1, 4);
    for (std::size_t d = 0; d < 4; ++d) vx.at(0, d) = tx.at(2, d);
    std::vector<std::int32_t> vy{2};
    for (const char* bits : {"1111", "1000", "0011"}) {
        const FeatureMask mask = mask_from_string(bits);
        CHECK(masked_nn_error(mask, tx, ty, vx, vy) == 0.0);
    }
}

TEST_CASE("nn error matches the brute-force oracle") {
    Rng rng(17);
    for (int round = 0; round < 5; ++round) {
        const std::size_t dims = 6;
        Matrix tx(40, dims), vx(25, dims);
        std::vector<std::int32_t> ty(40), vy(25);
        for (double& v : tx.data) v = rng.uniform(-2.0, 2.0);
        for (double& v : vx.data) v = rng.uniform(-2.0, 2.0);
        for (auto& y : ty) y = static_cast<std::int32_t>(rng.below(3));
        for (auto& y : vy) y = static_cast<std::int32_t>(rng.below(3));
        FeatureMask mask;
        mask.bits.resize(dims);
        do {
            for (auto& b : mask.bits) b = rng.bernoulli(0.5) ? 1 : 0;
        } while (!mask.any());
        CHECK(masked_nn_error(mask, tx, ty, vx, vy) ==
              nn_error_oracle(mask, tx, ty, vx, vy));
    }
}

TEST_CASE("ties resolve to the lowest train row") {
    Matrix tx(3, 1), vx(1, 1);
    tx.at(0, 0) = 1.0;
    tx.at(1, 0) = -1.0;
    tx.at(2, 0) = 0.0;
    std::vector<std::int32_t> vy{7};
    // Row 2 is strictly closest, so its label 5 mislabels the query.
    CHECK(masked_nn_error(ones(1), tx, {7, 3, 5}, vx, vy) == 1.0);
    // Rows 0 and 1 now tie at distance 1; the earlier row 0 wins.
    tx.at(2, 0) = 2.0;
    CHECK(masked_nn_error(ones(1), tx, {7, 3, 5}, vx, vy) == 0.0);
}

TEST_CASE("empty masks and empty splits are rejected") {
    Matrix tx(2, 3), vx(1, 3);
    std::vector<std::int32_t> ty{0, 1}, vy{0};
    FeatureMask empty;
    empty.bits.assign(3, 0);
    CHECK_THROWS_AS(masked_nn_error(empty, tx, ty, vx, vy), ConfigError);
    Matrix no_rows(0, 3);
    std::vector<std::int32_t> none;
    CHECK_THROWS_AS(masked_nn_error(ones(3), tx, ty, no_rows, none), DataError);
    CHECK_THROWS_AS(masked_nn_error(ones(3), no_rows, none, vx, vy), DataError);
}

TEST_CASE("ga config validation") {
    GAConfig cfg;
    cfg.population = 1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = GAConfig{};
    cfg.p_mutation = 1.5;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = GAConfig{};
    cfg.elitism = -1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    CHECK_NOTHROW(GAConfig{}.validate());
}

TEST_CASE("ga runs are deterministic and monotone") {
    const TabularTask task = informative_task(60, 30, 8, 21);
    GAConfig cfg;
    cfg.generations = 25;
    cfg.seed = 5;
    const GAResult a = run_ga(task.train_x, task.train_y, task.val_x, task.val_y, cfg);
    const GAResult b = run_ga(task.train_x, task.train_y, task.val_x, task.val_y, cfg);
    CHECK(a.best.mask.bits == b.best.mask.bits);
    CHECK(a.best.fitness == b.best.fitness);
    REQUIRE(a.history.size() == b.history.size());
    for (std::size_t g = 0; g < a.history.size(); ++g) {
        CHECK(a.history[g].best == b.history[g].best);
        CHECK(a.history[g].mean == b.history[g].mean);
    }
    for (std::size_t g = 1; g < a.history.size(); ++g)
        CHECK(a.history[g].best <= a.history[g - 1].best + 1e-15);
    CHECK(a.best.fitness == 0.99 * a.best.error +
                                0.01 * a.best.mask.s_count() / static_cast<double>(a.best.mask.bits.size()));
}

TEST_CASE("ga recovers the informative dimensions on a small task") {
    const TabularTask task = informative_task(80, 40, 10, 77);
    GAConfig cfg;
    cfg.generations = 40;
    cfg.seed = 19;
    const GAResult result = run_ga(task.train_x, task.train_y, task.val_x, task.val_y, cfg);
    CHECK(result.best.mask.bits[0] == 1);
    CHECK(result.best.mask.bits[1] == 1);
    CHECK(result.best.error <= 0.1);
    CHECK(result.best.mask.s_count() >= 1);
}

TEST_CASE("ga result always selects at least one feature") {
    Rng rng(41);
    Matrix tx(10, 3), vx(5, 3);
    std::vector<std::int32_t> ty(10, 0), vy(5, 0);
    for (double& v : tx.data) v = rng.uniform(0.0, 1.0);
    for (double& v : vx.data) v = rng.uniform(0.0, 1.0);
    GAConfig cfg;
    cfg.generations = 30; // error is 0 everywhere, so pressure is all toward small masks
    cfg.seed = 2;
    const GAResult result = run_ga(tx, ty, vx, vy, cfg);
    CHECK(result.best.mask.s_count() >= 1);
}

TEST_CASE("ga requires at least two feature columns") {
    Matrix tx(4, 1), vx(2, 1);
    std::vector<std::int32_t> ty{0, 1, 0, 1}, vy{0, 1};
    GAConfig cfg;
    CHECK_THROWS_AS(run_ga(tx, ty, vx, vy, cfg), ConfigError);
}

TEST_CASE("apply_mask_columns keeps selected columns in order") {
    Matrix x(2, 4);
    for (std::size_t i = 0; i < x.data.size(); ++i) x.data[i] = static_cast<double>(i);
    const Matrix out = apply_mask_columns(x, mask_from_string("1010"));
    REQUIRE(out.rows == 2);
    REQUIRE(out.cols == 2);
    CHECK(out.at(0, 0) == 0.0);
    CHECK(out.at(0, 1) == 2.0);
    CHECK(out.at(1, 0) == 4.0);
    CHECK(out.at(1, 1) == 6.0);
}
