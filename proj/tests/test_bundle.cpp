#include "doctest.h"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include "sceneparse/bundle.hpp"
#include "sceneparse/errors.hpp"
#include "sceneparse/rng.hpp"
#include "test_util.hpp"

using namespace sceneparse;
namespace fs = std::filesystem;

namespace {

ModelBundle make_bundle() {
    ModelBundle b;
    b.config.seed = 42;
    b.config.image_side = 64;
    b.config.split_ratio = 0.75;
    b.config.segmenter = "slic";
    b.config.superpixels = 16;
    b.config.blocks_per_side = 2;
    b.config.compactness = 12.5;
    b.config.slic_iters = 7;
    b.config.use_ga = false;
    b.config.ga_generations = 123;
    b.config.ga_val_fraction = 0.3;
    b.config.ga_sample_cap = 500;
    b.config.ova_l2 = 2e-4;
    b.config.use_context = true;
    b.config.mlp_hidden = 3;
    b.config.mlp_epochs = 5;
    b.config.mlp_lr0 = 0.001;
    b.config.mlp_batch = 2;

    b.classes.names = {"sky", "water"};
    b.classes.grouping = {{0, 0}, {1, 1}, {7, 1}};

    const auto dims = static_cast<std::size_t>(default_catalog().total_dims());
    b.standardizer.mean.resize(dims);
    b.standardizer.stddev.resize(dims);
    for (std::size_t i = 0; i < dims; ++i) {
        b.standardizer.mean[i] = 0.1 * static_cast<double>(i) + 1.0 / 3.0;
        b.standardizer.stddev[i] = 1.0 + 0.01 * static_cast<double>(i);
    }

    b.mask.bits.assign(dims, 0);
    for (std::size_t i = 0; i < dims; i += 2) b.mask.bits[i] = 1;
    const auto weight_len = static_cast<std::size_t>(b.mask.s_count()) + 1;

    Rng rng(9);
    b.classifiers.resize(2);
    for (int c = 0; c < 2; ++c) {
        b.classifiers[static_cast<std::size_t>(c)].class_index = c;
        b.classifiers[static_cast<std::size_t>(c)].l2 = 2e-4;
        b.classifiers[static_cast<std::size_t>(c)].weights.resize(weight_len);
        for (auto& w : b.classifiers[static_cast<std::size_t>(c)].weights) w = rng.uniform(-2.0, 2.0);
    }
    b.classifiers[1].degenerate = true;

    b.priors = fit_priors({}, {}, 2, 2);
    b.priors.m1.count(0, 1) = 3;
    b.priors.m1.count(1, 0) = 5;
    b.priors.m1.recompute_probs();
    b.priors.m2.count(0, 0, 1, 1) = 7;
    b.priors.m2.recompute_probs();

    b.mlp.n_inputs = 6;
    b.mlp.n_hidden = 3;
    b.mlp.n_classes = 2;
    b.mlp.w1 = Matrix(3, 6);
    b.mlp.w2 = Matrix(2, 3);
    b.mlp.b1.resize(3);
    b.mlp.b2.resize(2);
    for (auto& w : b.mlp.w1.data) w = rng.uniform(-1.0, 1.0);
    for (auto& w : b.mlp.w2.data) w = rng.uniform(-1.0, 1.0);
    for (auto& w : b.mlp.b1) w = rng.uniform(-1.0, 1.0);
    for (auto& w : b.mlp.b2) w = rng.uniform(-1.0, 1.0);
    return b;
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

double parse_double(const std::string& s) {
    double v = 0.0;
    std::from_chars(s.data(), s.data() + s.size(), v);
    return v;
}

} // namespace

TEST_CASE("doubles format to their shortest exact decimal form") {
    CHECK(fmt_double(0.5) == "0.5");
    CHECK(fmt_double(1.0) == "1");
    CHECK(fmt_double(0.1) == "0.1");
    CHECK(fmt_double(-2.0) == "-2");
    Rng rng(3);
    for (int i = 0; i < 500; ++i) {
        const double v = std::ldexp(rng.uniform(-1.0, 1.0), static_cast<int>(rng.uniform_int(-60, 60)));
        const std::string s = fmt_double(v);
        CHECK(parse_double(s) == v);
    }
    CHECK(parse_double(fmt_double(1.0 / 3.0)) == 1.0 / 3.0);
    CHECK(parse_double(fmt_double(1e-300)) == 1e-300);
}

TEST_CASE("save, load, save reproduces the bundle byte for byte") {
    testutil::TempDir dir;
    const ModelBundle original = make_bundle();
    const fs::path first = dir.path() / "a.bundle";
    const fs::path second = dir.path() / "b.bundle";
    save_bundle(first, original);
    const ModelBundle loaded = load_bundle(first);
    save_bundle(second, loaded);
    CHECK(testutil::slurp(first) == testutil::slurp(second));

    CHECK(loaded.config.seed == original.config.seed);
    CHECK(loaded.config.image_side == original.config.image_side);
    CHECK(loaded.config.split_ratio == original.config.split_ratio);
    CHECK(loaded.config.segmenter == original.config.segmenter);
    CHECK(loaded.config.superpixels == original.config.superpixels);
    CHECK(loaded.config.blocks_per_side == original.config.blocks_per_side);
    CHECK(loaded.config.compactness == original.config.compactness);
    CHECK(loaded.config.slic_iters == original.config.slic_iters);
    CHECK(loaded.config.use_ga == original.config.use_ga);
    CHECK(loaded.config.ga_generations == original.config.ga_generations);
    CHECK(loaded.config.ga_val_fraction == original.config.ga_val_fraction);
    CHECK(loaded.config.ga_sample_cap == original.config.ga_sample_cap);
    CHECK(loaded.config.ova_l2 == original.config.ova_l2);
    CHECK(loaded.config.mlp_hidden == original.config.mlp_hidden);
    CHECK(loaded.config.mlp_epochs == original.config.mlp_epochs);
    CHECK(loaded.config.mlp_lr0 == original.config.mlp_lr0);
    CHECK(loaded.config.mlp_batch == original.config.mlp_batch);

    CHECK(loaded.classes == original.classes);
    CHECK(loaded.standardizer.mean == original.standardizer.mean);
    CHECK(loaded.standardizer.stddev == original.standardizer.stddev);
    CHECK(loaded.mask.bits == original.mask.bits);
    REQUIRE(loaded.classifiers.size() == original.classifiers.size());
    for (std::size_t c = 0; c < loaded.classifiers.size(); ++c) {
        CHECK(loaded.classifiers[c].weights == original.classifiers[c].weights);
        CHECK(loaded.classifiers[c].class_index == original.classifiers[c].class_index);
        CHECK(loaded.classifiers[c].degenerate == original.classifiers[c].degenerate);
        CHECK(loaded.classifiers[c].l2 == original.classifiers[c].l2);
    }
    CHECK(loaded.priors.m1.counts == original.priors.m1.counts);
    CHECK(loaded.priors.m2.counts == original.priors.m2.counts);
    CHECK(loaded.mlp.w1.data == original.mlp.w1.data);
    CHECK(loaded.mlp.b1 == original.mlp.b1);
    CHECK(loaded.mlp.w2.data == original.mlp.w2.data);
    CHECK(loaded.mlp.b2 == original.mlp.b2);
}

TEST_CASE("loading recomputes smoothed prior probabilities from counts") {
    testutil::TempDir dir;
    const fs::path path = dir.path() / "m.bundle";
    save_bundle(path, make_bundle());
    const ModelBundle loaded = load_bundle(path);
    // m1 row 0 has counts (0, 3); add-one smoothing gives (1, 4) / 5.
    CHECK(loaded.priors.m1.prob(0, 0) == doctest::Approx(0.2));
    CHECK(loaded.priors.m1.prob(0, 1) == doctest::Approx(0.8));
    for (int a = 0; a < 2; ++a) {
        CHECK(loaded.priors.m1.prob(a, 0) + loaded.priors.m1.prob(a, 1) == doctest::Approx(1.0));
    }
    for (int p = 0; p < 4; ++p)
        for (int a = 0; a < 2; ++a)
            for (int q = 0; q < 4; ++q) {
                double row = 0.0;
                for (int c = 0; c < 2; ++c) row += loaded.priors.m2.prob(p, a, q, c);
                CHECK(row == doctest::Approx(1.0));
            }
    CHECK(loaded.priors.m2.prob(0, 0, 1, 1) == doctest::Approx(8.0 / 9.0));
}

TEST_CASE("truncated bundles fail with a section-specific error") {
    testutil::TempDir dir;
    const fs::path path = dir.path() / "t.bundle";
    save_bundle(path, make_bundle());
    const std::string full = testutil::slurp(path);
    const fs::path broken = dir.path() / "broken.bundle";

    for (const char* marker : {"[config]", "[classes]", "[catalog]", "[standardizer]", "[mask]",
                               "[classifiers]", "[m1]", "[m2]", "[mlp]", "[end]"}) {
        const auto pos = full.find(marker);
        REQUIRE(pos != std::string::npos);
        write_text(broken, full.substr(0, pos));
        bool threw = false;
        try {
            load_bundle(broken);
        } catch (const ModelError& e) {
            threw = true;
            CHECK(std::string(e.what()).find("section") != std::string::npos);
        }
        CHECK(threw);
    }
}

TEST_CASE("corrupted values are reported rather than read through") {
    testutil::TempDir dir;
    const fs::path path = dir.path() / "c.bundle";
    save_bundle(path, make_bundle());
    const std::string full = testutil::slurp(path);
    const fs::path broken = dir.path() / "broken.bundle";

    {
        std::string text = full;
        const auto pos = text.find("\nstd ");
        REQUIRE(pos != std::string::npos);
        text.replace(pos, 5, "\nstd x");
        write_text(broken, text);
        CHECK_THROWS_AS(load_bundle(broken), ModelError);
    }
    {
        std::string text = full;
        const auto pos = text.find("format 1");
        REQUIRE(pos != std::string::npos);
        text.replace(pos, 8, "format 2");
        write_text(broken, text);
        CHECK_THROWS_AS(load_bundle(broken), ModelError);
    }
    {
        std::string text = full;
        const auto pos = text.find("version 1");
        REQUIRE(pos != std::string::npos);
        text.replace(pos, 9, "version 9");
        write_text(broken, text);
        CHECK_THROWS_AS(load_bundle(broken), ModelError);
    }
}

TEST_CASE("inconsistent bundles are rejected before they are written") {
    testutil::TempDir dir;
    const fs::path path = dir.path() / "r.bundle";

    ModelBundle b = make_bundle();
    b.mask.bits.push_back(1);
    CHECK_THROWS_AS(save_bundle(path, b), ModelError);

    b = make_bundle();
    std::fill(b.mask.bits.begin(), b.mask.bits.end(), std::uint8_t{0});
    CHECK_THROWS_AS(save_bundle(path, b), ModelError);

    b = make_bundle();
    b.classifiers[0].weights.pop_back();
    CHECK_THROWS_AS(save_bundle(path, b), ModelError);

    b = make_bundle();
    b.classifiers.pop_back();
    CHECK_THROWS_AS(save_bundle(path, b), ModelError);

    b = make_bundle();
    b.standardizer.stddev[4] = 0.0;
    CHECK_THROWS_AS(save_bundle(path, b), ModelError);

    b = make_bundle();
    b.mlp.b2.push_back(0.0);
    CHECK_THROWS_AS(save_bundle(path, b), ModelError);

    b = make_bundle();
    b.catalog_version = 3;
    CHECK_THROWS_AS(save_bundle(path, b), ModelError);
}

TEST_CASE("a missing bundle file raises a model error") {
    CHECK_THROWS_AS(load_bundle("/nonexistent/dir/model.bundle"), ModelError);
}
