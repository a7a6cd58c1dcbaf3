#include "doctest.h"

#include <cmath>
#include <vector>

#include "sceneparse/errors.hpp"
#include "sceneparse/integration.hpp"
#include "sceneparse/rng.hpp"
#include "test_util.hpp"

using namespace sceneparse;

namespace {

double rel_dev(double a, double b) {
    const double scale = std::max({std::abs(a), std::abs(b), 1e-8});
    return std::abs(a - b) / scale;
}

IntegrationMLP random_mlp(int inputs, int hidden, int classes, std::uint64_t seed) {
    IntegrationMLP mlp;
    mlp.n_inputs = inputs;
    mlp.n_hidden = hidden;
    mlp.n_classes = classes;
    mlp.w1 = Matrix(static_cast<std::size_t>(hidden), static_cast<std::size_t>(inputs));
    mlp.w2 = Matrix(static_cast<std::size_t>(classes), static_cast<std::size_t>(hidden));
    mlp.b1.resize(static_cast<std::size_t>(hidden));
    mlp.b2.resize(static_cast<std::size_t>(classes));
    Rng rng(seed);
    for (double& v : mlp.w1.data) v = rng.uniform(-0.8, 0.8);
    for (double& v : mlp.w2.data) v = rng.uniform(-0.8, 0.8);
    for (double& v : mlp.b1) v = rng.uniform(-0.3, 0.3);
    for (double& v : mlp.b2) v = rng.uniform(-0.3, 0.3);
    return mlp;
}

// A 3C-ish toy problem where the class is readable off one input block.
void toy_batch(Matrix& x, std::vector<std::int32_t>& y, std::size_t n, int classes,
               std::uint64_t seed) {
    Rng rng(seed);
    x = Matrix(n, static_cast<std::size_t>(3 * classes));
    y.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const int cls = static_cast<int>(rng.below(static_cast<std::uint64_t>(classes)));
        y[i] = cls;
        for (std::size_t d = 0; d < x.cols; ++d) x.at(i, d) = rng.uniform(0.0, 0.2);
        x.at(i, static_cast<std::size_t>(cls)) = rng.uniform(0.8, 1.0);
    }
}

} // namespace

TEST_CASE("learning rate schedule steps down by a factor of ten") {
    TrainSchedule s;
    CHECK(schedule_lr(s, 0) == doctest::Approx(1e-4));
    CHECK(schedule_lr(s, 29) == doctest::Approx(1e-4));
    CHECK(schedule_lr(s, 30) == doctest::Approx(1e-5));
    CHECK(schedule_lr(s, 59) == doctest::Approx(1e-5));
    CHECK(schedule_lr(s, 60) == doctest::Approx(1e-6));
}

TEST_CASE("schedule validation rejects bad values") {
    TrainSchedule s;
    s.lr0 = 0.0;
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s = TrainSchedule{};
    s.batch = 0;
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s = TrainSchedule{};
    s.hidden = 0;
    CHECK_THROWS_AS(s.validate(), ConfigError);
    CHECK_NOTHROW(TrainSchedule{}.validate());
}

TEST_CASE("softmax outputs normalize even for extreme logits") {
    IntegrationMLP mlp = random_mlp(6, 4, 3, 2);
    for (double& v : mlp.b2) v *= 400.0; // push logits far apart
    Rng rng(3);
    for (int round = 0; round < 10; ++round) {
        std::vector<double> x(6);
        for (double& v : x) v = rng.uniform(-5.0, 5.0);
        const auto p = mlp_forward(mlp, x);
        double sum = 0.0;
        for (double v : p) {
            CHECK(v >= 0.0);
            CHECK(std::isfinite(v));
            sum += v;
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("analytic gradients match central finite differences") {
    Matrix x;
    std::vector<std::int32_t> y;
    toy_batch(x, y, 6, 3, 11);
    IntegrationMLP mlp = random_mlp(9, 5, 3, 7);
    const MlpGradients grads = mlp_loss_gradient(mlp, x, y);
    const double h = 1e-5;

    auto check_param = [&](double& slot, double analytic) {
        const double keep = slot;
        slot = keep + h;
        const double up = mlp_loss(mlp, x, y);
        slot = keep - h;
        const double down = mlp_loss(mlp, x, y);
        slot = keep;
        const double numeric = (up - down) / (2.0 * h);
        CHECK(rel_dev(analytic, numeric) < 1e-4);
    };

    for (std::size_t i = 0; i < mlp.w1.data.size(); ++i) check_param(mlp.w1.data[i], grads.w1.data[i]);
    for (std::size_t i = 0; i < mlp.b1.size(); ++i) check_param(mlp.b1[i], grads.b1[i]);
    for (std::size_t i = 0; i < mlp.w2.data.size(); ++i) check_param(mlp.w2.data[i], grads.w2.data[i]);
    for (std::size_t i = 0; i < mlp.b2.size(); ++i) check_param(mlp.b2[i], grads.b2[i]);
}

TEST_CASE("a small toy set is memorized under an aggressive schedule") {
    Matrix x;
    std::vector<std::int32_t> y;
    toy_batch(x, y, 10, 2, 23);
    TrainSchedule s;
    s.lr0 = 1e-2;
    s.decay = 1.0;
    s.decay_every = 1000000;
    s.epochs = 2000;
    s.batch = 4;
    s.hidden = 16;
    s.seed = 5;
    std::vector<double> losses;
    const IntegrationMLP mlp = train_integration(x, y, 2, s, &losses);
    const auto labels = assign_labels(x, mlp);
    for (std::size_t i = 0; i < y.size(); ++i) CHECK(labels[i] == y[i]);
    REQUIRE(losses.size() == 2000);
    CHECK(losses.back() < losses.front());
}

TEST_CASE("training is deterministic under the seed") {
    Matrix x;
    std::vector<std::int32_t> y;
    toy_batch(x, y, 24, 3, 31);
    TrainSchedule s;
    s.epochs = 8;
    s.seed = 99;
    const IntegrationMLP a = train_integration(x, y, 3, s);
    const IntegrationMLP b = train_integration(x, y, 3, s);
    CHECK(a.w1.data == b.w1.data);
    CHECK(a.b1 == b.b1);
    CHECK(a.w2.data == b.w2.data);
    CHECK(a.b2 == b.b2);

    TrainSchedule other = s;
    other.seed = 100;
    const IntegrationMLP c = train_integration(x, y, 3, other);
    CHECK(a.w1.data != c.w1.data);
}

TEST_CASE("batch sizes that do not divide the sample count still work") {
    Matrix x;
    std::vector<std::int32_t> y;
    toy_batch(x, y, 7, 2, 41);
    TrainSchedule s;
    s.epochs = 3;
    s.batch = 4;
    const IntegrationMLP mlp = train_integration(x, y, 2, s);
    CHECK(mlp.n_inputs == 6);
    const auto labels = assign_labels(x, mlp);
    CHECK(labels.size() == 7);
}

TEST_CASE("zero-weight network ties every label to class zero") {
    IntegrationMLP mlp;
    mlp.n_inputs = 6;
    mlp.n_hidden = 4;
    mlp.n_classes = 3;
    mlp.w1 = Matrix(4, 6);
    mlp.b1.assign(4, 0.0);
    mlp.w2 = Matrix(3, 4);
    mlp.b2.assign(3, 0.0);
    Matrix x(5, 6);
    Rng rng(77);
    for (double& v : x.data) v = rng.uniform(-1.0, 1.0);
    const auto p = mlp_forward(mlp, x.row(0));
    for (double v : p) CHECK(v == doctest::Approx(1.0 / 3.0));
    for (std::int32_t l : assign_labels(x, mlp)) CHECK(l == 0);
}

TEST_CASE("glorot initialization stays within its bound") {
    Matrix x;
    std::vector<std::int32_t> y;
    toy_batch(x, y, 8, 2, 51);
    TrainSchedule s;
    s.epochs = 1;
    s.lr0 = 1e-300; // updates vanish, leaving the initial weights visible
    s.hidden = 10;
    const IntegrationMLP mlp = train_integration(x, y, 2, s);
    const double bound1 = std::sqrt(6.0 / (6 + 10));
    for (double v : mlp.w1.data) {
        CHECK(v <= bound1);
        CHECK(v >= -bound1);
    }
    const double bound2 = std::sqrt(6.0 / (10 + 2));
    for (double v : mlp.w2.data) {
        CHECK(v <= bound2);
        CHECK(v >= -bound2);
    }
    for (double v : mlp.b1) CHECK(std::abs(v) < 1e-200);
    for (double v : mlp.b2) CHECK(std::abs(v) < 1e-200);
}

TEST_CASE("bad targets and empty inputs are rejected") {
    Matrix x(4, 6);
    TrainSchedule s;
    const std::vector<std::int32_t> bad_class{0, 1, 2, 0};
    CHECK_THROWS_AS(train_integration(x, bad_class, 2, s), DataError);
    const std::vector<std::int32_t> short_targets{0, 1};
    CHECK_THROWS_AS(train_integration(x, short_targets, 2, s), DataError);
    const Matrix empty;
    CHECK_THROWS_AS(train_integration(empty, {}, 2, s), DataError);
    const std::vector<std::int32_t> ok{0, 1, 0, 1};
    CHECK_THROWS_AS(train_integration(x, ok, 0, s), ConfigError);
}

TEST_CASE("pixelize broadcasts superpixel labels") {
    const LabeledImage img = testutil::uniform_image(4, 4, 0, 0, 0);
    const SuperpixelMap map = segment_grid(img, 4);
    const std::vector<std::int32_t> sp_labels{3, 1, 4, 1};
    const auto pixels = pixelize(map, sp_labels);
    REQUIRE(pixels.size() == 16);
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c)
            CHECK(pixels[static_cast<std::size_t>(r) * 4 + c] ==
                  sp_labels[static_cast<std::size_t>(map.at(r, c))]);
}

TEST_CASE("ties at the output argmax pick the lowest class") {
    IntegrationMLP mlp;
    mlp.n_inputs = 3;
    mlp.n_hidden = 2;
    mlp.n_classes = 3;
    mlp.w1 = Matrix(2, 3);
    mlp.b1.assign(2, 0.0);
    mlp.w2 = Matrix(3, 2);
    mlp.b2 = {0.5, 0.5, 0.1}; // classes 0 and 1 tie exactly
    Matrix x(1, 3);
    const auto labels = assign_labels(x, mlp);
    CHECK(labels[0] == 0);
}
