#include "sceneparse/integration.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sceneparse/errors.hpp"
#include "sceneparse/rng.hpp"

namespace sceneparse {

void TrainSchedule::validate() const {
    if (!(lr0 > 0.0)) throw ConfigError("learning rate must be > 0");
    if (decay <= 0.0 || decay > 1.0) throw ConfigError("lr decay must be in (0,1]");
    if (decay_every < 1) throw ConfigError("decay interval must be >= 1");
    if (batch < 1) throw ConfigError("batch size must be >= 1");
    if (epochs < 1) throw ConfigError("epoch count must be >= 1");
    if (hidden < 1) throw ConfigError("hidden width must be >= 1");
}

double schedule_lr(const TrainSchedule& s, int epoch) {
    return s.lr0 * std::pow(s.decay, epoch / s.decay_every);
}

namespace {

void softmax_inplace(std::vector<double>& z) {
    const double m = *std::max_element(z.begin(), z.end());
    double total = 0.0;
    for (auto& v : z) {
        v = std::exp(v - m);
        total += v;
    }
    for (auto& v : z) v /= total;
}

struct ForwardState {
    std::vector<double> hidden; // post-ReLU activations
    std::vector<double> probs;  // softmax outputs
};

ForwardState forward(const IntegrationMLP& mlp, const double* x) {
    ForwardState st;
    st.hidden.resize(static_cast<std::size_t>(mlp.n_hidden));
    for (int h = 0; h < mlp.n_hidden; ++h) {
        double z = mlp.b1[static_cast<std::size_t>(h)];
        const double* w = mlp.w1.row(static_cast<std::size_t>(h)).data();
        for (int j = 0; j < mlp.n_inputs; ++j) z += w[j] * x[j];
        st.hidden[static_cast<std::size_t>(h)] = z > 0.0 ? z : 0.0;
    }
    st.probs.resize(static_cast<std::size_t>(mlp.n_classes));
    for (int c = 0; c < mlp.n_classes; ++c) {
        double z = mlp.b2[static_cast<std::size_t>(c)];
        const double* w = mlp.w2.row(static_cast<std::size_t>(c)).data();
        for (int h = 0; h < mlp.n_hidden; ++h) z += w[h] * st.hidden[static_cast<std::size_t>(h)];
        st.probs[static_cast<std::size_t>(c)] = z;
    }
    softmax_inplace(st.probs);
    return st;
}

void check_dims(const IntegrationMLP& mlp, const Matrix& x, const std::vector<std::int32_t>& y) {
    if (x.cols != static_cast<std::size_t>(mlp.n_inputs)) throw DataError("input width does not match mlp");
    if (y.size() != x.rows) throw DataError("target count does not match input rows");
    for (const auto t : y)
        if (t < 0 || t >= mlp.n_classes) throw DataError("target class out of range");
}

} // namespace

std::vector<double> mlp_forward(const IntegrationMLP& mlp, std::span<const double> x) {
    if (x.size() != static_cast<std::size_t>(mlp.n_inputs)) throw DataError("input width does not match mlp");
    return forward(mlp, x.data()).probs;
}

double mlp_loss(const IntegrationMLP& mlp, const Matrix& x, const std::vector<std::int32_t>& y) {
    check_dims(mlp, x, y);
    double loss = 0.0;
    for (std::size_t i = 0; i < x.rows; ++i) {
        const ForwardState st = forward(mlp, x.row(i).data());
        loss -= std::log(std::max(st.probs[static_cast<std::size_t>(y[i])], 1e-300));
    }
    return loss / static_cast<double>(x.rows);
}

MlpGradients mlp_loss_gradient(const IntegrationMLP& mlp, const Matrix& x,
                               const std::vector<std::int32_t>& y, double* loss_out) {
    check_dims(mlp, x, y);
    MlpGradients g;
    g.w1 = Matrix(static_cast<std::size_t>(mlp.n_hidden), static_cast<std::size_t>(mlp.n_inputs));
    g.b1.assign(static_cast<std::size_t>(mlp.n_hidden), 0.0);
    g.w2 = Matrix(static_cast<std::size_t>(mlp.n_classes), static_cast<std::size_t>(mlp.n_hidden));
    g.b2.assign(static_cast<std::size_t>(mlp.n_classes), 0.0);

    double loss = 0.0;
    const double inv_n = 1.0 / static_cast<double>(x.rows);
    std::vector<double> dhidden(static_cast<std::size_t>(mlp.n_hidden));
    for (std::size_t i = 0; i < x.rows; ++i) {
        const double* xi = x.row(i).data();
        const ForwardState st = forward(mlp, xi);
        loss -= std::log(std::max(st.probs[static_cast<std::size_t>(y[i])], 1e-300));

        // d(loss)/d(z2) = (softmax - onehot) / n
        for (int c = 0; c < mlp.n_classes; ++c) {
            const double dz2 = (st.probs[static_cast<std::size_t>(c)] - (c == y[i] ? 1.0 : 0.0)) * inv_n;
            g.b2[static_cast<std::size_t>(c)] += dz2;
            double* gw2 = g.w2.row(static_cast<std::size_t>(c)).data();
            for (int h = 0; h < mlp.n_hidden; ++h) gw2[h] += dz2 * st.hidden[static_cast<std::size_t>(h)];
        }

        std::fill(dhidden.begin(), dhidden.end(), 0.0);
        for (int c = 0; c < mlp.n_classes; ++c) {
            const double dz2 = (st.probs[static_cast<std::size_t>(c)] - (c == y[i] ? 1.0 : 0.0)) * inv_n;
            const double* w2 = mlp.w2.row(static_cast<std::size_t>(c)).data();
            for (int h = 0; h < mlp.n_hidden; ++h) dhidden[static_cast<std::size_t>(h)] += dz2 * w2[h];
        }
        for (int h = 0; h < mlp.n_hidden; ++h) {
            if (st.hidden[static_cast<std::size_t>(h)] <= 0.0) continue; // ReLU gate
            const double dz1 = dhidden[static_cast<std::size_t>(h)];
            g.b1[static_cast<std::size_t>(h)] += dz1;
            double* gw1 = g.w1.row(static_cast<std::size_t>(h)).data();
            for (int j = 0; j < mlp.n_inputs; ++j) gw1[j] += dz1 * xi[j];
        }
    }
    if (loss_out) *loss_out = loss * inv_n;
    return g;
}

IntegrationMLP train_integration(const Matrix& inputs, const std::vector<std::int32_t>& targets,
                                 int n_classes, const TrainSchedule& schedule,
                                 std::vector<double>* epoch_loss) {
    schedule.validate();
    if (n_classes < 1) throw ConfigError("class count must be >= 1");
    if (inputs.rows == 0) throw DataError("cannot train on an empty input matrix");

    IntegrationMLP mlp;
    mlp.n_inputs = static_cast<int>(inputs.cols);
    mlp.n_hidden = schedule.hidden;
    mlp.n_classes = n_classes;
    mlp.w1 = Matrix(static_cast<std::size_t>(mlp.n_hidden), inputs.cols);
    mlp.b1.assign(static_cast<std::size_t>(mlp.n_hidden), 0.0);
    mlp.w2 = Matrix(static_cast<std::size_t>(n_classes), static_cast<std::size_t>(mlp.n_hidden));
    mlp.b2.assign(static_cast<std::size_t>(n_classes), 0.0);
    check_dims(mlp, inputs, targets);

    {
        Rng init_rng(derive_seed(schedule.seed, "mlp-init"));
        const double lim1 = std::sqrt(6.0 / (mlp.n_inputs + mlp.n_hidden));
        for (auto& w : mlp.w1.data) w = init_rng.uniform(-lim1, lim1);
        const double lim2 = std::sqrt(6.0 / (mlp.n_hidden + mlp.n_classes));
        for (auto& w : mlp.w2.data) w = init_rng.uniform(-lim2, lim2);
    }

    if (epoch_loss) epoch_loss->clear();
    std::vector<std::size_t> order(inputs.rows);
    std::iota(order.begin(), order.end(), 0);

    Matrix batch_x;
    std::vector<std::int32_t> batch_y;
    for (int epoch = 0; epoch < schedule.epochs; ++epoch) {
        Rng shuffle_rng(derive_seed(schedule.seed, "mlp-shuffle", static_cast<std::uint64_t>(epoch)));
        shuffle_rng.shuffle(order);
        const double lr = schedule_lr(schedule, epoch);

        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(schedule.batch)) {
            const std::size_t count = std::min(static_cast<std::size_t>(schedule.batch), order.size() - start);
            batch_x = Matrix(count, inputs.cols);
            batch_y.resize(count);
            for (std::size_t i = 0; i < count; ++i) {
                const std::size_t src = order[start + i];
                std::copy_n(inputs.row(src).data(), inputs.cols, batch_x.row(i).data());
                batch_y[i] = targets[src];
            }
            double batch_loss = 0.0;
            const MlpGradients g = mlp_loss_gradient(mlp, batch_x, batch_y, &batch_loss);
            loss_sum += batch_loss * static_cast<double>(count);

            // Updates follow the gradient summed over the mini-batch; the
            // reported loss stays a per-sample mean.
            const double step = lr * static_cast<double>(count);
            for (std::size_t k = 0; k < mlp.w1.data.size(); ++k) mlp.w1.data[k] -= step * g.w1.data[k];
            for (std::size_t k = 0; k < mlp.b1.size(); ++k) mlp.b1[k] -= step * g.b1[k];
            for (std::size_t k = 0; k < mlp.w2.data.size(); ++k) mlp.w2.data[k] -= step * g.w2.data[k];
            for (std::size_t k = 0; k < mlp.b2.size(); ++k) mlp.b2[k] -= step * g.b2[k];
        }
        if (epoch_loss) epoch_loss->push_back(loss_sum / static_cast<double>(inputs.rows));
    }
    return mlp;
}

std::vector<std::int32_t> assign_labels(const Matrix& inputs, const IntegrationMLP& mlp) {
    std::vector<std::int32_t> labels(inputs.rows);
    for (std::size_t i = 0; i < inputs.rows; ++i) {
        const auto probs = forward(mlp, inputs.row(i).data()).probs;
        std::size_t best = 0;
        for (std::size_t c = 1; c < probs.size(); ++c)
            if (probs[c] > probs[best]) best = c;
        labels[i] = static_cast<std::int32_t>(best);
    }
    return labels;
}

std::vector<std::int32_t> pixelize(const SuperpixelMap& map, const std::vector<std::int32_t>& sp_labels) {
    if (sp_labels.size() != static_cast<std::size_t>(map.n_actual))
        throw DataError("superpixel label count does not match map");
    std::vector<std::int32_t> out(map.assignment.size());
    for (std::size_t p = 0; p < out.size(); ++p) out[p] = sp_labels[static_cast<std::size_t>(map.assignment[p])];
    return out;
}

} // namespace sceneparse
