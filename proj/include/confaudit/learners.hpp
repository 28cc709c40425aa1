#pragma once

// Tabular learners trained with Adam: linear and one-hidden-layer (tanh) MLP
// heads with binary cross-entropy, softmax cross-entropy or squared-error loss.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "confaudit/error.hpp"
#include "confaudit/metrics.hpp"
#include "confaudit/rng.hpp"

namespace confaudit {

/// Dense row-major matrix.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    std::span<double> row(std::size_t i) noexcept { return {data.data() + i * cols, cols}; }
    std::span<const double> row(std::size_t i) const noexcept { return {data.data() + i * cols, cols}; }
    double& operator()(std::size_t i, std::size_t j) noexcept { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data[i * cols + j]; }

    friend bool operator==(const Matrix&, const Matrix&) = default;
};

enum class TaskType { Binary, Multiclass, Regression };

struct TaskKind {
    TaskType type = TaskType::Binary;
    std::size_t classes = 2;  ///< only meaningful for Multiclass

    static TaskKind binary() { return {TaskType::Binary, 2}; }
    static TaskKind multiclass(std::size_t k) {
        if (k < 2) throw ConfigError("classes", "multiclass task needs at least 2 classes");
        return {TaskType::Multiclass, k};
    }
    static TaskKind regression() { return {TaskType::Regression, 0}; }

    std::size_t outputs() const noexcept { return type == TaskType::Multiclass ? classes : 1; }
    bool is_classification() const noexcept { return type != TaskType::Regression; }

    friend bool operator==(const TaskKind&, const TaskKind&) = default;
};

enum class Architecture { Linear, Mlp };

/// Flat parameter vector with layout
///   Linear: W[out x in], b[out]
///   Mlp:    W1[hidden x in], b1[hidden], W2[out x hidden], b2[out]
/// Regression heads also carry an output affine map (prediction =
/// shift + scale * raw output), fitted from the training targets.
struct ModelParams {
    Architecture architecture = Architecture::Linear;
    std::size_t input_dim = 0;
    std::size_t hidden = 0;
    std::size_t output_dim = 1;
    std::vector<double> weights;
    double target_shift = 0.0;
    double target_scale = 1.0;

    static std::size_t count(Architecture a, std::size_t in, std::size_t hidden, std::size_t out) noexcept {
        if (a == Architecture::Linear) return out * in + out;
        return hidden * in + hidden + out * hidden + out;
    }

    static ModelParams zeros(Architecture a, std::size_t in, std::size_t hidden, std::size_t out) {
        ModelParams p;
        p.architecture = a;
        p.input_dim = in;
        p.hidden = a == Architecture::Mlp ? hidden : 0;
        p.output_dim = out;
        p.weights.assign(count(a, in, p.hidden, out), 0.0);
        return p;
    }

    /// Xavier-uniform weights and zero biases for the MLP; all zeros for Linear.
    static ModelParams initial(Architecture a, std::size_t in, std::size_t hidden, std::size_t out,
                               std::uint64_t seed) {
        ModelParams p = zeros(a, in, hidden, out);
        if (a == Architecture::Linear) return p;
        Rng rng(seed);
        const double a1 = std::sqrt(6.0 / static_cast<double>(in + hidden));
        const double a2 = std::sqrt(6.0 / static_cast<double>(hidden + out));
        std::size_t k = 0;
        for (std::size_t i = 0; i < hidden * in; ++i) p.weights[k++] = (2.0 * rng.uniform() - 1.0) * a1;
        k += hidden;
        for (std::size_t i = 0; i < out * hidden; ++i) p.weights[k++] = (2.0 * rng.uniform() - 1.0) * a2;
        return p;
    }

    void check() const {
        if (weights.size() != count(architecture, input_dim, hidden, output_dim))
            throw DataError("model parameters do not match their declared dimensions");
    }

    friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

// ---------------------------------------------------------------------------
// Forward / backward
// ---------------------------------------------------------------------------

namespace detail {

inline double sigmoid(double z) noexcept {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

inline double softplus(double z) noexcept { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

// Raw outputs for one example. `hidden_act` receives the MLP activations.
inline void forward(const ModelParams& p, std::span<const double> x, std::span<double> out,
                    std::span<double> hidden_act) {
    const std::size_t in = p.input_dim;
    const double* w = p.weights.data();
    if (p.architecture == Architecture::Linear) {
        const double* b = w + p.output_dim * in;
        for (std::size_t o = 0; o < p.output_dim; ++o) {
            double z = b[o];
            const double* wr = w + o * in;
            for (std::size_t k = 0; k < in; ++k) z += wr[k] * x[k];
            out[o] = z;
        }
        return;
    }
    const std::size_t h = p.hidden;
    const double* b1 = w + h * in;
    const double* w2 = b1 + h;
    const double* b2 = w2 + p.output_dim * h;
    for (std::size_t u = 0; u < h; ++u) {
        double z = b1[u];
        const double* wr = w + u * in;
        for (std::size_t k = 0; k < in; ++k) z += wr[k] * x[k];
        hidden_act[u] = std::tanh(z);
    }
    for (std::size_t o = 0; o < p.output_dim; ++o) {
        double z = b2[o];
        const double* wr = w2 + o * h;
        for (std::size_t u = 0; u < h; ++u) z += wr[u] * hidden_act[u];
        out[o] = z;
    }
}

// Per-example loss; writes dLoss/dOutput into `delta`.
inline double output_loss(const TaskKind& task, std::span<const double> z, double y, std::span<double> delta) {
    switch (task.type) {
        case TaskType::Binary: {
            delta[0] = sigmoid(z[0]) - y;
            return softplus(z[0]) - y * z[0];
        }
        case TaskType::Regression: {
            const double r = z[0] - y;
            delta[0] = 2.0 * r;
            return r * r;
        }
        case TaskType::Multiclass: {
            const double zmax = *std::max_element(z.begin(), z.end());
            double sum = 0.0;
            for (std::size_t c = 0; c < z.size(); ++c) sum += std::exp(z[c] - zmax);
            const double lse = zmax + std::log(sum);
            const auto cls = static_cast<std::size_t>(y);
            for (std::size_t c = 0; c < z.size(); ++c) delta[c] = std::exp(z[c] - lse) - (c == cls ? 1.0 : 0.0);
            return lse - z[cls];
        }
    }
    return 0.0;
}

inline void check_labels(const TaskKind& task, std::span<const double> y) {
    for (double v : y) {
        if (!std::isfinite(v)) throw DataError("non-finite label");
        if (task.type == TaskType::Binary && v != 0.0 && v != 1.0)
            throw DataError("binary labels must be 0 or 1");
        if (task.type == TaskType::Multiclass &&
            (v < 0.0 || v != std::floor(v) || v >= static_cast<double>(task.classes)))
            throw DataError("multiclass labels must be integers in [0, " + std::to_string(task.classes) + ")");
    }
}

// Mean loss and gradient over the given rows of X (all rows when `rows` is empty).
inline double loss_grad_rows(const ModelParams& p, const Matrix& X, std::span<const double> y,
                             std::span<const std::size_t> rows, const TaskKind& task, std::vector<double>* grad) {
    const std::size_t n = rows.empty() ? X.rows : rows.size();
    const std::size_t in = p.input_dim;
    const std::size_t out = p.output_dim;
    const std::size_t h = p.hidden;
    std::vector<double> z(out), delta(out), act(h), dact(h);
    if (grad) grad->assign(p.weights.size(), 0.0);
    double loss = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        const std::size_t i = rows.empty() ? t : rows[t];
        const auto x = X.row(i);
        forward(p, x, z, act);
        loss += output_loss(task, z, y[i], delta);
        if (!grad) continue;
        double* g = grad->data();
        if (p.architecture == Architecture::Linear) {
            double* gb = g + out * in;
            for (std::size_t o = 0; o < out; ++o) {
                double* gr = g + o * in;
                for (std::size_t k = 0; k < in; ++k) gr[k] += delta[o] * x[k];
                gb[o] += delta[o];
            }
            continue;
        }
        const double* w2 = p.weights.data() + h * in + h;
        double* gb1 = g + h * in;
        double* gw2 = gb1 + h;
        double* gb2 = gw2 + out * h;
        std::fill(dact.begin(), dact.end(), 0.0);
        for (std::size_t o = 0; o < out; ++o) {
            for (std::size_t u = 0; u < h; ++u) {
                gw2[o * h + u] += delta[o] * act[u];
                dact[u] += delta[o] * w2[o * h + u];
            }
            gb2[o] += delta[o];
        }
        for (std::size_t u = 0; u < h; ++u) {
            const double dz = dact[u] * (1.0 - act[u] * act[u]);
            double* gr = g + u * in;
            for (std::size_t k = 0; k < in; ++k) gr[k] += dz * x[k];
            gb1[u] += dz;
        }
    }
    const double inv = 1.0 / static_cast<double>(n);
    if (grad)
        for (double& v : *grad) v *= inv;
    return loss * inv;
}

inline void check_batch(const ModelParams& p, const Matrix& X, std::span<const double> y) {
    p.check();
    if (X.rows == 0) throw DataError("empty batch");
    if (X.cols != p.input_dim)
        throw DataError("feature dimension " + std::to_string(X.cols) + " does not match model input dimension " +
                        std::to_string(p.input_dim));
    if (y.size() != X.rows) throw DataError("batch has " + std::to_string(X.rows) + " rows but " +
                                            std::to_string(y.size()) + " labels");
    for (double v : X.data)
        if (!std::isfinite(v)) throw DataError("non-finite feature value");
}

}  // namespace detail

struct LossGrad {
    double loss = 0.0;
    std::vector<double> gradient;
};

/// Mean loss over the batch and its gradient with respect to params.weights.
inline LossGrad loss_grad(const ModelParams& params, const Matrix& X, std::span<const double> y,
                          const TaskKind& task) {
    detail::check_batch(params, X, y);
    if (params.output_dim != task.outputs()) throw DataError("model output arity does not match the task");
    detail::check_labels(task, y);
    LossGrad out;
    out.loss = detail::loss_grad_rows(params, X, y, {}, task, &out.gradient);
    return out;
}

// ---------------------------------------------------------------------------
// Optimizer
// ---------------------------------------------------------------------------

struct TrainConfig {
    Architecture architecture = Architecture::Linear;
    std::size_t hidden = 32;
    double learning_rate = 0.01;
    double beta1 = 0.9;  ///< "momentum"
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double lr_decay_gamma = 0.1;
    std::size_t lr_decay_every = 0;  ///< epochs per decay step; 0 = ceil(epochs / 3)
    std::size_t epochs = 50;
    std::size_t batch_size = 128;
    std::size_t patience = 5;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(learning_rate > 0.0)) throw ConfigError("learning_rate", "learning_rate must be > 0");
        if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("beta1", "beta1 must be in [0, 1)");
        if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("beta2", "beta2 must be in [0, 1)");
        if (!(epsilon > 0.0)) throw ConfigError("epsilon", "epsilon must be > 0");
        if (!(lr_decay_gamma > 0.0 && lr_decay_gamma <= 1.0))
            throw ConfigError("lr_decay_gamma", "lr_decay_gamma must be in (0, 1]");
        if (epochs == 0) throw ConfigError("epochs", "epochs must be >= 1");
        if (batch_size == 0) throw ConfigError("batch_size", "batch_size must be >= 1");
        if (architecture == Architecture::Mlp && hidden == 0) throw ConfigError("hidden", "hidden must be >= 1");
    }

    std::size_t decay_every() const noexcept { return lr_decay_every ? lr_decay_every : (epochs + 2) / 3; }

    /// Step decay: lr * gamma^floor(epoch / decay_every).
    double learning_rate_at(std::size_t epoch) const noexcept {
        return learning_rate * std::pow(lr_decay_gamma, static_cast<double>(epoch / decay_every()));
    }

    friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::uint64_t step = 0;
    std::size_t epoch = 0;  ///< selects the scheduled learning rate

    static AdamState for_params(std::size_t n) { return {std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), 0, 0}; }

    friend bool operator==(const AdamState&, const AdamState&) = default;
};

struct AdamResult {
    std::vector<double> params;
    AdamState state;
};

/// Bias-corrected Adam update at the learning rate scheduled for state.epoch.
inline AdamResult adam_step(std::span<const double> params, std::span<const double> gradient, const AdamState& state,
                            const TrainConfig& config) {
    if (gradient.size() != params.size() || state.m.size() != params.size() || state.v.size() != params.size())
        throw DataError("adam: state, gradient and parameter sizes differ");
    for (double g : gradient)
        if (!std::isfinite(g)) throw DataError("adam: non-finite gradient");
    AdamResult r{std::vector<double>(params.begin(), params.end()), state};
    r.state.step = state.step + 1;
    const double t = static_cast<double>(r.state.step);
    const double lr = config.learning_rate_at(state.epoch);
    const double c1 = 1.0 - std::pow(config.beta1, t);
    const double c2 = 1.0 - std::pow(config.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        r.state.m[i] = config.beta1 * state.m[i] + (1.0 - config.beta1) * gradient[i];
        r.state.v[i] = config.beta2 * state.v[i] + (1.0 - config.beta2) * gradient[i] * gradient[i];
        const double mhat = r.state.m[i] / c1;
        const double vhat = r.state.v[i] / c2;
        r.params[i] -= lr * mhat / (std::sqrt(vhat) + config.epsilon);
    }
    return r;
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

struct LabeledData {
    Matrix X;
    std::vector<double> y;

    std::size_t size() const noexcept { return X.rows; }
};

struct TrainedModel {
    ModelParams params;
    TaskKind task;
    TrainConfig config;
    std::vector<double> validation_history;  ///< validation metric per completed epoch
    std::size_t best_epoch = 0;

    friend bool operator==(const TrainedModel&, const TrainedModel&) = default;
};

namespace detail {

inline Matrix raw_outputs(const ModelParams& p, const Matrix& X) {
    if (X.cols != p.input_dim)
        throw DataError("feature dimension " + std::to_string(X.cols) + " does not match model input dimension " +
                        std::to_string(p.input_dim));
    Matrix out(X.rows, p.output_dim);
    std::vector<double> act(p.hidden);
    for (std::size_t i = 0; i < X.rows; ++i) forward(p, X.row(i), out.row(i), act);
    return out;
}

// Largest double below 1; keeps binary scores strictly inside (0, 1).
inline constexpr double kScoreCeiling = 1.0 - 0x1.0p-53;

inline Matrix link(const TaskKind& task, const ModelParams& p, Matrix z) {
    switch (task.type) {
        case TaskType::Binary:
            for (double& v : z.data) v = std::clamp(sigmoid(v), std::numeric_limits<double>::min(), kScoreCeiling);
            break;
        case TaskType::Regression:
            for (double& v : z.data) v = p.target_shift + p.target_scale * v;
            break;
        case TaskType::Multiclass:
            for (std::size_t i = 0; i < z.rows; ++i) {
                auto row = z.row(i);
                const double zmax = *std::max_element(row.begin(), row.end());
                double sum = 0.0;
                for (double& v : row) sum += (v = std::exp(v - zmax));
                for (double& v : row) v /= sum;
            }
            break;
    }
    return z;
}

// Classification: AUROC (macro one-vs-rest for multiclass), higher is better.
// Regression: MAE in target units, lower is better.
inline double validation_metric(const TaskKind& task, const Matrix& probs, std::span<const double> y) {
    if (task.type == TaskType::Regression) return mae(probs.data, y);
    std::vector<int> labels(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) labels[i] = static_cast<int>(y[i]);
    if (task.type == TaskType::Binary) return auroc(probs.data, labels);
    double sum = 0.0;
    std::size_t present = 0;
    std::vector<double> col(y.size());
    std::vector<int> ind(y.size());
    for (std::size_t c = 0; c < task.classes; ++c) {
        std::size_t pos = 0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            col[i] = probs(i, c);
            ind[i] = labels[i] == static_cast<int>(c);
            pos += static_cast<std::size_t>(ind[i]);
        }
        if (pos == 0 || pos == y.size()) continue;
        sum += auroc(col, ind);
        ++present;
    }
    return sum / static_cast<double>(present);
}

inline void check_validation_classes(const TaskKind& task, std::span<const double> y) {
    if (!task.is_classification()) return;
    std::vector<bool> seen(task.outputs() == 1 ? 2 : task.classes, false);
    for (double v : y) seen[static_cast<std::size_t>(v)] = true;
    if (std::count(seen.begin(), seen.end(), true) < 2)
        throw DataError("validation labels contain a single class; AUROC is undefined");
}

}  // namespace detail

/// Mini-batch Adam with per-epoch shuffling, step learning-rate decay and
/// early stopping; returns the snapshot with the best validation metric.
inline TrainedModel fit(const LabeledData& train, const LabeledData& val, const TaskKind& task,
                        const TrainConfig& config) {
    config.validate();
    if (train.size() == 0) throw DataError("fit: empty training set");
    if (val.size() == 0) throw DataError("fit: empty validation set");
    if (train.X.cols != val.X.cols) throw DataError("fit: training and validation feature dimensions differ");
    if (train.y.size() != train.size() || val.y.size() != val.size())
        throw DataError("fit: label count does not match row count");
    detail::check_labels(task, train.y);
    detail::check_labels(task, val.y);
    detail::check_validation_classes(task, val.y);
    for (double v : train.X.data)
        if (!std::isfinite(v)) throw DataError("fit: non-finite training feature");

    ModelParams params = ModelParams::initial(config.architecture, train.X.cols, config.hidden, task.outputs(),
                                              derive_seed(config.seed, {0x1417}));
    std::vector<double> y = train.y;
    if (task.type == TaskType::Regression) {
        const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
        double ss = 0.0;
        for (double v : y) ss += (v - mean) * (v - mean);
        const double sd = std::sqrt(ss / static_cast<double>(y.size()));
        params.target_shift = mean;
        params.target_scale = sd > 0.0 ? sd : 1.0;
        for (double& v : y) v = (v - params.target_shift) / params.target_scale;
    }

    TrainedModel best{params, task, config, {}, 0};
    const bool higher_is_better = task.is_classification();
    double best_metric = higher_is_better ? -std::numeric_limits<double>::infinity()
                                          : std::numeric_limits<double>::infinity();
    AdamState state = AdamState::for_params(params.weights.size());
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<double> grad;
    std::size_t since_best = 0;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        Rng rng(derive_seed(config.seed, {0xE90C, epoch}));
        rng.shuffle(order);
        state.epoch = epoch;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t stop = std::min(order.size(), start + config.batch_size);
            const std::span<const std::size_t> rows(order.data() + start, stop - start);
            detail::loss_grad_rows(params, train.X, y, rows, task, &grad);
            auto step = adam_step(params.weights, grad, state, config);
            params.weights = std::move(step.params);
            state = std::move(step.state);
        }
        const double metric =
            detail::validation_metric(task, detail::link(task, params, detail::raw_outputs(params, val.X)), val.y);
        best.validation_history.push_back(metric);
        const bool improved = higher_is_better ? metric > best_metric : metric < best_metric;
        if (improved) {
            best_metric = metric;
            best.params = params;
            best.best_epoch = epoch;
            since_best = 0;
        } else if (++since_best >= config.patience && config.patience > 0) {
            break;
        }
    }
    return best;
}

/// n x outputs: probabilities (binary column / multiclass rows) or predictions.
inline Matrix predict(const TrainedModel& model, const Matrix& X) {
    model.params.check();
    return detail::link(model.task, model.params, detail::raw_outputs(model.params, X));
}

/// Single-output convenience: the positive-class probability or the prediction.
inline std::vector<double> predict_scores(const TrainedModel& model, const Matrix& X) {
    if (model.task.outputs() != 1) throw DataError("predict_scores requires a single-output model");
    return predict(model, X).data;
}

// ---------------------------------------------------------------------------
// Gradient check
// ---------------------------------------------------------------------------

struct GradCheckOptions {
    double step = 1e-5;
    double tolerance = 1e-5;
    double relative_floor = 1e-4;  ///< denominator floor for near-zero numeric gradients
    double analytic_scale = 1.0;   ///< multiplies the analytic gradient (fault injection)
};

struct GradCheckReport {
    double max_relative_error = 0.0;
    double max_abs_error = 0.0;
    double max_abs_numeric = 0.0;
    bool passed = false;
};

/// Compares the analytic gradient against central differences; the relative
/// error per coordinate is |a - n| / max(|n|, relative_floor).
inline GradCheckReport grad_check(const ModelParams& params, const Matrix& X, std::span<const double> y,
                                  const TaskKind& task, const GradCheckOptions& opt = {}) {
    auto analytic = loss_grad(params, X, y, task).gradient;
    for (double& g : analytic) g *= opt.analytic_scale;
    ModelParams probe = params;
    GradCheckReport r;
    for (std::size_t i = 0; i < params.weights.size(); ++i) {
        const double w = params.weights[i];
        probe.weights[i] = w + opt.step;
        const double up = detail::loss_grad_rows(probe, X, y, {}, task, nullptr);
        probe.weights[i] = w - opt.step;
        const double down = detail::loss_grad_rows(probe, X, y, {}, task, nullptr);
        probe.weights[i] = w;
        const double numeric = (up - down) / (2.0 * opt.step);
        const double abs_err = std::abs(analytic[i] - numeric);
        r.max_abs_error = std::max(r.max_abs_error, abs_err);
        r.max_abs_numeric = std::max(r.max_abs_numeric, std::abs(numeric));
        r.max_relative_error = std::max(r.max_relative_error, abs_err / std::max(std::abs(numeric), opt.relative_floor));
    }
    r.passed = r.max_relative_error < opt.tolerance;
    return r;
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

inline std::string_view to_token(TaskType t) noexcept {
    switch (t) {
        case TaskType::Binary: return "binary";
        case TaskType::Multiclass: return "multiclass";
        case TaskType::Regression: return "regression";
    }
    return "binary";
}

inline std::string_view to_token(Architecture a) noexcept { return a == Architecture::Linear ? "linear" : "mlp"; }

inline Architecture parse_architecture(std::string_view s) {
    if (s == "linear") return Architecture::Linear;
    if (s == "mlp") return Architecture::Mlp;
    throw ConfigError("architecture", "unknown architecture '" + std::string(s) + "' (expected linear or mlp)");
}

inline void to_json(nlohmann::json& j, const TrainConfig& c) {
    j = nlohmann::json{{"architecture", std::string(to_token(c.architecture))},
                       {"hidden", c.hidden},
                       {"learning_rate", c.learning_rate},
                       {"beta1", c.beta1},
                       {"beta2", c.beta2},
                       {"epsilon", c.epsilon},
                       {"lr_decay_gamma", c.lr_decay_gamma},
                       {"lr_decay_every", c.lr_decay_every},
                       {"epochs", c.epochs},
                       {"batch_size", c.batch_size},
                       {"patience", c.patience},
                       {"seed", c.seed}};
}

inline void from_json(const nlohmann::json& j, TrainConfig& c) {
    c.architecture = parse_architecture(j.at("architecture").get<std::string>());
    c.hidden = j.at("hidden").get<std::size_t>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.beta1 = j.at("beta1").get<double>();
    c.beta2 = j.at("beta2").get<double>();
    c.epsilon = j.at("epsilon").get<double>();
    c.lr_decay_gamma = j.at("lr_decay_gamma").get<double>();
    c.lr_decay_every = j.at("lr_decay_every").get<std::size_t>();
    c.epochs = j.at("epochs").get<std::size_t>();
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.patience = j.at("patience").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
}

inline void to_json(nlohmann::json& j, const TrainedModel& m) {
    j = nlohmann::json{
        {"task", {{"type", std::string(to_token(m.task.type))}, {"classes", m.task.classes}}},
        {"architecture", std::string(to_token(m.params.architecture))},
        {"dims", {{"input", m.params.input_dim}, {"hidden", m.params.hidden}, {"output", m.params.output_dim}}},
        {"weights", m.params.weights},
        {"target_shift", m.params.target_shift},
        {"target_scale", m.params.target_scale},
        {"config", m.config},
        {"seed", m.config.seed},
        {"validation_history", m.validation_history},
        {"best_epoch", m.best_epoch}};
}

inline void from_json(const nlohmann::json& j, TrainedModel& m) {
    const auto type = j.at("task").at("type").get<std::string>();
    if (type == "binary")
        m.task = TaskKind::binary();
    else if (type == "multiclass")
        m.task = TaskKind::multiclass(j.at("task").at("classes").get<std::size_t>());
    else if (type == "regression")
        m.task = TaskKind::regression();
    else
        throw DataError("unknown task type '" + type + "'");
    m.params.architecture = parse_architecture(j.at("architecture").get<std::string>());
    m.params.input_dim = j.at("dims").at("input").get<std::size_t>();
    m.params.hidden = j.at("dims").at("hidden").get<std::size_t>();
    m.params.output_dim = j.at("dims").at("output").get<std::size_t>();
    m.params.weights = j.at("weights").get<std::vector<double>>();
    m.params.target_shift = j.at("target_shift").get<double>();
    m.params.target_scale = j.at("target_scale").get<double>();
    m.config = j.at("config").get<TrainConfig>();
    m.validation_history = j.at("validation_history").get<std::vector<double>>();
    m.best_epoch = j.at("best_epoch").get<std::size_t>();
    m.params.check();
}

}  // namespace confaudit
