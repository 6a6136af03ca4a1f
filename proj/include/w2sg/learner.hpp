#pragma once

// Differentiable binary classifier: tanh MLP backbone whose last hidden layer
// is the embedding z, followed by two linear heads (task head and P(IK) head).
// Each head is a two-output softmax parametrized by its logit difference, so
// a head contributes embedding_dimension + 1 parameters.

#include <cmath>
#include <cstddef>
#include <fstream>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "w2sg/common.hpp"
#include "w2sg/dataset.hpp"
#include "w2sg/losses.hpp"

namespace w2sg {

enum class CapacityTier { weak, strong };

inline std::string_view to_string(CapacityTier t) { return t == CapacityTier::weak ? "weak" : "strong"; }

inline CapacityTier parse_capacity_tier(std::string_view s) {
    if (s == "weak") return CapacityTier::weak;
    if (s == "strong") return CapacityTier::strong;
    throw Error("unknown capacity tier '" + std::string(s) + "'");
}

inline constexpr std::string_view kActivation = "tanh";

struct LearnerSpec {
    std::size_t input_dimension = 0;
    // Number of leading features the learner sees; 0 means all of them.
    std::size_t visible_features = 0;
    std::vector<std::size_t> hidden_widths;
    CapacityTier capacity_tier = CapacityTier::strong;
    std::uint64_t seed = 0;
    double init_scale = 1.0;

    std::size_t visible() const { return visible_features == 0 ? input_dimension : visible_features; }
    std::size_t embedding_dimension() const {
        return hidden_widths.empty() ? visible() : hidden_widths.back();
    }

    void validate() const {
        if (input_dimension == 0) throw Error("learner spec: input_dimension must be positive");
        if (visible_features > input_dimension) {
            throw Error("learner spec: visible_features exceeds input_dimension");
        }
        for (auto w : hidden_widths) {
            if (w == 0) throw Error("learner spec: hidden widths must be positive");
        }
        if (!(init_scale >= 0.0)) throw Error("learner spec: init_scale must be nonnegative");
    }

    friend bool operator==(const LearnerSpec&, const LearnerSpec&) = default;
};

/// Offsets of every tensor inside the flat parameter vector.
struct ParameterLayout {
    struct Dense {
        std::size_t in = 0;
        std::size_t out = 0;
        std::size_t weight = 0;  // row-major out x in
        std::size_t bias = 0;
    };
    std::vector<Dense> hidden;
    std::size_t embedding = 0;
    std::size_t task_weight = 0;
    std::size_t task_bias = 0;
    std::size_t ik_weight = 0;
    std::size_t ik_bias = 0;
    std::size_t total = 0;

    explicit ParameterLayout(const LearnerSpec& spec) {
        std::size_t cursor = 0;
        std::size_t in = spec.visible();
        for (auto width : spec.hidden_widths) {
            Dense d{in, width, cursor, cursor + in * width};
            cursor = d.bias + width;
            hidden.push_back(d);
            in = width;
        }
        embedding = in;
        task_weight = cursor;
        task_bias = task_weight + embedding;
        ik_weight = task_bias + 1;
        ik_bias = ik_weight + embedding;
        total = ik_bias + 1;
    }
};

struct LearnerState {
    LearnerSpec spec;
    std::vector<double> parameters;
    std::size_t step_count = 0;

    ParameterLayout layout() const { return ParameterLayout(spec); }

    friend bool operator==(const LearnerState&, const LearnerState&) = default;
};

struct Prediction {
    double p1 = 0.5;   // task head probability of class 1
    double pik = 0.5;  // P(IK) head probability
    std::vector<double> embedding;
};

enum class Head { task, ik };

/// Probability of class 1 for a two-output head given both class logits.
inline double binary_softmax(double logit0, double logit1) { return sigmoid(logit1 - logit0); }

inline LearnerState init_learner(const LearnerSpec& spec) {
    spec.validate();
    LearnerState state{spec, {}, 0};
    const ParameterLayout layout(spec);
    state.parameters.assign(layout.total, 0.0);
    Rng rng(mix_seed(spec.seed, "init"));
    std::normal_distribution<double> normal(0.0, 1.0);
    for (const auto& d : layout.hidden) {
        const double scale = spec.init_scale / std::sqrt(static_cast<double>(d.in));
        for (std::size_t i = 0; i < d.in * d.out; ++i) state.parameters[d.weight + i] = scale * normal(rng);
    }
    const double head_scale = 0.01 * spec.init_scale;
    for (std::size_t i = 0; i < layout.embedding; ++i) {
        state.parameters[layout.task_weight + i] = head_scale * normal(rng);
    }
    for (std::size_t i = 0; i < layout.embedding; ++i) {
        state.parameters[layout.ik_weight + i] = head_scale * normal(rng);
    }
    return state;
}

namespace detail {

using RowMatrixMap = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using MutRowMatrixMap = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using VecMap = Eigen::Map<const Eigen::VectorXd>;
using MutVecMap = Eigen::Map<Eigen::VectorXd>;

struct ForwardCache {
    std::vector<Eigen::VectorXd> activations;  // [0] = visible input, back() = embedding
    double task_logit = 0.0;
    double ik_logit = 0.0;
};

inline void forward_cached(const LearnerState& state, const ParameterLayout& layout,
                           std::span<const double> features, ForwardCache& cache) {
    if (features.size() != state.spec.input_dimension) {
        throw Error("feature dimension " + std::to_string(features.size()) + " does not match learner input " +
                    std::to_string(state.spec.input_dimension));
    }
    const double* p = state.parameters.data();
    cache.activations.resize(layout.hidden.size() + 1);
    cache.activations[0] = VecMap(features.data(), static_cast<Eigen::Index>(state.spec.visible()));
    for (std::size_t l = 0; l < layout.hidden.size(); ++l) {
        const auto& d = layout.hidden[l];
        RowMatrixMap w(p + d.weight, static_cast<Eigen::Index>(d.out), static_cast<Eigen::Index>(d.in));
        VecMap b(p + d.bias, static_cast<Eigen::Index>(d.out));
        cache.activations[l + 1] = (w * cache.activations[l] + b).array().tanh().matrix();
    }
    const auto& z = cache.activations.back();
    const auto e = static_cast<Eigen::Index>(layout.embedding);
    cache.task_logit = VecMap(p + layout.task_weight, e).dot(z) + p[layout.task_bias];
    cache.ik_logit = VecMap(p + layout.ik_weight, e).dot(z) + p[layout.ik_bias];
}

// Adds d(loss)/d(params) into grad given d(loss)/d(logit) for each head.
inline void backward_accumulate(const LearnerState& state, const ParameterLayout& layout,
                                const ForwardCache& cache, double d_task, double d_ik,
                                std::vector<double>& grad) {
    const double* p = state.parameters.data();
    double* g = grad.data();
    const auto e = static_cast<Eigen::Index>(layout.embedding);
    const auto& z = cache.activations.back();

    MutVecMap(g + layout.task_weight, e) += d_task * z;
    g[layout.task_bias] += d_task;
    MutVecMap(g + layout.ik_weight, e) += d_ik * z;
    g[layout.ik_bias] += d_ik;
    if (layout.hidden.empty()) return;

    Eigen::VectorXd dz = d_task * VecMap(p + layout.task_weight, e) + d_ik * VecMap(p + layout.ik_weight, e);
    for (std::size_t l = layout.hidden.size(); l-- > 0;) {
        const auto& d = layout.hidden[l];
        const auto& out = cache.activations[l + 1];
        const Eigen::VectorXd dpre = dz.array() * (1.0 - out.array().square());
        MutRowMatrixMap(g + d.weight, static_cast<Eigen::Index>(d.out), static_cast<Eigen::Index>(d.in)) +=
            dpre * cache.activations[l].transpose();
        MutVecMap(g + d.bias, static_cast<Eigen::Index>(d.out)) += dpre;
        if (l > 0) {
            RowMatrixMap w(p + d.weight, static_cast<Eigen::Index>(d.out), static_cast<Eigen::Index>(d.in));
            dz = w.transpose() * dpre;
        }
    }
}

}  // namespace detail

inline Prediction forward(const LearnerState& state, std::span<const double> features) {
    const auto layout = state.layout();
    detail::ForwardCache cache;
    detail::forward_cached(state, layout, features, cache);
    const auto& z = cache.activations.back();
    return {clamp_prob(sigmoid(cache.task_logit)), clamp_prob(sigmoid(cache.ik_logit)),
            std::vector<double>(z.data(), z.data() + z.size())};
}

inline Prediction forward(const LearnerState& state, const Sample& sample) {
    return forward(state, std::span<const double>(sample.features));
}

/// Mean of `loss(prob, j)` over the batch for one head. Adds
/// weight * gradient of that mean into `grad` and returns the unweighted mean.
/// `loss` receives the head probability and the position j within `indices`.
template <typename LossFn>
double accumulate_head_loss(const LearnerState& state, Head head, std::span<const Sample> samples,
                            std::span<const std::size_t> indices, LossFn&& loss, double weight,
                            std::vector<double>& grad) {
    if (indices.empty()) return 0.0;
    const auto layout = state.layout();
    detail::ForwardCache cache;
    const double inv = 1.0 / static_cast<double>(indices.size());
    double total = 0.0;
    for (std::size_t j = 0; j < indices.size(); ++j) {
        detail::forward_cached(state, layout, samples[indices[j]].features, cache);
        const double logit = head == Head::task ? cache.task_logit : cache.ik_logit;
        const LossValue lv = loss(clamp_prob(sigmoid(logit)), j);
        total += lv.value;
        const double d = weight * lv.d_logit * inv;
        detail::backward_accumulate(state, layout, cache, head == Head::task ? d : 0.0,
                                    head == Head::ik ? d : 0.0, grad);
    }
    return total * inv;
}

inline bool all_finite(std::span<const double> v) {
    for (double x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

inline void sgd_step(LearnerState& state, std::span<const double> grad, double learning_rate) {
    for (std::size_t i = 0; i < state.parameters.size(); ++i) state.parameters[i] -= learning_rate * grad[i];
    ++state.step_count;
}

// ---------------------------------------------------------------------------
// Training

struct TrainConfig {
    std::size_t epochs = 2;
    std::size_t batch_size = 32;
    double learning_rate = 0.1;
    std::uint64_t seed = 0;
    LossId loss = LossId::ce;
    LossHyper hyper;

    void validate() const {
        if (epochs < 1) throw Error("train config: epochs must be >= 1");
        if (batch_size < 1) throw Error("train config: batch_size must be >= 1");
        if (!(learning_rate >= 0.0)) throw Error("train config: learning_rate must be nonnegative");
        hyper.validate();
    }
};

/// Seeded per-epoch shuffles cut into consecutive batches (last one may be short).
class BatchSchedule {
public:
    BatchSchedule(std::size_t n, std::size_t batch_size, std::uint64_t seed)
        : n_(n), batch_size_(batch_size), seed_(seed) {}

    std::vector<std::vector<std::size_t>> epoch(std::size_t e) const {
        std::vector<std::size_t> order(n_);
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng rng(mix_seed(seed_, e));
        std::shuffle(order.begin(), order.end(), rng);
        std::vector<std::vector<std::size_t>> batches;
        for (std::size_t start = 0; start < n_; start += batch_size_) {
            const std::size_t stop = std::min(n_, start + batch_size_);
            batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                                 order.begin() + static_cast<std::ptrdiff_t>(stop));
        }
        return batches;
    }

private:
    std::size_t n_;
    std::size_t batch_size_;
    std::uint64_t seed_;
};

/// Endless stream of batches over n items, reshuffled at every pass.
class CyclingBatches {
public:
    CyclingBatches(std::size_t n, std::size_t batch_size, std::uint64_t seed)
        : schedule_(n, batch_size, seed) {}

    const std::vector<std::size_t>& next() {
        if (cursor_ >= current_.size()) {
            current_ = schedule_.epoch(pass_++);
            cursor_ = 0;
        }
        return current_[cursor_++];
    }

private:
    BatchSchedule schedule_;
    std::vector<std::vector<std::size_t>> current_;
    std::size_t cursor_ = 0;
    std::size_t pass_ = 0;
};

struct EpochStats {
    double train_loss = 0.0;
    std::optional<double> holdout_loss;
};

struct TrainResult {
    LearnerState state;
    std::vector<EpochStats> epochs;
};

/// Mean task-head loss of `state` on samples against targets, no update.
inline double mean_task_loss(const LearnerState& state, std::span<const Sample> samples,
                             std::span<const SoftLabel> targets, const TrainConfig& config) {
    if (samples.empty()) return 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto pred = forward(state, samples[i]);
        total += evaluate_loss(config.loss, pred.p1, targets[i].p1(), config.hyper).value;
    }
    return total / static_cast<double>(samples.size());
}

using UpdateCallback = std::function<void(const LearnerState&)>;

/// Seeded mini-batch gradient descent of the task head on `config.loss`.
/// `on_update` sees the state after every step.
inline TrainResult train(LearnerState state, std::span<const Sample> samples,
                         std::span<const SoftLabel> targets, const TrainConfig& config,
                         std::span<const Sample> holdout = {},
                         std::span<const SoftLabel> holdout_targets = {},
                         const UpdateCallback& on_update = {}) {
    config.validate();
    if (samples.size() != targets.size()) throw Error("train: targets do not align with samples");
    if (holdout.size() != holdout_targets.size()) throw Error("train: holdout targets do not align");
    TrainResult result;
    const BatchSchedule schedule(samples.size(), config.batch_size, config.seed);
    std::vector<double> grad(state.parameters.size());
    for (std::size_t e = 0; e < config.epochs; ++e) {
        double epoch_loss = 0.0;
        std::size_t seen = 0;
        for (const auto& batch : schedule.epoch(e)) {
            std::fill(grad.begin(), grad.end(), 0.0);
            const double mean = accumulate_head_loss(
                state, Head::task, samples, batch,
                [&](double p, std::size_t j) {
                    return evaluate_loss(config.loss, p, targets[batch[j]].p1(), config.hyper);
                },
                1.0, grad);
            if (!std::isfinite(mean) || !all_finite(grad)) {
                throw Error("train: non-finite loss at step " + std::to_string(state.step_count) +
                            " (loss " + std::string(to_string(config.loss)) + ")");
            }
            sgd_step(state, grad, config.learning_rate);
            if (on_update) on_update(state);
            epoch_loss += mean * static_cast<double>(batch.size());
            seen += batch.size();
        }
        EpochStats stats{seen ? epoch_loss / static_cast<double>(seen) : 0.0, std::nullopt};
        if (!holdout.empty()) stats.holdout_loss = mean_task_loss(state, holdout, holdout_targets, config);
        result.epochs.push_back(stats);
    }
    result.state = std::move(state);
    return result;
}

/// Fraction of samples whose hardened prediction (p1 > 0.5) equals the gold label.
inline double evaluate_accuracy(const LearnerState& state, std::span<const Sample> samples) {
    if (samples.empty()) throw Error("evaluate_accuracy: empty corpus");
    std::size_t correct = 0;
    for (const auto& s : samples) {
        const int predicted = forward(state, s).p1 > 0.5 ? 1 : 0;
        if (predicted == s.gold_label) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(samples.size());
}

/// Soft task-head predictions, keyed by sample id.
inline std::map<std::string, SoftLabel> predict_soft_labels(const LearnerState& state,
                                                            std::span<const Sample> samples) {
    std::map<std::string, SoftLabel> out;
    for (const auto& s : samples) out.emplace(s.id, SoftLabel(forward(state, s).p1));
    return out;
}

// ---------------------------------------------------------------------------
// Checkpoints

inline nlohmann::json spec_to_json(const LearnerSpec& spec) {
    return {{"input_dimension", spec.input_dimension},
            {"visible_features", spec.visible_features},
            {"hidden_widths", spec.hidden_widths},
            {"embedding_dimension", spec.embedding_dimension()},
            {"capacity_tier", to_string(spec.capacity_tier)},
            {"activation", kActivation},
            {"seed", spec.seed},
            {"init_scale", spec.init_scale}};
}

inline LearnerSpec spec_from_json(const nlohmann::json& j) {
    LearnerSpec spec;
    spec.input_dimension = j.at("input_dimension").get<std::size_t>();
    spec.visible_features = j.value("visible_features", std::size_t{0});
    spec.hidden_widths = j.value("hidden_widths", std::vector<std::size_t>{});
    spec.capacity_tier = parse_capacity_tier(j.value("capacity_tier", std::string("strong")));
    spec.seed = j.value("seed", std::uint64_t{0});
    spec.init_scale = j.value("init_scale", 1.0);
    if (j.value("activation", std::string(kActivation)) != kActivation) {
        throw Error("unsupported activation '" + j.at("activation").get<std::string>() + "'");
    }
    spec.validate();
    return spec;
}

inline nlohmann::json checkpoint_to_json(const LearnerState& state) {
    return {{"format", "w2sg-learner"},
            {"version", 1},
            {"spec", spec_to_json(state.spec)},
            {"step_count", state.step_count},
            {"parameters", state.parameters}};
}

inline LearnerState checkpoint_from_json(const nlohmann::json& j) {
    if (j.value("format", std::string{}) != "w2sg-learner") throw Error("not a learner checkpoint");
    LearnerState state;
    state.spec = spec_from_json(j.at("spec"));
    state.step_count = j.value("step_count", std::size_t{0});
    state.parameters = j.at("parameters").get<std::vector<double>>();
    const ParameterLayout layout(state.spec);
    if (state.parameters.size() != layout.total) {
        throw Error("checkpoint holds " + std::to_string(state.parameters.size()) + " parameters, spec needs " +
                    std::to_string(layout.total));
    }
    if (!all_finite(state.parameters)) throw Error("checkpoint contains non-finite parameters");
    return state;
}

inline void save_checkpoint(const std::string& path, const LearnerState& state) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out << checkpoint_to_json(state).dump() << '\n';
}

inline LearnerState load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open checkpoint '" + path + "'");
    try {
        return checkpoint_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
        throw Error(path + ": " + e.what());
    }
}

}  // namespace w2sg
