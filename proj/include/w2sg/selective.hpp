#pragma once

// Selective weak-to-strong training. Per batch: score P(IK), split at gamma,
// self-label the IK members, graph-smooth the weak labels of the IDK members,
// then descend L = L_gen + lambda * L_ik where L_ik runs on an interleaved
// batch of P(IK) examples from a separate corpus.

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "w2sg/learner.hpp"
#include "w2sg/losses.hpp"
#include "w2sg/pik.hpp"
#include "w2sg/smooth.hpp"

namespace w2sg {

struct SelectiveConfig {
    double gamma = 0.8;
    SmoothConfig smooth;
    double lambda = 1.0;
    double self_label_threshold = 0.5;
    bool soft_self_labels = false;
    // Epochs of L_ik-only training on the P(IK) corpus before the joint phase.
    // Skipped when lambda is 0.
    std::size_t pik_warmup_epochs = 1;
    TrainConfig train;

    void validate() const {
        if (!(gamma > 0.0 && gamma < 1.0)) throw Error("selective: gamma must lie in (0,1)");
        if (!(lambda >= 0.0)) throw Error("selective: lambda must be nonnegative");
        if (!(self_label_threshold > 0.0 && self_label_threshold < 1.0)) {
            throw Error("selective: self_label_threshold must lie in (0,1)");
        }
        smooth.validate();
        train.validate();
    }
};

/// Hardened current prediction (1 iff p1 > t_self), or p1 itself when soft.
inline SoftLabel self_label(const LearnerState& state, const Sample& sample, double t_self, bool soft = false) {
    const double p1 = forward(state, sample).p1;
    if (soft) return SoftLabel(p1);
    return SoftLabel(p1 > t_self ? 1.0 : 0.0);
}

/// The improved dataset M for one batch, aligned with the batch order.
struct ImprovedBatch {
    std::vector<std::size_t> indices;  // into the training samples
    std::vector<SoftLabel> targets;    // l_p for IK members, l_g for IDK members
    std::vector<SoftLabel> priors;     // l_p for every member
    std::vector<double> pik_scores;
    Partition partition;               // positions within the batch

    bool is_ik(std::size_t position) const {
        return std::find(partition.d_ik.begin(), partition.d_ik.end(), position) != partition.d_ik.end();
    }
};

inline ImprovedBatch build_improved_batch(const LearnerState& state, std::span<const Sample> samples,
                                          std::span<const SoftLabel> weak, std::span<const std::size_t> batch,
                                          const SelectiveConfig& config) {
    if (weak.size() != samples.size()) throw Error("build_improved_batch: weak labels do not cover the samples");
    ImprovedBatch m;
    m.indices.assign(batch.begin(), batch.end());

    GraphBatch graph;
    graph.embeddings.reserve(batch.size());
    std::vector<double> p1s;
    p1s.reserve(batch.size());
    for (std::size_t i : batch) {
        auto pred = forward(state, samples[i]);
        m.pik_scores.push_back(pred.pik);
        p1s.push_back(pred.p1);
        graph.embeddings.push_back(std::move(pred.embedding));
    }
    m.partition = partition(m.pik_scores, config.gamma);

    m.priors.resize(batch.size());
    for (std::size_t j = 0; j < batch.size(); ++j) m.priors[j] = weak[batch[j]];
    for (std::size_t j : m.partition.d_ik) {
        m.priors[j] = config.soft_self_labels ? SoftLabel(p1s[j])
                                              : SoftLabel(p1s[j] > config.self_label_threshold ? 1.0 : 0.0);
    }
    graph.priors = m.priors;
    graph.partition = m.partition;

    m.targets = m.priors;
    const auto smoothed = smooth_batch(graph, config.smooth);
    for (std::size_t k = 0; k < smoothed.size(); ++k) m.targets[m.partition.d_idk[k]] = smoothed[k];
    return m;
}

struct JointLoss {
    double value = 0.0;
    double l_gen = 0.0;
    double l_ik = 0.0;
    std::vector<double> gradient;
};

/// L_gen (mean CE of the task head against M) + lambda * L_ik (mean CE of the
/// P(IK) head against IK labels); both gradients flow through the backbone.
inline JointLoss joint_loss(const LearnerState& state, std::span<const Sample> samples, const ImprovedBatch& gen,
                            std::span<const PikExample> pik_examples, std::span<const std::size_t> pik_batch,
                            double lambda) {
    if (gen.indices.empty()) throw Error("joint_loss: empty generalization batch");
    if (lambda > 0.0 && pik_batch.empty()) throw Error("joint_loss: empty P(IK) batch with lambda > 0");
    JointLoss out;
    out.gradient.assign(state.parameters.size(), 0.0);
    out.l_gen = accumulate_head_loss(
        state, Head::task, samples, gen.indices,
        [&](double p, std::size_t j) { return ce_soft(p, gen.targets[j].p1()); }, 1.0, out.gradient);
    if (lambda > 0.0) out.l_ik = accumulate_ik_loss(state, pik_examples, pik_batch, lambda, out.gradient);
    out.value = out.l_gen + lambda * out.l_ik;
    if (!std::isfinite(out.value) || !all_finite(out.gradient)) {
        throw Error("joint_loss: non-finite value at step " + std::to_string(state.step_count));
    }
    return out;
}

struct StepMetrics {
    std::size_t step = 0;
    double l_gen = 0.0;
    double l_ik = 0.0;
    double ik_fraction = 0.0;
    double mean_pik = 0.0;
};

struct SmoothingRow {
    std::size_t step = 0;
    std::string node_id;
    bool ik = false;
    double pik = 0.0;
    double prior = 0.0;
    double target = 0.0;
};

struct SelectiveHooks {
    std::function<void(const StepMetrics&)> on_step;
    std::function<void(const SmoothingRow&)> on_smoothing;
    UpdateCallback on_update;  // joint phase only
};

namespace detail {

enum class TargetMode { selective, raw_weak };

inline LearnerState run_joint_training(LearnerState state, std::span<const Sample> samples,
                                       std::span<const SoftLabel> weak, std::span<const PikExample> pik_examples,
                                       const SelectiveConfig& config, TargetMode mode, const SelectiveHooks& hooks) {
    config.validate();
    if (samples.empty()) throw Error("selective training: empty training corpus");
    if (weak.size() != samples.size()) throw Error("selective training: weak labels do not cover the corpus");
    if (config.lambda > 0.0 && pik_examples.empty()) {
        throw Error("selective training: empty P(IK) corpus with lambda > 0");
    }
    const auto& tc = config.train;
    if (config.lambda > 0.0 && config.pik_warmup_epochs > 0) {
        TrainConfig warm = tc;
        warm.epochs = config.pik_warmup_epochs;
        warm.seed = mix_seed(tc.seed, "warmup");
        state = train_pik_only(std::move(state), pik_examples, warm);
    }

    const BatchSchedule schedule(samples.size(), tc.batch_size, tc.seed);
    std::optional<CyclingBatches> pik_stream;
    if (config.lambda > 0.0) pik_stream.emplace(pik_examples.size(), tc.batch_size, mix_seed(tc.seed, "pik-stream"));

    for (std::size_t e = 0; e < tc.epochs; ++e) {
        for (const auto& batch : schedule.epoch(e)) {
            ImprovedBatch m;
            if (mode == TargetMode::selective) {
                m = build_improved_batch(state, samples, weak, batch, config);
            } else {
                m.indices = batch;
                for (std::size_t i : batch) m.targets.push_back(weak[i]);
                m.partition.gamma = config.gamma;
                m.partition.d_idk.resize(batch.size());
                std::iota(m.partition.d_idk.begin(), m.partition.d_idk.end(), std::size_t{0});
            }
            std::span<const std::size_t> pik_batch;
            if (pik_stream) pik_batch = pik_stream->next();
            auto loss = joint_loss(state, samples, m, pik_examples, pik_batch, config.lambda);

            if (hooks.on_step) {
                StepMetrics metrics{state.step_count, loss.l_gen, loss.l_ik,
                                    static_cast<double>(m.partition.d_ik.size()) / static_cast<double>(batch.size()),
                                    0.0};
                if (!m.pik_scores.empty()) {
                    metrics.mean_pik = std::accumulate(m.pik_scores.begin(), m.pik_scores.end(), 0.0) /
                                       static_cast<double>(m.pik_scores.size());
                }
                hooks.on_step(metrics);
            }
            if (hooks.on_smoothing && mode == TargetMode::selective) {
                for (std::size_t j = 0; j < batch.size(); ++j) {
                    hooks.on_smoothing({state.step_count, samples[batch[j]].id, m.is_ik(j), m.pik_scores[j],
                                        m.priors[j].p1(), m.targets[j].p1()});
                }
            }
            sgd_step(state, loss.gradient, tc.learning_rate);
            if (hooks.on_update) hooks.on_update(state);
        }
    }
    return state;
}

}  // namespace detail

/// Full selective method. Partitions are recomputed from the current
/// parameters at every batch.
inline LearnerState train_selective(LearnerState init, std::span<const Sample> samples,
                                    std::span<const SoftLabel> weak, std::span<const PikExample> pik_examples,
                                    const SelectiveConfig& config, const SelectiveHooks& hooks = {}) {
    return detail::run_joint_training(std::move(init), samples, weak, pik_examples, config,
                                      detail::TargetMode::selective, hooks);
}

/// Multi-task variant: same joint loss, but the task head always trains on
/// the raw weak labels.
inline LearnerState train_mtl_variant(LearnerState init, std::span<const Sample> samples,
                                      std::span<const SoftLabel> weak, std::span<const PikExample> pik_examples,
                                      const SelectiveConfig& config, const SelectiveHooks& hooks = {}) {
    return detail::run_joint_training(std::move(init), samples, weak, pik_examples, config,
                                      detail::TargetMode::raw_weak, hooks);
}

}  // namespace w2sg
