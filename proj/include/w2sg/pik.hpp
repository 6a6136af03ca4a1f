#pragma once

// P(IK) ("probability that I know") labels, scoring, threshold partition and
// AUROC.

#include <algorithm>
#include <array>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "w2sg/dataset.hpp"
#include "w2sg/learner.hpp"
#include "w2sg/losses.hpp"

namespace w2sg {

struct PikExample {
    Sample sample;
    int ik_label = 0;  // 1 = IK, 0 = IDK
};

/// IK iff the base model's hardened task prediction matches the gold label.
inline std::vector<PikExample> build_pik_dataset(const LearnerState& base, std::span<const Sample> samples) {
    if (samples.empty()) throw Error("build_pik_dataset: empty corpus");
    std::vector<PikExample> out;
    out.reserve(samples.size());
    for (const auto& s : samples) {
        const int predicted = forward(base, s).p1 > 0.5 ? 1 : 0;
        out.push_back({s, predicted == s.gold_label ? 1 : 0});
    }
    return out;
}

inline double score_pik(const LearnerState& state, const Sample& sample) { return forward(state, sample).pik; }

inline std::vector<double> score_pik(const LearnerState& state, std::span<const PikExample> examples) {
    std::vector<double> out;
    out.reserve(examples.size());
    for (const auto& ex : examples) out.push_back(score_pik(state, ex.sample));
    return out;
}

struct Partition {
    std::vector<std::size_t> d_ik;   // score > gamma
    std::vector<std::size_t> d_idk;  // score <= gamma
    double gamma = 0.8;
};

inline Partition partition(std::span<const double> scores, double gamma) {
    if (!(gamma > 0.0 && gamma < 1.0)) throw Error("partition: gamma must lie in (0,1)");
    Partition p;
    p.gamma = gamma;
    for (std::size_t i = 0; i < scores.size(); ++i) (scores[i] > gamma ? p.d_ik : p.d_idk).push_back(i);
    return p;
}

/// Probability that a random positive outranks a random negative, ties
/// counting one half. Computed from mid-ranks in O(n log n).
inline double auroc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw Error("auroc: scores and labels differ in length");
    std::size_t positives = 0;
    for (int l : labels) {
        if (l != 0 && l != 1) throw Error("auroc: labels must be binary");
        positives += static_cast<std::size_t>(l);
    }
    const std::size_t negatives = labels.size() - positives;
    if (positives == 0 || negatives == 0) throw Error("auroc: undefined for single-class input");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Twice the rank sum keeps mid-ranks integral.
    std::size_t twice_rank_sum = 0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
        const std::size_t twice_mid = (i + 1) + (j + 1);  // 2 * average 1-based rank
        for (std::size_t k = i; k <= j; ++k) {
            if (labels[order[k]] == 1) twice_rank_sum += twice_mid;
        }
        i = j + 1;
    }
    // Twice the Mann-Whitney U statistic.
    const std::size_t twice_u = twice_rank_sum - positives * (positives + 1);
    return static_cast<double>(twice_u) / (2.0 * static_cast<double>(positives) * static_cast<double>(negatives));
}

inline constexpr std::size_t kHistogramBins = 20;

using Histogram = std::array<std::size_t, kHistogramBins>;

/// Counts of scores in 20 equal bins over [0,1]; 1.0 lands in the last bin.
inline Histogram histogram(std::span<const double> scores) {
    Histogram h{};
    for (double s : scores) {
        const double c = std::clamp(s, 0.0, 1.0);
        const auto bin = std::min(kHistogramBins - 1, static_cast<std::size_t>(c * static_cast<double>(kHistogramBins)));
        ++h[bin];
    }
    return h;
}

/// One step of L_ik (binary cross-entropy of the P(IK) head) on a batch.
/// Adds weight * gradient into grad and returns the batch mean.
inline double accumulate_ik_loss(const LearnerState& state, std::span<const PikExample> examples,
                                 std::span<const std::size_t> indices, double weight, std::vector<double>& grad) {
    if (indices.empty()) return 0.0;
    // accumulate_head_loss indexes samples directly; gather the batch.
    std::vector<Sample> batch;
    batch.reserve(indices.size());
    for (std::size_t i : indices) batch.push_back(examples[i].sample);
    std::vector<std::size_t> local(indices.size());
    std::iota(local.begin(), local.end(), std::size_t{0});
    return accumulate_head_loss(
        state, Head::ik, batch, local,
        [&](double p, std::size_t j) { return ce_soft(p, static_cast<double>(examples[indices[j]].ik_label)); },
        weight, grad);
}

/// P(IK)-only training: optimizes L_ik alone over the whole model.
inline LearnerState train_pik_only(LearnerState state, std::span<const PikExample> examples,
                                   const TrainConfig& config) {
    config.validate();
    if (examples.empty()) throw Error("train_pik_only: no P(IK) examples");
    const BatchSchedule schedule(examples.size(), config.batch_size, mix_seed(config.seed, "pik"));
    std::vector<double> grad(state.parameters.size());
    for (std::size_t e = 0; e < config.epochs; ++e) {
        for (const auto& batch : schedule.epoch(e)) {
            std::fill(grad.begin(), grad.end(), 0.0);
            const double loss = accumulate_ik_loss(state, examples, batch, 1.0, grad);
            if (!std::isfinite(loss) || !all_finite(grad)) throw Error("train_pik_only: non-finite loss");
            sgd_step(state, grad, config.learning_rate);
        }
    }
    return state;
}

inline std::vector<int> ik_labels(std::span<const PikExample> examples) {
    std::vector<int> out;
    out.reserve(examples.size());
    for (const auto& ex : examples) out.push_back(ex.ik_label);
    return out;
}

}  // namespace w2sg
