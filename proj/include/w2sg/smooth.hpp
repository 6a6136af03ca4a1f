#pragma once

// Graph-smoothed weak labels over the fully connected embedding graph of one
// batch. For an IDK node x the refined label is
//
//   l_g(x) = alpha * l_p(x) + (1 - alpha) * sum_j a_j * l_p(x_j),
//   a_j    = softmax_j(z . z_j / tau)       (j ranges over the whole batch, x included)
//
// which is the minimizer of alpha*d(l, l_p(x)) + (1-alpha)*sum_j a_j*d(l, l_p(x_j))
// for squared distance d.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "w2sg/common.hpp"
#include "w2sg/pik.hpp"

namespace w2sg {

struct SmoothConfig {
    double alpha = 0.9;
    double tau = 0.1;
    bool normalize_embeddings = false;

    void validate() const {
        if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error("smooth: alpha must lie in [0,1]");
        if (!(tau > 0.0)) throw Error("smooth: tau must be positive");
    }
};

struct GraphBatch {
    std::vector<std::vector<double>> embeddings;
    std::vector<SoftLabel> priors;
    Partition partition;

    std::size_t size() const noexcept { return embeddings.size(); }

    void validate() const {
        if (embeddings.empty()) throw Error("graph batch is empty");
        if (priors.size() != embeddings.size()) throw Error("graph batch: priors do not align with embeddings");
        if (partition.d_ik.size() + partition.d_idk.size() != embeddings.size()) {
            throw Error("graph batch: partition does not cover the batch");
        }
    }
};

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
}

inline std::vector<double> unit(std::span<const double> v) {
    const double n = std::sqrt(dot(v, v));
    std::vector<double> out(v.begin(), v.end());
    if (n > 0.0) {
        for (auto& x : out) x /= n;
    }
    return out;
}

inline std::vector<double> softmax_weights(std::span<const double> z_i, const std::vector<std::vector<double>>& zs,
                                           double tau) {
    std::vector<double> logits(zs.size());
    for (std::size_t j = 0; j < zs.size(); ++j) logits[j] = dot(z_i, zs[j]) / tau;
    const double top = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (auto& l : logits) {
        l = std::exp(l - top);
        sum += l;
    }
    for (auto& l : logits) l /= sum;
    return logits;
}

}  // namespace detail

/// Softmax over the batch (self included) of z_i . z_j / tau.
inline std::vector<double> similarity_weights(std::size_t i, const GraphBatch& batch, double tau,
                                              bool normalize = false) {
    if (batch.embeddings.empty()) throw Error("similarity_weights: empty batch");
    if (i >= batch.size()) throw Error("similarity_weights: index out of range");
    if (!(tau > 0.0)) throw Error("similarity_weights: tau must be positive");
    if (!normalize) return detail::softmax_weights(batch.embeddings[i], batch.embeddings, tau);
    std::vector<std::vector<double>> zs;
    zs.reserve(batch.size());
    for (const auto& z : batch.embeddings) zs.push_back(detail::unit(z));
    return detail::softmax_weights(zs[i], zs, tau);
}

namespace detail {

inline SoftLabel combine(std::size_t i, const GraphBatch& batch, std::span<const double> weights, double alpha) {
    double neighbours = 0.0;
    for (std::size_t j = 0; j < weights.size(); ++j) neighbours += weights[j] * batch.priors[j].p1();
    const double l = alpha * batch.priors[i].p1() + (1.0 - alpha) * neighbours;
    return SoftLabel(std::clamp(l, 0.0, 1.0));  // clamp absorbs rounding only
}

}  // namespace detail

/// Refined label of IDK node i.
inline SoftLabel smooth_label(std::size_t i, const GraphBatch& batch, const SmoothConfig& config) {
    config.validate();
    batch.validate();
    if (std::find(batch.partition.d_idk.begin(), batch.partition.d_idk.end(), i) == batch.partition.d_idk.end()) {
        throw Error("smooth_label: node " + std::to_string(i) + " is not an IDK member");
    }
    const auto w = similarity_weights(i, batch, config.tau, config.normalize_embeddings);
    return detail::combine(i, batch, w, config.alpha);
}

/// Refined labels for every IDK node, in partition.d_idk order. All nodes
/// read the same original priors.
inline std::vector<SoftLabel> smooth_batch(const GraphBatch& batch, const SmoothConfig& config) {
    config.validate();
    batch.validate();
    std::vector<SoftLabel> out;
    out.reserve(batch.partition.d_idk.size());
    if (batch.partition.d_idk.empty()) return out;
    std::vector<std::vector<double>> unit_zs;
    if (config.normalize_embeddings) {
        for (const auto& z : batch.embeddings) unit_zs.push_back(detail::unit(z));
    }
    const auto& zs = config.normalize_embeddings ? unit_zs : batch.embeddings;
    for (std::size_t i : batch.partition.d_idk) {
        const auto w = detail::softmax_weights(zs[i], zs, config.tau);
        out.push_back(detail::combine(i, batch, w, config.alpha));
    }
    return out;
}

}  // namespace w2sg
