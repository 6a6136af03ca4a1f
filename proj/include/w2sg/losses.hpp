#pragma once

// Binary training objectives over a class-1 probability. Each returns the
// loss value and its derivative with respect to the predicted logit
// (p = sigmoid(logit)). Constructed targets (confidence, product) are
// treated as constants.

#include <cmath>
#include <numbers>
#include <string>
#include <string_view>

#include "w2sg/common.hpp"

namespace w2sg {

struct LossValue {
    double value = 0.0;
    double d_logit = 0.0;
};

enum class LossId { ce, conf, prod, rkl, js };

inline std::string_view to_string(LossId id) {
    switch (id) {
        case LossId::ce: return "ce";
        case LossId::conf: return "conf";
        case LossId::prod: return "prod";
        case LossId::rkl: return "rkl";
        case LossId::js: return "js";
    }
    return "?";
}

inline LossId parse_loss_id(std::string_view name) {
    if (name == "ce") return LossId::ce;
    if (name == "conf") return LossId::conf;
    if (name == "prod") return LossId::prod;
    if (name == "rkl") return LossId::rkl;
    if (name == "js") return LossId::js;
    throw Error("unknown loss '" + std::string(name) + "'");
}

struct LossHyper {
    double conf_alpha = 0.5;  // weight of the hardened prediction in the confidence target
    double conf_t = 0.5;      // hardening threshold

    void validate() const {
        if (!(conf_alpha >= 0.0 && conf_alpha <= 1.0)) throw Error("conf.alpha must lie in [0,1]");
        if (!(conf_t > 0.0 && conf_t < 1.0)) throw Error("conf.t must lie in (0,1)");
    }
};

namespace detail {

// Binary KL(a || b) with clamped logs.
inline double binary_kl(double a, double b) {
    const double ac = clamp_prob(a);
    const double bc = clamp_prob(b);
    double v = 0.0;
    if (a > 0.0) v += a * std::log(ac / bc);
    if (a < 1.0) v += (1.0 - a) * std::log((1.0 - ac) / (1.0 - bc));
    return v;
}

}  // namespace detail

/// Cross-entropy between a soft target and the prediction.
inline LossValue ce_soft(double pred, double target) {
    const double p = clamp_prob(pred);
    return {-(target * std::log(p) + (1.0 - target) * std::log(1.0 - p)), pred - target};
}

inline double conf_target(double pred, double weak, double alpha, double t) {
    const double hardened = pred > t ? 1.0 : 0.0;
    return (1.0 - alpha) * weak + alpha * hardened;
}

/// Auxiliary confidence loss: CE against a mix of the weak label and the
/// hardened current prediction.
inline LossValue conf_loss(double pred, double weak, double alpha, double t) {
    return ce_soft(pred, conf_target(pred, weak, alpha, t));
}

/// Renormalized product of weak label and prediction; falls back to the weak
/// label when both class products vanish.
inline double prod_target(double pred, double weak) {
    const double one = weak * pred;
    const double zero = (1.0 - weak) * (1.0 - pred);
    const double z = one + zero;
    if (!(z > 0.0)) return weak;
    return one / z;
}

inline LossValue prod_loss(double pred, double weak) {
    return ce_soft(pred, prod_target(pred, weak));
}

/// Reverse KL: KL(pred || weak).
inline LossValue rkl_loss(double pred, double weak) {
    const double p = clamp_prob(pred);
    const double w = clamp_prob(weak);
    const double d_pred = std::log(p / w) - std::log((1.0 - p) / (1.0 - w));
    return {detail::binary_kl(pred, weak), d_pred * pred * (1.0 - pred)};
}

/// Jensen-Shannon divergence; bounded by ln 2.
inline LossValue js_loss(double pred, double weak) {
    const double m = 0.5 * (pred + weak);
    const double value = 0.5 * detail::binary_kl(pred, m) + 0.5 * detail::binary_kl(weak, m);
    // The derivative through the midpoint cancels, leaving half the log-odds gap.
    const double p = clamp_prob(pred);
    const double mc = clamp_prob(m);
    const double d_pred = 0.5 * (std::log(p / mc) - std::log((1.0 - p) / (1.0 - mc)));
    return {value, d_pred * pred * (1.0 - pred)};
}

/// The target each loss effectively regresses toward; rkl and js have none
/// beyond the weak label itself.
inline double effective_target(LossId id, double pred, double weak, const LossHyper& hyper) {
    switch (id) {
        case LossId::conf: return conf_target(pred, weak, hyper.conf_alpha, hyper.conf_t);
        case LossId::prod: return prod_target(pred, weak);
        default: return weak;
    }
}

inline LossValue evaluate_loss(LossId id, double pred, double weak, const LossHyper& hyper) {
    switch (id) {
        case LossId::ce: return ce_soft(pred, weak);
        case LossId::conf: return conf_loss(pred, weak, hyper.conf_alpha, hyper.conf_t);
        case LossId::prod: return prod_loss(pred, weak);
        case LossId::rkl: return rkl_loss(pred, weak);
        case LossId::js: return js_loss(pred, weak);
    }
    throw Error("unhandled loss id");
}

}  // namespace w2sg
