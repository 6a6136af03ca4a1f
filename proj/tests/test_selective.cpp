#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "w2sg/selective.hpp"

using namespace w2sg;
namespace t = w2sg::testing;

namespace {

struct Setup {
    Corpus train;
    std::vector<SoftLabel> weak;
    std::vector<PikExample> pik;
};

// Noisy weak labels over a separable corpus plus a P(IK) set on other samples.
Setup make_setup(std::size_t n, std::size_t dim, std::uint64_t seed) {
    Setup s;
    s.train = t::separable_corpus(n, dim, 0.4, seed);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (const auto& x : s.train.samples) {
        const double p = x.gold_label ? 0.5 + 0.45 * u(rng) : 0.5 - 0.45 * u(rng);
        s.weak.emplace_back(u(rng) < 0.2 ? 1.0 - p : p);
    }
    for (const auto& x : t::separable_corpus(n / 2, dim, 0.4, seed + 100).samples) {
        s.pik.push_back({x, static_cast<int>(u(rng) < 0.7)});
    }
    return s;
}

std::vector<std::size_t> first_indices(std::size_t n) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    return idx;
}

SelectiveConfig config_with(double gamma, double alpha, double lambda) {
    SelectiveConfig c;
    c.gamma = gamma;
    c.smooth.alpha = alpha;
    c.lambda = lambda;
    c.train.seed = 13;
    return c;
}

}  // namespace

TEST(SelfLabel, HardensAboveThreshold) {
    auto s = init_learner(t::small_spec(1, {}));
    std::fill(s.parameters.begin(), s.parameters.end(), 0.0);
    s.parameters[s.layout().task_bias] = std::log(0.9 / 0.1);
    EXPECT_EQ(self_label(s, t::make_sample("a", {0.0}, 0), 0.5).p1(), 1.0);
    EXPECT_NEAR(self_label(s, t::make_sample("a", {0.0}, 0), 0.5, true).p1(), 0.9, 1e-12);
}

TEST(SelfLabel, BoundaryIsClassZero) {
    auto s = init_learner(t::small_spec(1, {}));
    std::fill(s.parameters.begin(), s.parameters.end(), 0.0);
    EXPECT_EQ(self_label(s, t::make_sample("a", {3.0}, 1), 0.5).p1(), 0.0);
}

TEST(SelfLabel, OneStepOnOwnLabelDoesNotFlipIt) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> normal(0.0, 1.0);
    int checked = 0;
    for (int trial = 0; trial < 300; ++trial) {
        auto s = init_learner(t::small_spec(3, {5}, static_cast<std::uint64_t>(trial)));
        for (auto& p : s.parameters) p += normal(rng);
        const auto x = t::make_sample("x", {normal(rng), normal(rng), normal(rng)}, 0);
        const double p1 = forward(s, x).p1;
        if (std::abs(p1 - 0.5) <= 0.3) continue;
        const auto before = self_label(s, x, 0.5);
        const std::vector<Sample> xs{x};
        const std::vector<SoftLabel> target{before};
        TrainConfig tc;
        tc.epochs = 1;
        tc.batch_size = 1;
        tc.learning_rate = 0.05;
        const auto after = train(s, xs, target, tc).state;
        EXPECT_EQ(self_label(after, x, 0.5), before);
        ++checked;
    }
    EXPECT_GT(checked, 50);
}

TEST(ImprovedBatch, HighGammaMakesEverythingIdk) {
    const auto s = make_setup(64, 3, 1);
    const auto state = init_learner(t::small_spec(3, {4}));
    const auto idx = first_indices(32);
    const auto cfg = config_with(0.999, 0.9, 1.0);
    const auto m = build_improved_batch(state, s.train.samples, s.weak, idx, cfg);
    EXPECT_TRUE(m.partition.d_ik.empty());
    ASSERT_EQ(m.partition.d_idk.size(), 32u);
    // Targets are the graph-smoothed weak labels.
    GraphBatch g;
    for (std::size_t i : idx) {
        g.embeddings.push_back(forward(state, s.train.samples[i]).embedding);
        g.priors.push_back(s.weak[i]);
    }
    g.partition = m.partition;
    const auto smoothed = smooth_batch(g, cfg.smooth);
    for (std::size_t j = 0; j < idx.size(); ++j) EXPECT_EQ(m.targets[j], smoothed[j]);
}

TEST(ImprovedBatch, AlphaOneUsesRawWeakLabelsForIdk) {
    const auto s = make_setup(64, 3, 2);
    auto state = init_learner(t::small_spec(3, {4}));
    const auto idx = first_indices(40);
    // Split at the median score so both sides are populated.
    std::vector<double> scores;
    for (std::size_t i : idx) scores.push_back(score_pik(state, s.train.samples[i]));
    std::nth_element(scores.begin(), scores.begin() + 20, scores.end());
    const auto m = build_improved_batch(state, s.train.samples, s.weak, idx, config_with(scores[20], 1.0, 1.0));
    EXPECT_FALSE(m.partition.d_idk.empty());
    EXPECT_FALSE(m.partition.d_ik.empty());
    for (std::size_t j : m.partition.d_idk) EXPECT_EQ(m.targets[j], s.weak[idx[j]]);
}

TEST(ImprovedBatch, FullIkBatchIgnoresWeakLabels) {
    const auto s = make_setup(40, 2, 3);
    auto state = init_learner(t::small_spec(2, {3}));
    state.parameters[state.layout().ik_bias] = 20.0;
    const auto idx = first_indices(20);
    const auto cfg = config_with(0.8, 0.9, 1.0);
    const auto m = build_improved_batch(state, s.train.samples, s.weak, idx, cfg);
    EXPECT_EQ(m.partition.d_ik.size(), 20u);
    std::vector<SoftLabel> flipped;
    for (const auto& w : s.weak) flipped.emplace_back(1.0 - w.p1());
    const auto m2 = build_improved_batch(state, s.train.samples, flipped, idx, cfg);
    for (std::size_t j = 0; j < idx.size(); ++j) {
        EXPECT_EQ(m.targets[j], self_label(state, s.train.samples[idx[j]], cfg.self_label_threshold));
        EXPECT_EQ(m.targets[j], m2.targets[j]);
    }
}

TEST(ImprovedBatch, TargetsCoverBatchAndIkTargetsAreHard) {
    const auto s = make_setup(200, 3, 4);
    std::mt19937_64 rng(4);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        auto state = init_learner(t::small_spec(3, {4}, static_cast<std::uint64_t>(trial)));
        state.parameters[state.layout().ik_bias] = 1.4;
        for (std::size_t k = state.layout().ik_weight; k < state.layout().ik_bias; ++k) state.parameters[k] = normal(rng);
        std::vector<std::size_t> idx(32);
        for (auto& i : idx) i = rng() % s.train.size();
        const auto m = build_improved_batch(state, s.train.samples, s.weak, idx, config_with(0.8, 0.9, 1.0));
        EXPECT_EQ(m.targets.size(), idx.size());
        EXPECT_EQ(m.partition.d_ik.size() + m.partition.d_idk.size(), idx.size());
        for (std::size_t j = 0; j < idx.size(); ++j) {
            EXPECT_GE(m.targets[j].p1(), 0.0);
            EXPECT_LE(m.targets[j].p1(), 1.0);
            if (m.is_ik(j)) EXPECT_TRUE(m.targets[j].p1() == 0.0 || m.targets[j].p1() == 1.0);
        }
    }
}

TEST(JointLoss, ZeroLambdaIsGeneralizationLossOnly) {
    const auto s = make_setup(40, 2, 5);
    const auto state = init_learner(t::small_spec(2, {3}));
    const auto idx = first_indices(16);
    const auto m = build_improved_batch(state, s.train.samples, s.weak, idx, config_with(0.8, 0.9, 0.0));
    const auto l = joint_loss(state, s.train.samples, m, s.pik, {}, 0.0);
    EXPECT_EQ(l.value, l.l_gen);
    EXPECT_EQ(l.l_ik, 0.0);
    EXPECT_THROW(joint_loss(state, s.train.samples, m, s.pik, {}, 1.0), Error);
}

TEST(JointLoss, TotalIsAdditive) {
    const double l_gen = 0.3;
    const double l_ik = 0.2;
    EXPECT_NEAR(l_gen + 1.0 * l_ik, 0.5, 1e-15);
    const auto s = make_setup(40, 2, 6);
    const auto state = init_learner(t::small_spec(2, {3}));
    const auto idx = first_indices(16);
    const auto pik_idx = first_indices(8);
    const auto m = build_improved_batch(state, s.train.samples, s.weak, idx, config_with(0.8, 0.9, 1.0));
    for (double lambda : {1.0, 0.25, 3.0}) {
        const auto l = joint_loss(state, s.train.samples, m, s.pik, pik_idx, lambda);
        EXPECT_EQ(l.value, l.l_gen + lambda * l.l_ik);
        EXPECT_GT(l.l_ik, 0.0);
    }
}

TEST(JointLoss, GradientIsSumOfSeparateGradients) {
    const auto s = make_setup(40, 3, 7);
    auto state = init_learner(t::small_spec(3, {5, 4}));
    const auto idx = first_indices(16);
    const auto pik_idx = first_indices(8);
    const auto m = build_improved_batch(state, s.train.samples, s.weak, idx, config_with(0.8, 0.9, 1.0));
    const auto joint = joint_loss(state, s.train.samples, m, s.pik, pik_idx, 1.0);
    const auto gen_only = joint_loss(state, s.train.samples, m, s.pik, {}, 0.0);
    std::vector<double> ik_only(state.parameters.size(), 0.0);
    accumulate_ik_loss(state, s.pik, pik_idx, 1.0, ik_only);
    double worst = 0.0;
    for (std::size_t k = 0; k < joint.gradient.size(); ++k) {
        worst = std::max(worst, std::abs(joint.gradient[k] - (gen_only.gradient[k] + ik_only[k])));
    }
    EXPECT_LT(worst, 1e-10);
}

TEST(JointLoss, GradientMatchesFiniteDifferences) {
    std::mt19937_64 rng(99);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    double worst = 0.0;
    for (int draw = 0; draw < 100; ++draw) {
        const auto s = make_setup(12, 3, static_cast<std::uint64_t>(draw));
        auto state = init_learner(t::small_spec(3, {4, 3}, static_cast<std::uint64_t>(draw)));
        for (auto& p : state.parameters) p += 0.4 * normal(rng);
        const auto idx = first_indices(6);
        const auto pik_idx = first_indices(4);
        const double lambda = u(rng);
        // M is built once and held fixed: the partition and self-labels carry no gradient.
        const auto m = build_improved_batch(state, s.train.samples, s.weak, idx, config_with(0.5, 0.7, lambda));
        const auto joint = joint_loss(state, s.train.samples, m, s.pik, pik_idx, lambda);
        for (std::size_t k = 0; k < state.parameters.size(); ++k) {
            auto probe = state;
            const double fd = t::central_difference(
                [&](double v) {
                    probe.parameters[k] = v;
                    return joint_loss(probe, s.train.samples, m, s.pik, pik_idx, lambda).value;
                },
                state.parameters[k]);
            worst = std::max(worst, t::relative_error(joint.gradient[k], fd));
        }
    }
    EXPECT_LT(worst, 1e-4);
}

TEST(TrainSelective, ReducesToNaiveFinetune) {
    const auto s = make_setup(300, 4, 8);
    const auto init = init_learner(t::small_spec(4, {8, 6}, 5));
    const auto cfg = config_with(0.999, 1.0, 0.0);
    TrainConfig tc = cfg.train;
    tc.loss = LossId::ce;
    // Compare after every epoch count so the whole trajectory is covered.
    for (std::size_t epochs : {1u, 2u, 3u}) {
        auto c = cfg;
        c.train.epochs = epochs;
        tc.epochs = epochs;
        const auto selective = train_selective(init, s.train.samples, s.weak, {}, c);
        const auto naive = train(init, s.train.samples, s.weak, tc).state;
        EXPECT_EQ(selective.parameters, naive.parameters);
        EXPECT_EQ(selective.step_count, naive.step_count);
    }
}

TEST(TrainSelective, IsDeterministic) {
    const auto s = make_setup(200, 3, 9);
    const auto init = init_learner(t::small_spec(3, {6}));
    const auto cfg = config_with(0.6, 0.9, 1.0);
    EXPECT_EQ(train_selective(init, s.train.samples, s.weak, s.pik, cfg),
              train_selective(init, s.train.samples, s.weak, s.pik, cfg));
}

TEST(TrainSelective, RequiresPikExamplesWhenLambdaPositive) {
    const auto s = make_setup(50, 2, 10);
    const auto init = init_learner(t::small_spec(2, {}));
    EXPECT_THROW(train_selective(init, s.train.samples, s.weak, {}, config_with(0.8, 0.9, 1.0)), Error);
    EXPECT_THROW(train_selective(init, s.train.samples, std::vector<SoftLabel>(3), s.pik, config_with(0.8, 0.9, 1.0)),
                 Error);
}

TEST(TrainSelective, GoldAsWeakApproachesCeiling) {
    SynthSpec synth;
    synth.families = 2;
    synth.seed = 11;
    const auto all = generate_synthetic(synth);
    const auto [test, pool] = carve_fraction(filter_task(all, "family0"), 0.2, 1);
    const auto pik_corpus = filter_task(all, "family1");
    const auto base = train(init_learner(t::small_spec(synth.dimension, {64, 64})), pik_corpus.samples,
                            pik_corpus.gold_targets(), TrainConfig{})
                          .state;
    const auto gold = pool.gold_targets();
    SelectiveConfig cfg;
    const auto pik = build_pik_dataset(base, pik_corpus.samples);
    const auto selective = train_selective(base, pool.samples, gold, pik, cfg);
    const auto ceiling = train(base, pool.samples, gold, cfg.train).state;
    EXPECT_NEAR(evaluate_accuracy(selective, test.samples), evaluate_accuracy(ceiling, test.samples), 0.03);
}

TEST(TrainMtl, ZeroLambdaIsNaiveFinetune) {
    const auto s = make_setup(200, 3, 12);
    const auto init = init_learner(t::small_spec(3, {5}));
    const auto cfg = config_with(0.8, 0.9, 0.0);
    EXPECT_EQ(train_mtl_variant(init, s.train.samples, s.weak, {}, cfg).parameters,
              train(init, s.train.samples, s.weak, cfg.train).state.parameters);
}

TEST(TrainMtl, SharesPikHeadUpdatesWithSelective) {
    // With a linear model the P(IK) head has no shared parameters, so its
    // trajectory depends only on the P(IK) batch order.
    const auto s = make_setup(200, 3, 13);
    const auto init = init_learner(t::small_spec(3, {}));
    const auto cfg = config_with(0.6, 0.9, 1.0);
    std::vector<double> ik_a;
    std::vector<double> ik_b;
    SelectiveHooks ha;
    ha.on_step = [&](const StepMetrics& m) { ik_a.push_back(m.l_ik); };
    SelectiveHooks hb;
    hb.on_step = [&](const StepMetrics& m) { ik_b.push_back(m.l_ik); };
    const auto a = train_selective(init, s.train.samples, s.weak, s.pik, cfg, ha);
    const auto b = train_mtl_variant(init, s.train.samples, s.weak, s.pik, cfg, hb);
    const auto layout = init.layout();
    for (std::size_t k = layout.ik_weight; k <= layout.ik_bias; ++k) EXPECT_EQ(a.parameters[k], b.parameters[k]);
    EXPECT_EQ(ik_a, ik_b);
    EXPECT_NE(a.parameters[layout.task_bias], b.parameters[layout.task_bias]);
}

TEST(TrainSelective, HooksReportEveryStep) {
    const auto s = make_setup(100, 3, 14);
    auto cfg = config_with(0.5, 0.9, 1.0);
    cfg.train.batch_size = 10;
    cfg.train.epochs = 1;
    std::size_t steps = 0;
    std::size_t rows = 0;
    SelectiveHooks hooks;
    hooks.on_step = [&](const StepMetrics& m) {
        ++steps;
        EXPECT_GE(m.ik_fraction, 0.0);
        EXPECT_LE(m.ik_fraction, 1.0);
        EXPECT_GT(m.mean_pik, 0.0);
        EXPECT_GT(m.l_ik, 0.0);
    };
    hooks.on_smoothing = [&](const SmoothingRow& r) {
        ++rows;
        if (r.ik) EXPECT_TRUE(r.target == 0.0 || r.target == 1.0);
    };
    train_selective(init_learner(t::small_spec(3, {4})), s.train.samples, s.weak, s.pik, cfg, hooks);
    EXPECT_EQ(steps, 10u);
    EXPECT_EQ(rows, 100u);
}

TEST(SelectiveConfigValidation, RejectsOutOfRange) {
    SelectiveConfig c;
    EXPECT_NO_THROW(c.validate());
    c.gamma = 1.0;
    EXPECT_THROW(c.validate(), Error);
    c = SelectiveConfig{};
    c.lambda = -1.0;
    EXPECT_THROW(c.validate(), Error);
    c = SelectiveConfig{};
    c.self_label_threshold = 0.0;
    EXPECT_THROW(c.validate(), Error);
}
