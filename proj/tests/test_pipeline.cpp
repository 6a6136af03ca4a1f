#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "pgr_tables.hpp"
#include "w2sg/pipeline.hpp"

using namespace w2sg;
namespace t = w2sg::testing;

namespace {

void expect_fixtures(const std::vector<t::PgrCase>& cases) {
    for (const auto& c : cases) {
        const double v = 100.0 * pgr(c.weak / 100.0, c.w2s / 100.0, c.ceiling / 100.0);
        EXPECT_NEAR(v, c.printed, 0.01 + 1e-9) << c.weak << " " << c.w2s << " " << c.ceiling;
    }
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Runs are shared between tests to keep the suite fast.
const RunReport& tiny_report() {
    static const RunReport report = [] {
        auto c = t::tiny_experiment();
        c.methods = {Method::selective, Method::mtl, Method::finetune, Method::js, Method::selective_wo_ik};
        return run_w2sg(c);
    }();
    return report;
}

}  // namespace

TEST(Pgr, WeakBaselineFixtures) { expect_fixtures(t::kWeakBaselineRows); }

TEST(Pgr, StrongBaselineFixtures) { expect_fixtures(t::kStrongBaselineRows); }

TEST(Pgr, EndpointIdentities) {
    EXPECT_EQ(pgr(0.6, 0.9, 0.9), 1.0);
    EXPECT_EQ(pgr(0.6, 0.6, 0.9), 0.0);
}

TEST(Pgr, NotClampedAndZeroGapIsAnError) {
    EXPECT_LT(pgr(0.6, 0.5, 0.9), 0.0);
    EXPECT_GT(pgr(0.6, 1.0, 0.9), 1.0);
    EXPECT_THROW(pgr(0.7, 0.8, 0.7), Error);
}

TEST(Methods, ParseAndOrder) {
    for (Method m : kMethodOrder) EXPECT_EQ(parse_method(to_string(m)), m);
    EXPECT_THROW(parse_method("adaptive"), Error);
    EXPECT_LT(method_rank(Method::finetune), method_rank(Method::js));
    EXPECT_LT(method_rank(Method::js), method_rank(Method::selective));
}

TEST(PrepareSeedData, SplitsAreDisjointAndSized) {
    const auto c = t::tiny_experiment();
    const auto d = prepare_seed_data(c, 0);
    std::set<std::string> ids;
    for (const auto* part : {&d.pretrain, &d.weak_half, &d.strong_half, &d.test, &d.pik}) {
        for (const auto& s : part->samples) EXPECT_TRUE(ids.insert(s.id).second) << s.id;
    }
    EXPECT_EQ(ids.size(), c.synthetic.families * c.synthetic.samples_per_family);
    for (const auto& s : d.test.samples) EXPECT_EQ(s.task_tag, c.task);
    for (const auto& s : d.pik.samples) EXPECT_EQ(s.task_tag, c.pik_task);
    const double task_total = static_cast<double>(c.synthetic.samples_per_family);
    EXPECT_NEAR(static_cast<double>(d.pretrain.size()), c.pretrain.fraction * task_total * 2, 2.0);
    EXPECT_LE(d.weak_half.size() > d.strong_half.size() ? d.weak_half.size() - d.strong_half.size()
                                                        : d.strong_half.size() - d.weak_half.size(),
              1u);
}

TEST(RunW2sg, ReportShapeAndOrdering) {
    const auto& r = tiny_report();
    ASSERT_TRUE(r.failures.empty());
    EXPECT_EQ(r.seeds.size(), 2u);
    ASSERT_EQ(r.methods.size(), 5u);
    for (std::size_t i = 1; i < r.methods.size(); ++i) {
        EXPECT_LT(method_rank(r.methods[i - 1].method), method_rank(r.methods[i].method));
    }
    for (const auto& row : r.methods) {
        EXPECT_EQ(row.per_seed.size(), 2u);
        ASSERT_TRUE(row.pgr.has_value());
        EXPECT_NEAR(*row.pgr, pgr(r.weak_acc.mean, row.w2s_acc.mean, r.ceiling_acc.mean), 1e-12);
    }
    EXPECT_EQ(r.auroc_table.size(), 2u);  // selective and mtl train P(IK)
    EXPECT_EQ(r.pik_histograms.size(), 2u);
}

TEST(RunW2sg, CeilingDominatesWeakPerSeed) {
    const auto& r = tiny_report();
    for (std::size_t i = 0; i < r.seeds.size(); ++i) EXPECT_GT(r.ceiling_per_seed[i], r.weak_per_seed[i]);
    EXPECT_EQ(r.pgr_status, "ok");
}

TEST(RunW2sg, HistogramBinsSumToTestSizes) {
    const auto& r = tiny_report();
    const auto c = t::tiny_experiment();
    std::size_t expected = 0;
    for (auto seed : r.seeds) expected += prepare_seed_data(c, seed).test.size();
    for (const auto& h : r.pik_histograms) {
        const auto total = std::accumulate(h.ik.begin(), h.ik.end(), std::size_t{0}) +
                           std::accumulate(h.idk.begin(), h.idk.end(), std::size_t{0});
        EXPECT_EQ(total, expected);
    }
}

TEST(RunW2sg, IsDeterministicAndThreadIndependent) {
    auto c = t::tiny_experiment();
    c.seeds = {3, 4};
    const auto a = render_report_json(run_w2sg(c));
    EXPECT_EQ(a, render_report_json(run_w2sg(c)));
    c.threads = 2;
    auto threaded = report_to_json(run_w2sg(c));
    auto serial = nlohmann::json::parse(a);
    threaded.erase("config");
    serial.erase("config");
    EXPECT_EQ(threaded.dump(), serial.dump());
}

TEST(RunW2sg, GoldAsWeakRecoversTheFullGap) {
    auto c = t::tiny_experiment();
    c.gold_as_weak = true;
    c.methods = {Method::finetune, Method::selective};
    const auto r = run_w2sg(c);
    ASSERT_TRUE(r.pgr.has_value());
    EXPECT_NEAR(*r.pgr, 1.0, 1e-12);  // finetune on gold is the ceiling run
    EXPECT_NEAR(*r.row(Method::selective)->pgr, 1.0, 0.25);
}

TEST(RunW2sg, IdenticalSpecsAreFlagged) {
    auto c = t::tiny_experiment();
    c.strong_spec.hidden_widths = c.weak_spec.hidden_widths;
    c.strong_spec.visible_features = c.weak_spec.visible_features;
    c.methods = {Method::finetune};
    const auto r = run_w2sg(c);
    EXPECT_NE(r.pgr_status, "ok");
    EXPECT_NEAR(r.ceiling_acc.mean, r.weak_acc.mean, 0.05);
}

TEST(RunW2sg, FailedSeedsAreRecorded) {
    auto c = t::tiny_experiment();
    c.task = "family9";
    const auto r = run_w2sg(c);
    EXPECT_TRUE(r.seeds.empty());
    ASSERT_EQ(r.failures.size(), 2u);
    EXPECT_EQ(r.failures[0].stage, "data");
    EXPECT_EQ(r.pgr_status, "undefined");
    EXPECT_NE(r.failures[0].message.find("family9"), std::string::npos);
}

TEST(RunW2sg, WritesStepLogsAndSmoothingDumps) {
    t::TempDir dir("w2sg-logs");
    auto c = t::tiny_experiment();
    c.seeds = {0};
    c.methods = {Method::selective};
    c.log_steps = true;
    c.debug_smoothing = true;
    c.output_dir = dir.path().string();
    run_w2sg(c);
    const auto steps = read_file(dir.path() / "steps" / "seed0_selective.jsonl");
    std::istringstream lines(steps);
    std::string first;
    std::getline(lines, first);
    const auto j = nlohmann::json::parse(first);
    for (const char* key : {"step", "l_gen", "l_ik", "ik_fraction", "mean_pik"}) EXPECT_TRUE(j.contains(key)) << key;
    const auto dump = read_file(dir.path() / "smoothing" / "seed0_selective.csv");
    EXPECT_EQ(dump.substr(0, dump.find('\n')), "step,node_id,role,pik_score,l_p,l_g");
    EXPECT_TRUE(std::filesystem::exists(dir.path() / "weak_labels" / "seed0.jsonl"));
}

TEST(RunW2sg, ConfigValidation) {
    auto c = t::tiny_experiment();
    c.weak_spec.capacity_tier = CapacityTier::strong;
    EXPECT_THROW(run_w2sg(c), Error);
    c = t::tiny_experiment();
    c.pik_task = c.task;
    EXPECT_THROW(run_w2sg(c), Error);
    c = t::tiny_experiment();
    c.seeds.clear();
    EXPECT_THROW(run_w2sg(c), Error);
}

TEST(AurocMatrix, SameSplitGivesIdenticalCells) {
    auto c = t::tiny_experiment();
    c.seeds = {0};
    c.easy_to_hard = false;
    const auto r = run_auroc_matrix(c, {"family0", "family0"});
    ASSERT_EQ(r.auroc_table.size(), 4u);
    for (const auto& row : r.auroc_table) {
        ASSERT_TRUE(row.auroc.has_value());
        EXPECT_EQ(*row.auroc, *r.auroc_table[0].auroc);
    }
}

TEST(AurocMatrix, LayoutAndEasyToHardRows) {
    auto c = t::tiny_experiment();
    c.seeds = {0};
    const auto r = run_auroc_matrix(c);
    EXPECT_EQ(r.kind, "auroc_matrix");
    ASSERT_EQ(r.auroc_table.size(), 8u);
    EXPECT_EQ(r.auroc_table[1].train_task, "family0");
    EXPECT_EQ(r.auroc_table[1].eval_task, "family1");
    EXPECT_EQ(r.auroc_table[4].model, "pik_only_easy");
    EXPECT_EQ(r.auroc_table[4].eval_task, "family0@hard");
    EXPECT_THROW(run_auroc_matrix(c, {"family0"}), Error);
}

TEST(AurocMatrix, SingleClassCellIsNotAvailable) {
    auto base = init_learner(t::small_spec(1, {}));
    std::vector<PikExample> eval{{t::make_sample("a", {1.0}, 1), 1}, {t::make_sample("b", {2.0}, 0), 1}};
    HistogramRow h;
    EXPECT_FALSE(detail::safe_auroc(base, eval, &h).has_value());
    EXPECT_EQ(std::accumulate(h.ik.begin(), h.ik.end(), std::size_t{0}), 2u);
}

TEST(Report, JsonRoundTripIsLossless) {
    const auto& r = tiny_report();
    const auto text = render_report_json(r);
    EXPECT_EQ(render_report_json(report_from_json(nlohmann::json::parse(text))), text);
}

TEST(Report, EmitWritesFilesAndReloads) {
    t::TempDir dir("w2sg-report");
    const auto& r = tiny_report();
    const auto files = emit_report(r, dir.path());
    EXPECT_GE(files.size(), 4u);
    for (const auto& f : files) EXPECT_TRUE(std::filesystem::exists(f)) << f;
    EXPECT_EQ(render_report_json(load_report(dir.path() / "report.json")), render_report_json(r));
    EXPECT_THROW(load_report(dir.path() / "missing.json"), Error);
}

TEST(Report, MethodCsvFollowsDeclaredOrderAndRecomputesPgr) {
    const auto csv = render_methods_csv(tiny_report());
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "method,weak_acc,w2s_acc,w2s_stderr,ceiling_acc,pgr");
    std::vector<std::string> order;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ls(line);
        for (std::string cell; std::getline(ls, cell, ',');) cells.push_back(cell);
        ASSERT_EQ(cells.size(), 6u);
        order.push_back(cells[0]);
        const double weak = std::stod(cells[1]);
        const double w2s = std::stod(cells[2]);
        const double ceiling = std::stod(cells[4]);
        EXPECT_LT(std::abs(pgr(weak, w2s, ceiling) - std::stod(cells[5])), 1e-9) << line;
    }
    EXPECT_EQ(order, (std::vector<std::string>{"finetune", "js", "selective", "selective_wo_ik", "mtl"}));
}

TEST(Report, ConfigEchoRoundTrips) {
    auto c = t::tiny_experiment();
    c.selective.gamma = 0.7;
    c.train.loss = LossId::js;
    const auto j = experiment_to_json(c);
    EXPECT_EQ(experiment_to_json(experiment_from_json(j)), j);
    EXPECT_EQ(j["weak"]["activation"], "tanh");
}
