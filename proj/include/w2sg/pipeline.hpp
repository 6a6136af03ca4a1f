#pragma once

// The weak-to-strong protocol: weak supervisor -> weak labels -> strong
// student (one row per method) -> strong ceiling, aggregated over seeds.

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "w2sg/dataset.hpp"
#include "w2sg/learner.hpp"
#include "w2sg/pik.hpp"
#include "w2sg/selective.hpp"
#include "w2sg/stats.hpp"

namespace w2sg {

enum class Method { finetune, conf, prod, rkl, js, selective, selective_wo_ik, selective_wo_gs, mtl };

/// Row order of comparison tables.
inline constexpr std::array kMethodOrder = {Method::finetune,  Method::conf,            Method::prod,
                                            Method::rkl,       Method::js,              Method::selective,
                                            Method::selective_wo_ik, Method::selective_wo_gs, Method::mtl};

inline std::string_view to_string(Method m) {
    switch (m) {
        case Method::finetune: return "finetune";
        case Method::conf: return "conf";
        case Method::prod: return "prod";
        case Method::rkl: return "rkl";
        case Method::js: return "js";
        case Method::selective: return "selective";
        case Method::selective_wo_ik: return "selective_wo_ik";
        case Method::selective_wo_gs: return "selective_wo_gs";
        case Method::mtl: return "mtl";
    }
    return "?";
}

inline Method parse_method(std::string_view s) {
    for (Method m : kMethodOrder) {
        if (to_string(m) == s) return m;
    }
    throw Error("unknown method '" + std::string(s) + "'");
}

inline std::size_t method_rank(Method m) {
    return static_cast<std::size_t>(std::find(kMethodOrder.begin(), kMethodOrder.end(), m) - kMethodOrder.begin());
}

inline bool trains_pik(Method m) {
    return m == Method::selective || m == Method::selective_wo_gs || m == Method::mtl;
}

/// Gap convention for the three accuracies; a gap below this is flagged.
inline constexpr double kUnstableGap = 0.01;

/// Performance gap recovered. Not clamped.
inline double pgr(double weak_acc, double w2s_acc, double ceiling_acc) {
    const double gap = ceiling_acc - weak_acc;
    if (gap == 0.0) throw Error("PGR undefined: ceiling accuracy equals weak accuracy");
    return (w2s_acc - weak_acc) / gap;
}

struct PretrainConfig {
    double fraction = 0.05;  // of every task, carved off before splitting
    std::size_t epochs = 10;
    std::size_t batch_size = 32;
    double learning_rate = 0.05;
};

struct ExperimentConfig {
    SynthSpec synthetic;
    std::string corpus_path;  // empty: generate from `synthetic`
    std::string task = "family0";
    std::string pik_task = "family1";
    double test_fraction = 0.2;
    std::size_t cap = 20000;
    // Control run: the student trains on gold labels in place of weak ones.
    bool gold_as_weak = false;
    PretrainConfig pretrain;
    LearnerSpec weak_spec;
    LearnerSpec strong_spec;
    TrainConfig weak_train;
    TrainConfig train;
    SelectiveConfig selective;  // its `train` member is replaced by `train`
    std::vector<Method> methods{Method::finetune, Method::selective};
    std::vector<std::uint64_t> seeds{0};
    std::size_t threads = 1;
    std::string output_dir = "w2sg-out";
    bool log_steps = false;
    bool debug_smoothing = false;

    // P(IK) generalization matrix
    std::vector<std::string> auroc_tasks;
    std::size_t pik_epochs = 2;
    bool easy_to_hard = true;

    void validate() const {
        if (corpus_path.empty()) synthetic.validate();
        if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw Error("test_fraction must lie in (0,1)");
        if (!(pretrain.fraction > 0.0 && pretrain.fraction < 1.0)) throw Error("pretrain.fraction must lie in (0,1)");
        if (pretrain.epochs == 0 || pretrain.batch_size == 0) throw Error("pretrain epochs/batch_size must be positive");
        if (cap < 2) throw Error("cap must be at least 2");
        if (weak_spec.capacity_tier != CapacityTier::weak || strong_spec.capacity_tier != CapacityTier::strong) {
            throw Error("weak/strong learner specs must carry the weak/strong capacity tiers");
        }
        if (seeds.empty()) throw Error("at least one seed is required");
        if (methods.empty()) throw Error("at least one method is required");
        if (task == pik_task) throw Error("the P(IK) task must differ from the target task");
        weak_train.validate();
        train.validate();
        SelectiveConfig s = selective;
        s.train = train;
        s.validate();
    }
};

struct Estimate {
    double mean = 0.0;
    double std_error = 0.0;
};

struct MethodRow {
    Method method = Method::finetune;
    Estimate w2s_acc;
    std::optional<double> pgr;
    std::vector<double> per_seed;
};

struct AurocRow {
    std::string model;
    std::string train_task;
    std::string eval_task;
    std::optional<double> auroc;  // empty when IK labels are single-class
};

struct HistogramRow {
    std::string model;
    std::string train_task;
    std::string eval_task;
    Histogram ik{};
    Histogram idk{};
};

struct SeedFailure {
    std::uint64_t seed = 0;
    std::string stage;
    std::string message;
};

struct RunReport {
    std::string kind = "w2sg";  // or "auroc_matrix"
    std::vector<std::uint64_t> seeds;  // seeds that completed
    Estimate weak_acc;
    Estimate w2s_acc;  // first method row, kept for single-method runs
    Estimate ceiling_acc;
    Estimate base_acc;
    std::optional<double> pgr;
    std::string pgr_status = "ok";  // ok | unstable | undefined
    std::vector<double> weak_per_seed;
    std::vector<double> ceiling_per_seed;
    std::vector<double> base_per_seed;
    std::vector<MethodRow> methods;
    std::vector<AurocRow> auroc_table;
    std::vector<HistogramRow> pik_histograms;
    std::vector<SeedFailure> failures;
    nlohmann::json config;

    const MethodRow* row(Method m) const {
        for (const auto& r : methods) {
            if (r.method == m) return &r;
        }
        return nullptr;
    }
};

// ---------------------------------------------------------------------------
// Data preparation

struct SeedData {
    Corpus pretrain;
    Corpus weak_half;
    Corpus strong_half;
    Corpus test;
    Corpus pik;
    std::map<std::string, Corpus> remaining_by_task;  // everything but the pretraining slice
};

inline Corpus source_corpus(const ExperimentConfig& config, std::uint64_t seed) {
    if (!config.corpus_path.empty()) return load_corpus(config.corpus_path);
    SynthSpec spec = config.synthetic;
    spec.seed = mix_seed(config.synthetic.seed, seed);
    return generate_synthetic(spec);
}

inline std::vector<std::string> task_names(const Corpus& corpus) {
    std::vector<std::string> names;
    for (const auto& s : corpus.samples) {
        if (std::find(names.begin(), names.end(), s.task_tag) == names.end()) names.push_back(s.task_tag);
    }
    return names;
}

inline SeedData prepare_seed_data(const ExperimentConfig& config, std::uint64_t seed) {
    const Corpus all = source_corpus(config, seed);
    SeedData d;
    d.pretrain.dimension = all.dimension;
    for (const auto& name : task_names(all)) {
        auto [pre, rest] = carve_fraction(filter_task(all, name), config.pretrain.fraction, mix_seed(seed, "pretrain:" + name));
        d.pretrain.samples.insert(d.pretrain.samples.end(), pre.samples.begin(), pre.samples.end());
        d.remaining_by_task.emplace(name, std::move(rest));
    }
    auto task_it = d.remaining_by_task.find(config.task);
    if (task_it == d.remaining_by_task.end() || task_it->second.empty()) {
        throw Error("task '" + config.task + "' has no samples");
    }
    auto pik_it = d.remaining_by_task.find(config.pik_task);
    if (pik_it == d.remaining_by_task.end() || pik_it->second.empty()) {
        throw Error("P(IK) task '" + config.pik_task + "' has no samples");
    }
    auto [test, train_pool] = carve_fraction(task_it->second, config.test_fraction, mix_seed(seed, "test"));
    d.test = std::move(test);
    std::tie(d.weak_half, d.strong_half) = split_and_cap(train_pool, config.cap, mix_seed(seed, "halves"));
    d.pik = pik_it->second;
    return d;
}

// ---------------------------------------------------------------------------
// One seed of the protocol

struct SeedOutcome {
    std::uint64_t seed = 0;
    double weak_acc = 0.0;
    double ceiling_acc = 0.0;
    double base_acc = 0.0;
    std::map<Method, double> w2s_acc;
    std::map<Method, double> pik_auroc;  // NaN when undefined
    std::map<Method, std::pair<Histogram, Histogram>> pik_hist;
    std::optional<SeedFailure> failure;
};

namespace detail {

inline LearnerSpec bind_spec(LearnerSpec spec, std::size_t dimension, std::uint64_t seed, std::string_view tag) {
    spec.input_dimension = dimension;
    spec.seed = mix_seed(mix_seed(spec.seed, seed), tag);
    spec.validate();
    return spec;
}

inline std::filesystem::path ensure_dir(const std::filesystem::path& p) {
    std::error_code ec;
    std::filesystem::create_directories(p, ec);
    if (ec) throw Error("cannot create directory '" + p.string() + "': " + ec.message());
    return p;
}

inline SelectiveConfig method_selective_config(const ExperimentConfig& config, Method m, const TrainConfig& train) {
    SelectiveConfig s = config.selective;
    s.train = train;
    s.train.loss = LossId::ce;
    if (m == Method::selective_wo_ik) {
        s.lambda = 0.0;
        s.gamma = 0.999;
    } else if (m == Method::selective_wo_gs) {
        s.smooth.alpha = 1.0;
    }
    return s;
}

inline LearnerState pretrain_base(const ExperimentConfig& config, const SeedData& data, std::uint64_t seed) {
    auto base = init_learner(bind_spec(config.strong_spec, data.pretrain.dimension, seed, "strong"));
    TrainConfig tc;
    tc.epochs = config.pretrain.epochs;
    tc.batch_size = config.pretrain.batch_size;
    tc.learning_rate = config.pretrain.learning_rate;
    tc.seed = mix_seed(seed, "pretrain");
    const auto gold = data.pretrain.gold_targets();
    return train(std::move(base), data.pretrain.samples, gold, tc).state;
}

}  // namespace detail

inline SeedOutcome run_seed(const ExperimentConfig& config, std::uint64_t seed) {
    SeedOutcome out;
    out.seed = seed;
    std::string stage = "data";
    try {
        const SeedData data = prepare_seed_data(config, seed);
        const std::size_t dim = data.test.dimension;

        stage = "pretrain";
        const LearnerState base = detail::pretrain_base(config, data, seed);
        out.base_acc = evaluate_accuracy(base, data.test.samples);

        stage = "weak";
        TrainConfig weak_tc = config.weak_train;
        weak_tc.loss = LossId::ce;
        weak_tc.seed = mix_seed(seed, "weak-train");
        auto weak = init_learner(detail::bind_spec(config.weak_spec, dim, seed, "weak"));
        weak = train(std::move(weak), data.weak_half.samples, data.weak_half.gold_targets(), weak_tc).state;
        out.weak_acc = evaluate_accuracy(weak, data.test.samples);

        stage = "weak-labels";
        Corpus strong_half = data.strong_half;
        if (config.gold_as_weak) {
            strong_half.weak_labels.emplace();
            for (const auto& s : strong_half.samples) strong_half.weak_labels->emplace(s.id, SoftLabel::hard(s.gold_label));
        } else {
            strong_half.weak_labels = predict_soft_labels(weak, strong_half.samples);
        }
        const auto weak_labels = strong_half.aligned_weak_labels();
        const std::filesystem::path out_dir(config.output_dir);
        if (config.log_steps) {
            save_weak_labels((detail::ensure_dir(out_dir / "weak_labels") / ("seed" + std::to_string(seed) + ".jsonl")).string(),
                             strong_half);
        }

        TrainConfig student_tc = config.train;
        student_tc.seed = mix_seed(seed, "student");

        stage = "ceiling";
        TrainConfig ceiling_tc = student_tc;
        ceiling_tc.loss = LossId::ce;
        const auto ceiling = train(base, strong_half.samples, strong_half.gold_targets(), ceiling_tc).state;
        out.ceiling_acc = evaluate_accuracy(ceiling, data.test.samples);

        stage = "pik-labels";
        std::vector<PikExample> pik_examples;
        if (std::any_of(config.methods.begin(), config.methods.end(), trains_pik)) {
            pik_examples = build_pik_dataset(base, data.pik.samples);
        }
        const auto test_ik = build_pik_dataset(base, data.test.samples);

        for (Method m : config.methods) {
            stage = std::string("student:") + std::string(to_string(m));
            LearnerState student;
            switch (m) {
                case Method::finetune:
                case Method::conf:
                case Method::prod:
                case Method::rkl:
                case Method::js: {
                    TrainConfig tc = student_tc;
                    tc.loss = m == Method::finetune ? LossId::ce : parse_loss_id(to_string(m));
                    student = train(base, strong_half.samples, weak_labels, tc).state;
                    break;
                }
                default: {
                    const auto sc = detail::method_selective_config(config, m, student_tc);
                    SelectiveHooks hooks;
                    std::ofstream steps;
                    std::ofstream smooth_dump;
                    const std::string stem = "seed" + std::to_string(seed) + "_" + std::string(to_string(m));
                    if (config.log_steps) {
                        steps.open(detail::ensure_dir(out_dir / "steps") / (stem + ".jsonl"));
                        hooks.on_step = [&](const StepMetrics& s) {
                            steps << nlohmann::json{{"step", s.step},
                                                    {"l_gen", s.l_gen},
                                                    {"l_ik", s.l_ik},
                                                    {"ik_fraction", s.ik_fraction},
                                                    {"mean_pik", s.mean_pik}}
                                         .dump()
                                  << '\n';
                        };
                    }
                    if (config.debug_smoothing) {
                        smooth_dump.open(detail::ensure_dir(out_dir / "smoothing") / (stem + ".csv"));
                        smooth_dump << "step,node_id,role,pik_score,l_p,l_g\n";
                        smooth_dump.precision(17);
                        hooks.on_smoothing = [&](const SmoothingRow& r) {
                            smooth_dump << r.step << ',' << r.node_id << ',' << (r.ik ? "IK" : "IDK") << ',' << r.pik
                                        << ',' << r.prior << ',' << r.target << '\n';
                        };
                    }
                    student = m == Method::mtl
                                  ? train_mtl_variant(base, strong_half.samples, weak_labels, pik_examples, sc, hooks)
                                  : train_selective(base, strong_half.samples, weak_labels, pik_examples, sc, hooks);
                    break;
                }
            }
            out.w2s_acc[m] = evaluate_accuracy(student, data.test.samples);
            if (trains_pik(m)) {
                const auto scores = score_pik(student, test_ik);
                const auto labels = ik_labels(test_ik);
                const bool both = std::count(labels.begin(), labels.end(), 1) > 0 &&
                                  std::count(labels.begin(), labels.end(), 0) > 0;
                out.pik_auroc[m] = both ? auroc(scores, labels) : std::nan("");
                std::vector<double> ik_scores;
                std::vector<double> idk_scores;
                for (std::size_t i = 0; i < scores.size(); ++i) (labels[i] ? ik_scores : idk_scores).push_back(scores[i]);
                out.pik_hist[m] = {histogram(ik_scores), histogram(idk_scores)};
            }
        }
    } catch (const std::exception& e) {
        out.failure = SeedFailure{seed, stage, e.what()};
    }
    return out;
}

namespace detail {

template <typename Job>
auto run_jobs(std::size_t count, std::size_t threads, Job job) {
    using Result = decltype(job(std::size_t{0}));
    std::vector<Result> results(count);
    const std::size_t width = std::max<std::size_t>(1, threads);
    for (std::size_t start = 0; start < count; start += width) {
        std::vector<std::future<Result>> wave;
        const std::size_t stop = std::min(count, start + width);
        if (width == 1) {
            results[start] = job(start);
            continue;
        }
        for (std::size_t i = start; i < stop; ++i) wave.push_back(std::async(std::launch::async, job, i));
        for (std::size_t i = start; i < stop; ++i) results[i] = wave[i - start].get();
    }
    return results;
}

inline Estimate estimate(std::span<const double> xs) { return {stats::mean(xs), stats::stderr_of_mean(xs)}; }

}  // namespace detail

inline nlohmann::json experiment_to_json(const ExperimentConfig& config);

inline RunReport run_w2sg(const ExperimentConfig& config) {
    config.validate();
    const auto outcomes = detail::run_jobs(config.seeds.size(), config.threads,
                                           [&](std::size_t i) { return run_seed(config, config.seeds[i]); });
    RunReport report;
    report.config = experiment_to_json(config);
    std::map<Method, std::vector<double>> per_method;
    std::map<Method, std::vector<double>> aurocs;
    std::map<Method, std::pair<Histogram, Histogram>> hists;
    for (const auto& o : outcomes) {
        if (o.failure) {
            report.failures.push_back(*o.failure);
            continue;
        }
        report.seeds.push_back(o.seed);
        report.weak_per_seed.push_back(o.weak_acc);
        report.ceiling_per_seed.push_back(o.ceiling_acc);
        report.base_per_seed.push_back(o.base_acc);
        for (const auto& [m, acc] : o.w2s_acc) per_method[m].push_back(acc);
        for (const auto& [m, a] : o.pik_auroc) {
            if (!std::isnan(a)) aurocs[m].push_back(a);
        }
        for (const auto& [m, h] : o.pik_hist) {
            auto& acc = hists[m];
            for (std::size_t b = 0; b < kHistogramBins; ++b) {
                acc.first[b] += h.first[b];
                acc.second[b] += h.second[b];
            }
        }
    }
    if (report.seeds.empty()) {
        report.pgr_status = "undefined";
        return report;
    }
    report.weak_acc = detail::estimate(report.weak_per_seed);
    report.ceiling_acc = detail::estimate(report.ceiling_per_seed);
    report.base_acc = detail::estimate(report.base_per_seed);
    const double gap = report.ceiling_acc.mean - report.weak_acc.mean;
    // Identical architectures leave no capability gap; any measured gap is noise.
    const bool same_capacity = config.weak_spec.hidden_widths == config.strong_spec.hidden_widths &&
                               config.weak_spec.visible() == config.strong_spec.visible();
    report.pgr_status = gap == 0.0 ? "undefined" : (std::abs(gap) < kUnstableGap || same_capacity ? "unstable" : "ok");

    std::vector<Method> ordered = config.methods;
    std::sort(ordered.begin(), ordered.end(), [](Method a, Method b) { return method_rank(a) < method_rank(b); });
    ordered.erase(std::unique(ordered.begin(), ordered.end()), ordered.end());
    for (Method m : ordered) {
        MethodRow row;
        row.method = m;
        row.per_seed = per_method[m];
        row.w2s_acc = detail::estimate(row.per_seed);
        if (gap != 0.0) row.pgr = pgr(report.weak_acc.mean, row.w2s_acc.mean, report.ceiling_acc.mean);
        report.methods.push_back(std::move(row));
    }
    report.w2s_acc = report.methods.front().w2s_acc;
    report.pgr = report.methods.front().pgr;

    for (Method m : ordered) {
        if (!trains_pik(m)) continue;
        AurocRow row{std::string(to_string(m)), config.pik_task, config.task, std::nullopt};
        if (!aurocs[m].empty()) row.auroc = stats::mean(aurocs[m]);
        report.auroc_table.push_back(row);
        report.pik_histograms.push_back(
            {std::string(to_string(m)), config.pik_task, config.task, hists[m].first, hists[m].second});
    }
    return report;
}

// ---------------------------------------------------------------------------
// P(IK) generalization matrix

struct PikSplit {
    std::vector<PikExample> train;
    std::vector<PikExample> eval;
};

namespace detail {

inline std::vector<PikExample> filter_tier(const std::vector<PikExample>& xs, int lo, int hi) {
    std::vector<PikExample> out;
    for (const auto& x : xs) {
        if (x.sample.difficulty_tag >= lo && x.sample.difficulty_tag <= hi) out.push_back(x);
    }
    return out;
}

inline std::optional<double> safe_auroc(const LearnerState& model, const std::vector<PikExample>& eval,
                                        HistogramRow* hist) {
    if (eval.empty()) return std::nullopt;
    const auto scores = score_pik(model, eval);
    const auto labels = ik_labels(eval);
    if (hist) {
        std::vector<double> ik;
        std::vector<double> idk;
        for (std::size_t i = 0; i < scores.size(); ++i) (labels[i] ? ik : idk).push_back(scores[i]);
        hist->ik = histogram(ik);
        hist->idk = histogram(idk);
    }
    const auto pos = std::count(labels.begin(), labels.end(), 1);
    if (pos == 0 || pos == static_cast<long>(labels.size())) return std::nullopt;
    return auroc(scores, labels);
}

}  // namespace detail

/// Trains a P(IK)-only model per task and scores every task with it. Cell
/// values are means over seeds; histograms are summed over seeds.
inline RunReport run_auroc_matrix(const ExperimentConfig& config, std::vector<std::string> tasks = {}) {
    config.validate();
    if (tasks.empty()) tasks = config.auroc_tasks;
    if (tasks.size() < 2) throw Error("auroc matrix needs at least two tasks");

    struct SeedCells {
        std::vector<std::optional<double>> values;
        std::vector<HistogramRow> hists;
        std::optional<SeedFailure> failure;
    };

    auto job = [&](std::size_t si) {
        const std::uint64_t seed = config.seeds[si];
        SeedCells cells;
        std::string stage = "data";
        try {
            const SeedData data = prepare_seed_data(config, seed);
            stage = "pretrain";
            const LearnerState base = detail::pretrain_base(config, data, seed);
            std::map<std::string, PikSplit> splits;
            int max_tier = 0;
            stage = "pik-labels";
            for (const auto& t : tasks) {
                auto it = data.remaining_by_task.find(t);
                if (it == data.remaining_by_task.end()) throw Error("unknown task '" + t + "'");
                auto [tr, ev] = carve_fraction(it->second, 0.5, mix_seed(seed, "auroc:" + t));
                splits[t] = {build_pik_dataset(base, tr.samples), build_pik_dataset(base, ev.samples)};
                for (const auto& s : it->second.samples) max_tier = std::max(max_tier, s.difficulty_tag);
            }
            TrainConfig tc = config.train;
            tc.epochs = config.pik_epochs;
            tc.seed = mix_seed(seed, "pik-only");

            auto add_row = [&](const LearnerState& model, const std::string& model_name, const std::string& train_name,
                               const std::string& eval_name, const std::vector<PikExample>& eval) {
                HistogramRow h{model_name, train_name, eval_name, {}, {}};
                cells.values.push_back(detail::safe_auroc(model, eval, &h));
                cells.hists.push_back(h);
            };
            for (const auto& a : tasks) {
                stage = "pik-train:" + a;
                const auto model = train_pik_only(base, splits[a].train, tc);
                for (const auto& b : tasks) add_row(model, "pik_only", a, b, splits[b].eval);
            }
            if (config.easy_to_hard && max_tier > 0) {
                for (const auto& a : tasks) {
                    stage = "pik-train-easy:" + a;
                    const auto easy = detail::filter_tier(splits[a].train, 0, max_tier - 1);
                    const auto model = train_pik_only(base, easy, tc);
                    for (const auto& b : tasks) {
                        add_row(model, "pik_only_easy", a + "@easy", b + "@hard",
                                detail::filter_tier(splits[b].eval, max_tier, max_tier));
                    }
                }
            }
        } catch (const std::exception& e) {
            cells.failure = SeedFailure{seed, stage, e.what()};
        }
        return cells;
    };
    const auto results = detail::run_jobs(config.seeds.size(), config.threads, job);

    RunReport report;
    report.kind = "auroc_matrix";
    report.config = experiment_to_json(config);
    report.pgr_status = "undefined";
    std::vector<std::vector<double>> sums;
    for (std::size_t si = 0; si < results.size(); ++si) {
        const auto& r = results[si];
        if (r.failure) {
            report.failures.push_back(*r.failure);
            continue;
        }
        report.seeds.push_back(config.seeds[si]);
        if (report.pik_histograms.empty()) {
            report.pik_histograms = r.hists;
            sums.resize(r.values.size());
        } else {
            for (std::size_t c = 0; c < r.hists.size(); ++c) {
                for (std::size_t b = 0; b < kHistogramBins; ++b) {
                    report.pik_histograms[c].ik[b] += r.hists[c].ik[b];
                    report.pik_histograms[c].idk[b] += r.hists[c].idk[b];
                }
            }
        }
        for (std::size_t c = 0; c < r.values.size(); ++c) {
            if (r.values[c]) sums[c].push_back(*r.values[c]);
        }
    }
    for (std::size_t c = 0; c < report.pik_histograms.size(); ++c) {
        const auto& h = report.pik_histograms[c];
        AurocRow row{h.model, h.train_task, h.eval_task, std::nullopt};
        if (!sums[c].empty()) row.auroc = stats::mean(sums[c]);
        report.auroc_table.push_back(row);
    }
    return report;
}

}  // namespace w2sg

#include "w2sg/report.hpp"
