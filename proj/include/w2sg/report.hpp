#pragma once

// JSON schema of experiment configs and run reports, and the CSV renderings
// written next to report.json.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "w2sg/pipeline.hpp"

namespace w2sg {

namespace detail {

inline nlohmann::json optional_json(const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

inline std::optional<double> optional_from(const nlohmann::json& j) {
    if (j.is_null()) return std::nullopt;
    return j.get<double>();
}

inline nlohmann::json train_to_json(const TrainConfig& t) {
    return {{"epochs", t.epochs},         {"batch_size", t.batch_size},      {"learning_rate", t.learning_rate},
            {"loss", to_string(t.loss)}, {"conf_alpha", t.hyper.conf_alpha}, {"conf_t", t.hyper.conf_t}};
}

inline TrainConfig train_from_json(const nlohmann::json& j, TrainConfig t = {}) {
    t.epochs = j.value("epochs", t.epochs);
    t.batch_size = j.value("batch_size", t.batch_size);
    t.learning_rate = j.value("learning_rate", t.learning_rate);
    if (j.contains("loss")) t.loss = parse_loss_id(j.at("loss").get<std::string>());
    t.hyper.conf_alpha = j.value("conf_alpha", t.hyper.conf_alpha);
    t.hyper.conf_t = j.value("conf_t", t.hyper.conf_t);
    return t;
}

inline nlohmann::json learner_to_json(const LearnerSpec& s) {
    return {{"visible_features", s.visible_features},
            {"hidden_widths", s.hidden_widths},
            {"capacity_tier", to_string(s.capacity_tier)},
            {"activation", kActivation},
            {"seed", s.seed},
            {"init_scale", s.init_scale}};
}

inline LearnerSpec learner_from_json(const nlohmann::json& j, LearnerSpec s) {
    s.visible_features = j.value("visible_features", s.visible_features);
    s.hidden_widths = j.value("hidden_widths", s.hidden_widths);
    if (j.contains("capacity_tier")) s.capacity_tier = parse_capacity_tier(j.at("capacity_tier").get<std::string>());
    if (j.contains("activation") && j.at("activation").get<std::string>() != kActivation) {
        throw Error("unsupported activation '" + j.at("activation").get<std::string>() + "'");
    }
    s.seed = j.value("seed", s.seed);
    s.init_scale = j.value("init_scale", s.init_scale);
    return s;
}

}  // namespace detail

inline nlohmann::json synth_to_json(const SynthSpec& s) {
    return {{"dimension", s.dimension},
            {"families", s.families},
            {"clusters_per_class", s.clusters_per_class},
            {"cluster_spread", s.cluster_spread},
            {"difficulty_tiers", s.difficulty_tiers},
            {"samples_per_family", s.samples_per_family},
            {"seed", s.seed},
            {"center_scale", s.center_scale},
            {"family_shift", s.family_shift},
            {"tier_margin_decay", s.tier_margin_decay},
            {"tier_flip_rate", s.tier_flip_rate}};
}

inline SynthSpec synth_from_json(const nlohmann::json& j, SynthSpec s = {}) {
    s.dimension = j.value("dimension", s.dimension);
    s.families = j.value("families", s.families);
    s.clusters_per_class = j.value("clusters_per_class", s.clusters_per_class);
    s.cluster_spread = j.value("cluster_spread", s.cluster_spread);
    s.difficulty_tiers = j.value("difficulty_tiers", s.difficulty_tiers);
    s.samples_per_family = j.value("samples_per_family", s.samples_per_family);
    s.seed = j.value("seed", s.seed);
    s.center_scale = j.value("center_scale", s.center_scale);
    s.family_shift = j.value("family_shift", s.family_shift);
    s.tier_margin_decay = j.value("tier_margin_decay", s.tier_margin_decay);
    s.tier_flip_rate = j.value("tier_flip_rate", s.tier_flip_rate);
    return s;
}

inline nlohmann::json experiment_to_json(const ExperimentConfig& c) {
    nlohmann::json methods = nlohmann::json::array();
    for (Method m : c.methods) methods.push_back(to_string(m));
    const auto& s = c.selective;
    return {
        {"data",
         {{"synthetic", synth_to_json(c.synthetic)},
          {"corpus_path", c.corpus_path},
          {"task", c.task},
          {"pik_task", c.pik_task},
          {"test_fraction", c.test_fraction},
          {"cap", c.cap},
          {"gold_as_weak", c.gold_as_weak}}},
        {"pretrain",
         {{"fraction", c.pretrain.fraction},
          {"epochs", c.pretrain.epochs},
          {"batch_size", c.pretrain.batch_size},
          {"learning_rate", c.pretrain.learning_rate}}},
        {"weak", detail::learner_to_json(c.weak_spec)},
        {"strong", detail::learner_to_json(c.strong_spec)},
        {"weak_train", detail::train_to_json(c.weak_train)},
        {"train", detail::train_to_json(c.train)},
        {"selective",
         {{"gamma", s.gamma},
          {"alpha", s.smooth.alpha},
          {"tau", s.smooth.tau},
          {"normalize_embeddings", s.smooth.normalize_embeddings},
          {"lambda", s.lambda},
          {"self_label_threshold", s.self_label_threshold},
          {"soft_self_labels", s.soft_self_labels},
          {"pik_warmup_epochs", s.pik_warmup_epochs}}},
        {"methods", methods},
        {"seeds", c.seeds},
        {"threads", c.threads},
        {"output_dir", c.output_dir},
        {"log_steps", c.log_steps},
        {"debug_smoothing", c.debug_smoothing},
        {"auroc", {{"tasks", c.auroc_tasks}, {"pik_epochs", c.pik_epochs}, {"easy_to_hard", c.easy_to_hard}}},
    };
}

/// Standard synthetic suite: the defaults every key falls back to.
inline ExperimentConfig default_experiment() {
    ExperimentConfig c;
    c.weak_spec.capacity_tier = CapacityTier::weak;
    c.weak_spec.visible_features = 8;
    c.weak_spec.hidden_widths = {};
    c.strong_spec.capacity_tier = CapacityTier::strong;
    c.strong_spec.hidden_widths = {64, 64};
    c.auroc_tasks = {"family0", "family1", "family2"};
    return c;
}

inline ExperimentConfig experiment_from_json(const nlohmann::json& j) {
    ExperimentConfig c = default_experiment();
    try {
        if (j.contains("data")) {
            const auto& d = j.at("data");
            if (d.contains("synthetic")) c.synthetic = synth_from_json(d.at("synthetic"), c.synthetic);
            c.corpus_path = d.value("corpus_path", c.corpus_path);
            c.task = d.value("task", c.task);
            c.pik_task = d.value("pik_task", c.pik_task);
            c.test_fraction = d.value("test_fraction", c.test_fraction);
            c.cap = d.value("cap", c.cap);
            c.gold_as_weak = d.value("gold_as_weak", c.gold_as_weak);
        }
        if (j.contains("pretrain")) {
            const auto& p = j.at("pretrain");
            c.pretrain.fraction = p.value("fraction", c.pretrain.fraction);
            c.pretrain.epochs = p.value("epochs", c.pretrain.epochs);
            c.pretrain.batch_size = p.value("batch_size", c.pretrain.batch_size);
            c.pretrain.learning_rate = p.value("learning_rate", c.pretrain.learning_rate);
        }
        if (j.contains("weak")) c.weak_spec = detail::learner_from_json(j.at("weak"), c.weak_spec);
        if (j.contains("strong")) c.strong_spec = detail::learner_from_json(j.at("strong"), c.strong_spec);
        if (j.contains("train")) c.train = detail::train_from_json(j.at("train"), c.train);
        c.weak_train = j.contains("weak_train") ? detail::train_from_json(j.at("weak_train"), c.train) : c.train;
        if (j.contains("selective")) {
            const auto& s = j.at("selective");
            auto& sc = c.selective;
            sc.gamma = s.value("gamma", sc.gamma);
            sc.smooth.alpha = s.value("alpha", sc.smooth.alpha);
            sc.smooth.tau = s.value("tau", sc.smooth.tau);
            sc.smooth.normalize_embeddings = s.value("normalize_embeddings", sc.smooth.normalize_embeddings);
            sc.lambda = s.value("lambda", sc.lambda);
            sc.self_label_threshold = s.value("self_label_threshold", sc.self_label_threshold);
            sc.soft_self_labels = s.value("soft_self_labels", sc.soft_self_labels);
            sc.pik_warmup_epochs = s.value("pik_warmup_epochs", sc.pik_warmup_epochs);
        }
        if (j.contains("methods")) {
            c.methods.clear();
            for (const auto& m : j.at("methods")) c.methods.push_back(parse_method(m.get<std::string>()));
        }
        c.seeds = j.value("seeds", c.seeds);
        c.threads = j.value("threads", c.threads);
        c.output_dir = j.value("output_dir", c.output_dir);
        c.log_steps = j.value("log_steps", c.log_steps);
        c.debug_smoothing = j.value("debug_smoothing", c.debug_smoothing);
        if (j.contains("auroc")) {
            const auto& a = j.at("auroc");
            c.auroc_tasks = a.value("tasks", c.auroc_tasks);
            c.pik_epochs = a.value("pik_epochs", c.pik_epochs);
            c.easy_to_hard = a.value("easy_to_hard", c.easy_to_hard);
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("invalid experiment config: ") + e.what());
    }
    c.selective.train = c.train;
    c.validate();
    return c;
}

// ---------------------------------------------------------------------------
// Reports

inline nlohmann::json histogram_json(const Histogram& h) { return nlohmann::json(std::vector<std::size_t>(h.begin(), h.end())); }

inline Histogram histogram_from_json(const nlohmann::json& j) {
    const auto v = j.get<std::vector<std::size_t>>();
    if (v.size() != kHistogramBins) throw Error("histogram must have 20 bins");
    Histogram h{};
    std::copy(v.begin(), v.end(), h.begin());
    return h;
}

inline nlohmann::json estimate_json(const Estimate& e) { return {{"mean", e.mean}, {"stderr", e.std_error}}; }

inline Estimate estimate_from_json(const nlohmann::json& j) {
    return {j.at("mean").get<double>(), j.at("stderr").get<double>()};
}

inline nlohmann::json report_to_json(const RunReport& r) {
    nlohmann::json methods = nlohmann::json::array();
    for (const auto& m : r.methods) {
        methods.push_back({{"method", to_string(m.method)},
                           {"w2s_acc", estimate_json(m.w2s_acc)},
                           {"pgr", detail::optional_json(m.pgr)},
                           {"per_seed", m.per_seed}});
    }
    nlohmann::json auroc_rows = nlohmann::json::array();
    for (const auto& a : r.auroc_table) {
        auroc_rows.push_back({{"model", a.model},
                              {"train_task", a.train_task},
                              {"eval_task", a.eval_task},
                              {"auroc", detail::optional_json(a.auroc)}});
    }
    nlohmann::json hists = nlohmann::json::array();
    for (const auto& h : r.pik_histograms) {
        hists.push_back({{"model", h.model},
                         {"train_task", h.train_task},
                         {"eval_task", h.eval_task},
                         {"ik", histogram_json(h.ik)},
                         {"idk", histogram_json(h.idk)}});
    }
    nlohmann::json failures = nlohmann::json::array();
    for (const auto& f : r.failures) failures.push_back({{"seed", f.seed}, {"stage", f.stage}, {"message", f.message}});
    return {{"format", "w2sg-report"},
            {"version", 1},
            {"kind", r.kind},
            {"seeds", r.seeds},
            {"weak_acc", estimate_json(r.weak_acc)},
            {"w2s_acc", estimate_json(r.w2s_acc)},
            {"ceiling_acc", estimate_json(r.ceiling_acc)},
            {"base_acc", estimate_json(r.base_acc)},
            {"pgr", detail::optional_json(r.pgr)},
            {"pgr_status", r.pgr_status},
            {"weak_per_seed", r.weak_per_seed},
            {"ceiling_per_seed", r.ceiling_per_seed},
            {"base_per_seed", r.base_per_seed},
            {"methods", methods},
            {"auroc_table", auroc_rows},
            {"pik_histograms", hists},
            {"failures", failures},
            {"config", r.config}};
}

inline RunReport report_from_json(const nlohmann::json& j) {
    if (j.value("format", std::string{}) != "w2sg-report") throw Error("not a w2sg report");
    RunReport r;
    try {
        r.kind = j.at("kind").get<std::string>();
        r.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
        r.weak_acc = estimate_from_json(j.at("weak_acc"));
        r.w2s_acc = estimate_from_json(j.at("w2s_acc"));
        r.ceiling_acc = estimate_from_json(j.at("ceiling_acc"));
        r.base_acc = estimate_from_json(j.at("base_acc"));
        r.pgr = detail::optional_from(j.at("pgr"));
        r.pgr_status = j.at("pgr_status").get<std::string>();
        r.weak_per_seed = j.at("weak_per_seed").get<std::vector<double>>();
        r.ceiling_per_seed = j.at("ceiling_per_seed").get<std::vector<double>>();
        r.base_per_seed = j.at("base_per_seed").get<std::vector<double>>();
        for (const auto& m : j.at("methods")) {
            r.methods.push_back({parse_method(m.at("method").get<std::string>()), estimate_from_json(m.at("w2s_acc")),
                                 detail::optional_from(m.at("pgr")), m.at("per_seed").get<std::vector<double>>()});
        }
        for (const auto& a : j.at("auroc_table")) {
            r.auroc_table.push_back({a.at("model").get<std::string>(), a.at("train_task").get<std::string>(),
                                     a.at("eval_task").get<std::string>(), detail::optional_from(a.at("auroc"))});
        }
        for (const auto& h : j.at("pik_histograms")) {
            r.pik_histograms.push_back({h.at("model").get<std::string>(), h.at("train_task").get<std::string>(),
                                        h.at("eval_task").get<std::string>(), histogram_from_json(h.at("ik")),
                                        histogram_from_json(h.at("idk"))});
        }
        for (const auto& f : j.at("failures")) {
            r.failures.push_back(
                {f.at("seed").get<std::uint64_t>(), f.at("stage").get<std::string>(), f.at("message").get<std::string>()});
        }
        r.config = j.at("config");
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("malformed report: ") + e.what());
    }
    return r;
}

namespace detail {

// Shortest round-trip representation.
inline std::string num(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline std::string num(const std::optional<double>& v) { return v ? num(*v) : std::string("NA"); }

}  // namespace detail

inline std::string render_summary_csv(const RunReport& r) {
    std::ostringstream out;
    out << "stage,acc_mean,acc_stderr\n";
    out << "weak," << detail::num(r.weak_acc.mean) << ',' << detail::num(r.weak_acc.std_error) << '\n';
    out << "strong_base," << detail::num(r.base_acc.mean) << ',' << detail::num(r.base_acc.std_error) << '\n';
    out << "strong_ceiling," << detail::num(r.ceiling_acc.mean) << ',' << detail::num(r.ceiling_acc.std_error) << '\n';
    return out.str();
}

/// Comparison table: one row per method in declared order.
inline std::string render_methods_csv(const RunReport& r) {
    std::ostringstream out;
    out << "method,weak_acc,w2s_acc,w2s_stderr,ceiling_acc,pgr\n";
    std::vector<const MethodRow*> rows;
    for (const auto& m : r.methods) rows.push_back(&m);
    std::sort(rows.begin(), rows.end(),
              [](const MethodRow* a, const MethodRow* b) { return method_rank(a->method) < method_rank(b->method); });
    for (const auto* m : rows) {
        out << to_string(m->method) << ',' << detail::num(r.weak_acc.mean) << ',' << detail::num(m->w2s_acc.mean) << ','
            << detail::num(m->w2s_acc.std_error) << ',' << detail::num(r.ceiling_acc.mean) << ','
            << detail::num(m->pgr) << '\n';
    }
    return out.str();
}

inline std::string render_auroc_csv(const RunReport& r) {
    std::ostringstream out;
    out << "model,train_task,eval_task,auroc\n";
    for (const auto& a : r.auroc_table) {
        out << a.model << ',' << a.train_task << ',' << a.eval_task << ',' << detail::num(a.auroc) << '\n';
    }
    return out.str();
}

inline std::string render_histograms_csv(const RunReport& r) {
    std::ostringstream out;
    out << "model,train_task,eval_task,bin_lo,bin_hi,count_ik,count_idk,count_total\n";
    for (const auto& h : r.pik_histograms) {
        for (std::size_t b = 0; b < kHistogramBins; ++b) {
            out << h.model << ',' << h.train_task << ',' << h.eval_task << ',' << detail::num(0.05 * static_cast<double>(b))
                << ',' << detail::num(0.05 * static_cast<double>(b + 1)) << ',' << h.ik[b] << ',' << h.idk[b] << ','
                << h.ik[b] + h.idk[b] << '\n';
        }
    }
    return out.str();
}

inline std::string render_report_json(const RunReport& r) { return report_to_json(r).dump(2) + "\n"; }

/// Writes report.json plus CSV tables into `dir`; returns the written paths.
inline std::vector<std::filesystem::path> emit_report(const RunReport& r, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error("cannot create output directory '" + dir.string() + "': " + ec.message());
    std::vector<std::pair<std::string, std::string>> files = {{"report.json", render_report_json(r)}};
    if (r.kind == "w2sg") {
        files.emplace_back("summary.csv", render_summary_csv(r));
        files.emplace_back("methods.csv", render_methods_csv(r));
    }
    files.emplace_back("auroc.csv", render_auroc_csv(r));
    files.emplace_back("pik_histograms.csv", render_histograms_csv(r));

    std::vector<std::filesystem::path> written;
    for (const auto& [name, content] : files) {
        const auto path = dir / name;
        std::ofstream out(path, std::ios::binary);
        out << content;
        if (!out) throw Error("failed to write '" + path.string() + "'");
        written.push_back(path);
    }
    return written;
}

inline RunReport load_report(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open report '" + path.string() + "'");
    try {
        return report_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
        throw Error(path.string() + ": " + e.what());
    }
}

}  // namespace w2sg
