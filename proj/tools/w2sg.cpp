// Command-line front end: data generation, experiment runs, the P(IK)
// generalization matrix, report re-rendering and a PGR calculator.

#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "w2sg/config.hpp"
#include "w2sg/pipeline.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kStageFailed = 2;

struct RunOptions {
    std::string config;
    std::string out;
    std::vector<std::uint64_t> seeds;
    std::size_t threads = 0;
};

// --out beats W2SG_OUTPUT_DIR, which beats the config file.
void apply_overrides(w2sg::ExperimentConfig& config, const RunOptions& opts) {
    if (const char* env = std::getenv("W2SG_OUTPUT_DIR"); env && *env) config.output_dir = env;
    if (!opts.out.empty()) config.output_dir = opts.out;
    if (!opts.seeds.empty()) config.seeds = opts.seeds;
    if (opts.threads > 0) config.threads = opts.threads;
}

void print_failures(const w2sg::RunReport& report) {
    for (const auto& f : report.failures) {
        std::cerr << "seed " << f.seed << " failed at stage '" << f.stage << "': " << f.message << '\n';
    }
}

int finish(const w2sg::RunReport& report, const std::string& dir) {
    for (const auto& path : w2sg::emit_report(report, dir)) std::cerr << "wrote " << path.string() << '\n';
    print_failures(report);
    return report.failures.empty() ? 0 : kStageFailed;
}

int cmd_gen_data(const std::string& spec_path, const std::string& out, std::optional<std::uint64_t> seed) {
    auto spec = w2sg::load_synth_spec(spec_path);
    if (seed) spec.seed = *seed;
    const auto corpus = w2sg::generate_synthetic(spec);
    if (const auto parent = fs::path(out).parent_path(); !parent.empty()) fs::create_directories(parent);
    w2sg::save_corpus(out, corpus);
    std::cerr << "wrote " << corpus.size() << " samples to " << out << '\n';
    return 0;
}

int cmd_run(const RunOptions& opts) {
    auto config = w2sg::load_experiment(opts.config);
    apply_overrides(config, opts);
    const auto report = w2sg::run_w2sg(config);
    std::cout << w2sg::render_summary_csv(report) << '\n' << w2sg::render_methods_csv(report);
    if (report.pgr_status != "ok") std::cerr << "warning: PGR is " << report.pgr_status << '\n';
    return finish(report, config.output_dir);
}

int cmd_auroc(const RunOptions& opts, const std::vector<std::string>& tasks) {
    auto config = w2sg::load_experiment(opts.config);
    apply_overrides(config, opts);
    const auto report = w2sg::run_auroc_matrix(config, tasks);
    std::cout << w2sg::render_auroc_csv(report);
    return finish(report, config.output_dir);
}

int cmd_report(const std::string& path, const std::string& out) {
    const auto report = w2sg::load_report(path);
    if (report.kind == "w2sg") std::cout << w2sg::render_summary_csv(report) << '\n' << w2sg::render_methods_csv(report);
    if (!report.auroc_table.empty()) std::cout << '\n' << w2sg::render_auroc_csv(report);
    if (!out.empty()) {
        for (const auto& p : w2sg::emit_report(report, out)) std::cerr << "wrote " << p.string() << '\n';
    }
    print_failures(report);
    return 0;
}

int cmd_pgr(double weak, double w2s, double ceiling) {
    const double v = w2sg::pgr(weak, w2s, ceiling);
    std::cout << "pgr " << std::setprecision(17) << v << '\n'
              << "pgr_percent " << std::fixed << std::setprecision(2) << 100.0 * v << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Weak-to-strong generalization lab"};
    app.require_subcommand(1);

    std::string spec_path;
    std::string corpus_out = "corpus.jsonl";
    std::optional<std::uint64_t> gen_seed;
    auto* gen = app.add_subcommand("gen-data", "Generate a synthetic corpus as JSON lines");
    gen->add_option("spec", spec_path, "Synthetic spec (YAML)")->required()->check(CLI::ExistingFile);
    gen->add_option("-o,--out", corpus_out, "Output corpus file");
    gen->add_option("--seed", gen_seed, "Override the spec seed");

    RunOptions run_opts;
    auto* run = app.add_subcommand("run", "Run the weak-to-strong protocol and write reports");
    run->add_option("config", run_opts.config, "Experiment config (YAML)")->required();
    run->add_option("-o,--out", run_opts.out, "Output directory (overrides W2SG_OUTPUT_DIR and the config)");
    run->add_option("--seeds", run_opts.seeds, "Seeds to run")->delimiter(',');
    run->add_option("--threads", run_opts.threads, "Concurrent seeds");

    RunOptions auroc_opts;
    std::vector<std::string> tasks;
    auto* auroc = app.add_subcommand("auroc-matrix", "Train P(IK)-only models per task and cross-evaluate AUROC");
    auroc->add_option("config", auroc_opts.config, "Experiment config (YAML)")->required();
    auroc->add_option("-o,--out", auroc_opts.out, "Output directory");
    auroc->add_option("--tasks", tasks, "Task families (default: auroc.tasks)")->delimiter(',');
    auroc->add_option("--seeds", auroc_opts.seeds, "Seeds to run")->delimiter(',');
    auroc->add_option("--threads", auroc_opts.threads, "Concurrent seeds");

    std::string report_path;
    std::string report_out;
    auto* report = app.add_subcommand("report", "Re-render a report.json as tables");
    report->add_option("report", report_path, "report.json")->required();
    report->add_option("-o,--out", report_out, "Directory to rewrite the report files into");

    double weak = 0.0;
    double w2s = 0.0;
    double ceiling = 0.0;
    auto* pgr = app.add_subcommand("pgr", "Performance gap recovered from three accuracies");
    pgr->add_option("weak", weak, "Weak accuracy")->required();
    pgr->add_option("w2s", w2s, "Weak-to-strong accuracy")->required();
    pgr->add_option("ceiling", ceiling, "Strong ceiling accuracy")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) return cmd_gen_data(spec_path, corpus_out, gen_seed);
        if (*run) return cmd_run(run_opts);
        if (*auroc) return cmd_auroc(auroc_opts, tasks);
        if (*report) return cmd_report(report_path, report_out);
        if (*pgr) return cmd_pgr(weak, w2s, ceiling);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
