#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "w2sg/dataset.hpp"
#include "w2sg/learner.hpp"
#include "w2sg/pipeline.hpp"

namespace w2sg::testing {

inline Sample make_sample(std::string id, std::vector<double> features, int label, std::string question = {}) {
    Sample s;
    s.id = std::move(id);
    s.features = std::move(features);
    s.gold_label = label;
    s.task_tag = "t";
    s.question_id = question.empty() ? s.id : std::move(question);
    return s;
}

/// Two well separated Gaussian blobs at +/- margin along every axis.
inline Corpus separable_corpus(std::size_t n, std::size_t dim, double margin, std::uint64_t seed) {
    Corpus c;
    c.dimension = dim;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 0.3);
    for (std::size_t i = 0; i < n; ++i) {
        const int label = static_cast<int>(i % 2);
        std::vector<double> x(dim);
        for (auto& v : x) v = (label ? margin : -margin) + noise(rng);
        c.samples.push_back(make_sample("s" + std::to_string(i), std::move(x), label));
    }
    return c;
}

inline LearnerSpec small_spec(std::size_t dim, std::vector<std::size_t> hidden, std::uint64_t seed = 1) {
    LearnerSpec spec;
    spec.input_dimension = dim;
    spec.hidden_widths = std::move(hidden);
    spec.seed = seed;
    return spec;
}

/// A scaled-down experiment that runs in well under a second per seed.
inline ExperimentConfig tiny_experiment() {
    ExperimentConfig c = default_experiment();
    c.synthetic.dimension = 8;
    c.synthetic.families = 2;
    c.synthetic.samples_per_family = 600;
    c.weak_spec.visible_features = 4;
    c.strong_spec.hidden_widths = {16, 16};
    c.pretrain.fraction = 0.2;
    c.pretrain.epochs = 4;
    c.auroc_tasks = {"family0", "family1"};
    c.methods = {Method::finetune, Method::selective};
    c.seeds = {0, 1};
    return c;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& stem) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / (stem + "-" + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

}  // namespace w2sg::testing
