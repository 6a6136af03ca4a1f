#pragma once

// Corpus representation, multiple-choice conversion, balancing, splitting,
// synthetic task generation and JSON-lines ingestion.

#include <cstddef>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "w2sg/common.hpp"

namespace w2sg {

struct Sample {
    std::string id;
    std::vector<double> features;
    int gold_label = 0;
    std::string task_tag;
    int difficulty_tag = 0;
    std::string question_id;

    friend bool operator==(const Sample&, const Sample&) = default;
};

struct Corpus {
    std::vector<Sample> samples;
    std::size_t dimension = 0;
    std::optional<std::map<std::string, SoftLabel>> weak_labels;

    std::size_t size() const noexcept { return samples.size(); }
    bool empty() const noexcept { return samples.empty(); }

    /// Throws Error on the first violated invariant.
    void validate() const {
        if (dimension == 0) throw Error("corpus dimension must be positive");
        std::set<std::string_view> ids;
        for (const auto& s : samples) {
            if (s.features.size() != dimension) {
                throw Error("sample '" + s.id + "' has dimension " +
                            std::to_string(s.features.size()) + ", expected " +
                            std::to_string(dimension));
            }
            if (s.gold_label != 0 && s.gold_label != 1) {
                throw Error("sample '" + s.id + "' has non-binary label");
            }
            if (!ids.insert(s.id).second) throw Error("duplicate sample id '" + s.id + "'");
        }
        if (weak_labels) {
            for (const auto& [id, label] : *weak_labels) {
                if (!ids.contains(id)) throw Error("weak label for unknown id '" + id + "'");
            }
        }
    }

    /// Weak labels aligned with `samples`; throws if any sample lacks one.
    std::vector<SoftLabel> aligned_weak_labels() const {
        if (!weak_labels) throw Error("corpus carries no weak labels");
        std::vector<SoftLabel> out;
        out.reserve(samples.size());
        for (const auto& s : samples) {
            auto it = weak_labels->find(s.id);
            if (it == weak_labels->end()) throw Error("missing weak label for '" + s.id + "'");
            out.push_back(it->second);
        }
        return out;
    }

    std::vector<SoftLabel> gold_targets() const {
        std::vector<SoftLabel> out;
        out.reserve(samples.size());
        for (const auto& s : samples) out.push_back(SoftLabel::hard(s.gold_label));
        return out;
    }

    friend bool operator==(const Corpus&, const Corpus&) = default;
};

// ---------------------------------------------------------------------------
// Multiple choice -> binary

struct MCItem {
    std::string question_id;
    std::vector<std::vector<double>> candidate_features;
    std::set<std::size_t> correct_index_set;
    std::string task_tag;
    int difficulty_tag = 0;
};

/// One (question, candidate) sample per candidate; label 1 on the correct ones.
inline std::vector<Sample> convert_multiple_choice(const MCItem& item) {
    const std::size_t k = item.candidate_features.size();
    if (k < 2) throw Error("question '" + item.question_id + "' needs at least 2 candidates");
    if (item.correct_index_set.empty()) {
        throw Error("question '" + item.question_id + "' has no correct candidate");
    }
    if (item.correct_index_set.size() >= k) {
        throw Error("question '" + item.question_id + "' has no incorrect candidate");
    }
    if (*item.correct_index_set.rbegin() >= k) {
        throw Error("question '" + item.question_id + "' correct index out of range");
    }
    const std::size_t dim = item.candidate_features.front().size();
    std::vector<Sample> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        if (item.candidate_features[i].size() != dim) {
            throw Error("question '" + item.question_id + "' candidates differ in dimension");
        }
        Sample s;
        s.id = item.question_id + "-" + std::to_string(i);
        s.features = item.candidate_features[i];
        s.gold_label = item.correct_index_set.contains(i) ? 1 : 0;
        s.task_tag = item.task_tag;
        s.difficulty_tag = item.difficulty_tag;
        s.question_id = item.question_id;
        out.push_back(std::move(s));
    }
    return out;
}

struct BalanceResult {
    std::vector<Sample> samples;
    std::size_t dropped_groups = 0;
};

namespace detail {

// Question groups in order of first appearance; values are sample indices.
inline std::vector<std::vector<std::size_t>> group_by_question(std::span<const Sample> samples) {
    std::vector<std::vector<std::size_t>> groups;
    std::unordered_map<std::string, std::size_t> slot;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        auto [it, fresh] = slot.try_emplace(samples[i].question_id, groups.size());
        if (fresh) groups.emplace_back();
        groups[it->second].push_back(i);
    }
    return groups;
}

}  // namespace detail

/// Equalizes positives and negatives within each question by subsampling the
/// larger side uniformly. Groups lacking either class are dropped and counted.
inline BalanceResult balance_per_question(std::span<const Sample> samples, std::uint64_t seed) {
    BalanceResult result;
    Rng rng(mix_seed(seed, "balance"));
    for (const auto& group : detail::group_by_question(samples)) {
        std::vector<std::size_t> pos;
        std::vector<std::size_t> neg;
        for (std::size_t i : group) (samples[i].gold_label == 1 ? pos : neg).push_back(i);
        if (pos.empty() || neg.empty()) {
            ++result.dropped_groups;
            continue;
        }
        auto& larger = pos.size() > neg.size() ? pos : neg;
        const std::size_t keep = std::min(pos.size(), neg.size());
        std::shuffle(larger.begin(), larger.end(), rng);
        larger.resize(keep);

        std::vector<std::size_t> kept = pos;
        kept.insert(kept.end(), neg.begin(), neg.end());
        std::sort(kept.begin(), kept.end());
        for (std::size_t i : kept) result.samples.push_back(samples[i]);
    }
    return result;
}

/// Draws at most `cap` samples (whole question groups) and splits them into
/// two disjoint halves whose sizes differ by at most the largest group size.
inline std::pair<Corpus, Corpus> split_and_cap(const Corpus& corpus, std::size_t cap,
                                               std::uint64_t seed) {
    if (corpus.empty()) throw Error("split_and_cap: empty corpus");
    if (cap < 2) throw Error("split_and_cap: cap must be at least 2");

    auto groups = detail::group_by_question(corpus.samples);
    Rng rng(mix_seed(seed, "split"));
    std::shuffle(groups.begin(), groups.end(), rng);

    std::vector<std::size_t> first;
    std::vector<std::size_t> second;
    std::size_t taken = 0;
    for (const auto& g : groups) {
        if (taken + g.size() > cap) continue;
        taken += g.size();
        auto& half = first.size() <= second.size() ? first : second;
        half.insert(half.end(), g.begin(), g.end());
        if (taken == cap) break;
    }
    std::sort(first.begin(), first.end());
    std::sort(second.begin(), second.end());

    auto build = [&](const std::vector<std::size_t>& idx) {
        Corpus c;
        c.dimension = corpus.dimension;
        c.samples.reserve(idx.size());
        for (std::size_t i : idx) c.samples.push_back(corpus.samples[i]);
        if (corpus.weak_labels) {
            c.weak_labels.emplace();
            for (const auto& s : c.samples) {
                auto it = corpus.weak_labels->find(s.id);
                if (it != corpus.weak_labels->end()) c.weak_labels->emplace(s.id, it->second);
            }
        }
        return c;
    };
    return {build(first), build(second)};
}

/// Moves a seeded fraction of question groups into the first returned corpus.
inline std::pair<Corpus, Corpus> carve_fraction(const Corpus& corpus, double fraction,
                                                std::uint64_t seed) {
    if (!(fraction >= 0.0 && fraction <= 1.0)) throw Error("carve_fraction: fraction out of [0,1]");
    auto groups = detail::group_by_question(corpus.samples);
    Rng rng(mix_seed(seed, "carve"));
    std::shuffle(groups.begin(), groups.end(), rng);
    const auto target = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(corpus.size())));

    std::vector<bool> in_first(corpus.size(), false);
    std::size_t taken = 0;
    for (const auto& g : groups) {
        if (taken >= target) break;
        for (std::size_t i : g) in_first[i] = true;
        taken += g.size();
    }
    Corpus a;
    Corpus b;
    a.dimension = b.dimension = corpus.dimension;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        (in_first[i] ? a : b).samples.push_back(corpus.samples[i]);
    }
    return {std::move(a), std::move(b)};
}

/// Samples whose task tag is `task`, preserving order.
inline Corpus filter_task(const Corpus& corpus, std::string_view task) {
    Corpus out;
    out.dimension = corpus.dimension;
    for (const auto& s : corpus.samples) {
        if (s.task_tag == task) out.samples.push_back(s);
    }
    return out;
}

inline Corpus concat(const Corpus& a, const Corpus& b) {
    if (a.dimension != b.dimension) throw Error("concat: dimension mismatch");
    Corpus out = a;
    out.samples.insert(out.samples.end(), b.samples.begin(), b.samples.end());
    out.weak_labels.reset();
    return out;
}

// ---------------------------------------------------------------------------
// Synthetic Gaussian-mixture tasks

struct SynthSpec {
    std::size_t dimension = 16;
    std::size_t families = 3;
    std::size_t clusters_per_class = 4;
    double cluster_spread = 1.0;
    std::size_t difficulty_tiers = 3;
    std::size_t samples_per_family = 3000;
    std::uint64_t seed = 0;

    // Distance scale of cluster centers from the origin.
    double center_scale = 2.0;
    // Per-family jitter of the shared cluster centers.
    double family_shift = 0.5;
    // Tier t pulls its points' centers toward the origin by 1 / (1 + decay * t).
    double tier_margin_decay = 1.5;
    // Tier t flips gold labels with probability t * flip.
    double tier_flip_rate = 0.02;

    void validate() const {
        if (dimension == 0 || families == 0 || clusters_per_class == 0 || difficulty_tiers == 0 ||
            samples_per_family == 0) {
            throw Error("synthetic spec: all counts must be positive");
        }
        if (!(cluster_spread > 0.0)) throw Error("synthetic spec: cluster_spread must be > 0");
        if (!(center_scale >= 0.0) || !(family_shift >= 0.0) || !(tier_margin_decay >= 0.0)) {
            throw Error("synthetic spec: scales must be nonnegative");
        }
        const double max_flip = tier_flip_rate * static_cast<double>(difficulty_tiers - 1);
        if (!(tier_flip_rate >= 0.0) || max_flip > 0.5) {
            throw Error("synthetic spec: flip rate must lie in [0, 0.5] for every tier");
        }
    }
};

inline std::string family_name(std::size_t f) { return "family" + std::to_string(f); }

/// Binary tasks drawn from Gaussian clusters. Every family jitters one shared
/// set of class-conditional centers, so families share cluster structure.
inline Corpus generate_synthetic(const SynthSpec& spec) {
    spec.validate();
    Rng rng(mix_seed(spec.seed, "synthetic"));
    std::normal_distribution<double> normal(0.0, 1.0);

    const std::size_t d = spec.dimension;
    const std::size_t k = spec.clusters_per_class;
    // shared[c][j] : center of cluster j of class c
    std::vector<std::vector<std::vector<double>>> shared(2, std::vector<std::vector<double>>(k));
    for (auto& cls : shared) {
        for (auto& center : cls) {
            center.resize(d);
            for (auto& v : center) v = spec.center_scale * normal(rng);
        }
    }

    Corpus corpus;
    corpus.dimension = d;
    corpus.samples.reserve(spec.families * spec.samples_per_family);
    std::uniform_int_distribution<std::size_t> pick_cluster(0, k - 1);
    std::uniform_int_distribution<std::size_t> pick_tier(0, spec.difficulty_tiers - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    for (std::size_t f = 0; f < spec.families; ++f) {
        auto centers = shared;
        for (auto& cls : centers) {
            for (auto& center : cls) {
                for (auto& v : center) v += spec.family_shift * normal(rng);
            }
        }
        const std::string fam = family_name(f);
        for (std::size_t i = 0; i < spec.samples_per_family; ++i) {
            const int cls = static_cast<int>(i % 2);
            const std::size_t cluster = pick_cluster(rng);
            const std::size_t tier = pick_tier(rng);
            const double shrink = 1.0 / (1.0 + spec.tier_margin_decay * static_cast<double>(tier));
            const double flip = spec.tier_flip_rate * static_cast<double>(tier);

            Sample s;
            s.id = fam + "-" + std::to_string(i);
            s.question_id = s.id;
            s.task_tag = fam;
            s.difficulty_tag = static_cast<int>(tier);
            s.features.resize(d);
            const auto& center = centers[static_cast<std::size_t>(cls)][cluster];
            for (std::size_t j = 0; j < d; ++j) {
                s.features[j] = shrink * center[j] + spec.cluster_spread * normal(rng);
            }
            const bool flipped = flip > 0.0 && unit(rng) < flip;
            s.gold_label = flipped ? 1 - cls : cls;
            corpus.samples.push_back(std::move(s));
        }
    }
    return corpus;
}

// ---------------------------------------------------------------------------
// JSON-lines I/O

inline nlohmann::json sample_to_json(const Sample& s) {
    return {{"id", s.id},
            {"question_id", s.question_id},
            {"features", s.features},
            {"label", s.gold_label},
            {"task", s.task_tag},
            {"difficulty", s.difficulty_tag}};
}

inline void write_corpus(std::ostream& out, const Corpus& corpus) {
    for (const auto& s : corpus.samples) out << sample_to_json(s).dump() << '\n';
}

inline void save_corpus(const std::string& path, const Corpus& corpus) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    write_corpus(out, corpus);
    if (!out) throw Error("write failed for '" + path + "'");
}

inline Corpus read_corpus(std::istream& in, const std::string& origin = "<stream>") {
    Corpus corpus;
    std::set<std::string> ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto where = origin + ":" + std::to_string(line_no);
        Sample s;
        try {
            const auto j = nlohmann::json::parse(line);
            s.id = j.at("id").get<std::string>();
            s.question_id = j.value("question_id", s.id);
            s.features = j.at("features").get<std::vector<double>>();
            s.gold_label = j.at("label").get<int>();
            s.task_tag = j.value("task", std::string{});
            s.difficulty_tag = j.value("difficulty", 0);
        } catch (const nlohmann::json::exception& e) {
            throw Error(where + ": malformed record: " + e.what());
        }
        if (s.gold_label != 0 && s.gold_label != 1) {
            throw Error(where + ": label must be 0 or 1, got " + std::to_string(s.gold_label));
        }
        if (corpus.dimension == 0) {
            if (s.features.empty()) throw Error(where + ": empty feature vector");
            corpus.dimension = s.features.size();
        } else if (s.features.size() != corpus.dimension) {
            throw Error(where + ": sample '" + s.id + "' has dimension " +
                        std::to_string(s.features.size()) + ", expected " +
                        std::to_string(corpus.dimension));
        }
        if (!ids.insert(s.id).second) throw Error(where + ": duplicate id '" + s.id + "'");
        corpus.samples.push_back(std::move(s));
    }
    if (corpus.empty()) throw Error(origin + ": no records");
    return corpus;
}

inline Corpus load_corpus(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open corpus '" + path + "'");
    return read_corpus(in, path);
}

/// Reads a weak-label sidecar ({"id", "p1"} per line) and attaches it.
inline void load_weak_labels(const std::string& path, Corpus& corpus) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open weak labels '" + path + "'");
    std::set<std::string> known;
    for (const auto& s : corpus.samples) known.insert(s.id);
    std::map<std::string, SoftLabel> labels;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto where = path + ":" + std::to_string(line_no);
        std::string id;
        double p1 = 0.0;
        try {
            const auto j = nlohmann::json::parse(line);
            id = j.at("id").get<std::string>();
            p1 = j.at("p1").get<double>();
        } catch (const nlohmann::json::exception& e) {
            throw Error(where + ": malformed record: " + e.what());
        }
        if (!known.contains(id)) throw Error(where + ": unknown id '" + id + "'");
        if (!(p1 >= 0.0 && p1 <= 1.0)) throw Error(where + ": p1 out of [0,1]");
        labels.insert_or_assign(id, SoftLabel(p1));
    }
    corpus.weak_labels = std::move(labels);
}

inline void save_weak_labels(const std::string& path, const Corpus& corpus) {
    if (!corpus.weak_labels) throw Error("corpus carries no weak labels");
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    for (const auto& s : corpus.samples) {
        auto it = corpus.weak_labels->find(s.id);
        if (it == corpus.weak_labels->end()) continue;
        out << nlohmann::json{{"id", s.id}, {"p1", it->second.p1()}}.dump() << '\n';
    }
}

}  // namespace w2sg
