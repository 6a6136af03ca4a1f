#pragma once

// YAML experiment files. The YAML tree is converted to JSON and read through
// the same schema as the config echo stored in every report.

#include <string>

#include <nlohmann/json.hpp>
#include <yaml-cpp/yaml.h>

#include "w2sg/report.hpp"

namespace w2sg {

namespace detail {

inline nlohmann::json scalar_to_json(const YAML::Node& node) {
    const std::string& text = node.Scalar();
    if (node.Tag() == "!") return text;  // quoted
    if (text == "null" || text == "~" || text.empty()) return nullptr;
    if (bool b = false; YAML::convert<bool>::decode(node, b)) return b;
    if (text.find_first_of(".eE") == std::string::npos) {
        if (long long i = 0; YAML::convert<long long>::decode(node, i)) {
            if (i >= 0) return static_cast<std::uint64_t>(i);
            return i;
        }
    }
    if (double d = 0; YAML::convert<double>::decode(node, d)) return d;
    return text;
}

}  // namespace detail

inline nlohmann::json yaml_to_json(const YAML::Node& node) {
    switch (node.Type()) {
        case YAML::NodeType::Null:
        case YAML::NodeType::Undefined: return nullptr;
        case YAML::NodeType::Scalar: return detail::scalar_to_json(node);
        case YAML::NodeType::Sequence: {
            auto arr = nlohmann::json::array();
            for (const auto& item : node) arr.push_back(yaml_to_json(item));
            return arr;
        }
        case YAML::NodeType::Map: {
            auto obj = nlohmann::json::object();
            for (const auto& kv : node) obj[kv.first.as<std::string>()] = yaml_to_json(kv.second);
            return obj;
        }
    }
    return nullptr;
}

inline nlohmann::json load_yaml_as_json(const std::string& path) {
    try {
        return yaml_to_json(YAML::LoadFile(path));
    } catch (const YAML::Exception& e) {
        throw Error(path + ": " + e.what());
    }
}

inline ExperimentConfig load_experiment(const std::string& path) {
    const auto j = load_yaml_as_json(path);
    if (!j.is_object() && !j.is_null()) throw Error(path + ": top level must be a mapping");
    return experiment_from_json(j.is_null() ? nlohmann::json::object() : j);
}

inline SynthSpec load_synth_spec(const std::string& path) {
    auto j = load_yaml_as_json(path);
    if (j.is_object() && j.contains("data") && j["data"].contains("synthetic")) j = j["data"]["synthetic"];
    if (!j.is_object()) throw Error(path + ": expected a synthetic spec mapping");
    try {
        auto spec = synth_from_json(j);
        spec.validate();
        return spec;
    } catch (const nlohmann::json::exception& e) {
        throw Error(path + ": " + e.what());
    }
}

}  // namespace w2sg
