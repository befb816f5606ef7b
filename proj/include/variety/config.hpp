#pragma once

#include <cstdlib>
#include <functional>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>

#include <json.hpp>

#include "variety/analysis.hpp"
#include "variety/concept_model.hpp"
#include "variety/distance.hpp"
#include "variety/engine.hpp"
#include "variety/error.hpp"
#include "variety/service_provider.hpp"

namespace variety {

enum class ProviderKind { Hash, Service, Precomputed };

inline std::string_view provider_kind_name(ProviderKind k) {
    switch (k) {
    case ProviderKind::Hash: return "hash";
    case ProviderKind::Service: return "service";
    case ProviderKind::Precomputed: return "precomputed";
    }
    return "";
}

inline ProviderKind parse_provider_kind(std::string_view name) {
    if (name == "hash") return ProviderKind::Hash;
    if (name == "service") return ProviderKind::Service;
    if (name == "precomputed") return ProviderKind::Precomputed;
    throw Error(ErrorCode::InvalidArgument, "unknown provider '" + std::string(name) + "' (hash|service|precomputed)");
}

struct ProviderConfig {
    ProviderKind kind = ProviderKind::Hash;
    std::size_t dimension = HashedBowProvider::kDefaultDimension;  // hash
    std::string endpoint;                                           // service
    std::string model = "all-MiniLM-L6-v2";                         // service
    std::string token;                                              // service, never echoed
    int timeout_seconds = 30;                                       // service
    std::string vectors_path;                                       // precomputed
};

/// Resolved settings for one assessment run.
struct RunConfig {
    ProviderConfig provider;
    std::string weights_preset = "paper-default";  // paper-default | uniform | custom
    LevelWeights weights = LevelWeights::paper_default();
    std::optional<int> k;
    ClusterMethod cluster_method = ClusterMethod::KMedoids;
    std::string separator{kDefaultSeparator};
    std::size_t max_in_flight = 1;

    AssessOptions assess_options() const {
        AssessOptions o;
        o.weights = weights;
        o.separator = separator;
        o.max_in_flight = max_in_flight;
        o.k = k;
        o.cluster_method = cluster_method;
        return o;
    }
};

inline void set_weights(RunConfig& cfg, const LevelWeights& w) {
    cfg.weights = w;
    if (w == LevelWeights::paper_default()) cfg.weights_preset = "paper-default";
    else if (w == LevelWeights::uniform()) cfg.weights_preset = "uniform";
    else cfg.weights_preset = "custom";
}

/// "paper-default", "uniform", or seven comma-separated numbers in
/// Part..Action order.
inline LevelWeights parse_weights(std::string_view text) {
    if (text == "paper-default") return LevelWeights::paper_default();
    if (text == "uniform") return LevelWeights::uniform();
    std::array<double, kLevelCount> w{};
    std::stringstream ss{std::string(text)};
    std::string item;
    std::size_t k = 0;
    while (std::getline(ss, item, ',')) {
        if (k >= w.size()) throw Error(ErrorCode::InvalidArgument, "more than 7 level weights in '" + std::string(text) + "'");
        try {
            std::size_t used = 0;
            w[k] = std::stod(item, &used);
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw Error(ErrorCode::InvalidArgument, "bad level weight '" + item + "'");
        }
        ++k;
    }
    if (k != w.size()) {
        throw Error(ErrorCode::InvalidArgument,
                    "weights must be paper-default, uniform, or 7 comma-separated numbers");
    }
    return LevelWeights(w);
}

inline nlohmann::ordered_json weights_to_json(const LevelWeights& w) {
    nlohmann::ordered_json j;
    for (auto level : kAllLevels) j[std::string(level_key(level))] = w[level];
    return j;
}

template <typename Json>
LevelWeights weights_from_json(const Json& j) {
    if (j.is_string()) return parse_weights(j.template get<std::string>());
    std::array<double, kLevelCount> w{};
    if (j.is_array()) {
        if (j.size() != w.size()) throw Error(ErrorCode::SchemaError, "weights array must have 7 entries");
        for (std::size_t k = 0; k < w.size(); ++k) w[k] = j.at(k).template get<double>();
        return LevelWeights(w);
    }
    if (j.is_object()) {
        for (auto level : kAllLevels) {
            const std::string key(level_key(level));
            if (!j.contains(key)) throw Error(ErrorCode::SchemaError, "weights object lacks '" + key + "'");
            w[level_slot(level)] = j.at(key).template get<double>();
        }
        return LevelWeights(w);
    }
    throw Error(ErrorCode::SchemaError, "weights must be a preset name, a 7-array or a level-keyed object");
}

/// Overlays the keys present in `j` onto `cfg`.
template <typename Json>
void apply_config_json(RunConfig& cfg, const Json& j) {
    if (!j.is_object()) throw Error(ErrorCode::SchemaError, "run configuration must be a JSON object");
    try {
        if (j.contains("provider")) {
            const auto& p = j.at("provider");
            if (p.is_string()) {
                cfg.provider.kind = parse_provider_kind(p.template get<std::string>());
            } else {
                if (p.contains("kind")) cfg.provider.kind = parse_provider_kind(p.at("kind").template get<std::string>());
                if (p.contains("dimension")) cfg.provider.dimension = p.at("dimension").template get<std::size_t>();
                if (p.contains("endpoint")) cfg.provider.endpoint = p.at("endpoint").template get<std::string>();
                if (p.contains("model")) cfg.provider.model = p.at("model").template get<std::string>();
                if (p.contains("token")) cfg.provider.token = p.at("token").template get<std::string>();
                if (p.contains("timeout_seconds")) cfg.provider.timeout_seconds = p.at("timeout_seconds").template get<int>();
                if (p.contains("vectors")) cfg.provider.vectors_path = p.at("vectors").template get<std::string>();
            }
        }
        if (j.contains("weights")) set_weights(cfg, weights_from_json(j.at("weights")));
        if (j.contains("k")) {
            if (j.at("k").is_null()) cfg.k.reset();
            else cfg.k = j.at("k").template get<int>();
        }
        if (j.contains("cluster_method")) {
            cfg.cluster_method = parse_cluster_method(j.at("cluster_method").template get<std::string>());
        }
        if (j.contains("separator")) cfg.separator = j.at("separator").template get<std::string>();
        if (j.contains("max_in_flight")) cfg.max_in_flight = j.at("max_in_flight").template get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::SchemaError, std::string("run configuration: ") + e.what());
    }
}

/// Applies VARIANT_* variables. `lookup` is injectable for tests.
inline void apply_environment(RunConfig& cfg,
                              const std::function<const char*(const char*)>& lookup = [](const char* name) {
                                  return std::getenv(name);
                              }) {
    auto get = [&](const char* name) -> std::optional<std::string> {
        const char* v = lookup(name);
        if (!v || !*v) return std::nullopt;
        return std::string(v);
    };
    auto to_int = [](const std::string& s, const char* name) {
        try {
            return std::stoi(s);
        } catch (const std::exception&) {
            throw Error(ErrorCode::InvalidArgument, std::string(name) + " is not an integer: '" + s + "'");
        }
    };
    if (auto v = get("VARIANT_PROVIDER")) cfg.provider.kind = parse_provider_kind(*v);
    if (auto v = get("VARIANT_ENDPOINT")) cfg.provider.endpoint = *v;
    if (auto v = get("VARIANT_MODEL")) cfg.provider.model = *v;
    if (auto v = get("VARIANT_TOKEN")) cfg.provider.token = *v;
    if (auto v = get("VARIANT_VECTORS")) cfg.provider.vectors_path = *v;
    if (auto v = get("VARIANT_TIMEOUT")) cfg.provider.timeout_seconds = to_int(*v, "VARIANT_TIMEOUT");
    if (auto v = get("VARIANT_WEIGHTS")) set_weights(cfg, parse_weights(*v));
    if (auto v = get("VARIANT_K")) cfg.k = to_int(*v, "VARIANT_K");
    if (auto v = get("VARIANT_CLUSTER_METHOD")) cfg.cluster_method = parse_cluster_method(*v);
    if (auto v = get("VARIANT_MAX_IN_FLIGHT")) cfg.max_in_flight = static_cast<std::size_t>(to_int(*v, "VARIANT_MAX_IN_FLIGHT"));
}

/// Echo written into result files. The auth token is never included.
inline nlohmann::ordered_json config_to_json(const RunConfig& cfg, const std::string& provider_id) {
    nlohmann::ordered_json p;
    p["kind"] = provider_kind_name(cfg.provider.kind);
    p["id"] = provider_id;
    switch (cfg.provider.kind) {
    case ProviderKind::Hash: p["dimension"] = cfg.provider.dimension; break;
    case ProviderKind::Service:
        p["endpoint"] = cfg.provider.endpoint;
        p["model"] = cfg.provider.model;
        break;
    case ProviderKind::Precomputed: p["vectors"] = cfg.provider.vectors_path; break;
    }
    nlohmann::ordered_json j;
    j["provider"] = std::move(p);
    j["weights_preset"] = cfg.weights_preset;
    j["weights"] = weights_to_json(cfg.weights);
    j["k"] = cfg.k ? nlohmann::ordered_json(*cfg.k) : nlohmann::ordered_json(nullptr);
    j["cluster_method"] = cluster_method_name(cfg.cluster_method);
    j["separator"] = cfg.separator;
    return j;
}

inline std::unique_ptr<EmbeddingProvider> make_provider(const ProviderConfig& p) {
    switch (p.kind) {
    case ProviderKind::Hash: return std::make_unique<HashedBowProvider>(p.dimension);
    case ProviderKind::Service:
        if (p.endpoint.empty()) {
            throw Error(ErrorCode::InvalidArgument, "service provider needs an endpoint (--endpoint or VARIANT_ENDPOINT)");
        }
        return std::make_unique<ServiceEmbeddingProvider>(p.endpoint, p.model, p.token, p.timeout_seconds);
    case ProviderKind::Precomputed:
        if (p.vectors_path.empty()) {
            throw Error(ErrorCode::InvalidArgument, "precomputed provider needs a vectors file (--vectors or VARIANT_VECTORS)");
        }
        return std::make_unique<PrecomputedVectorsProvider>(PrecomputedVectorsProvider::from_file(p.vectors_path));
    }
    throw Error(ErrorCode::InvalidArgument, "unknown provider kind");
}

}  // namespace variety
