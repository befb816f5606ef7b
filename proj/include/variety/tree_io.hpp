#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "variety/concept_model.hpp"
#include "variety/error.hpp"
#include "variety/space_io.hpp"

namespace variety {

// Tree file layout:
//   {"levels": [{"alpha": 1, "weight": 10}, ...],
//    "nodes": [{"level": 1, "label": "...", "parent": null | "...", "count": n}, ...],
//    "function_weights": [...]}
// Several function trees over the same levels may be given instead of "nodes"
// as "functions": [{"nodes": [...]}, ...], one weight per function.

namespace detail {

template <typename Json>
std::vector<IdeaNode> nodes_from_json(const Json& arr) {
    std::vector<IdeaNode> nodes;
    for (const auto& jn : arr) {
        IdeaNode n;
        n.level = jn.at("level").template get<int>();
        n.label = jn.at("label").template get<std::string>();
        if (jn.contains("parent") && !jn.at("parent").is_null()) n.parent = jn.at("parent").template get<std::string>();
        n.count = jn.at("count").template get<int>();
        nodes.push_back(std::move(n));
    }
    return nodes;
}

inline nlohmann::ordered_json nodes_to_json(const std::vector<IdeaNode>& nodes) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& n : nodes) {
        nlohmann::ordered_json jn;
        jn["level"] = n.level;
        jn["label"] = n.label;
        jn["parent"] = n.parent ? nlohmann::ordered_json(*n.parent) : nlohmann::ordered_json(nullptr);
        jn["count"] = n.count;
        arr.push_back(std::move(jn));
    }
    return arr;
}

}  // namespace detail

inline GenealogyTree tree_from_json(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::ParseError, e.what());
    }
    try {
        std::vector<LevelDescriptor> levels;
        for (const auto& jl : j.at("levels")) {
            levels.push_back({jl.at("alpha").get<int>(), jl.at("weight").get<double>()});
        }
        std::vector<FunctionTree> functions;
        if (j.contains("functions")) {
            for (const auto& jf : j.at("functions")) functions.push_back({detail::nodes_from_json(jf.at("nodes"))});
        } else {
            functions.push_back({detail::nodes_from_json(j.at("nodes"))});
        }
        std::vector<double> weights;
        if (j.contains("function_weights")) weights = j.at("function_weights").get<std::vector<double>>();
        return GenealogyTree(std::move(levels), std::move(functions), std::move(weights));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::SchemaError, std::string("tree JSON: ") + e.what());
    }
}

inline nlohmann::ordered_json tree_to_json(const GenealogyTree& tree) {
    nlohmann::ordered_json j;
    j["levels"] = nlohmann::ordered_json::array();
    for (const auto& d : tree.levels()) j["levels"].push_back({{"alpha", d.alpha}, {"weight", d.weight}});
    if (tree.function_count() == 1) {
        j["nodes"] = detail::nodes_to_json(tree.functions().front().nodes);
    } else {
        j["functions"] = nlohmann::ordered_json::array();
        for (const auto& f : tree.functions()) j["functions"].push_back({{"nodes", detail::nodes_to_json(f.nodes)}});
    }
    j["function_weights"] = tree.function_weights();
    return j;
}

inline GenealogyTree load_tree(const std::filesystem::path& path) { return tree_from_json(read_file(path)); }

}  // namespace variety
