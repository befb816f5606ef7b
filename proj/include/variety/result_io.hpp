#pragma once

#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "variety/analysis.hpp"
#include "variety/config.hpp"
#include "variety/csv.hpp"
#include "variety/error.hpp"
#include "variety/rqid.hpp"
#include "variety/space_io.hpp"

namespace variety {

enum class ResultFormat { Json, Csv };

/// A result plus the configuration echo that produced it.
struct ResultDocument {
    AssessmentResult result;
    nlohmann::ordered_json config;
};

inline std::string format_display(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

inline std::string format_full(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace detail {

using ojson = nlohmann::ordered_json;

inline ojson level_scores_json(const LevelScores& s) {
    ojson j;
    for (auto level : kAllLevels) j[std::string(level_key(level))] = s[level_slot(level)];
    return j;
}

template <typename Json>
LevelScores level_scores_from(const Json& j) {
    LevelScores s{};
    for (auto level : kAllLevels) s[level_slot(level)] = j.at(std::string(level_key(level))).template get<double>();
    return s;
}

inline ojson dendrogram_json(const Dendrogram& d, const std::vector<ConceptRef>& concepts) {
    ojson j;
    j["leaf_count"] = d.leaf_count;
    j["merges"] = ojson::array();
    for (const auto& m : d.merges) {
        j["merges"].push_back({{"left", m.left}, {"right", m.right}, {"height", m.height}, {"size", m.size}});
    }
    j["leaf_order"] = d.leaf_order;
    auto ids = ojson::array();
    for (int leaf : d.leaf_order) ids.push_back(concepts.at(static_cast<std::size_t>(leaf)).concept_id);
    j["leaf_order_concept_ids"] = std::move(ids);
    return j;
}

template <typename Json>
Dendrogram dendrogram_from(const Json& j) {
    Dendrogram d;
    d.leaf_count = j.at("leaf_count").template get<int>();
    for (const auto& m : j.at("merges")) {
        d.merges.push_back({m.at("left").template get<int>(), m.at("right").template get<int>(),
                            m.at("height").template get<double>(), m.at("size").template get<int>()});
    }
    d.leaf_order = j.at("leaf_order").template get<std::vector<int>>();
    return d;
}

inline ojson clusters_json(const std::vector<int>& labels, const std::vector<ConceptRef>& concepts,
                           std::string_view method) {
    ojson j;
    int k = 0;
    for (int l : labels) k = std::max(k, l + 1);
    j["k"] = k;
    j["method"] = method;
    j["labels"] = ojson::array();
    for (std::size_t i = 0; i < labels.size(); ++i) {
        j["labels"].push_back({{"concept_id", concepts[i].concept_id}, {"label", labels[i]}});
    }
    return j;
}

}  // namespace detail

inline nlohmann::ordered_json dendrogram_to_json(const Dendrogram& d, const std::vector<ConceptRef>& concepts) {
    return detail::dendrogram_json(d, concepts);
}

inline nlohmann::ordered_json clusters_to_json(const std::vector<int>& labels, const std::vector<ConceptRef>& concepts,
                                               std::string_view method) {
    return detail::clusters_json(labels, concepts, method);
}

inline nlohmann::ordered_json boxplots_to_json(const std::vector<BoxPlotStats>& boxes) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& b : boxes) {
        nlohmann::ordered_json jb;
        jb["level"] = level_key(b.level);
        jb["q1"] = b.q1;
        jb["median"] = b.median;
        jb["q3"] = b.q3;
        jb["whisker_low"] = b.whisker_low;
        jb["whisker_high"] = b.whisker_high;
        jb["mean"] = b.mean;
        jb["outliers"] = nlohmann::ordered_json::array();
        for (const auto& o : b.outliers) jb["outliers"].push_back({{"concept_id", o.concept_id}, {"value", o.value}});
        arr.push_back(std::move(jb));
    }
    return arr;
}

/// Result JSON. Field order is fixed; numbers are written at full precision
/// (the `display` block carries 3-decimal strings for presentation).
inline nlohmann::ordered_json result_to_json(const ResultDocument& doc) {
    using detail::ojson;
    const auto& r = doc.result;
    ojson j;
    j["overall"] = r.overall;
    j["per_level"] = detail::level_scores_json(r.per_level);

    j["per_concept"] = ojson::array();
    for (std::size_t i = 0; i < r.size(); ++i) {
        j["per_concept"].push_back(
            {{"concept_id", r.concepts[i].concept_id}, {"name", r.concepts[i].name}, {"score", r.per_concept[i]}});
    }
    j["per_concept_per_level"] = ojson::array();
    for (std::size_t i = 0; i < r.size(); ++i) {
        j["per_concept_per_level"].push_back({{"concept_id", r.concepts[i].concept_id},
                                              {"scores", detail::level_scores_json(r.per_concept_per_level[i])}});
    }
    j["weighted_matrix"] = r.weighted_matrix.rows();
    j["level_matrices"] = ojson::object();
    for (const auto& m : r.level_matrices) j["level_matrices"][m.label()] = m.rows();
    j["config"] = doc.config;

    std::vector<int> ids;
    for (const auto& c : r.concepts) ids.push_back(c.concept_id);
    ojson plot;
    plot["bar"] = ojson::array();
    for (std::size_t i = 0; i < r.size(); ++i) {
        plot["bar"].push_back({{"label", r.concepts[i].name}, {"value", r.per_concept[i]}});
    }
    plot["boxplots"] = boxplots_to_json(level_boxplot(r.per_concept_per_level, ids));
    plot["heatmap"] = {{"concept_ids", ids}, {"values", r.weighted_matrix.rows()}};
    j["plot_data"] = std::move(plot);

    ojson display;
    display["overall"] = format_display(r.overall);
    display["per_concept"] = ojson::array();
    for (double v : r.per_concept) display["per_concept"].push_back(format_display(v));
    j["display"] = std::move(display);

    if (r.clusters) {
        const std::string method = doc.config.value("cluster_method", std::string("kmedoids"));
        j["clusters"] = detail::clusters_json(*r.clusters, r.concepts, method);
    }
    if (r.dendrogram) j["dendrogram"] = detail::dendrogram_json(*r.dendrogram, r.concepts);
    return j;
}

inline std::string result_to_json_text(const ResultDocument& doc) { return result_to_json(doc).dump(2) + "\n"; }

inline ResultDocument result_from_json(std::string_view text) {
    nlohmann::ordered_json j;
    try {
        j = nlohmann::ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::ParseError, e.what());
    }
    try {
        ResultDocument doc;
        auto& r = doc.result;
        r.overall = j.at("overall").get<double>();
        r.per_level = detail::level_scores_from(j.at("per_level"));
        for (const auto& c : j.at("per_concept")) {
            r.concepts.push_back({c.at("concept_id").get<int>(), c.at("name").get<std::string>()});
            r.per_concept.push_back(c.at("score").get<double>());
        }
        for (const auto& c : j.at("per_concept_per_level")) {
            r.per_concept_per_level.push_back(detail::level_scores_from(c.at("scores")));
        }
        r.weighted_matrix = DistanceMatrix("weighted", j.at("weighted_matrix").get<std::vector<std::vector<double>>>());
        if (j.contains("level_matrices")) {
            for (auto level : kAllLevels) {
                const std::string key(level_key(level));
                r.level_matrices.emplace_back(key, j.at("level_matrices").at(key).get<std::vector<std::vector<double>>>());
            }
        }
        doc.config = j.at("config");
        if (doc.config.contains("weights")) r.weights_used = weights_from_json(doc.config.at("weights"));
        if (doc.config.contains("provider") && doc.config.at("provider").contains("id")) {
            r.provider_id = doc.config.at("provider").at("id").get<std::string>();
        }
        if (j.contains("clusters")) {
            std::vector<int> labels;
            for (const auto& l : j.at("clusters").at("labels")) labels.push_back(l.at("label").get<int>());
            r.clusters = std::move(labels);
        }
        if (j.contains("dendrogram")) r.dendrogram = detail::dendrogram_from(j.at("dendrogram"));
        if (r.per_concept_per_level.size() != r.concepts.size() || r.weighted_matrix.size() != r.concepts.size()) {
            throw Error(ErrorCode::SchemaError, "result file blocks disagree on the number of concepts");
        }
        return doc;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::SchemaError, std::string("result JSON: ") + e.what());
    }
}

/// Long-format CSV: record,concept_id,other_concept_id,level,value.
inline std::string result_to_csv(const ResultDocument& doc) {
    const auto& r = doc.result;
    std::string out = csv_line({"record", "concept_id", "other_concept_id", "level", "value"});
    out += csv_line({"overall", "", "", "", format_full(r.overall)});
    for (auto level : kAllLevels) {
        out += csv_line({"per_level", "", "", std::string(level_key(level)), format_full(r.per_level[level_slot(level)])});
    }
    for (std::size_t i = 0; i < r.size(); ++i) {
        out += csv_line({"per_concept", std::to_string(r.concepts[i].concept_id), "", "", format_full(r.per_concept[i])});
    }
    for (std::size_t i = 0; i < r.size(); ++i) {
        for (auto level : kAllLevels) {
            out += csv_line({"per_concept_per_level", std::to_string(r.concepts[i].concept_id), "",
                             std::string(level_key(level)), format_full(r.per_concept_per_level[i][level_slot(level)])});
        }
    }
    for (std::size_t i = 0; i < r.size(); ++i) {
        for (std::size_t k = 0; k < r.size(); ++k) {
            out += csv_line({"weighted_matrix", std::to_string(r.concepts[i].concept_id),
                             std::to_string(r.concepts[k].concept_id), "", format_full(r.weighted_matrix(i, k))});
        }
    }
    if (r.clusters) {
        for (std::size_t i = 0; i < r.size(); ++i) {
            out += csv_line({"cluster", std::to_string(r.concepts[i].concept_id), "", "", std::to_string((*r.clusters)[i])});
        }
    }
    return out;
}

inline void export_results(const ResultDocument& doc, const std::filesystem::path& path, ResultFormat format) {
    write_file(path, format == ResultFormat::Json ? result_to_json_text(doc) : result_to_csv(doc));
}

inline ResultDocument load_result(const std::filesystem::path& path) { return result_from_json(read_file(path)); }

/// The one assessment entry point shared by the CLI and the HTTP service.
inline ResultDocument run_assessment(const ConceptSpace& space, const RunConfig& cfg) {
    const auto provider = make_provider(cfg.provider);
    ResultDocument doc;
    doc.result = assess(space, *provider, cfg.assess_options());
    doc.config = config_to_json(cfg, doc.result.provider_id);
    return doc;
}

/// Recomputes clusters and dendrogram on the weighted matrix of a stored result.
inline void recluster(ResultDocument& doc, int k, ClusterMethod method) {
    doc.result.clusters = cluster(doc.result.weighted_matrix, k, method);
    doc.result.dendrogram = dendrogram(doc.result.weighted_matrix);
    doc.config["k"] = k;
    doc.config["cluster_method"] = cluster_method_name(method);
}

}  // namespace variety
