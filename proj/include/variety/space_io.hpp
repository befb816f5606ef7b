#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "variety/concept_model.hpp"
#include "variety/csv.hpp"
#include "variety/error.hpp"

namespace variety {

enum class SpaceFormat { Csv, Json };

inline const std::vector<std::string>& space_csv_header() {
    static const std::vector<std::string> header = {
        "concept_id", "concept_name", "instance_id", "part",  "organ",
        "effect",     "phenomenon",   "input",       "state_change", "action"};
    return header;
}

struct ImportedSpace {
    ConceptSpace space;
    ValidationReport report;
};

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error(ErrorCode::IoError, "write to '" + path.string() + "' failed");
}

namespace detail {

inline int parse_id(const std::string& field, std::size_t line, std::string_view column) {
    std::size_t used = 0;
    int value = 0;
    try {
        value = std::stoi(field, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != field.size()) {
        throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ", column " + std::string(column) +
                                               ": expected an integer, got '" + field + "'");
    }
    return value;
}

/// Groups rows by concept in first-appearance order, instances by id.
inline ImportedSpace assemble_space(std::vector<std::pair<Concept, std::size_t>> rows, std::string space_id) {
    ImportedSpace out;
    out.space.space_id = std::move(space_id);
    std::map<int, std::size_t> position;
    std::map<std::pair<int, int>, std::size_t> seen;
    for (auto& [row, line] : rows) {
        if (row.instances.empty()) {
            // kept so validation can report it
            if (!position.contains(row.concept_id)) {
                position[row.concept_id] = out.space.concepts.size();
                out.space.concepts.push_back(std::move(row));
            }
            continue;
        }
        const auto& inst = row.instances.front();
        auto [it, fresh] = seen.emplace(std::pair{row.concept_id, inst.instance_id}, line);
        if (!fresh) {
            throw Error(ErrorCode::DuplicateInstance, "line " + std::to_string(line) + ": concept " +
                                                          std::to_string(row.concept_id) + " instance " +
                                                          std::to_string(inst.instance_id) + " already defined on line " +
                                                          std::to_string(it->second));
        }
        auto pos = position.find(row.concept_id);
        if (pos == position.end()) {
            position[row.concept_id] = out.space.concepts.size();
            out.space.concepts.push_back(std::move(row));
            continue;
        }
        auto& target = out.space.concepts[pos->second];
        if (target.name != row.name) {
            throw Error(ErrorCode::SchemaError, "line " + std::to_string(line) + ": concept " +
                                                    std::to_string(row.concept_id) + " named both '" + target.name +
                                                    "' and '" + row.name + "'");
        }
        target.instances.push_back(std::move(row.instances.front()));
    }
    for (auto& c : out.space.concepts) {
        std::stable_sort(c.instances.begin(), c.instances.end(),
                         [](const SapphireInstance& a, const SapphireInstance& b) { return a.instance_id < b.instance_id; });
    }
    out.report = validate_space(out.space);
    return out;
}

}  // namespace detail

/// Parses the one-row-per-instance table. The header must match exactly.
inline ImportedSpace space_from_csv(std::string_view text, std::string space_id = "space") {
    const auto rows = parse_csv(text);
    if (rows.empty()) throw Error(ErrorCode::ParseError, "line 1: empty file, expected a header row");
    const auto& header = rows.front();
    const auto& expected = space_csv_header();
    for (std::size_t k = 0; k < std::max(header.size(), expected.size()); ++k) {
        if (k >= header.size()) {
            throw Error(ErrorCode::SchemaError, "missing column '" + expected[k] + "' at position " + std::to_string(k + 1));
        }
        if (k >= expected.size()) {
            throw Error(ErrorCode::SchemaError, "unexpected extra column '" + header[k] + "'");
        }
        if (header[k] != expected[k]) {
            throw Error(ErrorCode::SchemaError, "column " + std::to_string(k + 1) + " is '" + header[k] +
                                                    "', expected '" + expected[k] + "'");
        }
    }

    std::vector<std::pair<Concept, std::size_t>> parsed;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        const std::size_t line = r + 1;
        if (row.size() == 1 && row[0].empty()) continue;  // blank line
        if (row.size() != expected.size()) {
            throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + std::to_string(row.size()) +
                                                   " fields, expected " + std::to_string(expected.size()));
        }
        Concept c;
        c.concept_id = detail::parse_id(row[0], line, "concept_id");
        c.name = row[1];
        SapphireInstance inst;
        inst.instance_id = detail::parse_id(row[2], line, "instance_id");
        for (auto level : kAllLevels) inst.construct(level) = row[3 + level_slot(level)];
        c.instances.push_back(std::move(inst));
        parsed.emplace_back(std::move(c), line);
    }
    return detail::assemble_space(std::move(parsed), std::move(space_id));
}

inline std::string space_to_csv(const ConceptSpace& space) {
    std::string out = csv_line(space_csv_header());
    for (const auto& c : space.concepts) {
        for (const auto& inst : c.instances) {
            CsvRow row = {std::to_string(c.concept_id), c.name, std::to_string(inst.instance_id)};
            for (auto level : kAllLevels) row.push_back(inst.construct(level));
            out += csv_line(row);
        }
    }
    return out;
}

inline nlohmann::ordered_json space_to_json(const ConceptSpace& space) {
    nlohmann::ordered_json j;
    j["space_id"] = space.space_id;
    j["problem"] = space.problem;
    j["concepts"] = nlohmann::ordered_json::array();
    for (const auto& c : space.concepts) {
        nlohmann::ordered_json jc;
        jc["concept_id"] = c.concept_id;
        jc["name"] = c.name;
        jc["instances"] = nlohmann::ordered_json::array();
        for (const auto& inst : c.instances) {
            nlohmann::ordered_json ji;
            ji["instance_id"] = inst.instance_id;
            for (auto level : kAllLevels) ji[std::string(level_key(level))] = inst.construct(level);
            jc["instances"].push_back(std::move(ji));
        }
        j["concepts"].push_back(std::move(jc));
    }
    return j;
}

/// Accepts the nested form produced by space_to_json. Missing construct keys
/// are a SchemaError; unknown keys are ignored.
template <typename Json>
ImportedSpace space_from_json_value(const Json& j, std::string default_id = "space") {
    try {
        if (!j.is_object() || !j.contains("concepts") || !j.at("concepts").is_array()) {
            throw Error(ErrorCode::SchemaError, "space JSON needs a 'concepts' array");
        }
        std::vector<std::pair<Concept, std::size_t>> rows;
        std::size_t ordinal = 0;
        for (const auto& jc : j.at("concepts")) {
            if (!jc.contains("concept_id") || !jc.contains("instances")) {
                throw Error(ErrorCode::SchemaError, "concept entries need 'concept_id' and 'instances'");
            }
            const int cid = jc.at("concept_id").template get<int>();
            const std::string name = jc.value("name", std::string{});
            if (jc.at("instances").empty()) {
                rows.emplace_back(Concept{cid, name, {}}, ++ordinal);
                continue;
            }
            for (const auto& ji : jc.at("instances")) {
                SapphireInstance inst;
                inst.instance_id = ji.at("instance_id").template get<int>();
                for (auto level : kAllLevels) {
                    const std::string key(level_key(level));
                    if (!ji.contains(key)) {
                        throw Error(ErrorCode::SchemaError, "concept " + std::to_string(cid) + " instance " +
                                                                std::to_string(inst.instance_id) + " lacks '" + key + "'");
                    }
                    inst.construct(level) = ji.at(key).template get<std::string>();
                }
                rows.emplace_back(Concept{cid, name, {std::move(inst)}}, ++ordinal);
            }
        }
        auto out = detail::assemble_space(std::move(rows), j.value("space_id", default_id));
        out.space.problem = j.value("problem", std::string{});
        return out;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::SchemaError, std::string("space JSON: ") + e.what());
    }
}

inline ImportedSpace space_from_json(std::string_view text, std::string default_id = "space") {
    nlohmann::ordered_json j;
    try {
        j = nlohmann::ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::ParseError, e.what());
    }
    return space_from_json_value(j, std::move(default_id));
}

inline SpaceFormat format_from_path(const std::filesystem::path& path) {
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (ext == ".json") return SpaceFormat::Json;
    if (ext == ".csv") return SpaceFormat::Csv;
    throw Error(ErrorCode::InvalidArgument, "cannot infer format of '" + path.string() + "', use .csv or .json");
}

/// Reads a concept space; space_id defaults to the file stem.
inline ImportedSpace import_space(const std::filesystem::path& path, SpaceFormat format) {
    const auto text = read_file(path);
    const auto id = path.stem().string();
    return format == SpaceFormat::Csv ? space_from_csv(text, id) : space_from_json(text, id);
}

inline ImportedSpace import_space(const std::filesystem::path& path) { return import_space(path, format_from_path(path)); }

inline void export_space(const ConceptSpace& space, const std::filesystem::path& path, SpaceFormat format) {
    write_file(path, format == SpaceFormat::Csv ? space_to_csv(space) : space_to_json(space).dump(2) + "\n");
}

inline nlohmann::ordered_json report_to_json(const ValidationReport& report) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& v : report.violations) {
        nlohmann::ordered_json jv;
        jv["severity"] = v.severity == Severity::Error ? "error" : "warning";
        jv["message"] = v.message;
        jv["concept_id"] = v.concept_id ? nlohmann::ordered_json(*v.concept_id) : nlohmann::ordered_json(nullptr);
        jv["instance_id"] = v.instance_id ? nlohmann::ordered_json(*v.instance_id) : nlohmann::ordered_json(nullptr);
        arr.push_back(std::move(jv));
    }
    return arr;
}

}  // namespace variety
