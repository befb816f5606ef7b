#include <map>
#include <random>

#include <gtest/gtest.h>

#include "support.hpp"
#include "variety/config.hpp"
#include "variety/csv.hpp"
#include "variety/result_io.hpp"
#include "variety/space_io.hpp"
#include "variety/tree_io.hpp"

using namespace variety;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "expected an Error";
    return ErrorCode::InvalidArgument;
}

const std::string kHeader = "concept_id,concept_name,instance_id,part,organ,effect,phenomenon,input,state_change,action\n";

std::function<const char*(const char*)> env(std::map<std::string, std::string> vars) {
    auto store = std::make_shared<std::map<std::string, std::string>>(std::move(vars));
    return [store](const char* name) -> const char* {
        auto it = store->find(name);
        return it == store->end() ? nullptr : it->second.c_str();
    };
}

}  // namespace

// --- csv ----------------------------------------------------------------------

TEST(Csv, QuotedFieldsAndLineEndings) {
    const auto rows = parse_csv("\xEF\xBB\xBF" "a,\"b, c\",\"say \"\"hi\"\"\"\r\n1,\"two\nlines\",3\n");
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0], (CsvRow{"a", "b, c", "say \"hi\""}));
    EXPECT_EQ(rows[1], (CsvRow{"1", "two\nlines", "3"}));
}

TEST(Csv, EmptyTrailingFieldsSurvive) {
    EXPECT_EQ(parse_csv("a,,\n").front(), (CsvRow{"a", "", ""}));
    EXPECT_EQ(parse_csv("x,\"\"").front(), (CsvRow{"x", ""}));
}

TEST(Csv, ErrorsCarryPosition) {
    try {
        parse_csv("a,b\nc,\"open\n");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ParseError);
        EXPECT_NE(std::string(e.what()).find("line 2, column 3"), std::string::npos) << e.what();
    }
    EXPECT_EQ(code_of([] { parse_csv("a,b\"c\n"); }), ErrorCode::ParseError);
    EXPECT_EQ(code_of([] { parse_csv("\"a\"b\n"); }), ErrorCode::ParseError);
}

TEST(Csv, EscapeRoundTrip) {
    std::mt19937 rng(8);
    const std::string alphabet = "ab ,\"\n\r;x";
    for (int trial = 0; trial < 500; ++trial) {
        CsvRow row(1 + rng() % 5);
        for (auto& f : row) {
            const std::size_t len = rng() % 8;
            for (std::size_t k = 0; k < len; ++k) f.push_back(alphabet[rng() % alphabet.size()]);
        }
        // a lone empty field is indistinguishable from a blank line
        if (row.size() == 1 && row[0].empty()) row[0] = "z";
        const auto parsed = parse_csv(csv_line(row));
        ASSERT_EQ(parsed.size(), 1u);
        ASSERT_EQ(parsed[0], row);
    }
}

// --- concept spaces -------------------------------------------------------------------

TEST(SpaceCsv, WorkedExampleFixture) {
    const auto imported = import_space(fixture::data_path("cw.csv"));
    EXPECT_EQ(imported.space.size(), 4u);
    EXPECT_TRUE(imported.report.empty());
    EXPECT_EQ(imported.space.space_id, "cw");
    EXPECT_EQ(imported.space.concepts[3].name, "Friction Heater");
    EXPECT_EQ(imported.space.concepts[3].instances[0].construct(AbstractionLevel::Action), "Water becomes warm");
}

TEST(SpaceCsv, GroupsInstancesAndSortsById) {
    const auto text = kHeader + "2,B,2,p,o,e,ph,i,s,a2\n1,A,1,p,o,e,ph,i,s,a\n2,B,1,p,o,e,ph,i,s,a1\n";
    const auto s = space_from_csv(text).space;
    ASSERT_EQ(s.size(), 2u);
    EXPECT_EQ(s.concepts[0].concept_id, 2);
    ASSERT_EQ(s.concepts[0].instances.size(), 2u);
    EXPECT_EQ(s.concepts[0].instances[0].construct(AbstractionLevel::Action), "a1");
    EXPECT_EQ(s.concepts[0].instances[1].construct(AbstractionLevel::Action), "a2");
}

TEST(SpaceCsv, Errors) {
    EXPECT_EQ(code_of([] { space_from_csv(""); }), ErrorCode::ParseError);
    try {
        space_from_csv("concept_id,concept_name,instance_id,organ,part,effect,phenomenon,input,state_change,action\n");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::SchemaError);
        EXPECT_NE(std::string(e.what()).find("'organ'"), std::string::npos) << e.what();
    }
    EXPECT_EQ(code_of([] { space_from_csv("concept_id,concept_name\n"); }), ErrorCode::SchemaError);
    EXPECT_EQ(code_of([] { space_from_csv(kHeader + "1,A,1,p,o,e,ph,i,s,a,extra\n"); }), ErrorCode::ParseError);
    EXPECT_EQ(code_of([] { space_from_csv(kHeader + "x,A,1,p,o,e,ph,i,s,a\n"); }), ErrorCode::ParseError);
    EXPECT_EQ(code_of([] { space_from_csv(kHeader + "1,A,1,p,o,e,ph,i,s,a\n1,A,1,p,o,e,ph,i,s,b\n"); }),
              ErrorCode::DuplicateInstance);
    EXPECT_EQ(code_of([] { import_space(fixture::data_path("does-not-exist.csv")); }), ErrorCode::IoError);
}

TEST(SpaceCsv, EmptyConstructImportsWithWarning) {
    const auto imported = space_from_csv(kHeader + "1,A,1,p,,e,ph,i,s,a\n2,B,1,p,o,e,ph,i,s,a\n");
    EXPECT_TRUE(imported.report.valid());
    ASSERT_EQ(imported.report.violations.size(), 1u);
    EXPECT_EQ(imported.report.violations[0].severity, Severity::Warning);
}

TEST(SpaceRoundTrip, CsvAndJson) {
    const auto original = fixture::cw_space();
    EXPECT_EQ(space_from_csv(space_to_csv(original), original.space_id).space, original);
    EXPECT_EQ(space_from_json(space_to_json(original).dump()).space, original);

    fixture::TempDir dir;
    export_space(original, dir / "cw.json", SpaceFormat::Json);
    export_space(original, dir / "cw.csv", SpaceFormat::Csv);
    EXPECT_EQ(import_space(dir / "cw.json").space, original);
    EXPECT_EQ(import_space(dir / "cw.csv").space, original);
}

TEST(SpaceRoundTrip, RandomSpaces) {
    std::mt19937 rng(17);
    const std::vector<std::string> alphabet = {"a", "b", " ", ",", "\"", "\n", "x", "é"};
    auto text = [&] {
        std::string s;
        const std::size_t len = rng() % 10;
        for (std::size_t k = 0; k < len; ++k) s += alphabet[rng() % alphabet.size()];
        return s;
    };
    for (int trial = 0; trial < 100; ++trial) {
        ConceptSpace s;
        s.space_id = "r";
        const int n = 1 + static_cast<int>(rng() % 6);
        for (int c = 1; c <= n; ++c) {
            Concept made{c * 3, "name " + text(), {}};
            const int k = 1 + static_cast<int>(rng() % 3);
            for (int i = 1; i <= k; ++i) {
                SapphireInstance inst;
                inst.instance_id = i;
                for (auto level : kAllLevels) inst.construct(level) = text();
                made.instances.push_back(std::move(inst));
            }
            s.concepts.push_back(std::move(made));
        }
        ASSERT_EQ(space_from_csv(space_to_csv(s), "r").space, s);
        ASSERT_EQ(space_from_json(space_to_json(s).dump()).space, s);
    }
}

TEST(SpaceJson, SchemaErrors) {
    EXPECT_EQ(code_of([] { space_from_json("{}"); }), ErrorCode::SchemaError);
    EXPECT_EQ(code_of([] { space_from_json("{\"concepts\":[{\"concept_id\":1,\"instances\":[{\"instance_id\":1}]}]}"); }),
              ErrorCode::SchemaError);
    EXPECT_EQ(code_of([] { space_from_json("{nope"); }), ErrorCode::ParseError);
}

// --- trees ----------------------------------------------------------------------

TEST(TreeJson, RoundTrip) {
    const auto tree = load_tree(fixture::data_path("ca.json"));
    EXPECT_EQ(tree.concept_count(), 5);
    EXPECT_EQ(tree_from_json(tree_to_json(tree).dump()), tree);
}

TEST(TreeJson, MultipleFunctions) {
    const auto tree = tree_from_json(R"({"levels":[{"alpha":1,"weight":10}],
        "functions":[{"nodes":[{"level":1,"label":"a","parent":null,"count":2}]},
                     {"nodes":[{"level":1,"label":"a","parent":null,"count":1},{"level":1,"label":"b","count":1}]}],
        "function_weights":[1,3]})");
    EXPECT_EQ(tree.function_count(), 2u);
    EXPECT_DOUBLE_EQ(tree.function_weights()[1], 0.75);
    EXPECT_EQ(tree_from_json(tree_to_json(tree).dump()), tree);
}

TEST(TreeJson, Errors) {
    EXPECT_EQ(code_of([] { tree_from_json("{\"levels\":[]}"); }), ErrorCode::SchemaError);
    EXPECT_EQ(code_of([] { tree_from_json("[1,"); }), ErrorCode::ParseError);
    EXPECT_EQ(code_of([] {
                  tree_from_json(R"({"levels":[{"alpha":1,"weight":1}],
                      "nodes":[{"level":1,"label":"a","parent":null,"count":2}],"function_weights":[1,1]})");
              }),
              ErrorCode::ShapeMismatch);
}

// --- configuration ------------------------------------------------------------------

TEST(Config, WeightSpecs) {
    EXPECT_EQ(parse_weights("paper-default"), LevelWeights::paper_default());
    EXPECT_EQ(parse_weights("uniform"), LevelWeights::uniform());
    EXPECT_EQ(parse_weights("1,1,1,1,1,1,2")[AbstractionLevel::Action], 2.0);
    EXPECT_EQ(code_of([] { parse_weights("1,2,3"); }), ErrorCode::InvalidArgument);
    EXPECT_EQ(code_of([] { parse_weights("1,2,3,4,5,6,x"); }), ErrorCode::InvalidArgument);
    EXPECT_EQ(code_of([] { parse_weights("0,0,0,0,0,0,0"); }), ErrorCode::ZeroWeightSum);
    EXPECT_EQ(weights_from_json(weights_to_json(LevelWeights({1, 0, 2, 0, 3, 0, 4}))), LevelWeights({1, 0, 2, 0, 3, 0, 4}));
    EXPECT_EQ(weights_from_json(nlohmann::json::array({7, 6, 5, 4, 3, 2, 1}))[AbstractionLevel::Part], 7.0);
}

TEST(Config, PrecedenceFileThenEnvironmentThenFlags) {
    RunConfig cfg;
    apply_config_json(cfg, nlohmann::json::parse(R"({"provider":{"kind":"service","endpoint":"http://file/embed",
        "model":"file-model"},"weights":"uniform","k":3})"));
    EXPECT_EQ(cfg.provider.kind, ProviderKind::Service);
    EXPECT_EQ(cfg.weights_preset, "uniform");
    EXPECT_EQ(cfg.k, 3);

    apply_environment(cfg, env({{"VARIANT_ENDPOINT", "http://env/embed"}, {"VARIANT_K", "2"}}));
    EXPECT_EQ(cfg.provider.endpoint, "http://env/embed");
    EXPECT_EQ(cfg.provider.model, "file-model");
    EXPECT_EQ(cfg.k, 2);

    apply_environment(cfg, env({{"VARIANT_PROVIDER", "hash"}, {"VARIANT_WEIGHTS", "paper-default"},
                                {"VARIANT_CLUSTER_METHOD", "mds-kmeans"}, {"VARIANT_MAX_IN_FLIGHT", "4"}}));
    EXPECT_EQ(cfg.provider.kind, ProviderKind::Hash);
    EXPECT_EQ(cfg.weights_preset, "paper-default");
    EXPECT_EQ(cfg.cluster_method, ClusterMethod::MdsKMeans);
    EXPECT_EQ(cfg.max_in_flight, 4u);
}

TEST(Config, Errors) {
    RunConfig cfg;
    EXPECT_EQ(code_of([&] { apply_config_json(cfg, nlohmann::json::parse(R"({"provider":"magic"})")); }),
              ErrorCode::InvalidArgument);
    EXPECT_EQ(code_of([&] { apply_config_json(cfg, nlohmann::json::parse(R"({"k":"two"})")); }), ErrorCode::SchemaError);
    EXPECT_EQ(code_of([&] { apply_config_json(cfg, nlohmann::json::parse("[]")); }), ErrorCode::SchemaError);
    EXPECT_EQ(code_of([&] { apply_environment(cfg, env({{"VARIANT_K", "x"}})); }), ErrorCode::InvalidArgument);
    ProviderConfig service;
    service.kind = ProviderKind::Service;
    EXPECT_EQ(code_of([&] { make_provider(service); }), ErrorCode::InvalidArgument);
}

TEST(Config, EchoOmitsToken) {
    RunConfig cfg;
    cfg.provider.kind = ProviderKind::Service;
    cfg.provider.endpoint = "http://x/embed";
    cfg.provider.token = "s3cret";
    const auto j = config_to_json(cfg, "service:m");
    EXPECT_EQ(j.dump().find("s3cret"), std::string::npos);
    EXPECT_EQ(j.at("provider").at("endpoint"), "http://x/embed");
    EXPECT_TRUE(j.at("k").is_null());
}

// --- results -------------------------------------------------------------------------

TEST(ResultJson, KeysAndOrder) {
    const auto doc = run_assessment(fixture::cw_space(), RunConfig{});
    const auto j = result_to_json(doc);
    std::vector<std::string> keys;
    for (const auto& [k, v] : j.items()) keys.push_back(k);
    EXPECT_EQ(keys, (std::vector<std::string>{"overall", "per_level", "per_concept", "per_concept_per_level",
                                              "weighted_matrix", "level_matrices", "config", "plot_data", "display"}));
    EXPECT_FALSE(j.contains("clusters"));
    EXPECT_FALSE(j.contains("dendrogram"));
    EXPECT_EQ(j.at("display").at("overall"), format_display(doc.result.overall));
    EXPECT_EQ(j.at("config").at("provider").at("id"), "hash-bow-384");
    EXPECT_EQ(j.at("plot_data").at("bar").size(), 4u);
}

TEST(ResultJson, ReExportIsByteIdentical) {
    RunConfig cfg;
    cfg.k = 2;
    const auto doc = run_assessment(fixture::cw_space(), cfg);
    const auto text = result_to_json_text(doc);
    const auto again = result_from_json(text);
    EXPECT_EQ(result_to_json_text(again), text);
    EXPECT_EQ(again.result.overall, doc.result.overall);
    EXPECT_EQ(again.result.weighted_matrix, doc.result.weighted_matrix);
    EXPECT_EQ(again.result.clusters, doc.result.clusters);
    EXPECT_EQ(again.result.dendrogram, doc.result.dendrogram);

    fixture::TempDir dir;
    export_results(doc, dir / "r.json", ResultFormat::Json);
    export_results(load_result(dir / "r.json"), dir / "r2.json", ResultFormat::Json);
    EXPECT_EQ(read_file(dir / "r.json"), read_file(dir / "r2.json"));
}

TEST(ResultJson, Errors) {
    EXPECT_EQ(code_of([] { result_from_json("{"); }), ErrorCode::ParseError);
    EXPECT_EQ(code_of([] { result_from_json("{\"overall\":1}"); }), ErrorCode::SchemaError);
}

TEST(ResultCsv, LongFormat) {
    RunConfig cfg;
    cfg.k = 2;
    const auto doc = run_assessment(fixture::cw_space(), cfg);
    const auto rows = parse_csv(result_to_csv(doc));
    EXPECT_EQ(rows[0], (CsvRow{"record", "concept_id", "other_concept_id", "level", "value"}));
    EXPECT_EQ(rows[1][0], "overall");
    EXPECT_EQ(std::stod(rows[1][4]), doc.result.overall);
    std::map<std::string, int> counts;
    for (std::size_t r = 1; r < rows.size(); ++r) ++counts[rows[r][0]];
    EXPECT_EQ(counts["per_level"], 7);
    EXPECT_EQ(counts["per_concept"], 4);
    EXPECT_EQ(counts["per_concept_per_level"], 28);
    EXPECT_EQ(counts["weighted_matrix"], 16);
    EXPECT_EQ(counts["cluster"], 4);
}

TEST(Recluster, AttachesLabelsAndDendrogram) {
    auto doc = run_assessment(fixture::cw_space(), RunConfig{});
    recluster(doc, 3, ClusterMethod::KMedoids);
    ASSERT_TRUE(doc.result.clusters);
    EXPECT_EQ(doc.result.clusters->size(), 4u);
    EXPECT_EQ(doc.config.at("k"), 3);
    EXPECT_TRUE(result_to_json(doc).contains("dendrogram"));
    EXPECT_EQ(code_of([&] { recluster(doc, 0, ClusterMethod::KMedoids); }), ErrorCode::BadK);
}
