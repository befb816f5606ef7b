#pragma once

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "variety/analysis.hpp"
#include "variety/config.hpp"
#include "variety/error.hpp"
#include "variety/result_io.hpp"
#include "variety/service.hpp"
#include "variety/space_io.hpp"
#include "variety/tree_io.hpp"
#include "variety/tree_metrics.hpp"

namespace variety {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

namespace cli_detail {

inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

/// Flag values for the run configuration; only flags actually given override.
struct RunFlags {
    std::string config_file;
    std::string provider;
    std::string endpoint;
    std::string model;
    std::string token;
    std::string vectors;
    std::string weights;
    std::string cluster_method;
    std::string separator;
    int k = 0;
    int timeout = 30;
    std::size_t max_in_flight = 1;
    std::size_t dimension = HashedBowProvider::kDefaultDimension;

    CLI::Option* k_opt = nullptr;
    CLI::Option* timeout_opt = nullptr;
    CLI::Option* in_flight_opt = nullptr;
    CLI::Option* dimension_opt = nullptr;
    CLI::Option* separator_opt = nullptr;

    void add_to(CLI::App* app, bool with_k) {
        app->add_option("--config", config_file, "JSON run configuration file");
        app->add_option("--provider", provider, "embedding provider: hash | service | precomputed");
        app->add_option("--endpoint", endpoint, "embedding service URL (provider=service)");
        app->add_option("--model", model, "embedding model name (provider=service)");
        app->add_option("--token", token, "bearer token for the embedding service");
        app->add_option("--vectors", vectors, "precomputed vectors CSV (provider=precomputed)");
        app->add_option("--weights", weights, "paper-default | uniform | w_part,...,w_action");
        timeout_opt = app->add_option("--timeout", timeout, "embedding service timeout in seconds");
        in_flight_opt = app->add_option("--max-in-flight", max_in_flight, "concurrent provider calls");
        dimension_opt = app->add_option("--dimension", dimension, "hashed bag-of-words dimension");
        separator_opt = app->add_option("--separator", separator, "joiner for multi-instance construct text");
        if (with_k) {
            k_opt = app->add_option("--k", k, "number of clusters; adds clusters and a dendrogram");
            app->add_option("--cluster-method", cluster_method, "kmedoids | mds-kmeans");
        }
    }

    /// defaults < config file < VARIANT_* environment < flags
    RunConfig resolve() const {
        RunConfig cfg;
        if (!config_file.empty()) {
            nlohmann::ordered_json j;
            try {
                j = nlohmann::ordered_json::parse(read_file(config_file));
            } catch (const nlohmann::json::parse_error& e) {
                throw Error(ErrorCode::ParseError, config_file + ": " + e.what());
            }
            apply_config_json(cfg, j);
        }
        apply_environment(cfg);
        if (!provider.empty()) cfg.provider.kind = parse_provider_kind(provider);
        if (!endpoint.empty()) cfg.provider.endpoint = endpoint;
        if (!model.empty()) cfg.provider.model = model;
        if (!token.empty()) cfg.provider.token = token;
        if (!vectors.empty()) cfg.provider.vectors_path = vectors;
        if (!weights.empty()) set_weights(cfg, parse_weights(weights));
        if (!cluster_method.empty()) cfg.cluster_method = parse_cluster_method(cluster_method);
        if (k_opt && k_opt->count()) cfg.k = k;
        if (timeout_opt->count()) cfg.provider.timeout_seconds = timeout;
        if (in_flight_opt->count()) cfg.max_in_flight = max_in_flight;
        if (dimension_opt->count()) cfg.provider.dimension = dimension;
        if (separator_opt->count()) cfg.separator = separator;
        return cfg;
    }
};

inline void print_report(const ValidationReport& report, std::ostream& os) {
    for (const auto& v : report.violations) {
        os << (v.severity == Severity::Error ? "error" : "warning") << ": " << v.message;
        if (v.concept_id) os << " [concept " << *v.concept_id;
        if (v.instance_id) os << ", instance " << *v.instance_id;
        if (v.concept_id) os << "]";
        os << "\n";
    }
}

inline ImportedSpace load_space(const std::string& path, const std::string& format) {
    if (format.empty()) return import_space(path);
    if (format == "csv") return import_space(path, SpaceFormat::Csv);
    if (format == "json") return import_space(path, SpaceFormat::Json);
    throw Error(ErrorCode::InvalidArgument, "unknown input format '" + format + "'");
}

inline void print_dendrogram(const Dendrogram& d, const std::vector<ConceptRef>& concepts, std::ostream& out) {
    auto name = [&](int node) {
        if (node < d.leaf_count) return concepts.at(static_cast<std::size_t>(node)).name;
        return "node " + std::to_string(node);
    };
    for (std::size_t m = 0; m < d.merges.size(); ++m) {
        const auto& mg = d.merges[m];
        out << "merge " << d.leaf_count + static_cast<int>(m) << ": " << name(mg.left) << " + " << name(mg.right)
            << " at " << num(mg.height) << " (size " << mg.size << ")\n";
    }
}

inline std::string curve_csv(const std::vector<CurvePoint>& points) {
    std::string out = csv_line({"x", "n", "svs", "nm", "ihi", "hhid", "gsid"});
    for (const auto& p : points) {
        CsvRow row{p.x, std::to_string(p.n)};
        for (auto m : kAllTreeMetrics) row.push_back(format_full(p.scaled.at(m)));
        out += csv_line(row);
    }
    return out;
}

}  // namespace cli_detail

/// Entry point for the `variety` tool. Returns the process exit code:
/// 0 success, 1 validation or runtime failure, 2 usage error.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    using namespace cli_detail;
    CLI::App app{"Variety assessment of design concept spaces"};
    app.require_subcommand(1);

    // assess
    auto* assess_cmd = app.add_subcommand("assess", "import a concept space, embed, score, export");
    std::string input, input_format, out_path, out_format;
    RunFlags assess_flags;
    assess_cmd->add_option("--input", input, "concept space (.csv or .json)")->required();
    assess_cmd->add_option("--format", input_format, "csv | json (default: from extension)");
    assess_cmd->add_option("--out", out_path, "result file (default: JSON on stdout)");
    assess_cmd->add_option("--out-format", out_format, "json | csv (default: from extension)");
    assess_flags.add_to(assess_cmd, true);

    // tree-metrics
    auto* tree_cmd = app.add_subcommand("tree-metrics", "genealogy-tree metrics SVS, NM, IHI, HHID, GSID");
    std::string tree_path, metric_name_arg = "all";
    tree_cmd->add_option("--tree", tree_path, "tree JSON file")->required();
    tree_cmd->add_option("--metric", metric_name_arg, "svs | nm | ihi | hhid | gsid | all");

    // testcase
    auto* tc_cmd = app.add_subcommand("testcase", "sensitivity curves over a two-node level");
    std::string which_case;
    int tc_n = 20;
    int tc_n_max = 40;
    std::string tc_out;
    tc_cmd->add_option("--case", which_case, "I (fixed N, varying split) or II (even split, varying N)")->required();
    tc_cmd->add_option("--n", tc_n, "number of concepts for case I");
    tc_cmd->add_option("--n-max", tc_n_max, "largest even N for case II");
    tc_cmd->add_option("--out", tc_out, "curve CSV (default: stdout)");

    // cluster
    auto* cl_cmd = app.add_subcommand("cluster", "cluster a stored result and build its dendrogram");
    std::string cl_result, cl_method = "kmedoids", cl_out;
    int cl_k = 0;
    cl_cmd->add_option("--result", cl_result, "result JSON from assess")->required();
    cl_cmd->add_option("--k", cl_k, "number of clusters")->required();
    cl_cmd->add_option("--method", cl_method, "kmedoids | mds-kmeans");
    cl_cmd->add_option("--out", cl_out, "write the result with clusters attached");

    // serve
    auto* serve_cmd = app.add_subcommand("serve", "start the HTTP API");
    std::string host = "127.0.0.1", data_dir = "variety-data";
    int port = 8080;
    RunFlags serve_flags;
    serve_cmd->add_option("--host", host, "bind address");
    serve_cmd->add_option("--port", port, "TCP port");
    serve_cmd->add_option("--data-dir", data_dir, "directory for stored spaces and results");
    serve_flags.add_to(serve_cmd, false);

    // validate
    auto* val_cmd = app.add_subcommand("validate", "check a concept space file");
    std::string val_input, val_format;
    val_cmd->add_option("--input", val_input, "concept space (.csv or .json)")->required();
    val_cmd->add_option("--format", val_format, "csv | json (default: from extension)");

    // convert
    auto* conv_cmd = app.add_subcommand("convert", "rewrite a concept space as CSV or JSON");
    std::string conv_in, conv_out;
    conv_cmd->add_option("--input", conv_in, "source (.csv or .json)")->required();
    conv_cmd->add_option("--out", conv_out, "destination (.csv or .json)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        app.exit(e, out, err);
        return kExitOk;
    } catch (const CLI::CallForAllHelp& e) {
        app.exit(e, out, err);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kExitUsage;
    }

    try {
        if (*assess_cmd) {
            const auto cfg = assess_flags.resolve();
            const auto imported = load_space(input, input_format);
            if (!imported.report.valid()) {
                print_report(imported.report, err);
                return kExitFailure;
            }
            const auto doc = run_assessment(imported.space, cfg);
            if (out_path.empty()) {
                out << result_to_json_text(doc);
            } else {
                ResultFormat fmt = ResultFormat::Json;
                if (out_format == "csv" || (out_format.empty() && std::filesystem::path(out_path).extension() == ".csv")) {
                    fmt = ResultFormat::Csv;
                } else if (!out_format.empty() && out_format != "json") {
                    throw Error(ErrorCode::InvalidArgument, "unknown output format '" + out_format + "'");
                }
                export_results(doc, out_path, fmt);
                out << "V(C) = " << format_display(doc.result.overall) << " over " << doc.result.size()
                    << " concepts; wrote " << out_path << "\n";
            }
            return kExitOk;
        }

        if (*tree_cmd) {
            const auto tree = load_tree(tree_path);
            std::vector<TreeMetric> metrics;
            if (metric_name_arg == "all") metrics.assign(kAllTreeMetrics.begin(), kAllTreeMetrics.end());
            else metrics.push_back(parse_metric(metric_name_arg));
            for (auto m : metrics) {
                const auto score = evaluate_tree(m, tree);
                for (const auto& [alpha, v] : score.per_level) {
                    out << metric_name(m) << " level " << alpha << ": " << num(v) << " (scaled "
                        << num(score.scaled_per_level.at(alpha)) << ")\n";
                }
                if (score.overall) out << metric_name(m) << " overall: " << num(*score.overall) << "\n";
            }
            return kExitOk;
        }

        if (*tc_cmd) {
            std::vector<CurvePoint> curve;
            if (which_case == "I" || which_case == "1") {
                curve = testcase1_curve(tc_n, default_testcase1_splits(tc_n));
            } else if (which_case == "II" || which_case == "2") {
                curve = testcase2_curve(even_sizes(tc_n_max));
            } else {
                err << "--case must be I or II\n";
                return kExitUsage;
            }
            const auto csv = curve_csv(curve);
            if (tc_out.empty()) out << csv;
            else write_file(tc_out, csv);
            return kExitOk;
        }

        if (*cl_cmd) {
            auto doc = load_result(cl_result);
            recluster(doc, cl_k, parse_cluster_method(cl_method));
            out << "concept_id,name,cluster\n";
            for (std::size_t i = 0; i < doc.result.size(); ++i) {
                out << doc.result.concepts[i].concept_id << "," << csv_escape(doc.result.concepts[i].name) << ","
                    << (*doc.result.clusters)[i] << "\n";
            }
            print_dendrogram(*doc.result.dendrogram, doc.result.concepts, out);
            if (!cl_out.empty()) export_results(doc, cl_out, ResultFormat::Json);
            return kExitOk;
        }

        if (*serve_cmd) {
            VarietyService service(data_dir, serve_flags.resolve());
            out << "listening on http://" << host << ":" << port << "\n" << std::flush;
            if (!service.listen(host, port)) {
                err << "cannot listen on " << host << ":" << port << "\n";
                return kExitFailure;
            }
            return kExitOk;
        }

        if (*val_cmd) {
            const auto imported = load_space(val_input, val_format);
            print_report(imported.report, out);
            out << (imported.report.valid() ? "valid" : "invalid") << ": " << imported.space.size() << " concepts\n";
            return imported.report.valid() ? kExitOk : kExitFailure;
        }

        if (*conv_cmd) {
            const auto imported = import_space(conv_in);
            export_space(imported.space, conv_out, format_from_path(conv_out));
            return kExitOk;
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitFailure;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitUsage;
}

}  // namespace variety
