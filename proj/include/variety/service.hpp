#pragma once

#include <cctype>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <utility>

#include "variety/http.hpp"
#include <json.hpp>

#include "variety/config.hpp"
#include "variety/error.hpp"
#include "variety/result_io.hpp"
#include "variety/space_io.hpp"

namespace variety {

inline int http_status(ErrorCode code) {
    switch (code) {
    case ErrorCode::ProviderUnavailable:
    case ErrorCode::MissingPrecomputedVector:
    case ErrorCode::ZeroVector: return 502;
    case ErrorCode::IoError: return 500;
    default: return 400;
    }
}

/// HTTP API over a directory of stored spaces:
///   GET  /healthz
///   POST /spaces                              import (space JSON or {"csv": ...})
///   GET  /spaces/{id}
///   GET  /spaces/{id}/instances/{cid}/{iid}   instance detail card
///   POST /spaces/{id}/assess                  body: run configuration
///   POST /spaces/{id}/cluster                 body: {"k": n, "cluster_method"?}
///   GET  /spaces/{id}/dendrogram
/// Spaces are immutable snapshots; a re-import of the same id while another
/// one is in progress gets 409.
class VarietyService {
public:
    VarietyService(std::filesystem::path data_dir, RunConfig defaults)
        : data_dir_(std::move(data_dir)), defaults_(std::move(defaults)) {
        std::filesystem::create_directories(data_dir_);
        load_existing();
        routes();
    }

    VarietyService(const VarietyService&) = delete;
    VarietyService& operator=(const VarietyService&) = delete;

    ~VarietyService() { stop(); }

    bool listen(const std::string& host, int port) { return server_.listen(host, port); }

    /// Binds an ephemeral port; returns it (or -1).
    int bind_any(const std::string& host = "127.0.0.1") { return server_.bind_to_any_port(host); }
    bool listen_after_bind() { return server_.listen_after_bind(); }

    void stop() {
        if (server_.is_running()) server_.stop();
    }

    void wait_until_ready() const { server_.wait_until_ready(); }

    /// Assessment result for a stored space with the given configuration.
    ResultDocument assess_space(const std::string& id, const RunConfig& cfg) {
        auto space = snapshot(id);
        auto doc = std::make_shared<ResultDocument>(run_assessment(*space, cfg));
        {
            std::unique_lock lock(mutex_);
            results_[id] = doc;
        }
        std::lock_guard io(io_mutex_);
        write_file(result_path(id), result_to_json_text(*doc));
        return *doc;
    }

    /// Per-id import gate. A lock that does not own the gate means another
    /// import of the same id is running.
    std::unique_lock<std::mutex> try_begin_import(const std::string& id) {
        std::shared_ptr<std::mutex> gate;
        {
            std::unique_lock lock(mutex_);
            auto& slot = import_gates_[id];
            if (!slot) slot = std::make_shared<std::mutex>();
            gate = slot;
        }
        // gates are never erased, so the mutex outlives the returned lock
        return std::unique_lock<std::mutex>(*gate, std::try_to_lock);
    }

private:
    using ojson = nlohmann::ordered_json;

    struct NotFound {
        std::string id;
    };
    struct Conflict {
        std::string id;
    };

    std::filesystem::path space_path(const std::string& id) const { return data_dir_ / (id + ".space.json"); }
    std::filesystem::path result_path(const std::string& id) const { return data_dir_ / (id + ".result.json"); }

    static bool valid_id(const std::string& id) {
        if (id.empty() || id.size() > 128) return false;
        for (unsigned char c : id) {
            if (!(std::isalnum(c) || c == '-' || c == '_' || c == '.')) return false;
        }
        return id.front() != '.';
    }

    void load_existing() {
        for (const auto& entry : std::filesystem::directory_iterator(data_dir_)) {
            const auto name = entry.path().filename().string();
            const std::string suffix = ".space.json";
            if (name.size() <= suffix.size() || !name.ends_with(suffix)) continue;
            const auto id = name.substr(0, name.size() - suffix.size());
            try {
                auto imported = space_from_json(read_file(entry.path()), id);
                imported.space.space_id = id;
                spaces_[id] = std::make_shared<const ConceptSpace>(std::move(imported.space));
                if (std::filesystem::exists(result_path(id))) {
                    results_[id] = std::make_shared<ResultDocument>(load_result(result_path(id)));
                }
            } catch (const Error&) {
                // unreadable files are skipped, not fatal
            }
        }
    }

    std::shared_ptr<const ConceptSpace> snapshot(const std::string& id) const {
        std::shared_lock lock(mutex_);
        auto it = spaces_.find(id);
        if (it == spaces_.end()) throw NotFound{id};
        return it->second;
    }

    std::string next_id() {
        for (;;) {
            auto id = "space-" + std::to_string(++counter_);
            if (!spaces_.contains(id) && !std::filesystem::exists(space_path(id))) return id;
        }
    }

    std::shared_ptr<ResultDocument> latest_or_assess(const std::string& id) {
        {
            std::shared_lock lock(mutex_);
            auto it = results_.find(id);
            if (it != results_.end()) return it->second;
        }
        return std::make_shared<ResultDocument>(assess_space(id, defaults_));
    }

    static void send_json(httplib::Response& res, int status, const ojson& body) {
        res.status = status;
        res.set_content(body.dump(2) + "\n", "application/json");
    }

    static void send_error(httplib::Response& res, int status, const std::string& kind, const std::string& message) {
        send_json(res, status, ojson{{"error", kind}, {"message", message}});
    }

    template <typename Handler>
    httplib::Server::Handler guarded(Handler handler) {
        return [handler](const httplib::Request& req, httplib::Response& res) {
            try {
                handler(req, res);
            } catch (const NotFound& e) {
                send_error(res, 404, "NotFound", "unknown space '" + e.id + "'");
            } catch (const Conflict& e) {
                send_error(res, 409, "Conflict", "space '" + e.id + "' is being re-imported");
            } catch (const Error& e) {
                send_error(res, http_status(e.code()), std::string(to_string(e.code())), e.what());
            } catch (const nlohmann::json::exception& e) {
                send_error(res, 400, "SchemaError", e.what());
            } catch (const std::exception& e) {
                send_error(res, 500, "Internal", e.what());
            }
        };
    }

    static ojson parse_body(const httplib::Request& req) {
        if (req.body.empty()) return ojson::object();
        try {
            return ojson::parse(req.body);
        } catch (const nlohmann::json::parse_error& e) {
            throw Error(ErrorCode::ParseError, e.what());
        }
    }

    void import(const httplib::Request& req, httplib::Response& res) {
        const auto body = parse_body(req);
        std::string id;
        if (body.contains("space_id") && body.at("space_id").is_string()) id = body.at("space_id").get<std::string>();
        if (!id.empty() && !valid_id(id)) {
            throw Error(ErrorCode::InvalidArgument, "space_id may contain only letters, digits, '-', '_' and '.'");
        }

        ImportedSpace imported;
        if (body.contains("csv")) {
            imported = space_from_csv(body.at("csv").get<std::string>(), id.empty() ? "space" : id);
        } else {
            imported = space_from_json_value(body, id.empty() ? "space" : id);
        }
        if (!imported.report.valid()) {
            send_json(res, 400, ojson{{"error", "ValidationError"}, {"violations", report_to_json(imported.report)}});
            return;
        }

        if (id.empty()) {
            std::unique_lock lock(mutex_);
            id = next_id();
        }
        auto import_lock = try_begin_import(id);
        if (!import_lock.owns_lock()) throw Conflict{id};

        imported.space.space_id = id;
        {
            std::lock_guard io(io_mutex_);
            write_file(space_path(id), space_to_json(imported.space).dump(2) + "\n");
            std::error_code ec;
            std::filesystem::remove(result_path(id), ec);
        }
        const auto concept_count = imported.space.size();
        {
            std::unique_lock lock(mutex_);
            spaces_[id] = std::make_shared<const ConceptSpace>(std::move(imported.space));
            results_.erase(id);
        }
        send_json(res, 201, ojson{{"space_id", id},
                                  {"concept_count", concept_count},
                                  {"validation", report_to_json(imported.report)}});
    }

    void routes() {
        server_.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                     {"Access-Control-Allow-Headers", "Content-Type"},
                                     {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
        server_.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

        server_.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
            send_json(res, 200, ojson{{"status", "ok"}});
        });

        server_.Post("/spaces", guarded([this](const httplib::Request& req, httplib::Response& res) { import(req, res); }));

        server_.Get(R"(/spaces/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
                        const auto space = snapshot(req.matches[1]);
                        auto body = space_to_json(*space);
                        body["validation"] = report_to_json(validate_space(*space));
                        send_json(res, 200, body);
                    }));

        server_.Get(R"(/spaces/([^/]+)/instances/(\d+)/(\d+))",
                    guarded([this](const httplib::Request& req, httplib::Response& res) {
                        const auto space = snapshot(req.matches[1]);
                        const int cid = std::stoi(req.matches[2]);
                        const int iid = std::stoi(req.matches[3]);
                        for (const auto& c : space->concepts) {
                            if (c.concept_id != cid) continue;
                            for (const auto& inst : c.instances) {
                                if (inst.instance_id != iid) continue;
                                ojson card{{"space_id", space->space_id},
                                           {"concept_id", cid},
                                           {"concept_name", c.name},
                                           {"instance_id", iid}};
                                ojson constructs;
                                for (auto level : kAllLevels) {
                                    constructs[std::string(level_key(level))] = inst.construct(level);
                                }
                                card["constructs"] = std::move(constructs);
                                send_json(res, 200, card);
                                return;
                            }
                        }
                        send_error(res, 404, "NotFound", "no instance " + std::to_string(iid) + " of concept " +
                                                             std::to_string(cid));
                    }));

        server_.Post(R"(/spaces/([^/]+)/assess)", guarded([this](const httplib::Request& req, httplib::Response& res) {
                         const std::string id = req.matches[1];
                         snapshot(id);  // 404 before config errors
                         RunConfig cfg = defaults_;
                         apply_config_json(cfg, parse_body(req));
                         send_json(res, 200, result_to_json(assess_space(id, cfg)));
                     }));

        server_.Post(R"(/spaces/([^/]+)/cluster)", guarded([this](const httplib::Request& req, httplib::Response& res) {
                         const std::string id = req.matches[1];
                         snapshot(id);
                         const auto body = parse_body(req);
                         if (!body.contains("k") || !body.at("k").is_number_integer()) {
                             throw Error(ErrorCode::BadK, "body must carry an integer 'k'");
                         }
                         const int k = body.at("k").get<int>();
                         const auto method = body.contains("cluster_method")
                                                 ? parse_cluster_method(body.at("cluster_method").get<std::string>())
                                                 : defaults_.cluster_method;
                         const auto latest = latest_or_assess(id);
                         const auto& r = latest->result;
                         const auto labels = cluster(r.weighted_matrix, k, method);
                         send_json(res, 200,
                                   ojson{{"space_id", id},
                                         {"clusters", clusters_to_json(labels, r.concepts, cluster_method_name(method))},
                                         {"dendrogram", dendrogram_to_json(dendrogram(r.weighted_matrix), r.concepts)}});
                     }));

        server_.Get(R"(/spaces/([^/]+)/dendrogram)", guarded([this](const httplib::Request& req, httplib::Response& res) {
                        const std::string id = req.matches[1];
                        snapshot(id);
                        const auto latest = latest_or_assess(id);
                        const auto& r = latest->result;
                        send_json(res, 200, ojson{{"space_id", id},
                                                  {"dendrogram", dendrogram_to_json(dendrogram(r.weighted_matrix), r.concepts)}});
                    }));
    }

    std::filesystem::path data_dir_;
    RunConfig defaults_;
    httplib::Server server_;

    mutable std::shared_mutex mutex_;
    std::mutex io_mutex_;
    std::map<std::string, std::shared_ptr<const ConceptSpace>> spaces_;
    std::map<std::string, std::shared_ptr<ResultDocument>> results_;
    std::map<std::string, std::shared_ptr<std::mutex>> import_gates_;
    unsigned counter_ = 0;
};

}  // namespace variety
