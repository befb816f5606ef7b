#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <random>
#include <string>
#include <thread>

#include "variety/http.hpp"
#include <json.hpp>

#include "variety/distance.hpp"
#include "variety/space_io.hpp"

namespace variety::fixture {

inline std::filesystem::path data_path(const std::string& name) {
    return std::filesystem::path(VARIETY_DATA_DIR) / name;
}

inline ConceptSpace cw_space() { return import_space(data_path("cw.csv")).space; }

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("variety-test-" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

/// Loopback embedding service that answers with hashed bag-of-words vectors.
class HashEmbeddingServer {
public:
    explicit HashEmbeddingServer(std::string required_token = {}) : token_(std::move(required_token)) {
        server_.Post("/embed", [this](const httplib::Request& req, httplib::Response& res) {
            ++requests_;
            if (!token_.empty() && req.get_header_value("Authorization") != "Bearer " + token_) {
                res.status = 401;
                res.set_content(R"({"error":"unauthorized"})", "application/json");
                return;
            }
            const auto body = nlohmann::json::parse(req.body);
            last_model_ = body.at("model").get<std::string>();
            nlohmann::json out;
            out["vectors"] = nlohmann::json::array();
            for (const auto& text : body.at("input")) {
                out["vectors"].push_back(encoder_.embed(text.get<std::string>()).values);
            }
            res.set_content(out.dump(), "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~HashEmbeddingServer() {
        server_.stop();
        thread_.join();
    }
    HashEmbeddingServer(const HashEmbeddingServer&) = delete;
    HashEmbeddingServer& operator=(const HashEmbeddingServer&) = delete;

    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/embed"; }
    int requests() const { return requests_; }
    const std::string& last_model() const { return last_model_; }

private:
    HashedBowProvider encoder_;
    std::string token_;
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
    std::atomic<int> requests_{0};
    std::string last_model_;
};

/// A port on which nothing listens.
inline int closed_port() {
    httplib::Server probe;
    const int port = probe.bind_to_any_port("127.0.0.1");
    return port;  // socket closes when `probe` goes out of scope
}

}  // namespace variety::fixture
