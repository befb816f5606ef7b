#pragma once

#include <string>
#include <utility>
#include <vector>

#include "variety/http.hpp"
#include <json.hpp>

#include "variety/distance.hpp"
#include "variety/error.hpp"

namespace variety {

struct ServiceEndpoint {
    std::string scheme_host_port;  // e.g. "http://127.0.0.1:8081"
    std::string path = "/";
};

/// Splits "http://host:port/path" into the client base and request path.
inline ServiceEndpoint parse_endpoint(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw Error(ErrorCode::InvalidArgument, "embedding endpoint must start with http:// or https://: '" + url + "'");
    }
    const std::string scheme = url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https") {
        throw Error(ErrorCode::InvalidArgument, "unsupported embedding endpoint scheme '" + scheme + "'");
    }
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
    if (scheme == "https") {
        throw Error(ErrorCode::InvalidArgument, "https endpoints need a build with OpenSSL support");
    }
#endif
    const auto path_start = url.find('/', scheme_end + 3);
    ServiceEndpoint ep;
    if (path_start == std::string::npos) {
        ep.scheme_host_port = url;
    } else {
        ep.scheme_host_port = url.substr(0, path_start);
        ep.path = url.substr(path_start);
    }
    return ep;
}

/// Client for an external embedding service speaking
///   request  {"model": "...", "input": ["text", ...]}
///   response {"vectors": [[...], ...]}   (request order)
/// over HTTP POST with JSON bodies. An optional bearer token is sent in the
/// Authorization header.
class ServiceEmbeddingProvider final : public EmbeddingProvider {
public:
    ServiceEmbeddingProvider(std::string endpoint, std::string model, std::string token = {}, int timeout_seconds = 30)
        : url_(std::move(endpoint)),
          endpoint_(parse_endpoint(url_)),
          model_(std::move(model)),
          token_(std::move(token)),
          timeout_seconds_(timeout_seconds) {}

    std::string id() const override { return "service:" + model_; }

    const std::string& model() const { return model_; }

    std::vector<EmbeddingVector> embed_batch(std::span<const EmbeddingRequest> requests) const override {
        nlohmann::json body;
        body["model"] = model_;
        body["input"] = nlohmann::json::array();
        for (const auto& r : requests) body["input"].push_back(r.text);

        // one client per call
        httplib::Client client(endpoint_.scheme_host_port);
        client.set_connection_timeout(timeout_seconds_, 0);
        client.set_read_timeout(timeout_seconds_, 0);
        client.set_write_timeout(timeout_seconds_, 0);
        httplib::Headers headers;
        if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);

        auto res = client.Post(endpoint_.path, headers, body.dump(), "application/json");
        if (!res) {
            throw Error(ErrorCode::ProviderUnavailable,
                        "embedding service " + url_ + " unreachable: " + httplib::to_string(res.error()));
        }
        if (res->status != 200) {
            throw Error(ErrorCode::ProviderUnavailable, "embedding service " + url_ + " answered HTTP " +
                                                            std::to_string(res->status) + ": " +
                                                            res->body.substr(0, 200));
        }

        std::vector<EmbeddingVector> out;
        try {
            const auto reply = nlohmann::json::parse(res->body);
            const auto& vectors = reply.at("vectors");
            if (!vectors.is_array() || vectors.size() != requests.size()) {
                throw Error(ErrorCode::ProviderUnavailable, "embedding service returned " +
                                                                std::to_string(vectors.size()) + " vectors for " +
                                                                std::to_string(requests.size()) + " texts");
            }
            for (const auto& v : vectors) out.push_back({v.get<std::vector<double>>(), id()});
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::ProviderUnavailable, "malformed embedding service reply: " + std::string(e.what()));
        }
        if (!out.empty()) {
            const auto dim = out.front().dimension();
            for (const auto& v : out) {
                if (v.dimension() != dim || dim == 0) {
                    throw Error(ErrorCode::ProviderUnavailable, "embedding service returned ragged vectors");
                }
            }
        }
        return out;
    }

private:
    std::string url_;
    ServiceEndpoint endpoint_;
    std::string model_;
    std::string token_;
    int timeout_seconds_;
};

}  // namespace variety
