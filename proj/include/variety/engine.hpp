#pragma once

#include <algorithm>
#include <future>
#include <optional>
#include <string>
#include <vector>

#include "variety/analysis.hpp"
#include "variety/concept_model.hpp"
#include "variety/distance.hpp"
#include "variety/error.hpp"
#include "variety/rqid.hpp"

namespace variety {

struct AssessOptions {
    LevelWeights weights = LevelWeights::paper_default();
    std::string separator{kDefaultSeparator};
    /// Upper bound on concurrent provider calls (one call per level).
    std::size_t max_in_flight = 1;
    /// When set, clusters and a dendrogram are attached to the result.
    std::optional<int> k;
    ClusterMethod cluster_method = ClusterMethod::KMedoids;
};

inline std::string describe(const ValidationReport& report) {
    std::string out;
    for (const auto& v : report.violations) {
        if (v.severity != Severity::Error) continue;
        if (!out.empty()) out += "; ";
        out += v.message;
        if (v.concept_id) out += " (concept " + std::to_string(*v.concept_id) + ")";
    }
    return out;
}

/// Full pipeline: level texts, one embedding batch per level, seven distance
/// matrices, per-level and weighted scores, optional clustering.
inline AssessmentResult assess(const ConceptSpace& space, const EmbeddingProvider& provider,
                               const AssessOptions& options = {}) {
    const auto report = validate_space(space);
    if (!report.valid()) throw Error(ErrorCode::InvalidArgument, "space failed validation: " + describe(report));
    if (space.size() < 2) {
        throw Error(ErrorCode::TooFewConcepts, "assessment needs N >= 2, got " + std::to_string(space.size()));
    }

    struct LevelJob {
        std::vector<LevelText> texts;
        std::vector<EmbeddingRequest> requests;
        std::vector<EmbeddingVector> vectors;
    };
    std::vector<LevelJob> jobs;
    for (auto level : kAllLevels) {
        auto [texts, requests] = level_requests(space, level, options.separator);
        jobs.push_back({std::move(texts), std::move(requests), {}});
    }

    auto run = [&](LevelJob& job) {
        if (job.requests.empty()) return;
        job.vectors = provider.embed_batch(job.requests);
        if (job.vectors.size() != job.requests.size()) {
            throw Error(ErrorCode::ProviderUnavailable,
                        provider.id() + " returned " + std::to_string(job.vectors.size()) + " vectors for " +
                            std::to_string(job.requests.size()) + " texts");
        }
    };
    const std::size_t in_flight = std::max<std::size_t>(1, options.max_in_flight);
    if (in_flight == 1) {
        for (auto& job : jobs) run(job);
    } else {
        for (std::size_t start = 0; start < jobs.size(); start += in_flight) {
            std::vector<std::future<void>> pending;
            for (std::size_t j = start; j < std::min(jobs.size(), start + in_flight); ++j) {
                pending.push_back(std::async(std::launch::async, run, std::ref(jobs[j])));
            }
            for (auto& f : pending) f.get();
        }
    }

    std::optional<std::size_t> dimension;
    for (const auto& job : jobs) {
        for (const auto& v : job.vectors) {
            if (!dimension) dimension = v.dimension();
            if (v.dimension() != *dimension) {
                throw Error(ErrorCode::ShapeMismatch, provider.id() + " produced vectors of mixed dimension");
            }
        }
    }

    std::vector<DistanceMatrix> matrices;
    for (std::size_t s = 0; s < jobs.size(); ++s) {
        matrices.push_back(
            distances_from_vectors(std::string(level_key(kAllLevels[s])), jobs[s].texts, jobs[s].vectors));
    }

    std::vector<ConceptRef> refs;
    for (const auto& c : space.concepts) refs.push_back({c.concept_id, c.name});
    auto result = score_matrices(std::move(refs), std::move(matrices), options.weights, provider.id());
    if (options.k) {
        result.clusters = cluster(result.weighted_matrix, *options.k, options.cluster_method);
        result.dendrogram = dendrogram(result.weighted_matrix);
    }
    return result;
}

}  // namespace variety
