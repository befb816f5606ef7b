#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "variety/analysis.hpp"
#include "variety/concept_model.hpp"
#include "variety/distance.hpp"
#include "variety/error.hpp"

namespace variety {

/// Per-level scores, one slot per SAPPhIRE level in Part..Action order.
using LevelScores = std::array<double, kLevelCount>;

namespace detail {

inline void require_pairwise(const DistanceMatrix& d) {
    if (d.size() < 2) {
        throw Error(ErrorCode::TooFewConcepts, "variety needs N >= 2, got " + std::to_string(d.size()));
    }
}

}  // namespace detail

/// Average distance of concept i from the other N - 1 concepts.
inline double concept_variety(const DistanceMatrix& d, std::size_t i) {
    detail::require_pairwise(d);
    if (i >= d.size()) throw Error(ErrorCode::InvalidArgument, "concept index out of range");
    double sum = 0.0;
    for (std::size_t j = 0; j < d.size(); ++j) sum += d(i, j);
    return sum / static_cast<double>(d.size() - 1);
}

/// Rao's quadratic index for design: sum_ij d_ij / (N(N-1)). Unbiased
/// estimator of Rao's quadratic entropy; equals GSID when distances are 0/1.
inline double level_variety(const DistanceMatrix& d) {
    detail::require_pairwise(d);
    const std::size_t n = d.size();
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) sum += d(i, j);
    return sum / (static_cast<double>(n) * static_cast<double>(n - 1));
}

/// Weighted mean over levels. Zero-weight levels drop out of both sums.
inline double weighted_level_mean(const LevelScores& per_level, const LevelWeights& weights) {
    double num = 0.0;
    double den = 0.0;
    for (auto level : kAllLevels) {
        const double w = weights[level];
        if (w == 0.0) continue;
        num += w * per_level[level_slot(level)];
        den += w;
    }
    if (den <= 0.0) throw Error(ErrorCode::ZeroWeightSum, "level weights sum to zero");
    return num / den;
}

/// V(C_i) from the concept's per-level scores.
inline double weighted_concept_variety(const LevelScores& per_level, const LevelWeights& weights) {
    return weighted_level_mean(per_level, weights);
}

/// V(C) from the space's per-level scores.
inline double space_variety(const LevelScores& per_level, const LevelWeights& weights) {
    return weighted_level_mean(per_level, weights);
}

/// D_ij = sum_a w_a d_ij^a / sum_a w_a over the seven level matrices.
inline DistanceMatrix weighted_distance_matrix(std::span<const DistanceMatrix> per_level,
                                               const LevelWeights& weights) {
    if (per_level.size() != static_cast<std::size_t>(kLevelCount)) {
        throw Error(ErrorCode::ShapeMismatch, "expected 7 level matrices, got " + std::to_string(per_level.size()));
    }
    const std::size_t n = per_level.front().size();
    for (const auto& m : per_level) {
        if (m.size() != n) {
            throw Error(ErrorCode::ShapeMismatch, "level matrices disagree on N (" + std::to_string(m.size()) +
                                                      " vs " + std::to_string(n) + ")");
        }
    }
    double den = 0.0;
    for (auto level : kAllLevels) den += weights[level];
    if (den <= 0.0) throw Error(ErrorCode::ZeroWeightSum, "level weights sum to zero");

    DistanceMatrix out("weighted", n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double num = 0.0;
            for (auto level : kAllLevels) {
                const double w = weights[level];
                if (w == 0.0) continue;
                num += w * per_level[level_slot(level)](i, j);
            }
            out.set_pair(i, j, std::clamp(num / den, 0.0, 1.0));
        }
    }
    return out;
}

struct ConceptRef {
    int concept_id = 0;
    std::string name;

    friend bool operator==(const ConceptRef&, const ConceptRef&) = default;
};

/// Everything produced by one assessment of a concept space.
struct AssessmentResult {
    std::vector<ConceptRef> concepts;
    std::vector<DistanceMatrix> level_matrices;  // Part..Action
    std::vector<LevelScores> per_concept_per_level;
    LevelScores per_level{};
    std::vector<double> per_concept;
    double overall = 0.0;
    DistanceMatrix weighted_matrix;
    LevelWeights weights_used;
    std::string provider_id;
    std::optional<std::vector<int>> clusters;
    std::optional<Dendrogram> dendrogram;

    std::size_t size() const { return concepts.size(); }
};

/// Scores from seven already-built level matrices.
inline AssessmentResult score_matrices(std::vector<ConceptRef> concepts, std::vector<DistanceMatrix> level_matrices,
                                       const LevelWeights& weights, std::string provider_id) {
    if (level_matrices.size() != static_cast<std::size_t>(kLevelCount)) {
        throw Error(ErrorCode::ShapeMismatch, "expected 7 level matrices, got " +
                                                  std::to_string(level_matrices.size()));
    }
    const std::size_t n = concepts.size();
    for (const auto& m : level_matrices) {
        if (m.size() != n) throw Error(ErrorCode::ShapeMismatch, "level matrix size does not match concept count");
        detail::require_pairwise(m);
    }

    AssessmentResult r;
    r.concepts = std::move(concepts);
    r.weights_used = weights;
    r.provider_id = std::move(provider_id);
    r.per_concept_per_level.assign(n, LevelScores{});
    for (auto level : kAllLevels) {
        const auto& m = level_matrices[level_slot(level)];
        for (std::size_t i = 0; i < n; ++i) r.per_concept_per_level[i][level_slot(level)] = concept_variety(m, i);
        r.per_level[level_slot(level)] = level_variety(m);
    }
    r.per_concept.reserve(n);
    for (const auto& row : r.per_concept_per_level) r.per_concept.push_back(weighted_concept_variety(row, weights));
    r.overall = space_variety(r.per_level, weights);
    r.weighted_matrix = weighted_distance_matrix(level_matrices, weights);
    r.level_matrices = std::move(level_matrices);
    return r;
}

}  // namespace variety
