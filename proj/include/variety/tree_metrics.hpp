#pragma once

#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "variety/concept_model.hpp"
#include "variety/error.hpp"

namespace variety {

/// Genealogy-tree variety metrics.
///   SVS   Shah et al. branch count
///   NM    Nelson et al. differentiation count
///   IHI   inverse Herfindahl (Verhaegen et al.)
///   HHID  Herfindahl-Hirschman index for design (Ahmed et al.)
///   GSID  bias-corrected Gini-Simpson index for design
enum class TreeMetric { SVS, NM, IHI, HHID, GSID };

inline constexpr std::array<TreeMetric, 5> kAllTreeMetrics = {
    TreeMetric::SVS, TreeMetric::NM, TreeMetric::IHI, TreeMetric::HHID, TreeMetric::GSID};

constexpr std::string_view metric_name(TreeMetric m) {
    switch (m) {
    case TreeMetric::SVS: return "svs";
    case TreeMetric::NM: return "nm";
    case TreeMetric::IHI: return "ihi";
    case TreeMetric::HHID: return "hhid";
    case TreeMetric::GSID: return "gsid";
    }
    return "";
}

inline TreeMetric parse_metric(std::string_view name) {
    for (auto m : kAllTreeMetrics) {
        if (name == metric_name(m)) return m;
    }
    throw Error(ErrorCode::InvalidArgument, "unknown tree metric '" + std::string(name) + "'");
}

struct TreeMetricScore {
    TreeMetric metric = TreeMetric::GSID;
    std::map<int, double> per_level;
    std::optional<double> overall;
    std::map<int, double> scaled_per_level;
};

namespace detail {

inline void require_levels(const GenealogyTree& tree) {
    if (tree.empty()) throw Error(ErrorCode::EmptyTree, "tree has no levels");
}

inline void require_concepts(int n, int minimum) {
    if (n < minimum) {
        throw Error(ErrorCode::TooFewConcepts,
                    "need N >= " + std::to_string(minimum) + ", got " + std::to_string(n));
    }
}

inline long long checked_total(std::span<const int> counts, int n) {
    long long total = 0;
    for (int c : counts) {
        if (c < 0) throw Error(ErrorCode::CountMismatch, "negative idea count");
        total += c;
    }
    if (total != n) {
        throw Error(ErrorCode::CountMismatch,
                    "counts sum to " + std::to_string(total) + ", expected N = " + std::to_string(n));
    }
    return total;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Count-vector estimators
// ---------------------------------------------------------------------------

/// Plug-in Simpson index, sum (n_i/N)^2.
inline double simpson_plugin(std::span<const int> counts, int n) {
    detail::require_concepts(n, 1);
    detail::checked_total(counts, n);
    long long sq = 0;
    for (int c : counts) sq += static_cast<long long>(c) * c;
    return static_cast<double>(sq) / (static_cast<double>(n) * n);
}

/// Unbiased Simpson index, sum n_i(n_i-1) / (N(N-1)).
inline double simpson_unbiased(std::span<const int> counts, int n) {
    detail::require_concepts(n, 2);
    detail::checked_total(counts, n);
    long long pairs = 0;
    for (int c : counts) pairs += static_cast<long long>(c) * (c - 1);
    return static_cast<double>(pairs) / (static_cast<double>(n) * (n - 1));
}

/// 1 - sum (n_i)^2 / N^2. Defined for N >= 1.
inline double hhid_level(std::span<const int> counts, int n) {
    detail::require_concepts(n, 1);
    detail::checked_total(counts, n);
    long long sq = 0;
    for (int c : counts) sq += static_cast<long long>(c) * c;
    const long long denom = static_cast<long long>(n) * n;
    return static_cast<double>(denom - sq) / static_cast<double>(denom);
}

/// 1 - sum n_i(n_i - 1) / (N(N - 1)). Defined for N >= 2.
inline double gsid_level(std::span<const int> counts, int n) {
    detail::require_concepts(n, 2);
    detail::checked_total(counts, n);
    long long pairs = 0;
    for (int c : counts) pairs += static_cast<long long>(c) * (c - 1);
    const long long denom = static_cast<long long>(n) * (n - 1);
    return static_cast<double>(denom - pairs) / static_cast<double>(denom);
}

// ---------------------------------------------------------------------------
// Tree metrics
// ---------------------------------------------------------------------------

/// SVS contribution of one level: sum_j f_j w beta / N, zero where beta == 1.
inline double shah_level(const GenealogyTree& tree, int alpha) {
    detail::require_levels(tree);
    const int n = tree.concept_count();
    detail::require_concepts(n, 1);
    const double w = tree.level(alpha).weight;
    double v = 0.0;
    for (std::size_t j = 0; j < tree.function_count(); ++j) {
        const int beta = tree.branches(j, alpha);
        if (beta <= 1) continue;
        v += tree.function_weights()[j] * w * beta / n;
    }
    return v;
}

/// SVS on the 0-10 scale.
inline double shah_variety(const GenealogyTree& tree) {
    detail::require_levels(tree);
    double v = 0.0;
    for (const auto& d : tree.levels()) v += shah_level(tree, d.alpha);
    return v;
}

/// NM contribution of one level before the N-1 normalization.
inline double nelson_level(const GenealogyTree& tree, int alpha) {
    detail::require_levels(tree);
    const double w = tree.level(alpha).weight;
    double v = 0.0;
    for (std::size_t j = 0; j < tree.function_count(); ++j) {
        v += tree.function_weights()[j] * w * tree.differentiations(j, alpha);
    }
    return v;
}

/// NM; `normalized` divides by N - 1 (0-10 scale), otherwise raw differentiation score.
inline double nelson_variety(const GenealogyTree& tree, bool normalized = true) {
    detail::require_levels(tree);
    const int n = tree.concept_count();
    if (normalized) detail::require_concepts(n, 2);
    double v = 0.0;
    for (const auto& d : tree.levels()) v += nelson_level(tree, d.alpha);
    return normalized ? v / (n - 1) : v;
}

/// IHI at one level: w sum_j f_j / (N H), with H = sum p_i^2.
inline double ihi_level(const GenealogyTree& tree, int alpha) {
    detail::require_levels(tree);
    const int n = tree.concept_count();
    detail::require_concepts(n, 1);
    const double w = tree.level(alpha).weight;
    double v = 0.0;
    for (std::size_t j = 0; j < tree.function_count(); ++j) {
        const auto counts = tree.counts(j, alpha);
        long long sq = 0;
        for (int c : counts) sq += static_cast<long long>(c) * c;
        // 1 / (N * sum (n_i/N)^2) == N / sum n_i^2
        v += tree.function_weights()[j] * static_cast<double>(n) / static_cast<double>(sq);
    }
    return w * v;
}

/// Weighted average of per-level IHI scores over the levels present.
inline double ihi_overall(const std::map<int, double>& per_level, const std::map<int, double>& weights) {
    if (per_level.empty()) throw Error(ErrorCode::EmptyTree, "no per-level IHI scores");
    double num = 0.0;
    double den = 0.0;
    for (const auto& [alpha, v] : per_level) {
        auto it = weights.find(alpha);
        if (it == weights.end()) {
            throw Error(ErrorCode::UnknownLevel, "no weight for level " + std::to_string(alpha));
        }
        num += v;
        den += it->second;
    }
    if (den <= 0.0) throw Error(ErrorCode::ZeroWeightSum, "IHI level weights sum to zero");
    return num / den;
}

inline double ihi_overall(const GenealogyTree& tree) {
    detail::require_levels(tree);
    std::map<int, double> per_level;
    std::map<int, double> weights;
    for (const auto& d : tree.levels()) {
        per_level[d.alpha] = ihi_level(tree, d.alpha);
        weights[d.alpha] = d.weight;
    }
    return ihi_overall(per_level, weights);
}

/// HHID at a tree level, combined across function trees with f_j.
inline double hhid_level(const GenealogyTree& tree, int alpha) {
    detail::require_levels(tree);
    double v = 0.0;
    for (std::size_t j = 0; j < tree.function_count(); ++j) {
        v += tree.function_weights()[j] * hhid_level(tree.counts(j, alpha), tree.concept_count());
    }
    return v;
}

inline double gsid_level(const GenealogyTree& tree, int alpha) {
    detail::require_levels(tree);
    double v = 0.0;
    for (std::size_t j = 0; j < tree.function_count(); ++j) {
        v += tree.function_weights()[j] * gsid_level(tree.counts(j, alpha), tree.concept_count());
    }
    return v;
}

/// Maps a single-function per-level score onto [0, 1]:
///   SVS -> beta/N (0 when beta == 1), NM -> differentiations/(N-1),
///   IHI -> 1/(N H); HHID and GSID are already unit-scaled.
inline double scale_to_unit(TreeMetric metric, double per_level_score, double level_weight, int n) {
    switch (metric) {
    case TreeMetric::HHID:
    case TreeMetric::GSID: return per_level_score;
    default: break;
    }
    if (level_weight <= 0.0) throw Error(ErrorCode::ZeroWeightSum, "cannot unit-scale a zero-weight level");
    switch (metric) {
    case TreeMetric::SVS:
    case TreeMetric::IHI: return per_level_score / level_weight;
    case TreeMetric::NM:
        if (n < 2) return 0.0;
        return per_level_score / (level_weight * (n - 1));
    default: return per_level_score;
    }
}

inline double metric_level(TreeMetric metric, const GenealogyTree& tree, int alpha) {
    switch (metric) {
    case TreeMetric::SVS: return shah_level(tree, alpha);
    case TreeMetric::NM: return nelson_level(tree, alpha);
    case TreeMetric::IHI: return ihi_level(tree, alpha);
    case TreeMetric::HHID: return hhid_level(tree, alpha);
    case TreeMetric::GSID: return gsid_level(tree, alpha);
    }
    return 0.0;
}

/// Per-level, overall (where the metric defines one) and unit-scaled scores.
inline TreeMetricScore evaluate_tree(TreeMetric metric, const GenealogyTree& tree) {
    detail::require_levels(tree);
    TreeMetricScore score;
    score.metric = metric;
    for (const auto& d : tree.levels()) {
        const double v = metric_level(metric, tree, d.alpha);
        score.per_level[d.alpha] = v;
        score.scaled_per_level[d.alpha] = scale_to_unit(metric, v, d.weight, tree.concept_count());
    }
    switch (metric) {
    case TreeMetric::SVS: score.overall = shah_variety(tree); break;
    case TreeMetric::NM:
        if (tree.concept_count() >= 2) score.overall = nelson_variety(tree, true);
        break;
    case TreeMetric::IHI: score.overall = ihi_overall(tree); break;
    case TreeMetric::HHID:
    case TreeMetric::GSID: break;
    }
    return score;
}

}  // namespace variety
