#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "variety/concept_model.hpp"
#include "variety/distance.hpp"
#include "variety/error.hpp"
#include "variety/tree_metrics.hpp"

namespace variety {

// ---------------------------------------------------------------------------
// Sensitivity curves over a two-node level
// ---------------------------------------------------------------------------

struct CurvePoint {
    std::string x;  // "a/b" split label or N
    int n = 0;
    std::vector<int> counts;
    std::map<TreeMetric, double> scaled;
};

inline CurvePoint evaluate_split(int a, int b) {
    const int n = a + b;
    CurvePoint p;
    p.x = std::to_string(a) + "/" + std::to_string(b);
    p.n = n;
    p.counts = {a, b};
    const auto tree = tree_from_level_counts(p.counts);
    for (auto metric : kAllTreeMetrics) {
        const auto score = evaluate_tree(metric, tree);
        p.scaled[metric] = score.scaled_per_level.at(1);
    }
    return p;
}

/// Splits from even down to all-in-one-node: N/2, ..., 1, 0.
inline std::vector<int> default_testcase1_splits(int n) {
    std::vector<int> out;
    for (int a = n / 2; a >= 0; --a) out.push_back(a);
    return out;
}

/// Fixed N, varying evenness over two nodes. Each entry of `splits` is the
/// count on the first node.
inline std::vector<CurvePoint> testcase1_curve(int n, const std::vector<int>& splits) {
    if (n < 2) throw Error(ErrorCode::TooFewConcepts, "test case I needs N >= 2");
    std::vector<CurvePoint> out;
    for (int a : splits) {
        if (a < 0 || a > n) throw Error(ErrorCode::InvalidArgument, "split " + std::to_string(a) + " outside 0..N");
        out.push_back(evaluate_split(a, n - a));
    }
    return out;
}

/// Even two-node split for each N.
inline std::vector<CurvePoint> testcase2_curve(const std::vector<int>& sizes) {
    std::vector<CurvePoint> out;
    for (int n : sizes) {
        if (n < 2 || n % 2 != 0) {
            throw Error(ErrorCode::InvalidArgument, "test case II needs even N >= 2, got " + std::to_string(n));
        }
        auto p = evaluate_split(n / 2, n / 2);
        p.x = std::to_string(n);
        out.push_back(std::move(p));
    }
    return out;
}

inline std::vector<int> even_sizes(int n_max) {
    std::vector<int> out;
    for (int n = 2; n <= n_max; n += 2) out.push_back(n);
    return out;
}

// ---------------------------------------------------------------------------
// Box plots of per-concept level scores
// ---------------------------------------------------------------------------

struct Outlier {
    int concept_id = 0;
    double value = 0.0;

    friend bool operator==(const Outlier&, const Outlier&) = default;
};

struct BoxPlotStats {
    AbstractionLevel level = AbstractionLevel::Part;
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double whisker_low = 0.0;
    double whisker_high = 0.0;
    double mean = 0.0;
    std::vector<Outlier> outliers;
};

/// Quantile by linear interpolation between order statistics at q(n-1).
inline double quantile_linear(std::vector<double> values, double q) {
    if (values.empty()) throw Error(ErrorCode::InvalidArgument, "quantile of empty sample");
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

/// Tukey box statistics: fences at 1.5 IQR beyond the quartiles, whiskers at
/// the most extreme values inside the fences, everything else an outlier.
inline BoxPlotStats box_stats(AbstractionLevel level, const std::vector<double>& values,
                              const std::vector<int>& concept_ids) {
    BoxPlotStats s;
    s.level = level;
    s.q1 = quantile_linear(values, 0.25);
    s.median = quantile_linear(values, 0.5);
    s.q3 = quantile_linear(values, 0.75);
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    const double iqr = s.q3 - s.q1;
    const double lo_fence = s.q1 - 1.5 * iqr;
    const double hi_fence = s.q3 + 1.5 * iqr;
    s.whisker_low = std::numeric_limits<double>::infinity();
    s.whisker_high = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double v = values[i];
        if (v < lo_fence || v > hi_fence) {
            s.outliers.push_back({concept_ids[i], v});
        } else {
            s.whisker_low = std::min(s.whisker_low, v);
            s.whisker_high = std::max(s.whisker_high, v);
        }
    }
    return s;
}

/// One box per SAPPhIRE level from V_i^alpha rows (one row per concept).
inline std::vector<BoxPlotStats> level_boxplot(const std::vector<std::array<double, kLevelCount>>& per_concept_per_level,
                                               const std::vector<int>& concept_ids) {
    if (per_concept_per_level.size() < 2) {
        throw Error(ErrorCode::TooFewConcepts, "box plots need N >= 2");
    }
    if (concept_ids.size() != per_concept_per_level.size()) {
        throw Error(ErrorCode::ShapeMismatch, "concept id list does not match score rows");
    }
    std::vector<BoxPlotStats> out;
    for (auto level : kAllLevels) {
        std::vector<double> values;
        for (const auto& row : per_concept_per_level) values.push_back(row[level_slot(level)]);
        out.push_back(box_stats(level, values, concept_ids));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Clustering on a distance matrix
// ---------------------------------------------------------------------------

enum class ClusterMethod {
    KMedoids,   // PAM directly on D
    MdsKMeans,  // classical MDS embedding, then Lloyd iterations
};

inline std::string_view cluster_method_name(ClusterMethod m) {
    return m == ClusterMethod::KMedoids ? "kmedoids" : "mds-kmeans";
}

inline ClusterMethod parse_cluster_method(std::string_view name) {
    if (name == "kmedoids") return ClusterMethod::KMedoids;
    if (name == "mds-kmeans") return ClusterMethod::MdsKMeans;
    throw Error(ErrorCode::InvalidArgument, "unknown cluster method '" + std::string(name) + "'");
}

namespace detail {

/// Relabels so cluster ids appear in order of their lowest-index member.
inline std::vector<int> canonical_labels(const std::vector<int>& raw) {
    std::map<int, int> remap;
    std::vector<int> out;
    out.reserve(raw.size());
    for (int r : raw) {
        auto [it, inserted] = remap.emplace(r, static_cast<int>(remap.size()));
        out.push_back(it->second);
    }
    return out;
}

/// Farthest-first seeding from index 0; ties go to the lowest index.
template <typename Dist>
std::vector<std::size_t> farthest_first(std::size_t n, std::size_t k, Dist&& dist) {
    std::vector<std::size_t> seeds{0};
    std::vector<double> nearest(n);
    for (std::size_t i = 0; i < n; ++i) nearest[i] = dist(i, 0);
    std::vector<bool> chosen(n, false);
    chosen[0] = true;
    while (seeds.size() < k) {
        std::size_t best = n;
        for (std::size_t i = 0; i < n; ++i) {
            if (chosen[i]) continue;
            if (best == n || nearest[i] > nearest[best]) best = i;
        }
        seeds.push_back(best);
        chosen[best] = true;
        for (std::size_t i = 0; i < n; ++i) nearest[i] = std::min(nearest[i], dist(i, best));
    }
    return seeds;
}

inline std::vector<int> assign_to_medoids(const DistanceMatrix& d, const std::vector<std::size_t>& medoids) {
    std::vector<int> labels(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        auto self = std::find(medoids.begin(), medoids.end(), i);
        if (self != medoids.end()) {
            labels[i] = static_cast<int>(self - medoids.begin());
            continue;
        }
        std::size_t best = 0;
        for (std::size_t m = 1; m < medoids.size(); ++m) {
            const double dm = d(i, medoids[m]);
            const double db = d(i, medoids[best]);
            if (dm < db || (dm == db && medoids[m] < medoids[best])) best = m;
        }
        labels[i] = static_cast<int>(best);
    }
    return labels;
}

inline double medoid_cost(const DistanceMatrix& d, const std::vector<std::size_t>& medoids) {
    double cost = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (auto m : medoids) best = std::min(best, d(i, m));
        cost += best;
    }
    return cost;
}

inline std::vector<int> kmedoids(const DistanceMatrix& d, std::size_t k) {
    const std::size_t n = d.size();
    auto medoids = farthest_first(n, k, [&](std::size_t i, std::size_t j) { return d(i, j); });
    double cost = medoid_cost(d, medoids);
    for (int iter = 0; iter < 100; ++iter) {
        double best_cost = cost;
        std::size_t best_pos = k;
        std::size_t best_candidate = n;
        for (std::size_t pos = 0; pos < k; ++pos) {
            for (std::size_t o = 0; o < n; ++o) {
                if (std::find(medoids.begin(), medoids.end(), o) != medoids.end()) continue;
                auto trial = medoids;
                trial[pos] = o;
                const double c = medoid_cost(d, trial);
                if (c < best_cost - 1e-12) {
                    best_cost = c;
                    best_pos = pos;
                    best_candidate = o;
                }
            }
        }
        if (best_pos == k) break;
        medoids[best_pos] = best_candidate;
        cost = best_cost;
    }
    return assign_to_medoids(d, medoids);
}

/// Classical (Torgerson) MDS: coordinates whose Euclidean distances best
/// reproduce D. Dimensions with non-positive eigenvalues are dropped.
inline Eigen::MatrixXd classical_mds(const DistanceMatrix& d) {
    const auto n = static_cast<Eigen::Index>(d.size());
    Eigen::MatrixXd sq(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) sq(i, j) = d(i, j) * d(i, j);
    const Eigen::MatrixXd centering =
        Eigen::MatrixXd::Identity(n, n) - Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));
    const Eigen::MatrixXd b = -0.5 * centering * sq * centering;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(b);
    const auto& evals = solver.eigenvalues();
    const auto& evecs = solver.eigenvectors();
    const double top = evals.maxCoeff();
    std::vector<Eigen::Index> keep;
    for (Eigen::Index c = n - 1; c >= 0; --c) {
        if (evals(c) > 1e-12 * std::max(top, 1.0)) keep.push_back(c);
    }
    Eigen::MatrixXd coords = Eigen::MatrixXd::Zero(n, std::max<Eigen::Index>(1, static_cast<Eigen::Index>(keep.size())));
    for (std::size_t c = 0; c < keep.size(); ++c) {
        coords.col(static_cast<Eigen::Index>(c)) = evecs.col(keep[c]) * std::sqrt(evals(keep[c]));
    }
    return coords;
}

inline std::vector<int> mds_kmeans(const DistanceMatrix& d, std::size_t k) {
    const Eigen::MatrixXd x = classical_mds(d);
    const auto n = static_cast<std::size_t>(x.rows());
    auto seeds = farthest_first(n, k, [&](std::size_t i, std::size_t j) {
        return (x.row(static_cast<Eigen::Index>(i)) - x.row(static_cast<Eigen::Index>(j))).norm();
    });
    Eigen::MatrixXd centroids(static_cast<Eigen::Index>(k), x.cols());
    for (std::size_t c = 0; c < k; ++c) centroids.row(static_cast<Eigen::Index>(c)) = x.row(static_cast<Eigen::Index>(seeds[c]));

    std::vector<int> labels(n, -1);
    for (int iter = 0; iter < 300; ++iter) {
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            int best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < k; ++c) {
                const double dist = (x.row(static_cast<Eigen::Index>(i)) - centroids.row(static_cast<Eigen::Index>(c))).squaredNorm();
                if (dist < best_d) {
                    best_d = dist;
                    best = static_cast<int>(c);
                }
            }
            if (labels[i] != best) {
                labels[i] = best;
                changed = true;
            }
        }
        if (!changed) break;
        for (std::size_t c = 0; c < k; ++c) {
            Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(x.cols());
            int members = 0;
            for (std::size_t i = 0; i < n; ++i) {
                if (labels[i] == static_cast<int>(c)) {
                    sum += x.row(static_cast<Eigen::Index>(i));
                    ++members;
                }
            }
            // an emptied cluster keeps its previous centroid
            if (members > 0) centroids.row(static_cast<Eigen::Index>(c)) = sum / members;
        }
    }
    return labels;
}

}  // namespace detail

/// Partitions concepts into k groups by pairwise distance. Deterministic:
/// seeding is farthest-first from concept 0, labels are numbered in order of
/// each cluster's lowest-index member.
inline std::vector<int> cluster(const DistanceMatrix& d, int k, ClusterMethod method = ClusterMethod::KMedoids) {
    if (k < 1 || static_cast<std::size_t>(k) > d.size()) {
        throw Error(ErrorCode::BadK, "k = " + std::to_string(k) + " outside 1.." + std::to_string(d.size()));
    }
    const auto kk = static_cast<std::size_t>(k);
    auto raw = method == ClusterMethod::KMedoids ? detail::kmedoids(d, kk) : detail::mds_kmeans(d, kk);
    return detail::canonical_labels(raw);
}

// ---------------------------------------------------------------------------
// Average-linkage dendrogram
// ---------------------------------------------------------------------------

/// Binary merge tree. Leaves are concept indices 0..N-1; the m-th merge
/// creates node N + m.
struct Dendrogram {
    struct Merge {
        int left = 0;
        int right = 0;
        double height = 0.0;
        int size = 0;

        friend bool operator==(const Merge&, const Merge&) = default;
    };

    int leaf_count = 0;
    std::vector<Merge> merges;
    std::vector<int> leaf_order;

    friend bool operator==(const Dendrogram&, const Dendrogram&) = default;
};

/// Leaves of the tree in left-to-right order.
inline std::vector<int> dendrogram_leaf_order(int leaf_count, const std::vector<Dendrogram::Merge>& merges) {
    std::vector<int> order;
    if (merges.empty()) {
        for (int i = 0; i < leaf_count; ++i) order.push_back(i);
        return order;
    }
    std::vector<int> stack{leaf_count + static_cast<int>(merges.size()) - 1};
    while (!stack.empty()) {
        const int node = stack.back();
        stack.pop_back();
        if (node < leaf_count) {
            order.push_back(node);
        } else {
            const auto& m = merges[static_cast<std::size_t>(node - leaf_count)];
            stack.push_back(m.right);
            stack.push_back(m.left);
        }
    }
    return order;
}

/// UPGMA agglomerative clustering. Ties go to the pair whose lowest member
/// indices are lexicographically smallest.
inline Dendrogram dendrogram(const DistanceMatrix& d) {
    const std::size_t n = d.size();
    if (n < 2) throw Error(ErrorCode::TooFewConcepts, "dendrogram needs N >= 2");

    struct Cluster {
        int node;
        int min_leaf;
        int size;
    };
    std::vector<Cluster> active;
    for (std::size_t i = 0; i < n; ++i) active.push_back({static_cast<int>(i), static_cast<int>(i), 1});
    // between-cluster average distances, indexed by position in `active`
    std::vector<std::vector<double>> link = d.rows();

    Dendrogram out;
    out.leaf_count = static_cast<int>(n);
    int next_node = static_cast<int>(n);
    while (active.size() > 1) {
        // `active` stays sorted by min_leaf, so scanning a < b in order gives the tie rule
        std::size_t ba = 0;
        std::size_t bb = 1;
        for (std::size_t a = 0; a < active.size(); ++a) {
            for (std::size_t b = a + 1; b < active.size(); ++b) {
                if (link[a][b] < link[ba][bb]) {
                    ba = a;
                    bb = b;
                }
            }
        }
        const auto& ca = active[ba];
        const auto& cb = active[bb];
        out.merges.push_back({ca.node, cb.node, link[ba][bb], ca.size + cb.size});

        const double wa = ca.size;
        const double wb = cb.size;
        Cluster merged{next_node++, std::min(ca.min_leaf, cb.min_leaf), ca.size + cb.size};
        std::vector<double> merged_link(active.size());
        for (std::size_t c = 0; c < active.size(); ++c) {
            merged_link[c] = (wa * link[ba][c] + wb * link[bb][c]) / (wa + wb);
        }

        // replace a with the merged cluster, drop b; a < b so min_leaf order holds
        active[ba] = merged;
        for (std::size_t c = 0; c < active.size(); ++c) {
            if (c == ba) continue;
            link[ba][c] = merged_link[c];
            link[c][ba] = merged_link[c];
        }
        link[ba][ba] = 0.0;
        active.erase(active.begin() + static_cast<std::ptrdiff_t>(bb));
        link.erase(link.begin() + static_cast<std::ptrdiff_t>(bb));
        for (auto& row : link) row.erase(row.begin() + static_cast<std::ptrdiff_t>(bb));
    }
    out.leaf_order = dendrogram_leaf_order(out.leaf_count, out.merges);
    return out;
}

}  // namespace variety
