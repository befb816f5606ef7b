#pragma once

#include <algorithm>
#include <array>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "variety/error.hpp"

namespace variety {

// ---------------------------------------------------------------------------
// SAPPhIRE abstraction levels
// ---------------------------------------------------------------------------

/// The seven SAPPhIRE constructs, indexed in data-frame column order.
enum class AbstractionLevel : int {
    Part = 1,
    Organ = 2,
    Effect = 3,
    Phenomenon = 4,
    Input = 5,
    StateChange = 6,
    Action = 7,
};

inline constexpr int kLevelCount = 7;

inline constexpr std::array<AbstractionLevel, kLevelCount> kAllLevels = {
    AbstractionLevel::Part,       AbstractionLevel::Organ,       AbstractionLevel::Effect,
    AbstractionLevel::Phenomenon, AbstractionLevel::Input,       AbstractionLevel::StateChange,
    AbstractionLevel::Action,
};

constexpr int level_index(AbstractionLevel level) { return static_cast<int>(level); }

/// Zero-based slot for array storage.
constexpr std::size_t level_slot(AbstractionLevel level) {
    return static_cast<std::size_t>(level_index(level) - 1);
}

inline AbstractionLevel level_from_index(int alpha) {
    if (alpha < 1 || alpha > kLevelCount) {
        throw Error(ErrorCode::UnknownLevel, "abstraction level index " + std::to_string(alpha) +
                                                 " outside 1..7");
    }
    return static_cast<AbstractionLevel>(alpha);
}

/// Display name, e.g. "StateChange".
constexpr std::string_view level_name(AbstractionLevel level) {
    constexpr std::array<std::string_view, kLevelCount> names = {
        "Part", "Organ", "Effect", "Phenomenon", "Input", "StateChange", "Action"};
    return names[level_slot(level)];
}

/// Column / JSON key, e.g. "state_change".
constexpr std::string_view level_key(AbstractionLevel level) {
    constexpr std::array<std::string_view, kLevelCount> keys = {
        "part", "organ", "effect", "phenomenon", "input", "state_change", "action"};
    return keys[level_slot(level)];
}

inline AbstractionLevel parse_level(std::string_view text) {
    for (auto level : kAllLevels) {
        if (text == level_key(level) || text == level_name(level)) return level;
    }
    throw Error(ErrorCode::UnknownLevel, "unknown abstraction level '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------
// Concept space
// ---------------------------------------------------------------------------

struct SapphireInstance {
    int instance_id = 1;
    std::array<std::string, kLevelCount> constructs{};

    const std::string& construct(AbstractionLevel level) const { return constructs[level_slot(level)]; }
    std::string& construct(AbstractionLevel level) { return constructs[level_slot(level)]; }

    friend bool operator==(const SapphireInstance&, const SapphireInstance&) = default;
};

struct Concept {
    int concept_id = 1;
    std::string name;
    std::vector<SapphireInstance> instances;

    friend bool operator==(const Concept&, const Concept&) = default;
};

struct ConceptSpace {
    std::string space_id;
    std::string problem;
    std::vector<Concept> concepts;

    std::size_t size() const { return concepts.size(); }

    friend bool operator==(const ConceptSpace&, const ConceptSpace&) = default;
};

enum class Severity { Warning, Error };

struct Violation {
    Severity severity = Severity::Error;
    std::string message;
    std::optional<int> concept_id;
    std::optional<int> instance_id;
};

struct ValidationReport {
    std::vector<Violation> violations;

    bool empty() const { return violations.empty(); }

    /// Warnings (empty constructs) do not make a space invalid.
    bool valid() const {
        return std::none_of(violations.begin(), violations.end(),
                            [](const Violation& v) { return v.severity == Severity::Error; });
    }
};

/// Reports structural problems. Never throws.
inline ValidationReport validate_space(const ConceptSpace& space) {
    ValidationReport report;
    auto add = [&](Severity sev, std::string msg, std::optional<int> cid = std::nullopt,
                   std::optional<int> iid = std::nullopt) {
        report.violations.push_back({sev, std::move(msg), cid, iid});
    };

    if (space.concepts.empty()) {
        add(Severity::Error, "empty space");
        return report;
    }

    std::set<int> seen_concepts;
    for (const auto& c : space.concepts) {
        if (!seen_concepts.insert(c.concept_id).second) {
            add(Severity::Error, "duplicate concept id", c.concept_id);
        }
        if (c.instances.empty()) {
            add(Severity::Error, "concept has no instances", c.concept_id);
            continue;
        }

        std::set<int> seen_instances;
        bool duplicate = false;
        for (const auto& inst : c.instances) {
            if (!seen_instances.insert(inst.instance_id).second) {
                add(Severity::Error, "duplicate instance id", c.concept_id, inst.instance_id);
                duplicate = true;
            }
            for (auto level : kAllLevels) {
                if (inst.construct(level).empty()) {
                    add(Severity::Warning,
                        "empty construct at level " + std::string(level_name(level)),
                        c.concept_id, inst.instance_id);
                }
            }
        }
        // instance ids must be exactly 1..k in stored order
        if (!duplicate) {
            for (std::size_t k = 0; k < c.instances.size(); ++k) {
                if (c.instances[k].instance_id != static_cast<int>(k) + 1) {
                    add(Severity::Error, "instance ids must run 1..k without gaps", c.concept_id,
                        c.instances[k].instance_id);
                    break;
                }
            }
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// Level weights
// ---------------------------------------------------------------------------

class LevelWeights {
public:
    LevelWeights() { weights_.fill(1.0); }

    explicit LevelWeights(const std::array<double, kLevelCount>& weights) : weights_(weights) {
        for (double w : weights_) {
            if (!(w >= 0.0)) {
                throw Error(ErrorCode::InvalidArgument, "level weights must be non-negative");
            }
        }
        if (sum() <= 0.0) throw Error(ErrorCode::ZeroWeightSum, "level weights sum to zero");
    }

    /// Parts=1, Organs=2, ..., Actions=7.
    static LevelWeights paper_default() { return LevelWeights({1, 2, 3, 4, 5, 6, 7}); }
    static LevelWeights uniform() { return LevelWeights({1, 1, 1, 1, 1, 1, 1}); }

    double operator[](AbstractionLevel level) const { return weights_[level_slot(level)]; }
    const std::array<double, kLevelCount>& values() const { return weights_; }

    double sum() const { return std::accumulate(weights_.begin(), weights_.end(), 0.0); }

    friend bool operator==(const LevelWeights&, const LevelWeights&) = default;

private:
    std::array<double, kLevelCount> weights_{};
};

// ---------------------------------------------------------------------------
// Genealogy trees
// ---------------------------------------------------------------------------

struct LevelDescriptor {
    int alpha = 1;
    double weight = 1.0;

    friend bool operator==(const LevelDescriptor&, const LevelDescriptor&) = default;
};

struct IdeaNode {
    int level = 1;
    std::string label;
    std::optional<std::string> parent;
    int count = 0;

    friend bool operator==(const IdeaNode&, const IdeaNode&) = default;
};

/// Nodes of the tree built for one design function.
struct FunctionTree {
    std::vector<IdeaNode> nodes;

    friend bool operator==(const FunctionTree&, const FunctionTree&) = default;
};

enum class LevelScheme {
    Shah,      // physical principle / working principle / embodiment / detail, w = 10,6,3,1
    Nelson,    // same four levels, w = 10,5,2,1
    Sapphire,  // seven SAPPhIRE constructs, w = alpha
};

inline std::vector<LevelDescriptor> scheme_levels(LevelScheme scheme) {
    switch (scheme) {
    case LevelScheme::Shah: return {{1, 10}, {2, 6}, {3, 3}, {4, 1}};
    case LevelScheme::Nelson: return {{1, 10}, {2, 5}, {3, 2}, {4, 1}};
    case LevelScheme::Sapphire: {
        std::vector<LevelDescriptor> out;
        for (int a = 1; a <= kLevelCount; ++a) out.push_back({a, static_cast<double>(a)});
        return out;
    }
    }
    return {};
}

/// One or more per-function genealogy trees over the same concept space and
/// the same ordered levels. Validated and normalized on construction.
class GenealogyTree {
public:
    GenealogyTree() = default;

    GenealogyTree(std::vector<LevelDescriptor> levels, std::vector<FunctionTree> functions,
                  std::vector<double> function_weights = {})
        : levels_(std::move(levels)), functions_(std::move(functions)) {
        if (functions_.empty()) functions_.emplace_back();
        if (function_weights.empty()) {
            function_weights.assign(functions_.size(), 1.0 / static_cast<double>(functions_.size()));
        }
        if (function_weights.size() != functions_.size()) {
            throw Error(ErrorCode::ShapeMismatch, "function_weights length " +
                                                      std::to_string(function_weights.size()) +
                                                      " != number of function trees " +
                                                      std::to_string(functions_.size()));
        }
        double total = 0.0;
        for (double f : function_weights) {
            if (!(f >= 0.0)) throw Error(ErrorCode::InvalidArgument, "function weights must be non-negative");
            total += f;
        }
        if (total <= 0.0) throw Error(ErrorCode::ZeroWeightSum, "function weights sum to zero");
        for (double& f : function_weights) f /= total;
        function_weights_ = std::move(function_weights);
        check();
    }

    /// Single-function convenience constructor.
    GenealogyTree(std::vector<LevelDescriptor> levels, std::vector<IdeaNode> nodes)
        : GenealogyTree(std::move(levels), std::vector<FunctionTree>{FunctionTree{std::move(nodes)}}) {}

    const std::vector<LevelDescriptor>& levels() const { return levels_; }
    const std::vector<FunctionTree>& functions() const { return functions_; }
    const std::vector<double>& function_weights() const { return function_weights_; }
    std::size_t function_count() const { return functions_.size(); }
    bool empty() const { return levels_.empty(); }

    /// N, the number of concepts (shared by all function trees).
    int concept_count() const { return concept_count_; }

    const LevelDescriptor& level(int alpha) const { return levels_[position(alpha)]; }

    bool has_level(int alpha) const {
        return std::any_of(levels_.begin(), levels_.end(),
                           [&](const LevelDescriptor& d) { return d.alpha == alpha; });
    }

    /// n_i^alpha for every node at the level, in node order.
    std::vector<int> counts(std::size_t function, int alpha) const {
        std::vector<int> out;
        for (const auto& node : functions_.at(function).nodes) {
            if (node.level == alpha) out.push_back(node.count);
        }
        return out;
    }

    /// beta_alpha: number of idea nodes at the level.
    int branches(std::size_t function, int alpha) const {
        position(alpha);
        return static_cast<int>(counts(function, alpha).size());
    }

    /// Differentiations at a level: beta - 1 at the first level, otherwise the
    /// sum over parent nodes of (children - 1), single-child parents adding 0.
    int differentiations(std::size_t function, int alpha) const {
        const std::size_t pos = position(alpha);
        if (pos == 0) return std::max(branches(function, alpha) - 1, 0);
        std::map<std::string, int> children;
        for (const auto& node : functions_.at(function).nodes) {
            if (node.level == alpha) ++children[*node.parent];
        }
        int total = 0;
        for (const auto& [parent, n] : children) total += std::max(n - 1, 0);
        return total;
    }

    friend bool operator==(const GenealogyTree&, const GenealogyTree&) = default;

private:
    std::size_t position(int alpha) const {
        for (std::size_t i = 0; i < levels_.size(); ++i) {
            if (levels_[i].alpha == alpha) return i;
        }
        throw Error(ErrorCode::UnknownLevel, "level " + std::to_string(alpha) + " not in tree");
    }

    void check() {
        std::set<int> alphas;
        for (const auto& d : levels_) {
            if (!alphas.insert(d.alpha).second) {
                throw Error(ErrorCode::InvalidArgument, "duplicate level " + std::to_string(d.alpha));
            }
            if (!(d.weight >= 0.0)) throw Error(ErrorCode::InvalidArgument, "level weight must be non-negative");
        }

        concept_count_ = -1;
        for (const auto& fn : functions_) {
            for (const auto& node : fn.nodes) {
                if (!alphas.contains(node.level)) {
                    throw Error(ErrorCode::UnknownLevel, "node '" + node.label + "' references level " +
                                                             std::to_string(node.level) + " not in tree");
                }
                if (node.count < 0) throw Error(ErrorCode::CountMismatch, "negative count on '" + node.label + "'");
            }
            for (std::size_t pos = 0; pos < levels_.size(); ++pos) {
                const int alpha = levels_[pos].alpha;
                std::map<std::string, int> here;
                int sum = 0;
                for (const auto& node : fn.nodes) {
                    if (node.level != alpha) continue;
                    if (!here.emplace(node.label, node.count).second) {
                        throw Error(ErrorCode::InvalidArgument, "duplicate label '" + node.label + "' at level " +
                                                                    std::to_string(alpha));
                    }
                    sum += node.count;
                }
                if (here.empty()) {
                    throw Error(ErrorCode::EmptyTree, "level " + std::to_string(alpha) + " has no nodes");
                }
                if (concept_count_ < 0) concept_count_ = sum;
                if (sum != concept_count_) {
                    throw Error(ErrorCode::CountMismatch, "counts at level " + std::to_string(alpha) + " sum to " +
                                                              std::to_string(sum) + ", expected N = " +
                                                              std::to_string(concept_count_));
                }
                if (pos == 0) continue;

                // every node hangs off an existing parent whose count equals its children's sum
                const int parent_alpha = levels_[pos - 1].alpha;
                std::map<std::string, int> parent_counts;
                for (const auto& node : fn.nodes) {
                    if (node.level == parent_alpha) parent_counts[node.label] = node.count;
                }
                std::map<std::string, int> child_sums;
                for (const auto& node : fn.nodes) {
                    if (node.level != alpha) continue;
                    if (!node.parent || !parent_counts.contains(*node.parent)) {
                        throw Error(ErrorCode::InconsistentHierarchy,
                                    "node '" + node.label + "' at level " + std::to_string(alpha) +
                                        " has no parent at level " + std::to_string(parent_alpha));
                    }
                    child_sums[*node.parent] += node.count;
                }
                for (const auto& [label, count] : parent_counts) {
                    const int children = child_sums.contains(label) ? child_sums[label] : 0;
                    if (children != count) {
                        throw Error(ErrorCode::CountMismatch, "node '" + label + "' has count " +
                                                                  std::to_string(count) + " but children sum to " +
                                                                  std::to_string(children));
                    }
                }
            }
        }
        if (concept_count_ < 0) concept_count_ = 0;
    }

    std::vector<LevelDescriptor> levels_;
    std::vector<FunctionTree> functions_;
    std::vector<double> function_weights_;
    int concept_count_ = 0;
};

/// Builds a single-function tree from per-concept label paths.
/// `assignments[c][l]` is the idea label concept c uses at `levels[l]`.
inline GenealogyTree tree_from_assignments(const std::vector<std::vector<std::string>>& assignments,
                                           const std::vector<LevelDescriptor>& levels) {
    std::vector<IdeaNode> nodes;
    for (std::size_t l = 0; l < levels.size(); ++l) {
        std::vector<std::string> order;
        std::map<std::string, int> counts;
        std::map<std::string, std::string> parents;
        for (std::size_t c = 0; c < assignments.size(); ++c) {
            const auto& path = assignments[c];
            if (path.size() != levels.size()) {
                throw Error(ErrorCode::InvalidArgument, "concept " + std::to_string(c + 1) + " has " +
                                                            std::to_string(path.size()) + " labels, expected " +
                                                            std::to_string(levels.size()));
            }
            const auto& label = path[l];
            if (!counts.contains(label)) order.push_back(label);
            ++counts[label];
            if (l > 0) {
                auto [it, inserted] = parents.emplace(label, path[l - 1]);
                if (!inserted && it->second != path[l - 1]) {
                    throw Error(ErrorCode::InconsistentHierarchy,
                                "label '" + label + "' appears under both '" + it->second + "' and '" +
                                    path[l - 1] + "'");
                }
            }
        }
        for (const auto& label : order) {
            IdeaNode node{levels[l].alpha, label, std::nullopt, counts[label]};
            if (l > 0) node.parent = parents[label];
            nodes.push_back(std::move(node));
        }
    }
    return GenealogyTree(levels, std::move(nodes));
}

/// One-level tree whose nodes carry the given counts (zero counts dropped).
inline GenealogyTree tree_from_level_counts(const std::vector<int>& counts, double weight = 1.0) {
    std::vector<IdeaNode> nodes;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        if (counts[i] > 0) nodes.push_back({1, "idea" + std::to_string(i + 1), std::nullopt, counts[i]});
    }
    return GenealogyTree({{1, weight}}, std::move(nodes));
}

}  // namespace variety
