#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "variety/concept_model.hpp"
#include "variety/csv.hpp"
#include "variety/error.hpp"

namespace variety {

inline constexpr std::string_view kDefaultSeparator = ". ";

struct LevelText {
    int concept_id = 0;
    AbstractionLevel level = AbstractionLevel::Part;
    std::string text;
};

/// Joins a concept's construct texts at one level in instance order,
/// skipping empty constructs.
inline LevelText concat_level_text(const Concept& c, AbstractionLevel level,
                                   std::string_view separator = kDefaultSeparator) {
    LevelText out{c.concept_id, level, {}};
    bool first = true;
    for (const auto& inst : c.instances) {
        const auto& text = inst.construct(level);
        if (text.empty()) continue;
        if (!first) out.text += separator;
        out.text += text;
        first = false;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Vectors and cosine distance
// ---------------------------------------------------------------------------

struct EmbeddingVector {
    std::vector<double> values;
    std::string provider_id;

    std::size_t dimension() const { return values.size(); }

    double norm() const {
        double s = 0.0;
        for (double v : values) s += v * v;
        return std::sqrt(s);
    }
};

/// 1 - cos(a, b), with negative similarity floored at 0 so the result stays in [0, 1].
inline double cosine_distance(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dimension() != b.dimension()) {
        throw Error(ErrorCode::ShapeMismatch, "embedding dimensions differ: " + std::to_string(a.dimension()) +
                                                  " vs " + std::to_string(b.dimension()));
    }
    const double na = a.norm();
    const double nb = b.norm();
    if (na == 0.0 || nb == 0.0) throw Error(ErrorCode::ZeroVector, "cannot take cosine of a zero vector");
    if (a.values == b.values) return 0.0;
    double dot = 0.0;
    for (std::size_t k = 0; k < a.values.size(); ++k) dot += a.values[k] * b.values[k];
    double sim = dot / (na * nb);
    sim = std::clamp(sim, 0.0, 1.0);
    return 1.0 - sim;
}

// ---------------------------------------------------------------------------
// Distance matrix
// ---------------------------------------------------------------------------

/// Dense symmetric N x N matrix of concept distances, one per level or the
/// weighted aggregate.
class DistanceMatrix {
public:
    DistanceMatrix() = default;

    DistanceMatrix(std::string label, std::size_t n) : label_(std::move(label)), n_(n), entries_(n * n, 0.0) {}

    DistanceMatrix(std::string label, const std::vector<std::vector<double>>& rows)
        : DistanceMatrix(std::move(label), rows.size()) {
        for (std::size_t i = 0; i < n_; ++i) {
            if (rows[i].size() != n_) {
                throw Error(ErrorCode::ShapeMismatch, "distance matrix row " + std::to_string(i) + " has " +
                                                          std::to_string(rows[i].size()) + " entries, expected " +
                                                          std::to_string(n_));
            }
            for (std::size_t j = 0; j < n_; ++j) at(i, j) = rows[i][j];
        }
    }

    const std::string& label() const { return label_; }
    std::size_t size() const { return n_; }

    double& at(std::size_t i, std::size_t j) { return entries_[i * n_ + j]; }
    double at(std::size_t i, std::size_t j) const { return entries_[i * n_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return at(i, j); }

    /// Sets d_ij and d_ji together.
    void set_pair(std::size_t i, std::size_t j, double d) {
        at(i, j) = d;
        at(j, i) = d;
    }

    std::vector<std::vector<double>> rows() const {
        std::vector<std::vector<double>> out(n_, std::vector<double>(n_));
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = 0; j < n_; ++j) out[i][j] = at(i, j);
        return out;
    }

    /// Symmetric, zero diagonal, every entry in [0, 1].
    bool satisfies_invariants() const {
        for (std::size_t i = 0; i < n_; ++i) {
            if (at(i, i) != 0.0) return false;
            for (std::size_t j = 0; j < n_; ++j) {
                const double d = at(i, j);
                if (!(d >= 0.0 && d <= 1.0)) return false;
                if (d != at(j, i)) return false;
            }
        }
        return true;
    }

    friend bool operator==(const DistanceMatrix&, const DistanceMatrix&) = default;

private:
    std::string label_;
    std::size_t n_ = 0;
    std::vector<double> entries_;
};

// ---------------------------------------------------------------------------
// Embedding providers
// ---------------------------------------------------------------------------

struct EmbeddingRequest {
    int concept_id = 0;
    AbstractionLevel level = AbstractionLevel::Part;
    std::string text;
};

/// Turns texts into vectors. Implementations must be deterministic for a
/// fixed configuration and safe to call from several threads at once.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;

    virtual std::string id() const = 0;

    /// One vector per request, in request order.
    virtual std::vector<EmbeddingVector> embed_batch(std::span<const EmbeddingRequest> requests) const = 0;
};

/// Offline bag-of-words encoder: lowercase, split on non-alphanumerics, hash
/// each token into a bucket, accumulate term frequency, L2-normalize.
class HashedBowProvider final : public EmbeddingProvider {
public:
    static constexpr std::size_t kDefaultDimension = 384;
    static constexpr std::uint64_t kDefaultSeed = 0x5eed5a99u;

    explicit HashedBowProvider(std::size_t dimension = kDefaultDimension, std::uint64_t seed = kDefaultSeed)
        : dimension_(dimension), seed_(seed) {
        if (dimension_ == 0) throw Error(ErrorCode::InvalidArgument, "embedding dimension must be positive");
    }

    std::string id() const override { return "hash-bow-" + std::to_string(dimension_); }

    std::size_t dimension() const { return dimension_; }

    static std::vector<std::string> tokenize(std::string_view text) {
        std::vector<std::string> tokens;
        std::string current;
        for (unsigned char ch : text) {
            // ASCII case folding; bytes >= 0x80 stay inside tokens
            const bool alnum = (ch >= '0' && ch <= '9') || (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z');
            if (alnum || ch >= 0x80) {
                current.push_back(static_cast<char>((ch >= 'A' && ch <= 'Z') ? ch - 'A' + 'a' : ch));
            } else if (!current.empty()) {
                tokens.push_back(std::move(current));
                current.clear();
            }
        }
        if (!current.empty()) tokens.push_back(std::move(current));
        return tokens;
    }

    std::size_t bucket(std::string_view token) const {
        // FNV-1a, seed folded into the offset basis
        std::uint64_t h = 0xcbf29ce484222325ull ^ (seed_ * 0x9e3779b97f4a7c15ull);
        for (unsigned char ch : token) {
            h ^= ch;
            h *= 0x100000001b3ull;
        }
        return static_cast<std::size_t>(h % dimension_);
    }

    EmbeddingVector embed(std::string_view text) const {
        EmbeddingVector v{std::vector<double>(dimension_, 0.0), id()};
        for (const auto& tok : tokenize(text)) v.values[bucket(tok)] += 1.0;
        const double n = v.norm();
        if (n > 0.0) {
            for (double& x : v.values) x /= n;
        }
        return v;
    }

    std::vector<EmbeddingVector> embed_batch(std::span<const EmbeddingRequest> requests) const override {
        std::vector<EmbeddingVector> out;
        out.reserve(requests.size());
        for (const auto& r : requests) out.push_back(embed(r.text));
        return out;
    }

private:
    std::size_t dimension_;
    std::uint64_t seed_;
};

/// Vectors loaded from a CSV with header `concept_id,level,v0,v1,...`,
/// keyed by (concept_id, level). `level` may be 1..7 or a level key.
class PrecomputedVectorsProvider final : public EmbeddingProvider {
public:
    PrecomputedVectorsProvider() = default;

    static PrecomputedVectorsProvider from_csv_text(std::string_view text, std::string source = "precomputed") {
        const auto rows = parse_csv(text);
        if (rows.empty()) throw Error(ErrorCode::ParseError, source + ": empty vectors file");
        const auto& header = rows.front();
        if (header.size() < 3 || header[0] != "concept_id" || header[1] != "level") {
            throw Error(ErrorCode::SchemaError, source + ": header must start with concept_id,level,v0");
        }
        for (std::size_t k = 2; k < header.size(); ++k) {
            if (header[k] != "v" + std::to_string(k - 2)) {
                throw Error(ErrorCode::SchemaError, source + ": expected column v" + std::to_string(k - 2) +
                                                        ", found '" + header[k] + "'");
            }
        }
        PrecomputedVectorsProvider p;
        p.source_ = std::move(source);
        const std::size_t dim = header.size() - 2;
        for (std::size_t r = 1; r < rows.size(); ++r) {
            const auto& row = rows[r];
            if (row.size() == 1 && row[0].empty()) continue;
            if (row.size() != header.size()) {
                throw Error(ErrorCode::ParseError, p.source_ + ": line " + std::to_string(r + 1) + " has " +
                                                       std::to_string(row.size()) + " fields, expected " +
                                                       std::to_string(header.size()));
            }
            const int cid = parse_int(row[0], r + 1, p.source_);
            AbstractionLevel level;
            if (!row[1].empty() && std::isdigit(static_cast<unsigned char>(row[1][0]))) {
                level = level_from_index(parse_int(row[1], r + 1, p.source_));
            } else {
                level = parse_level(row[1]);
            }
            std::vector<double> values(dim);
            for (std::size_t k = 0; k < dim; ++k) values[k] = parse_double(row[k + 2], r + 1, p.source_);
            p.vectors_[{cid, level_index(level)}] = std::move(values);
        }
        return p;
    }

    static PrecomputedVectorsProvider from_file(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw Error(ErrorCode::IoError, "cannot open vectors file '" + path + "'");
        std::ostringstream ss;
        ss << in.rdbuf();
        return from_csv_text(ss.str(), path);
    }

    std::string id() const override { return "precomputed:" + source_; }

    std::size_t size() const { return vectors_.size(); }

    std::vector<EmbeddingVector> embed_batch(std::span<const EmbeddingRequest> requests) const override {
        std::vector<EmbeddingVector> out;
        out.reserve(requests.size());
        for (const auto& r : requests) {
            auto it = vectors_.find({r.concept_id, level_index(r.level)});
            if (it == vectors_.end()) {
                throw Error(ErrorCode::MissingPrecomputedVector,
                            "no vector for concept " + std::to_string(r.concept_id) + " at level " +
                                std::string(level_key(r.level)));
            }
            out.push_back({it->second, id()});
        }
        return out;
    }

private:
    static int parse_int(const std::string& s, std::size_t line, const std::string& source) {
        try {
            std::size_t used = 0;
            const int v = std::stoi(s, &used);
            if (used == s.size()) return v;
        } catch (const std::exception&) {
        }
        throw Error(ErrorCode::ParseError, source + ": line " + std::to_string(line) + ": bad integer '" + s + "'");
    }

    static double parse_double(const std::string& s, std::size_t line, const std::string& source) {
        try {
            std::size_t used = 0;
            const double v = std::stod(s, &used);
            if (used == s.size()) return v;
        } catch (const std::exception&) {
        }
        throw Error(ErrorCode::ParseError, source + ": line " + std::to_string(line) + ": bad number '" + s + "'");
    }

    std::string source_ = "precomputed";
    std::map<std::pair<int, int>, std::vector<double>> vectors_;
};

// ---------------------------------------------------------------------------
// Matrix assembly
// ---------------------------------------------------------------------------

/// Distances from already-encoded level texts. Empty texts are never encoded:
/// empty vs empty is 0, empty vs non-empty is 1.
inline DistanceMatrix distances_from_vectors(std::string label, const std::vector<LevelText>& texts,
                                             const std::vector<EmbeddingVector>& vectors) {
    const std::size_t n = texts.size();
    DistanceMatrix m(std::move(label), n);
    std::vector<const EmbeddingVector*> by_concept(n, nullptr);
    std::size_t next = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!texts[i].text.empty()) by_concept[i] = &vectors.at(next++);
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const auto* a = by_concept[i];
            const auto* b = by_concept[j];
            double d;
            if (!a && !b) {
                d = 0.0;
            } else if (!a || !b) {
                d = 1.0;
            } else {
                d = cosine_distance(*a, *b);
            }
            m.set_pair(i, j, d);
        }
    }
    return m;
}

/// Level texts for every concept plus the batch of non-empty requests to encode.
inline std::pair<std::vector<LevelText>, std::vector<EmbeddingRequest>>
level_requests(const ConceptSpace& space, AbstractionLevel level, std::string_view separator = kDefaultSeparator) {
    std::vector<LevelText> texts;
    std::vector<EmbeddingRequest> requests;
    for (const auto& c : space.concepts) {
        texts.push_back(concat_level_text(c, level, separator));
        if (!texts.back().text.empty()) requests.push_back({c.concept_id, level, texts.back().text});
    }
    return {std::move(texts), std::move(requests)};
}

/// Pairwise cosine distances of the concepts' level texts. One batch call
/// to the provider per level.
inline DistanceMatrix build_level_matrix(const ConceptSpace& space, AbstractionLevel level,
                                         const EmbeddingProvider& provider,
                                         std::string_view separator = kDefaultSeparator) {
    if (space.size() < 2) {
        throw Error(ErrorCode::TooFewConcepts, "distance matrix needs N >= 2, got " + std::to_string(space.size()));
    }
    auto [texts, requests] = level_requests(space, level, separator);
    std::vector<EmbeddingVector> vectors;
    if (!requests.empty()) vectors = provider.embed_batch(requests);
    if (vectors.size() != requests.size()) {
        throw Error(ErrorCode::ProviderUnavailable, provider.id() + " returned " + std::to_string(vectors.size()) +
                                                        " vectors for " + std::to_string(requests.size()) + " texts");
    }
    return distances_from_vectors(std::string(level_key(level)), texts, vectors);
}

}  // namespace variety
