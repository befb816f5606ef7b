#include <cmath>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "support.hpp"
#include "variety/distance.hpp"
#include "variety/service_provider.hpp"

using namespace variety;

namespace {

Concept concept_with(int id, std::vector<std::string> action_texts) {
    Concept c{id, "c" + std::to_string(id), {}};
    int k = 1;
    for (auto& t : action_texts) {
        SapphireInstance inst;
        inst.instance_id = k++;
        inst.construct(AbstractionLevel::Action) = std::move(t);
        c.instances.push_back(std::move(inst));
    }
    return c;
}

ConceptSpace action_space(const std::vector<std::string>& texts) {
    ConceptSpace s;
    for (std::size_t i = 0; i < texts.size(); ++i) s.concepts.push_back(concept_with(static_cast<int>(i) + 1, {texts[i]}));
    return s;
}

std::string join(const std::vector<std::string>& tokens) {
    std::string out;
    for (const auto& t : tokens) out += (out.empty() ? "" : " ") + t;
    return out;
}

}  // namespace

TEST(ConcatLevelText, SingleInstance) {
    const auto space = fixture::cw_space();
    EXPECT_EQ(concat_level_text(space.concepts[0], AbstractionLevel::Action).text, "Boiling of Water");
}

TEST(ConcatLevelText, JoinsWithDefaultSeparator) {
    EXPECT_EQ(concat_level_text(concept_with(1, {"heating", "blowing"}), AbstractionLevel::Action).text,
              "heating. blowing");
    EXPECT_EQ(concat_level_text(concept_with(1, {"heating", "blowing"}), AbstractionLevel::Action, " | ").text,
              "heating | blowing");
}

TEST(ConcatLevelText, SkipsEmptyConstructs) {
    EXPECT_EQ(concat_level_text(concept_with(1, {"", "b", ""}), AbstractionLevel::Action).text, "b");
    EXPECT_EQ(concat_level_text(concept_with(1, {"", ""}), AbstractionLevel::Action).text, "");
}

TEST(CosineDistance, Examples) {
    const EmbeddingVector a{{1.0, 0.0}, "t"};
    const EmbeddingVector b{{1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0)}, "t"};
    const EmbeddingVector c{{0.0, 3.0}, "t"};
    EXPECT_EQ(cosine_distance(a, a), 0.0);
    EXPECT_EQ(cosine_distance(b, b), 0.0);
    EXPECT_NEAR(cosine_distance(a, c), 1.0, 1e-15);
    EXPECT_NEAR(cosine_distance(a, b), 1.0 - 1.0 / std::sqrt(2.0), 1e-12);
    EXPECT_NEAR(cosine_distance(a, b), 0.2929, 1e-4);
    EXPECT_EQ(cosine_distance(a, b), cosine_distance(b, a));
}

TEST(CosineDistance, NegativeSimilarityClampsToOne) {
    const EmbeddingVector a{{1.0, 0.0}, "t"};
    const EmbeddingVector b{{-1.0, 0.2}, "t"};
    EXPECT_EQ(cosine_distance(a, b), 1.0);
}

TEST(CosineDistance, Errors) {
    const EmbeddingVector a{{1.0, 0.0}, "t"};
    const EmbeddingVector z{{0.0, 0.0}, "t"};
    const EmbeddingVector three{{1.0, 0.0, 0.0}, "t"};
    try {
        cosine_distance(a, z);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ZeroVector);
    }
    try {
        cosine_distance(a, three);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ShapeMismatch);
    }
}

TEST(HashedBow, TokenizerFoldsCaseAndSplitsOnPunctuation) {
    EXPECT_EQ(HashedBowProvider::tokenize("Cold Water (low temperature), Hot!"),
              (std::vector<std::string>{"cold", "water", "low", "temperature", "hot"}));
    EXPECT_TRUE(HashedBowProvider::tokenize(" ,.; ").empty());
}

TEST(HashedBow, UnitNormAndDeterministic) {
    HashedBowProvider p;
    const auto v = p.embed("Conversion of solar energy to heat energy");
    EXPECT_EQ(v.dimension(), 384u);
    EXPECT_NEAR(v.norm(), 1.0, 1e-12);
    EXPECT_EQ(v.values, HashedBowProvider().embed("Conversion of solar energy to heat energy").values);
    EXPECT_EQ(p.id(), "hash-bow-384");
}

TEST(HashedBow, OrderInsensitive) {
    HashedBowProvider p;
    EXPECT_EQ(p.embed("heating. blowing").values, p.embed("blowing. heating").values);
}

TEST(HashedBow, MonotoneInSharedTokens) {
    HashedBowProvider p;
    // a pool of tokens with pairwise distinct buckets so overlaps are exact
    std::vector<std::string> pool;
    std::set<std::size_t> used;
    for (int k = 0; pool.size() < 40; ++k) {
        const std::string tok = "tok" + std::to_string(k);
        if (used.insert(p.bucket(tok)).second) pool.push_back(tok);
    }
    std::mt19937 rng(3);
    for (int trial = 0; trial < 300; ++trial) {
        std::shuffle(pool.begin(), pool.end(), rng);
        const std::size_t len = 3 + rng() % 6;
        const std::size_t share_y = 1 + rng() % len;
        const std::size_t share_z = rng() % share_y;
        std::vector<std::string> x(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(len));
        std::vector<std::string> y(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(share_y));
        std::vector<std::string> z(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(share_z));
        std::size_t fresh = len;
        while (y.size() < len) y.push_back(pool[fresh++]);
        while (z.size() < len) z.push_back(pool[fresh++]);
        const auto vx = p.embed(join(x));
        EXPECT_LT(cosine_distance(vx, p.embed(join(y))), cosine_distance(vx, p.embed(join(z))));
    }
}

TEST(PrecomputedVectors, LoadsByConceptAndLevel) {
    const auto p = PrecomputedVectorsProvider::from_csv_text(
        "concept_id,level,v0,v1\n1,7,1,0\n2,action,0,1\n1,part,0.5,0.5\n");
    EXPECT_EQ(p.size(), 3u);
    const std::vector<EmbeddingRequest> reqs = {{1, AbstractionLevel::Action, "x"}, {2, AbstractionLevel::Action, "y"}};
    const auto v = p.embed_batch(reqs);
    ASSERT_EQ(v.size(), 2u);
    EXPECT_EQ(v[0].values, (std::vector<double>{1, 0}));
    EXPECT_EQ(v[1].values, (std::vector<double>{0, 1}));
}

TEST(PrecomputedVectors, Errors) {
    const auto p = PrecomputedVectorsProvider::from_csv_text("concept_id,level,v0\n1,7,1\n");
    const std::vector<EmbeddingRequest> missing = {{2, AbstractionLevel::Action, "x"}};
    try {
        p.embed_batch(missing);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::MissingPrecomputedVector);
    }
    EXPECT_THROW(PrecomputedVectorsProvider::from_csv_text("id,level,v0\n"), Error);
    EXPECT_THROW(PrecomputedVectorsProvider::from_csv_text("concept_id,level,v0\n1,7,abc\n"), Error);
    EXPECT_THROW(PrecomputedVectorsProvider::from_csv_text("concept_id,level,v0\n1,9,1\n"), Error);
}

TEST(BuildLevelMatrix, IdenticalTextsGiveZeroMatrix) {
    const auto m = build_level_matrix(action_space({"same words", "same words", "same words"}), AbstractionLevel::Action,
                                      HashedBowProvider());
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(m(i, j), 0.0);
}

TEST(BuildLevelMatrix, WorkedExampleActions) {
    const auto m = build_level_matrix(fixture::cw_space(), AbstractionLevel::Action, HashedBowProvider());
    EXPECT_EQ(m.label(), "action");
    EXPECT_EQ(m(0, 1), 0.0);
    EXPECT_EQ(m(0, 2), 0.0);
    EXPECT_GT(m(0, 3), 0.0);
    EXPECT_TRUE(m.satisfies_invariants());
}

TEST(BuildLevelMatrix, TwoConceptStructure) {
    const auto m = build_level_matrix(action_space({"alpha beta", "beta gamma"}), AbstractionLevel::Action,
                                      HashedBowProvider());
    ASSERT_EQ(m.size(), 2u);
    EXPECT_EQ(m(0, 0), 0.0);
    EXPECT_EQ(m(1, 1), 0.0);
    EXPECT_EQ(m(0, 1), m(1, 0));
    EXPECT_GT(m(0, 1), 0.0);
}

TEST(BuildLevelMatrix, EmptyTextPolicy) {
    const auto m = build_level_matrix(action_space({"", "", "words"}), AbstractionLevel::Action, HashedBowProvider());
    EXPECT_EQ(m(0, 1), 0.0);
    EXPECT_EQ(m(0, 2), 1.0);
    EXPECT_EQ(m(1, 2), 1.0);
}

TEST(BuildLevelMatrix, ZeroVectorFromProviderIsAnError) {
    // punctuation-only text is non-empty but has no tokens
    try {
        build_level_matrix(action_space({"...", "words"}), AbstractionLevel::Action, HashedBowProvider());
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ZeroVector);
    }
}

TEST(BuildLevelMatrix, NeedsTwoConcepts) {
    try {
        build_level_matrix(action_space({"x"}), AbstractionLevel::Action, HashedBowProvider());
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::TooFewConcepts);
    }
}

TEST(BuildLevelMatrix, InvariantsAndDeterminismOnWorkedExample) {
    const auto space = fixture::cw_space();
    HashedBowProvider p;
    for (auto level : kAllLevels) {
        const auto a = build_level_matrix(space, level, p);
        const auto b = build_level_matrix(space, level, p);
        EXPECT_TRUE(a.satisfies_invariants());
        EXPECT_EQ(a, b);
    }
}

TEST(BuildLevelMatrix, PrecomputedProviderIsDeterministic) {
    const auto p = PrecomputedVectorsProvider::from_csv_text(
        "concept_id,level,v0,v1,v2\n1,action,1,0,0\n2,action,0.6,0.8,0\n3,action,0.2,0.1,0.9\n");
    const auto space = action_space({"a", "b", "c"});
    const auto m = build_level_matrix(space, AbstractionLevel::Action, p);
    EXPECT_NEAR(m(0, 1), 0.4, 1e-12);
    EXPECT_EQ(m, build_level_matrix(space, AbstractionLevel::Action, p));
    EXPECT_TRUE(m.satisfies_invariants());
}

TEST(ServiceProvider, RoundTripMatchesLocalEncoder) {
    fixture::HashEmbeddingServer server("secret");
    ServiceEmbeddingProvider remote(server.url(), "hash-model", "secret", 5);
    const auto space = fixture::cw_space();
    for (auto level : kAllLevels) {
        EXPECT_EQ(build_level_matrix(space, level, remote), build_level_matrix(space, level, HashedBowProvider()));
    }
    EXPECT_EQ(server.requests(), 7);
    EXPECT_EQ(server.last_model(), "hash-model");
    EXPECT_EQ(remote.id(), "service:hash-model");
}

TEST(ServiceProvider, FailuresAreProviderUnavailable) {
    fixture::HashEmbeddingServer server("secret");
    const auto space = fixture::cw_space();
    auto code_of = [&](const ServiceEmbeddingProvider& p) {
        try {
            build_level_matrix(space, AbstractionLevel::Action, p);
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::InvalidArgument;
    };
    EXPECT_EQ(code_of(ServiceEmbeddingProvider(server.url(), "m", "wrong", 5)), ErrorCode::ProviderUnavailable);
    const std::string dead = "http://127.0.0.1:" + std::to_string(fixture::closed_port()) + "/embed";
    EXPECT_EQ(code_of(ServiceEmbeddingProvider(dead, "m", "", 2)), ErrorCode::ProviderUnavailable);
}

TEST(ServiceProvider, EndpointParsing) {
    const auto e = parse_endpoint("http://localhost:8000/v1/embed");
    EXPECT_EQ(e.path, "/v1/embed");
    EXPECT_THROW(parse_endpoint("ftp://x/y"), Error);
    EXPECT_THROW(parse_endpoint("localhost:8000"), Error);
}
