#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "raqeval/textnorm.hpp"

using raqeval::NormMode;
using raqeval::normalize;
using raqeval::tokenize;

TEST(Normalize, DeletesPunctuationAndLowercases) {
    EXPECT_EQ(normalize("London, England", NormMode::Answer), "london england");
    EXPECT_EQ(normalize("", NormMode::Answer), "");
    EXPECT_EQ(normalize("  \t\n ", NormMode::Plain), "");
}

TEST(Normalize, ArticlesOnlyInAnswerMode) {
    EXPECT_EQ(normalize("The Ars Nova Theater", NormMode::Answer), "ars nova theater");
    EXPECT_EQ(normalize("The Ars Nova Theater", NormMode::Plain), "the ars nova theater");
    EXPECT_EQ(normalize("a an the An THE", NormMode::Answer), "");
    EXPECT_EQ(normalize("theater another", NormMode::Answer), "theater another");
}

TEST(Normalize, PunctuationIsDeletedNotReplaced) {
    EXPECT_EQ(normalize("I.O.U.S.A.", NormMode::Answer), "iousa");
    EXPECT_EQ(normalize("Nixon's", NormMode::Answer), "nixons");
    EXPECT_EQ(normalize("U.S. President", NormMode::Answer), "us president");
    // an article glued to punctuation becomes a bare article and is dropped
    EXPECT_EQ(normalize("t.h.e end", NormMode::Answer), "end");
}

TEST(Normalize, UnicodeFoldingAndCurlyQuotes) {
    EXPECT_EQ(normalize("CAFÉ", NormMode::Plain), "café");
    EXPECT_EQ(normalize("Straße", NormMode::Plain), "strasse");
    EXPECT_EQ(normalize("I don’t know", NormMode::Answer), normalize("I don't know", NormMode::Answer));
    EXPECT_EQ(normalize("“quoted”", NormMode::Plain), "quoted");
    EXPECT_EQ(normalize("36–54 km/h", NormMode::Plain), "3654 kmh");
    EXPECT_EQ(normalize("zero​width", NormMode::Plain), "zerowidth");
    EXPECT_EQ(normalize("non breaking", NormMode::Plain), "non breaking");
}

TEST(Normalize, NumbersKeptVerbatim) { EXPECT_EQ(normalize("In 1835.", NormMode::Answer), "in 1835"); }

TEST(Tokenize, CountsDuplicates) {
    const auto t = tokenize("yes, yes", NormMode::Answer);
    EXPECT_EQ(t.bag.total(), 2u);
    EXPECT_EQ(t.bag.count("yes"), 2u);
    EXPECT_EQ(t.sequence, (std::vector<std::string>{"yes", "yes"}));
}

TEST(Tokenize, AbbreviationsCollapse) {
    const auto t = tokenize("I.O.U.S.A.", NormMode::Answer);
    EXPECT_EQ(t.bag.total(), 1u);
    EXPECT_EQ(t.bag.count("iousa"), 1u);
    const auto u = tokenize("U.S. President", NormMode::Answer);
    EXPECT_EQ(u.bag.count("us"), 1u);
    EXPECT_EQ(u.bag.count("president"), 1u);
    EXPECT_EQ(u.bag.total(), 2u);
}

TEST(Tokenize, InvalidUtf8DoesNotThrow) {
    const std::string bad = "ab\xff\xfe cd";
    const auto once = normalize(bad, NormMode::Answer);
    EXPECT_EQ(normalize(once, NormMode::Answer), once);
}

TEST(TokenBag, OverlapIsSymmetricAndBounded) {
    const auto a = tokenize("x x y z", NormMode::Plain).bag;
    const auto b = tokenize("x y y", NormMode::Plain).bag;
    EXPECT_EQ(raqeval::overlap(a, b), 2u);
    EXPECT_EQ(raqeval::overlap(b, a), 2u);
    EXPECT_EQ(raqeval::overlap(a, raqeval::TokenBag{}), 0u);
}

TEST(NormalizeProperty, IdempotentAndArticleFree) {
    std::mt19937 rng(7);
    for (int i = 0; i < 2000; ++i) {
        const auto text = oracle::random_text(rng, 10);
        for (auto mode : {NormMode::Answer, NormMode::Plain}) {
            const auto once = normalize(text, mode);
            ASSERT_EQ(normalize(once, mode), once) << text;
            const auto t = tokenize(text, mode);
            std::size_t fields = 0;
            for (std::size_t p = 0; p < once.size();) {
                const auto q = once.find(' ', p);
                ++fields;
                if (q == std::string::npos) break;
                p = q + 1;
            }
            ASSERT_EQ(t.bag.total(), once.empty() ? 0u : fields) << text;
            ASSERT_EQ(t.bag.total(), t.sequence.size());
            ASSERT_EQ(once.find("  "), std::string::npos);
            if (mode == NormMode::Answer) {
                for (const auto& tok : t.sequence) ASSERT_TRUE(tok != "a" && tok != "an" && tok != "the") << text;
            }
        }
    }
}
