#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "medcomm/affect.hpp"
#include "medcomm/detail/strings.hpp"
#include "medcomm/remote.hpp"
#include "mock_service.hpp"
#include "test_util.hpp"

using namespace medcomm;
using namespace medcomm::affect;

namespace {

corpus::Corpus fixture() {
    return corpus::attach_all(corpus::load_corpus(testutil::data("fixture/corpus.jsonl"), corpus::Format::Jsonl),
                              corpus::load_responses(testutil::data("fixture/responses.jsonl")));
}

class ConstantClassifier final : public ClassifierProvider {
public:
    explicit ConstantClassifier(std::size_t emotion_len = kEmotionCount) : len_(emotion_len) {}
    std::string name() const override { return "constant"; }
    std::vector<Sentiment> sentiment(std::span<const std::string> texts) const override {
        return std::vector<Sentiment>(texts.size(), Sentiment::Neutral);
    }
    std::vector<std::vector<double>> emotions(std::span<const std::string> texts) const override {
        std::vector<double> row(len_, 0.0);
        if (len_ > 5) row[5] = 0.9;
        return std::vector<std::vector<double>>(texts.size(), row);
    }

private:
    std::size_t len_;
};

std::vector<double> one_hot(std::size_t i) {
    std::vector<double> v(kEmotionCount, 0.0);
    v[i] = 1.0;
    return v;
}

}  // namespace

TEST(Sentiment, LabelsRoundTrip) {
    for (auto s : kSentiments) EXPECT_EQ(parse_sentiment(to_string(s)), s);
    EXPECT_EQ(parse_sentiment("very_negative"), Sentiment::VeryNegative);
    EXPECT_EQ(parse_sentiment("VeryPositive"), Sentiment::VeryPositive);
    EXPECT_FALSE(parse_sentiment("meh").has_value());
}

TEST(Emotions, LabelSetAndDominance) {
    EXPECT_EQ(kEmotionLabels.size(), 28u);
    EXPECT_EQ(kEmotionLabels.back(), "neutral");
    EXPECT_TRUE(std::is_sorted(kEmotionLabels.begin(), kEmotionLabels.end() - 1));
    auto caring = one_hot(*emotion_index("caring"));
    EXPECT_EQ(dominant_emotion(EmotionDistribution(caring)), "caring");
    std::vector<double> uniform(kEmotionCount, 0.3);
    EXPECT_EQ(dominant_emotion(EmotionDistribution(uniform)), kEmotionLabels.front());
    std::vector<double> short_row(27, 0.1), bad(kEmotionCount, 0.1);
    bad[3] = 1.5;
    EXPECT_THROW(EmotionDistribution{short_row}, ProtocolError);
    EXPECT_THROW(EmotionDistribution{bad}, ProtocolError);
}

TEST(Emotions, ArgmaxEquivarianceProperty) {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<double> v(kEmotionCount);
        for (auto& x : v) x = std::ldexp(rng() >> 11, -53);
        std::vector<std::size_t> perm(kEmotionCount);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        std::vector<double> w(kEmotionCount);
        for (std::size_t i = 0; i < kEmotionCount; ++i) w[perm[i]] = v[i];
        ASSERT_EQ(dominant_index(EmotionDistribution(w)), perm[dominant_index(EmotionDistribution(v))]);
    }
}

TEST(Profile, FixtureMatchesGoldens) {
    FileLabelStore store(testutil::data("fixture/labels.jsonl"));
    auto c = fixture();
    auto profiles = profile_corpus(c, store, c.systems());
    EXPECT_EQ(profiles.size(), 48u);
    auto golden = testutil::load_json("fixture/affect_golden.json");
    for (const auto& [system, counts] : golden["sentiment_counts"].items()) {
        auto shares = sentiment_share_table(profiles, corpus::SystemId::parse(system));
        for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(shares.counts[i], counts[i].get<std::size_t>()) << system;
    }
    std::map<std::string, std::vector<std::string>> dominant;
    for (const auto& p : profiles) dominant[p.system.str()].push_back(p.dominant);
    for (const auto& [system, labels] : golden["dominant"].items()) {
        EXPECT_EQ(dominant.at(system), labels.get<std::vector<std::string>>()) << system;
    }
}

TEST(Profile, DeterministicAcrossRunsAndThreads) {
    FileLabelStore store(testutil::data("fixture/labels.jsonl"));
    auto c = fixture();
    auto a = profile_corpus(c, store, c.systems());
    for (std::size_t threads : {1u, 3u, 8u}) {
        auto b = profile_corpus(c, store, c.systems(), {false, threads, 5});
        ASSERT_EQ(a.size(), b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            ASSERT_EQ(a[i].record_id, b[i].record_id);
            ASSERT_EQ(a[i].sentiment, b[i].sentiment);
            ASSERT_TRUE(std::equal(a[i].emotions.probs().begin(), a[i].emotions.probs().end(),
                                   b[i].emotions.probs().begin()));
        }
    }
}

TEST(Profile, ConstantProviderPassesThrough) {
    auto c = fixture();
    ConstantClassifier constant;
    for (const auto& p : profile_corpus(c, constant, c.systems())) {
        EXPECT_EQ(p.sentiment, Sentiment::Neutral);
        EXPECT_EQ(p.dominant, "caring");
    }
}

TEST(Profile, ShortEmotionRowIsProtocolError) {
    auto c = fixture();
    ConstantClassifier bad(27);
    try {
        profile_corpus(c, bad, c.systems());
        FAIL();
    } catch (const ProtocolError& e) {
        std::string msg = e.what();
        EXPECT_NE(msg.find("classifier batch 0"), std::string::npos) << msg;
        EXPECT_NE(msg.find("item 0"), std::string::npos) << msg;
        EXPECT_NE(msg.find("27 entries"), std::string::npos) << msg;
    }
}

TEST(LabelStore, ErrorsAndMissingEntries) {
    EXPECT_THROW(FileLabelStore::from_jsonl("{\"sha256\":\"a\",\"sentiment\":\"Happy\",\"emotions\":[]}"), ProtocolError);
    EXPECT_THROW(FileLabelStore::from_jsonl("{\"sha256\":\"a\"}"), ProtocolError);
    EXPECT_THROW(FileLabelStore("/nonexistent/labels.jsonl"), ProviderError);
    FileLabelStore store(testutil::data("fixture/labels.jsonl"));
    std::vector<std::string> texts = {"unknown text"};
    EXPECT_THROW(store.sentiment(texts), ProviderError);
}

TEST(Shares, PublishedShareRow) {
    auto s = shares_from_counts({19, 7, 25, 0, 0});
    EXPECT_EQ(s.total, 51u);
    std::vector<std::string> printed;
    for (double p : s.percent) printed.push_back(medcomm::detail::fmt2(p));
    EXPECT_EQ(printed, (std::vector<std::string>{"37.25", "13.73", "49.02", "0.00", "0.00"}));
    EXPECT_THROW(shares_from_counts({0, 0, 0, 0, 0}), DataError);
}

TEST(Shares, RoundedSumProperty) {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 2000; ++trial) {
        std::array<std::size_t, 5> counts{};
        for (auto& c : counts) c = rng() % 60;
        counts[rng() % 5] += 1;
        auto s = shares_from_counts(counts);
        double sum = 0.0;
        for (double p : s.percent) sum += medcomm::detail::round2(p);
        ASSERT_NEAR(sum, 100.0, 0.02 + 1e-9);
    }
}

TEST(TopEmotions, RankingAndTies) {
    std::vector<AffectProfile> profiles;
    auto sys = corpus::SystemId::parse("M_Base");
    auto add = [&](const char* emotion) {
        AffectProfile p;
        p.system = sys;
        p.dominant = emotion;
        profiles.push_back(p);
    };
    for (const char* e : {"fear", "fear", "caring", "neutral", "caring", "anger", "joy", "love", "fear"}) add(e);
    auto top = top_dominant_emotions(profiles, sys, 4);
    ASSERT_EQ(top.size(), 4u);
    EXPECT_EQ(top[0].emotion, "fear");
    EXPECT_EQ(top[0].count, 3u);
    EXPECT_NEAR(top[0].percent, 100.0 / 3.0, 1e-12);
    EXPECT_EQ(top[1].emotion, "caring");
    EXPECT_EQ(top[2].emotion, "anger");
    EXPECT_EQ(top[3].emotion, "joy");
    EXPECT_THROW(top_dominant_emotions(profiles, corpus::SystemId::parse("X_Base")), DataError);
}

TEST(Remote, ClassifierParityAndLabelRemap) {
    FileLabelStore store(testutil::data("fixture/labels.jsonl"));
    auto c = fixture();
    auto want = profile_corpus(c, store, c.systems());
    for (bool reverse : {false, true}) {
        testutil::MockService::Options opt;
        opt.reverse_emotion_labels = reverse;
        testutil::MockService service(opt);
        remote::RemoteClassifier remote(service.url());
        auto got = profile_corpus(c, remote, c.systems(), {false, 4, 10});
        ASSERT_EQ(got.size(), want.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
            ASSERT_EQ(got[i].sentiment, want[i].sentiment);
            ASSERT_EQ(got[i].dominant, want[i].dominant);
            ASSERT_TRUE(std::equal(got[i].emotions.probs().begin(), got[i].emotions.probs().end(),
                                   want[i].emotions.probs().begin()));
        }
    }
}

TEST(Remote, WrongEmotionLengthIsProtocolError) {
    testutil::MockService::Options opt;
    opt.emotion_length = 27;
    testutil::MockService service(opt);
    remote::RemoteClassifier remote(service.url());
    auto c = fixture();
    EXPECT_THROW(profile_corpus(c, remote, c.systems()), ProtocolError);
}
