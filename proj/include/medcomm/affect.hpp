#pragma once

// Affective profile of an answer: a five-class sentiment label plus a
// 28-label emotion distribution, and per-system aggregate tables built from
// them (sentiment shares, most frequent dominant emotions).

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "medcomm/corpus.hpp"
#include "medcomm/detail/hash.hpp"
#include "medcomm/detail/parallel.hpp"
#include "medcomm/detail/strings.hpp"
#include "medcomm/error.hpp"

namespace medcomm::affect {

enum class Sentiment { VeryNegative, Negative, Neutral, Positive, VeryPositive };

inline constexpr std::array<Sentiment, 5> kSentiments = {Sentiment::VeryNegative, Sentiment::Negative,
                                                         Sentiment::Neutral, Sentiment::Positive,
                                                         Sentiment::VeryPositive};

inline std::string_view to_string(Sentiment s) {
    switch (s) {
        case Sentiment::VeryNegative: return "Very Negative";
        case Sentiment::Negative: return "Negative";
        case Sentiment::Neutral: return "Neutral";
        case Sentiment::Positive: return "Positive";
        case Sentiment::VeryPositive: return "Very Positive";
    }
    return "?";
}

/// Accepts "Very Negative", "very_negative", "VeryNegative", ...
inline std::optional<Sentiment> parse_sentiment(std::string_view s) {
    auto key = detail::fold_label(s);
    for (auto v : kSentiments) {
        if (key == detail::fold_label(to_string(v))) return v;
    }
    return std::nullopt;
}

inline std::size_t index_of(Sentiment s) { return static_cast<std::size_t>(s); }

inline constexpr std::size_t kEmotionCount = 28;

/// Fixed emotion label order; also the tie-break order for dominance.
inline constexpr std::array<std::string_view, kEmotionCount> kEmotionLabels = {
    "admiration", "amusement",   "anger",       "annoyance",  "approval", "caring",
    "confusion",  "curiosity",   "desire",      "disappointment", "disapproval", "disgust",
    "embarrassment", "excitement", "fear",      "gratitude",  "grief",    "joy",
    "love",       "nervousness", "optimism",    "pride",      "realization", "relief",
    "remorse",    "sadness",     "surprise",    "neutral",
};

inline std::optional<std::size_t> emotion_index(std::string_view label) {
    auto key = detail::to_lower(label);
    for (std::size_t i = 0; i < kEmotionCount; ++i) {
        if (kEmotionLabels[i] == key) return i;
    }
    return std::nullopt;
}

/// Per-label probabilities. Need not sum to 1 (multi-label classifiers).
class EmotionDistribution {
public:
    EmotionDistribution() { probs_.fill(0.0); }

    explicit EmotionDistribution(std::span<const double> probs) {
        if (probs.size() != kEmotionCount) {
            throw ProtocolError("emotion distribution has " + std::to_string(probs.size()) + " entries, expected " +
                                std::to_string(kEmotionCount));
        }
        for (std::size_t i = 0; i < kEmotionCount; ++i) {
            if (!(probs[i] >= 0.0 && probs[i] <= 1.0)) {
                throw ProtocolError("emotion probability for \"" + std::string(kEmotionLabels[i]) +
                                    "\" outside [0,1]");
            }
            probs_[i] = probs[i];
        }
    }

    std::span<const double, kEmotionCount> probs() const { return probs_; }
    double operator[](std::size_t i) const { return probs_[i]; }

private:
    std::array<double, kEmotionCount> probs_;
};

/// Index of the maximal probability; ties go to the lowest index.
inline std::size_t dominant_index(const EmotionDistribution& dist) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < kEmotionCount; ++i) {
        if (dist[i] > dist[best]) best = i;
    }
    return best;
}

inline std::string_view dominant_emotion(const EmotionDistribution& dist) { return kEmotionLabels[dominant_index(dist)]; }

struct AffectProfile {
    std::string record_id;
    corpus::SystemId system;
    Sentiment sentiment = Sentiment::Neutral;
    EmotionDistribution emotions;
    std::string dominant;
};

/// Sentiment and emotion classifiers behind one interface. Both calls must
/// preserve order and be deterministic within a session; concurrent calls
/// must be safe. emotions() returns raw rows, validated by the caller.
class ClassifierProvider {
public:
    virtual ~ClassifierProvider() = default;
    virtual std::string name() const = 0;
    virtual std::vector<Sentiment> sentiment(std::span<const std::string> texts) const = 0;
    virtual std::vector<std::vector<double>> emotions(std::span<const std::string> texts) const = 0;
};

/// Label store JSONL: {"sha256": hex, "sentiment": str, "emotions": [28 floats]}.
class FileLabelStore final : public ClassifierProvider {
public:
    explicit FileLabelStore(const std::filesystem::path& path) : name_("file:" + path.filename().string()) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw ProviderError("cannot open label store " + path.string());
        std::ostringstream ss;
        ss << in.rdbuf();
        load(ss.str(), path.string());
    }

    static FileLabelStore from_jsonl(std::string_view content, std::string name = "memory") {
        FileLabelStore s;
        s.name_ = "file:" + name;
        s.load(content, name);
        return s;
    }

    std::string name() const override { return name_; }
    std::size_t size() const { return entries_.size(); }

    std::vector<Sentiment> sentiment(std::span<const std::string> texts) const override {
        std::vector<Sentiment> out;
        out.reserve(texts.size());
        for (const auto& t : texts) out.push_back(lookup(t).sentiment);
        return out;
    }

    std::vector<std::vector<double>> emotions(std::span<const std::string> texts) const override {
        std::vector<std::vector<double>> out;
        out.reserve(texts.size());
        for (const auto& t : texts) out.push_back(lookup(t).emotions);
        return out;
    }

private:
    struct Entry {
        Sentiment sentiment;
        std::vector<double> emotions;
    };

    FileLabelStore() = default;

    const Entry& lookup(const std::string& text) const {
        auto key = detail::content_hash(text);
        auto it = entries_.find(key);
        if (it == entries_.end()) throw ProviderError("label store has no entry for sha256 " + key);
        return it->second;
    }

    void load(std::string_view content, const std::string& origin) {
        content = detail::strip_bom(content);
        std::size_t line = 0, start = 0;
        while (start < content.size()) {
            auto end = content.find('\n', start);
            if (end == std::string_view::npos) end = content.size();
            ++line;
            auto row = content.substr(start, end - start);
            start = end + 1;
            if (detail::trim(row).empty()) continue;
            auto where = origin + ":" + std::to_string(line) + ": ";
            try {
                auto obj = nlohmann::json::parse(row);
                auto label = obj.at("sentiment").get<std::string>();
                auto s = parse_sentiment(label);
                if (!s) throw ProtocolError(where + "unknown sentiment \"" + label + "\"");
                entries_.insert_or_assign(obj.at("sha256").get<std::string>(),
                                          Entry{*s, obj.at("emotions").get<std::vector<double>>()});
            } catch (const nlohmann::json::exception& e) {
                throw ProtocolError(where + e.what());
            }
        }
    }

    std::string name_;
    std::unordered_map<std::string, Entry> entries_;
};

struct ProfileOptions {
    bool allow_partial = false;
    std::size_t threads = 1;
    std::size_t batch_size = 64;
};

/// Profiles every (record, system) text, the physician reference answers
/// included under "Physician Answer". Sorted by (record id, system).
inline std::vector<AffectProfile> profile_corpus(const corpus::Corpus& corpus, const ClassifierProvider& provider,
                                                 std::vector<corpus::SystemId> systems,
                                                 const ProfileOptions& options = {}) {
    corpus::require_pair_complete(corpus, systems, options.allow_partial);
    if (std::none_of(systems.begin(), systems.end(), [](const auto& s) { return s.is_physician(); })) {
        systems.push_back(corpus::SystemId::physician());
    }

    std::vector<std::string> texts;
    std::unordered_map<std::string, std::size_t> slot;
    struct Pending {
        std::string record_id;
        corpus::SystemId system;
        std::size_t text;
    };
    std::vector<Pending> pending;
    for (const auto& system : systems) {
        for (const auto& [id, text] : corpus.texts_for(system)) {
            auto [it, inserted] = slot.emplace(text, texts.size());
            if (inserted) texts.push_back(text);
            pending.push_back({id, system, it->second});
        }
    }

    const std::size_t bs = std::max<std::size_t>(1, options.batch_size);
    const std::size_t batches = (texts.size() + bs - 1) / bs;
    std::vector<Sentiment> sentiments(texts.size());
    std::vector<EmotionDistribution> dists(texts.size());
    detail::parallel_for(batches, options.threads, [&](std::size_t b) {
        std::size_t lo = b * bs, hi = std::min(texts.size(), lo + bs);
        std::span<const std::string> batch(texts.data() + lo, hi - lo);
        auto context = [&] {
            return "classifier batch " + std::to_string(b) + " (" + std::to_string(batch.size()) +
                   " texts, first sha256 " + detail::content_hash(batch.front()) + ")";
        };
        std::vector<Sentiment> s;
        std::vector<std::vector<double>> e;
        try {
            s = provider.sentiment(batch);
            e = provider.emotions(batch);
        } catch (const ProtocolError& err) {
            throw ProtocolError(context() + ": " + err.what());
        } catch (const std::exception& err) {
            throw ProviderError(context() + ": " + err.what());
        }
        if (s.size() != batch.size() || e.size() != batch.size()) {
            throw ProtocolError(context() + ": expected " + std::to_string(batch.size()) + " results, got " +
                                std::to_string(s.size()) + " labels and " + std::to_string(e.size()) +
                                " distributions");
        }
        for (std::size_t i = 0; i < batch.size(); ++i) {
            try {
                dists[lo + i] = EmotionDistribution(e[i]);
            } catch (const ProtocolError& err) {
                throw ProtocolError(context() + ", item " + std::to_string(i) + ": " + err.what());
            }
            sentiments[lo + i] = s[i];
        }
    });

    std::vector<AffectProfile> out;
    out.reserve(pending.size());
    for (const auto& p : pending) {
        AffectProfile prof;
        prof.record_id = p.record_id;
        prof.system = p.system;
        prof.sentiment = sentiments[p.text];
        prof.emotions = dists[p.text];
        prof.dominant = std::string(dominant_emotion(prof.emotions));
        out.push_back(std::move(prof));
    }
    std::sort(out.begin(), out.end(), [](const AffectProfile& a, const AffectProfile& b) {
        if (a.record_id != b.record_id) return a.record_id < b.record_id;
        return a.system < b.system;
    });
    return out;
}

struct SentimentShares {
    std::size_t total = 0;
    std::array<std::size_t, 5> counts{};
    std::array<double, 5> percent{};  // unrounded, sums to 100
};

inline SentimentShares shares_from_counts(const std::array<std::size_t, 5>& counts) {
    SentimentShares s;
    s.counts = counts;
    for (auto c : counts) s.total += c;
    if (s.total == 0) throw DataError("sentiment shares: no observations");
    for (std::size_t i = 0; i < 5; ++i) {
        s.percent[i] = 100.0 * static_cast<double>(counts[i]) / static_cast<double>(s.total);
    }
    return s;
}

inline SentimentShares sentiment_share_table(std::span<const AffectProfile> profiles, const corpus::SystemId& system) {
    std::array<std::size_t, 5> counts{};
    for (const auto& p : profiles) {
        if (p.system == system) ++counts[index_of(p.sentiment)];
    }
    if (std::all_of(counts.begin(), counts.end(), [](auto c) { return c == 0; })) {
        throw DataError("sentiment shares: no profiles for " + system.str());
    }
    return shares_from_counts(counts);
}

struct EmotionShare {
    std::string emotion;
    std::size_t count = 0;
    double percent = 0.0;
};

/// The k most frequent dominant emotions of one system; ties by label order.
inline std::vector<EmotionShare> top_dominant_emotions(std::span<const AffectProfile> profiles,
                                                       const corpus::SystemId& system, std::size_t k = 5) {
    std::array<std::size_t, kEmotionCount> counts{};
    std::size_t total = 0;
    for (const auto& p : profiles) {
        if (p.system != system) continue;
        ++counts[*emotion_index(p.dominant)];
        ++total;
    }
    if (total == 0) throw DataError("dominant emotions: no profiles for " + system.str());
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < kEmotionCount; ++i) {
        if (counts[i] > 0) order.push_back(i);
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return counts[a] > counts[b]; });
    if (order.size() > k) order.resize(k);
    std::vector<EmotionShare> out;
    for (auto i : order) {
        out.push_back({std::string(kEmotionLabels[i]), counts[i],
                       100.0 * static_cast<double>(counts[i]) / static_cast<double>(total)});
    }
    return out;
}

}  // namespace medcomm::affect
