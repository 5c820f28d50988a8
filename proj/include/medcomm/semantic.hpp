#pragma once

// Semantic fidelity: cosine similarity between the embedding of the
// physician reference answer and the embedding of each candidate answer.
// Embeddings come from an EmbeddingProvider; the file-backed provider here
// reads a content-hash keyed vector store, see remote.hpp for the HTTP one.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "medcomm/corpus.hpp"
#include "medcomm/detail/hash.hpp"
#include "medcomm/detail/parallel.hpp"
#include "medcomm/error.hpp"

namespace medcomm::semantic {

class EmbeddingVector {
public:
    EmbeddingVector() = default;
    explicit EmbeddingVector(std::vector<double> values) : values_(std::move(values)) {
        if (values_.empty()) throw DataError("embedding: empty vector");
        for (double v : values_) {
            if (!std::isfinite(v)) throw DataError("embedding: non-finite entry");
        }
    }

    std::size_t dim() const { return values_.size(); }
    std::span<const double> values() const { return values_; }

private:
    std::vector<double> values_;
};

/// Maps texts to vectors. embed() must preserve order and return the same
/// vector for the same text within one session. Implementations must be safe
/// to call from several threads at once.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual std::string name() const = 0;
    virtual std::size_t dim() const = 0;
    virtual std::vector<EmbeddingVector> embed(std::span<const std::string> texts) const = 0;
};

namespace detail {

// Neumaier compensated sum of a[i]*b[i].
inline double compensated_dot(std::span<const double> a, std::span<const double> b) {
    double sum = 0.0, comp = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double term = a[i] * b[i];
        double t = sum + term;
        if (std::fabs(sum) >= std::fabs(term)) comp += (sum - t) + term;
        else comp += (term - t) + sum;
        sum = t;
    }
    return sum + comp;
}

inline double plain_dot(std::span<const double> a, std::span<const double> b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
    return sum;
}

inline constexpr std::size_t kCompensatedAbove = 4096;

}  // namespace detail

inline double cosine_similarity(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size()) {
        throw DataError("cosine_similarity: dimension mismatch (" + std::to_string(u.size()) + " vs " +
                        std::to_string(v.size()) + ")");
    }
    auto dot = u.size() > detail::kCompensatedAbove ? detail::compensated_dot : detail::plain_dot;
    double uu = dot(u, u), vv = dot(v, v);
    if (uu == 0.0 || vv == 0.0) throw DataError("cosine_similarity: zero vector has no direction");
    double c = dot(u, v) / (std::sqrt(uu) * std::sqrt(vv));
    return std::clamp(c, -1.0, 1.0);
}

inline double cosine_similarity(const EmbeddingVector& u, const EmbeddingVector& v) {
    return cosine_similarity(u.values(), v.values());
}

/// Vector store JSONL: {"sha256": hex, "dim": int, "vector": [float...]}.
class FileVectorStore final : public EmbeddingProvider {
public:
    explicit FileVectorStore(const std::filesystem::path& path) : name_("file:" + path.filename().string()) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw ProviderError("cannot open vector store " + path.string());
        std::ostringstream ss;
        ss << in.rdbuf();
        load(ss.str(), path.string());
    }

    /// Builds a store from in-memory JSONL (tests, tooling).
    static FileVectorStore from_jsonl(std::string_view content, std::string name = "memory") {
        FileVectorStore s;
        s.name_ = "file:" + name;
        s.load(content, name);
        return s;
    }

    std::string name() const override { return name_; }
    std::size_t dim() const override { return dim_; }
    std::size_t size() const { return vectors_.size(); }

    std::vector<EmbeddingVector> embed(std::span<const std::string> texts) const override {
        std::vector<EmbeddingVector> out;
        out.reserve(texts.size());
        for (const auto& t : texts) {
            auto key = medcomm::detail::content_hash(t);
            auto it = vectors_.find(key);
            if (it == vectors_.end()) throw ProviderError("vector store has no entry for sha256 " + key);
            out.push_back(it->second);
        }
        return out;
    }

private:
    FileVectorStore() = default;

    void load(std::string_view content, const std::string& origin) {
        content = medcomm::detail::strip_bom(content);
        std::size_t line = 0, start = 0;
        while (start < content.size()) {
            auto end = content.find('\n', start);
            if (end == std::string_view::npos) end = content.size();
            ++line;
            auto row = content.substr(start, end - start);
            start = end + 1;
            if (medcomm::detail::trim(row).empty()) continue;
            auto where = origin + ":" + std::to_string(line) + ": ";
            nlohmann::json obj;
            try {
                obj = nlohmann::json::parse(row);
                auto key = obj.at("sha256").get<std::string>();
                auto declared = obj.at("dim").get<std::size_t>();
                auto values = obj.at("vector").get<std::vector<double>>();
                if (values.size() != declared) {
                    throw ProtocolError(where + "dim " + std::to_string(declared) + " but vector has " +
                                        std::to_string(values.size()) + " entries");
                }
                if (dim_ == 0) dim_ = declared;
                if (declared != dim_) {
                    throw ProtocolError(where + "dim " + std::to_string(declared) + " differs from store dim " +
                                        std::to_string(dim_));
                }
                vectors_.insert_or_assign(std::move(key), EmbeddingVector(std::move(values)));
            } catch (const nlohmann::json::exception& e) {
                throw ProtocolError(where + e.what());
            } catch (const DataError& e) {
                throw ProtocolError(where + e.what());
            }
        }
    }

    std::string name_;
    std::size_t dim_ = 0;
    std::unordered_map<std::string, EmbeddingVector> vectors_;
};

struct FidelityScore {
    std::string record_id;
    corpus::SystemId system;
    double score = 0.0;
};

struct FidelityOptions {
    bool allow_partial = false;
    std::size_t threads = 1;
    std::size_t batch_size = 64;
};

namespace detail {

/// Embeds distinct texts in fixed batches; batches may run concurrently.
/// Returns vectors aligned with `texts`.
inline std::vector<EmbeddingVector> embed_all(const EmbeddingProvider& provider, const std::vector<std::string>& texts,
                                              std::size_t batch_size, std::size_t threads) {
    batch_size = std::max<std::size_t>(1, batch_size);
    const std::size_t batches = (texts.size() + batch_size - 1) / batch_size;
    std::vector<EmbeddingVector> out(texts.size());
    medcomm::detail::parallel_for(batches, threads, [&](std::size_t b) {
        std::size_t lo = b * batch_size, hi = std::min(texts.size(), lo + batch_size);
        std::span<const std::string> batch(texts.data() + lo, hi - lo);
        auto context = [&] {
            return "embedding batch " + std::to_string(b) + " (" + std::to_string(batch.size()) +
                   " texts, first sha256 " + medcomm::detail::content_hash(batch.front()) + ")";
        };
        std::vector<EmbeddingVector> got;
        try {
            got = provider.embed(batch);
        } catch (const ProtocolError& e) {
            throw ProtocolError(context() + ": " + e.what());
        } catch (const std::exception& e) {
            throw ProviderError(context() + ": " + e.what());
        }
        if (got.size() != batch.size()) {
            throw ProtocolError(context() + ": provider returned " + std::to_string(got.size()) + " vectors");
        }
        for (std::size_t i = 0; i < got.size(); ++i) {
            if (got[i].dim() != provider.dim()) {
                throw ProtocolError(context() + ": vector " + std::to_string(i) + " has dim " +
                                    std::to_string(got[i].dim()) + ", expected " + std::to_string(provider.dim()));
            }
            out[lo + i] = std::move(got[i]);
        }
    });
    return out;
}

}  // namespace detail

/// One score per (record, system) pair present in the corpus, sorted by
/// (record id, system). Each distinct text is embedded once.
inline std::vector<FidelityScore> semantic_fidelity_scores(const corpus::Corpus& corpus,
                                                           const EmbeddingProvider& provider,
                                                           const std::vector<corpus::SystemId>& systems,
                                                           const FidelityOptions& options = {}) {
    corpus::require_pair_complete(corpus, systems, options.allow_partial);

    std::vector<std::string> texts;
    std::unordered_map<std::string, std::size_t> slot;
    auto intern = [&](const std::string& t) {
        auto [it, inserted] = slot.emplace(t, texts.size());
        if (inserted) texts.push_back(t);
        return it->second;
    };

    struct Pending {
        std::string record_id;
        corpus::SystemId system;
        std::size_t ref, cand;
    };
    std::vector<Pending> pending;
    std::map<std::string, std::size_t> ref_slot;
    for (const auto& r : corpus.records()) ref_slot.emplace(r.id, intern(r.reference_answer));
    for (const auto& system : systems) {
        if (system.is_physician()) continue;
        for (const auto& [id, text] : corpus.texts_for(system)) {
            pending.push_back({id, system, ref_slot.at(id), intern(text)});
        }
    }

    auto vectors = detail::embed_all(provider, texts, options.batch_size, options.threads);

    std::vector<FidelityScore> out;
    out.reserve(pending.size());
    for (const auto& p : pending) {
        out.push_back({p.record_id, p.system, cosine_similarity(vectors[p.ref], vectors[p.cand])});
    }
    std::sort(out.begin(), out.end(), [](const FidelityScore& a, const FidelityScore& b) {
        if (a.record_id != b.record_id) return a.record_id < b.record_id;
        return a.system < b.system;
    });
    return out;
}

}  // namespace medcomm::semantic
