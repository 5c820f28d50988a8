#pragma once

// HTTP providers speaking the inference service protocol:
//
//   GET  /health      -> {"models": {...}, "dim": int}
//   POST /embed       {"texts": [...]} -> {"dim": int, "vectors": [[...]], "model_id": str}
//   POST /sentiment   {"texts": [...]} -> {"labels": [str...], "model_id": str}
//   POST /emotions    {"texts": [...]} -> {"distributions": [[28 floats]...], "labels": [28 strs], "model_id": str}

#include <httplib.h>

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "medcomm/affect.hpp"
#include "medcomm/error.hpp"
#include "medcomm/semantic.hpp"

namespace medcomm::remote {

class Endpoint {
public:
    /// base_url like "http://127.0.0.1:8731".
    explicit Endpoint(std::string base_url) : base_url_(std::move(base_url)) {
        if (base_url_.rfind("http://", 0) != 0 && base_url_.rfind("https://", 0) != 0) {
            throw ConfigError("remote url must start with http:// or https://: " + base_url_);
        }
        while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
    }

    const std::string& url() const { return base_url_; }

    nlohmann::json get(const std::string& path) const {
        auto cli = client();
        auto res = cli.Get(path);
        return decode(res, "GET " + path);
    }

    nlohmann::json post_texts(const std::string& path, std::span<const std::string> texts) const {
        nlohmann::json body = {{"texts", nlohmann::json(std::vector<std::string>(texts.begin(), texts.end()))}};
        auto cli = client();
        auto res = cli.Post(path, body.dump(), "application/json");
        return decode(res, "POST " + path);
    }

private:
    // A fresh client per request keeps concurrent callers independent.
    httplib::Client client() const {
        httplib::Client cli(base_url_);
        cli.set_connection_timeout(10);
        cli.set_read_timeout(600);
        return cli;
    }

    nlohmann::json decode(const httplib::Result& res, const std::string& what) const {
        if (!res) {
            throw ProviderError(what + " to " + base_url_ + " failed: " + httplib::to_string(res.error()));
        }
        if (res->status != 200) {
            throw ProviderError(what + " returned HTTP " + std::to_string(res->status) + ": " + res->body);
        }
        try {
            return nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::exception& e) {
            throw ProtocolError(what + ": response is not JSON (" + e.what() + ")");
        }
    }

    std::string base_url_;
};

class RemoteEmbeddingProvider final : public semantic::EmbeddingProvider {
public:
    explicit RemoteEmbeddingProvider(std::string base_url) : endpoint_(std::move(base_url)) {
        auto health = endpoint_.get("/health");
        try {
            dim_ = health.at("dim").get<std::size_t>();
        } catch (const nlohmann::json::exception& e) {
            throw ProtocolError("GET /health: " + std::string(e.what()));
        }
        if (dim_ == 0) throw ProtocolError("GET /health: dim must be positive");
    }

    std::string name() const override { return "remote:" + endpoint_.url(); }
    std::size_t dim() const override { return dim_; }

    std::vector<semantic::EmbeddingVector> embed(std::span<const std::string> texts) const override {
        auto res = endpoint_.post_texts("/embed", texts);
        std::vector<semantic::EmbeddingVector> out;
        try {
            auto dim = res.at("dim").get<std::size_t>();
            if (dim != dim_) {
                throw ProtocolError("/embed: dim " + std::to_string(dim) + " differs from /health dim " +
                                    std::to_string(dim_));
            }
            const auto& vectors = res.at("vectors");
            if (!vectors.is_array() || vectors.size() != texts.size()) {
                throw ProtocolError("/embed: expected " + std::to_string(texts.size()) + " vectors");
            }
            for (const auto& v : vectors) {
                auto values = v.get<std::vector<double>>();
                if (values.size() != dim_) throw ProtocolError("/embed: vector length differs from dim");
                out.emplace_back(std::move(values));
            }
        } catch (const nlohmann::json::exception& e) {
            throw ProtocolError("/embed: " + std::string(e.what()));
        } catch (const ProtocolError&) {
            throw;
        } catch (const DataError& e) {
            throw ProtocolError("/embed: " + std::string(e.what()));
        }
        return out;
    }

private:
    Endpoint endpoint_;
    std::size_t dim_ = 0;
};

class RemoteClassifier final : public affect::ClassifierProvider {
public:
    explicit RemoteClassifier(std::string base_url) : endpoint_(std::move(base_url)) {}

    std::string name() const override { return "remote:" + endpoint_.url(); }

    std::vector<affect::Sentiment> sentiment(std::span<const std::string> texts) const override {
        auto res = endpoint_.post_texts("/sentiment", texts);
        std::vector<affect::Sentiment> out;
        try {
            const auto& labels = res.at("labels");
            if (!labels.is_array() || labels.size() != texts.size()) {
                throw ProtocolError("/sentiment: expected " + std::to_string(texts.size()) + " labels");
            }
            for (const auto& l : labels) {
                auto s = affect::parse_sentiment(l.get<std::string>());
                if (!s) throw ProtocolError("/sentiment: unknown label \"" + l.get<std::string>() + "\"");
                out.push_back(*s);
            }
        } catch (const nlohmann::json::exception& e) {
            throw ProtocolError("/sentiment: " + std::string(e.what()));
        }
        return out;
    }

    /// Rows come back in the canonical label order, remapped by name when
    /// the service reports its own label order.
    std::vector<std::vector<double>> emotions(std::span<const std::string> texts) const override {
        auto res = endpoint_.post_texts("/emotions", texts);
        std::vector<std::vector<double>> out;
        try {
            std::optional<std::vector<std::size_t>> remap;
            if (auto it = res.find("labels"); it != res.end()) {
                auto names = it->get<std::vector<std::string>>();
                if (names.size() != affect::kEmotionCount) {
                    throw ProtocolError("/emotions: service reports " + std::to_string(names.size()) + " labels");
                }
                std::vector<std::size_t> idx;
                for (const auto& n : names) {
                    auto i = affect::emotion_index(n);
                    if (!i) throw ProtocolError("/emotions: unknown emotion label \"" + n + "\"");
                    idx.push_back(*i);
                }
                remap = std::move(idx);
            }
            const auto& dists = res.at("distributions");
            if (!dists.is_array() || dists.size() != texts.size()) {
                throw ProtocolError("/emotions: expected " + std::to_string(texts.size()) + " distributions");
            }
            for (const auto& d : dists) {
                auto row = d.get<std::vector<double>>();
                if (remap && row.size() == affect::kEmotionCount) {
                    std::vector<double> ordered(affect::kEmotionCount, 0.0);
                    for (std::size_t i = 0; i < row.size(); ++i) ordered[(*remap)[i]] = row[i];
                    row = std::move(ordered);
                }
                out.push_back(std::move(row));  // length checked by profile_corpus
            }
        } catch (const nlohmann::json::exception& e) {
            throw ProtocolError("/emotions: " + std::string(e.what()));
        }
        return out;
    }

private:
    Endpoint endpoint_;
};

}  // namespace medcomm::remote
