#pragma once

// End-to-end orchestration: load -> align -> (sample) -> readability ->
// fidelity -> affect -> statistics -> report. Each stage can also run on
// its own; see Stage.

#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "medcomm/affect.hpp"
#include "medcomm/corpus.hpp"
#include "medcomm/detail/parallel.hpp"
#include "medcomm/detail/strings.hpp"
#include "medcomm/error.hpp"
#include "medcomm/remote.hpp"
#include "medcomm/report.hpp"
#include "medcomm/sampler.hpp"
#include "medcomm/semantic.hpp"
#include "medcomm/stats.hpp"
#include "medcomm/textmetrics.hpp"

namespace medcomm::pipeline {

namespace fs = std::filesystem;

inline constexpr const char* kRemoteUrlEnv = "MEDCOMM_REMOTE_URL";

enum class Stage { Ingest, Sample, Score, Compare, Report, All };

struct PipelineConfig {
    std::vector<fs::path> corpus_paths;
    std::vector<fs::path> response_paths;
    std::optional<fs::path> vectors;
    std::optional<fs::path> labels;
    std::optional<std::string> remote_url;
    std::optional<fs::path> ratings;
    fs::path out_dir = "report";
    std::vector<std::string> systems;  // empty: every system found
    bool allow_partial = false;
    std::uint64_t seed = 42;
    std::size_t threads = 1;
    std::optional<std::size_t> sample_k;
    bool stratified = false;
    std::size_t quota = 10;
    sampler::Target sample_target = sampler::Target::Answer;
    bool sample_iqr = true;
    bool stratified_iqr = false;
    report::Formats formats;
};

// ---------------------------------------------------------------------------
// Config file: "key = value" lines, '#' comments. Keys are the long flag
// names without dashes; corpus/responses may repeat.
// ---------------------------------------------------------------------------

namespace detail {

inline bool parse_bool(const std::string& key, const std::string& v) {
    auto s = medcomm::detail::to_lower(v);
    if (s == "1" || s == "true" || s == "yes" || s == "on") return true;
    if (s == "0" || s == "false" || s == "no" || s == "off") return false;
    throw ConfigError("config: " + key + " expects a boolean, got \"" + v + "\"");
}

inline std::uint64_t parse_uint(const std::string& key, const std::string& v) {
    try {
        if (v.empty() || !std::isdigit(static_cast<unsigned char>(v[0]))) throw std::invalid_argument(v);
        std::size_t used = 0;
        auto x = std::stoull(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::logic_error&) {
        throw ConfigError("config: " + key + " expects a non-negative integer, got \"" + v + "\"");
    }
}

}  // namespace detail

inline void apply_setting(PipelineConfig& cfg, const std::string& key, const std::string& value,
                          const fs::path& base = {}) {
    auto path = [&](const std::string& v) { return fs::path(v).is_absolute() || base.empty() ? fs::path(v) : base / v; };
    if (key == "corpus") cfg.corpus_paths.push_back(path(value));
    else if (key == "responses") cfg.response_paths.push_back(path(value));
    else if (key == "vectors") cfg.vectors = path(value);
    else if (key == "labels") cfg.labels = path(value);
    else if (key == "ratings") cfg.ratings = path(value);
    else if (key == "remote-url" || key == "remote_url") cfg.remote_url = value;
    else if (key == "out") cfg.out_dir = path(value);
    else if (key == "seed") cfg.seed = detail::parse_uint(key, value);
    else if (key == "threads") cfg.threads = detail::parse_uint(key, value);
    else if (key == "sample-k" || key == "sample_k") cfg.sample_k = detail::parse_uint(key, value);
    else if (key == "stratified") cfg.stratified = detail::parse_bool(key, value);
    else if (key == "quota") cfg.quota = detail::parse_uint(key, value);
    else if (key == "allow-partial" || key == "allow_partial") cfg.allow_partial = detail::parse_bool(key, value);
    else if (key == "sample-iqr" || key == "sample_iqr") cfg.sample_iqr = detail::parse_bool(key, value);
    else if (key == "stratified-iqr" || key == "stratified_iqr") cfg.stratified_iqr = detail::parse_bool(key, value);
    else if (key == "systems") {
        for (auto& s : medcomm::detail::split(value, ',')) {
            auto t = medcomm::detail::trim(s);
            if (!t.empty()) cfg.systems.push_back(t);
        }
    } else if (key == "target") {
        auto v = medcomm::detail::to_lower(value);
        if (v == "question") cfg.sample_target = sampler::Target::Question;
        else if (v == "answer") cfg.sample_target = sampler::Target::Answer;
        else throw ConfigError("config: target must be question or answer");
    } else if (key == "formats") {
        cfg.formats = {false, false};
        for (auto& f : medcomm::detail::split(value, ',')) {
            auto t = medcomm::detail::to_lower(medcomm::detail::trim(f));
            if (t == "csv") cfg.formats.csv = true;
            else if (t == "json") cfg.formats.json = true;
            else throw ConfigError("config: unknown format \"" + t + "\"");
        }
    } else {
        throw ConfigError("config: unknown key \"" + key + "\"");
    }
}

/// Relative paths in the file resolve against the file's directory.
inline PipelineConfig load_config_file(const fs::path& file, PipelineConfig cfg = {}) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open config file " + file.string());
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto t = medcomm::detail::trim(line);
        if (t.empty()) continue;
        auto eq = t.find('=');
        if (eq == std::string::npos) throw ConfigError(file.string() + ":" + std::to_string(n) + ": expected key = value");
        try {
            apply_setting(cfg, medcomm::detail::trim(t.substr(0, eq)), medcomm::detail::trim(t.substr(eq + 1)),
                          file.parent_path());
        } catch (const ConfigError& e) {
            throw ConfigError(file.string() + ":" + std::to_string(n) + ": " + e.what());
        }
    }
    return cfg;
}

// ---------------------------------------------------------------------------
// Providers
// ---------------------------------------------------------------------------

struct Providers {
    std::unique_ptr<semantic::EmbeddingProvider> embedding;
    std::unique_ptr<affect::ClassifierProvider> classifier;
};

/// Exactly one source per provider kind: a store file or the remote service.
/// The environment fallback for the remote URL only applies when a kind has
/// no file source.
inline Providers make_providers(const PipelineConfig& cfg) {
    auto remote = cfg.remote_url;
    if (!remote && (!cfg.vectors || !cfg.labels)) {
        if (const char* env = std::getenv(kRemoteUrlEnv); env && *env) remote = std::string(env);
    }
    if (cfg.vectors && remote) throw ConfigError("both --vectors and a remote url given for embeddings; choose one");
    if (cfg.labels && remote) throw ConfigError("both --labels and a remote url given for classifiers; choose one");
    if (!cfg.vectors && !remote) throw ConfigError("no embedding provider: pass --vectors or --remote-url");
    if (!cfg.labels && !remote) throw ConfigError("no classifier provider: pass --labels or --remote-url");
    Providers p;
    if (cfg.vectors) p.embedding = std::make_unique<semantic::FileVectorStore>(*cfg.vectors);
    else p.embedding = std::make_unique<remote::RemoteEmbeddingProvider>(*remote);
    if (cfg.labels) p.classifier = std::make_unique<affect::FileLabelStore>(*cfg.labels);
    else p.classifier = std::make_unique<remote::RemoteClassifier>(*remote);
    return p;
}

// ---------------------------------------------------------------------------
// Stages
// ---------------------------------------------------------------------------

template <class Fn>
auto with_context(const std::string& module, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const Error& e) {
        throw Error(e.kind(), module + ": " + e.what());
    }
}

/// Loads and merges every corpus file, then attaches all response files.
inline corpus::Corpus ingest(const PipelineConfig& cfg) {
    if (cfg.corpus_paths.empty()) throw ConfigError("no corpus given: pass --corpus");
    return with_context("corpus", [&] {
        std::vector<corpus::QARecord> records;
        std::string name;
        for (const auto& p : cfg.corpus_paths) {
            auto c = corpus::load_corpus(p, corpus::format_for(p));
            name += (name.empty() ? "" : "+") + c.name();
            records.insert(records.end(), c.records().begin(), c.records().end());
        }
        corpus::Corpus merged(name, std::move(records));
        for (const auto& p : cfg.response_paths) merged = corpus::attach_all(merged, corpus::load_responses(p));
        return merged;
    });
}

inline std::vector<corpus::SystemId> selected_systems(const PipelineConfig& cfg, const corpus::Corpus& c) {
    auto present = c.systems();
    if (cfg.systems.empty()) return present;
    std::vector<corpus::SystemId> out;
    for (const auto& s : cfg.systems) {
        auto id = corpus::SystemId::parse(s);
        if (id.is_physician()) continue;
        if (std::find(present.begin(), present.end(), id) == present.end()) {
            throw ConfigError("requested system " + id.str() + " has no responses");
        }
        out.push_back(id);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

inline sampler::SamplerConfig sampler_config(const PipelineConfig& cfg) {
    sampler::SamplerConfig sc;
    sc.seed = cfg.seed;
    sc.threads = cfg.threads;
    sc.per_class_quota = cfg.quota;
    sc.target = cfg.sample_target;
    sc.apply_iqr = cfg.sample_iqr;
    sc.stratified_iqr = cfg.stratified_iqr;
    if (cfg.sample_k) sc.k = *cfg.sample_k;
    return sc;
}

struct SampleOutcome {
    corpus::Corpus corpus;
    std::optional<sampler::Selection> selection;
    std::optional<nlohmann::ordered_json> selection_json;
};

inline SampleOutcome maybe_sample(const PipelineConfig& cfg, const corpus::Corpus& c) {
    if (!cfg.sample_k && !cfg.stratified) return {c, std::nullopt, std::nullopt};
    return with_context("sampler", [&] {
        auto sc = sampler_config(cfg);
        auto sel = cfg.stratified ? sampler::stratified_representatives(c, sc) : sampler::select_subset(c, sc);
        std::set<std::string> keep(sel.chosen_ids.begin(), sel.chosen_ids.end());
        auto json = sampler::to_json(sel, sc, cfg.stratified);
        return SampleOutcome{c.subset(keep), std::move(sel), std::move(json)};
    });
}

/// Per-record scores for every (record, system) pair.
struct Scores {
    std::vector<std::string> systems;  // baseline first, then candidates
    stats::ScoreTable fkgl, gfi, fidelity, sentiment_codes;
    std::vector<affect::AffectProfile> profiles;
    std::vector<semantic::FidelityScore> fidelity_scores;
};

inline stats::ScoreColumn* column(stats::ScoreTable& t, const std::string& system) {
    for (auto& c : t) {
        if (c.system == system) return &c;
    }
    t.push_back({system, {}});
    return &t.back();
}

inline Scores score(const PipelineConfig& cfg, const corpus::Corpus& c, const std::vector<corpus::SystemId>& systems,
                    const Providers& providers) {
    Scores s;
    std::vector<corpus::SystemId> all = {corpus::SystemId::physician()};
    all.insert(all.end(), systems.begin(), systems.end());
    for (const auto& id : all) s.systems.push_back(id.str());

    with_context("textmetrics", [&] {
        struct Item {
            std::string system, id, text;
            double fkgl = 0, gfi = 0;
        };
        std::vector<Item> items;
        for (const auto& id : all) {
            for (auto& [rid, text] : c.texts_for(id)) items.push_back({id.str(), rid, text});
        }
        medcomm::detail::parallel_for(items.size(), cfg.threads, [&](std::size_t i) {
            auto st = textmetrics::analyze_text(items[i].text);
            try {
                auto r = textmetrics::readability(st);
                items[i].fkgl = r.fkgl;
                items[i].gfi = r.gfi;
            } catch (const UndefinedScoreError& e) {
                throw UndefinedScoreError(items[i].system + " answer for " + items[i].id + ": " + e.what());
            }
        });
        for (const auto& id : all) {
            column(s.fkgl, id.str());
            column(s.gfi, id.str());
        }
        for (const auto& it : items) {
            column(s.fkgl, it.system)->values[it.id] = it.fkgl;
            column(s.gfi, it.system)->values[it.id] = it.gfi;
        }
        return 0;
    });

    s.fidelity_scores = with_context("semantic", [&] {
        return semantic::semantic_fidelity_scores(c, *providers.embedding, systems,
                                                  {cfg.allow_partial, cfg.threads, 64});
    });
    for (const auto& id : systems) column(s.fidelity, id.str());
    for (const auto& f : s.fidelity_scores) column(s.fidelity, f.system.str())->values[f.record_id] = f.score;

    s.profiles = with_context("affect", [&] {
        return affect::profile_corpus(c, *providers.classifier, all, {cfg.allow_partial, cfg.threads, 64});
    });
    for (const auto& id : all) column(s.sentiment_codes, id.str());
    for (const auto& p : s.profiles) {
        column(s.sentiment_codes, p.system.str())->values[p.record_id] = static_cast<double>(affect::index_of(p.sentiment));
    }
    return s;
}

/// Restricts every column to the record ids all columns share.
inline stats::ScoreTable common_records(const stats::ScoreTable& t) {
    if (t.empty()) return t;
    std::set<std::string> common;
    for (const auto& [id, v] : t.front().values) common.insert(id);
    for (const auto& c : t) {
        std::set<std::string> ids;
        for (const auto& [id, v] : c.values) {
            if (common.contains(id)) ids.insert(id);
        }
        common = std::move(ids);
    }
    stats::ScoreTable out;
    for (const auto& c : t) {
        stats::ScoreColumn col{c.system, {}};
        for (const auto& [id, v] : c.values) {
            if (common.contains(id)) col.values.emplace(id, v);
        }
        out.push_back(std::move(col));
    }
    return out;
}

inline std::map<std::string, stats::PairwiseMatrix> compare(const PipelineConfig& cfg, const Scores& s) {
    return with_context("stats", [&] {
        std::map<std::string, stats::PairwiseMatrix> m;
        auto ttest = [&](const stats::ScoreTable& t) {
            return stats::pairwise_compare(cfg.allow_partial ? common_records(t) : t, stats::CompareKind::TTest,
                                           cfg.threads);
        };
        m["fkgl"] = ttest(s.fkgl);
        m["gfi"] = ttest(s.gfi);
        if (s.fidelity.size() >= 2) m["fidelity"] = ttest(s.fidelity);
        m["sentiment"] = stats::pairwise_compare(s.sentiment_codes, stats::CompareKind::Contingency, cfg.threads);
        return m;
    });
}

inline report::ReportBundle build_bundle(const Scores& s, std::map<std::string, stats::PairwiseMatrix> matrices,
                                         std::vector<report::LikertCell> likert) {
    report::ReportBundle b;
    b.systems = s.systems;
    for (const auto& label : s.systems) {
        auto id = corpus::SystemId::parse(label);
        b.sentiment[label] = affect::sentiment_share_table(s.profiles, id);
        b.top_emotions[label] = affect::top_dominant_emotions(s.profiles, id, 5);
    }
    b.metrics["fkgl"] = s.fkgl;
    b.metrics["gfi"] = s.gfi;
    if (!s.fidelity.empty()) b.metrics["fidelity"] = s.fidelity;
    b.matrices = std::move(matrices);
    b.likert = std::move(likert);
    return b;
}

inline std::string scores_jsonl(const Scores& s) {
    std::string out;
    std::map<std::pair<std::string, std::string>, const semantic::FidelityScore*> fid;
    for (const auto& f : s.fidelity_scores) fid[{f.record_id, f.system.str()}] = &f;
    for (const auto& p : s.profiles) {
        auto sys = p.system.str();
        nlohmann::ordered_json j;
        j["id"] = p.record_id;
        j["system"] = sys;
        for (const auto& c : s.fkgl) {
            if (c.system == sys && c.values.contains(p.record_id)) j["fkgl"] = c.values.at(p.record_id);
        }
        for (const auto& c : s.gfi) {
            if (c.system == sys && c.values.contains(p.record_id)) j["gfi"] = c.values.at(p.record_id);
        }
        if (auto it = fid.find({p.record_id, sys}); it != fid.end()) j["fidelity"] = it->second->score;
        j["sentiment"] = std::string(affect::to_string(p.sentiment));
        j["dominant"] = p.dominant;
        j["emotions"] = std::vector<double>(p.emotions.probs().begin(), p.emotions.probs().end());
        out += j.dump() + "\n";
    }
    return out;
}

struct PipelineResult {
    report::Manifest manifest;
    corpus::AlignmentReport alignment;
    std::size_t records_scored = 0;
    std::vector<std::string> warnings;
};

inline std::vector<report::LikertCell> load_likert(const PipelineConfig& cfg) {
    if (!cfg.ratings) return {};
    return with_context("report", [&] {
        auto content = corpus::detail_::read_file(*cfg.ratings);
        return report::likert_summary(report::parse_ratings(content, corpus::format_for(*cfg.ratings)));
    });
}

/// Runs the pipeline up to `stage`, writing that stage's files (and the
/// manifest) into cfg.out_dir.
inline PipelineResult run_pipeline(const PipelineConfig& cfg, Stage stage = Stage::All) {
    if (cfg.threads == 0) throw ConfigError("--threads must be >= 1");
    if (cfg.sample_k && *cfg.sample_k == 0) throw ConfigError("--sample-k must be >= 1");
    if (cfg.sample_k && cfg.stratified) throw ConfigError("--sample-k and --stratified are mutually exclusive");
    if (stage == Stage::Sample && !cfg.sample_k && !cfg.stratified) {
        throw ConfigError("sample needs --sample-k or --stratified");
    }

    PipelineResult result;
    std::map<std::string, std::string> extra;
    auto corpus = ingest(cfg);
    result.alignment = corpus::validate_alignment(corpus);
    extra["alignment.json"] = corpus::to_json(result.alignment).dump(2) + "\n";
    for (const auto& s : result.alignment.systems) {
        if (!s.pair_complete) {
            result.warnings.push_back(s.system.str() + " is missing " + std::to_string(s.missing.size()) + " of " +
                                      std::to_string(result.alignment.record_count) + " records");
        }
    }

    auto write_only = [&](const std::map<std::string, std::string>& files) {
        report::ReportBundle empty;
        result.manifest = report::emit_report_files(empty, cfg.out_dir, cfg.formats, files);
        return result;
    };
    if (stage == Stage::Ingest) return write_only(extra);

    auto sampled = maybe_sample(cfg, corpus);
    if (sampled.selection) {
        extra["selection.json"] = sampled.selection_json->dump(2) + "\n";
        for (const auto& [id, why] : sampled.selection->skipped) result.warnings.push_back("sampler skipped " + id + ": " + why);
    }
    if (stage == Stage::Sample) return write_only(extra);

    auto systems = selected_systems(cfg, sampled.corpus);
    if (systems.empty()) throw DataError("no candidate systems: pass --responses");
    corpus::require_pair_complete(sampled.corpus, systems, cfg.allow_partial);
    auto providers = with_context("provider", [&] { return make_providers(cfg); });
    auto scores = score(cfg, sampled.corpus, systems, providers);
    result.records_scored = sampled.corpus.size();
    extra["scores.jsonl"] = scores_jsonl(scores);
    if (stage == Stage::Score) return write_only(extra);

    auto matrices = compare(cfg, scores);
    if (stage == Stage::Compare) {
        report::ReportBundle b;
        b.systems = scores.systems;
        b.matrices = std::move(matrices);
        result.manifest = with_context("report", [&] { return report::emit_report_files(b, cfg.out_dir, cfg.formats, extra); });
        return result;
    }

    auto bundle = build_bundle(scores, std::move(matrices), load_likert(cfg));
    result.manifest = with_context("report", [&] { return report::emit_report_files(bundle, cfg.out_dir, cfg.formats, extra); });
    return result;
}

inline int exit_code(ErrorKind k) {
    switch (k) {
        case ErrorKind::Config: return 2;
        case ErrorKind::Data: return 3;
        case ErrorKind::Provider: return 4;
    }
    return 1;
}

}  // namespace medcomm::pipeline
