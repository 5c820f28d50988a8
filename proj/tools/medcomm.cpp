// medcomm: evaluate candidate medical answers against physician references.
//
//   medcomm <ingest|sample|score|compare|report|all> [options]
//
// Exit codes: 0 ok, 2 config error, 3 data error, 4 provider error.

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <string>

#include "medcomm/pipeline.hpp"

namespace {

namespace mp = medcomm::pipeline;

struct Flags {
    std::string config;
    std::vector<std::string> corpus, responses, systems;
    std::string vectors, labels, remote_url, ratings, out, target, formats;
    std::uint64_t seed = 42;
    std::size_t threads = 1, sample_k = 0, quota = 10;
    bool stratified = false, allow_partial = false, no_iqr = false, stratified_iqr = false;
};

void add_options(CLI::App& app, Flags& f) {
    app.add_option("--config", f.config, "key = value config file; flags override it");
    app.add_option("--corpus", f.corpus, "corpus file (.jsonl or .csv), repeatable");
    app.add_option("--responses", f.responses, "response JSONL file, repeatable");
    app.add_option("--vectors", f.vectors, "vector store JSONL");
    app.add_option("--labels", f.labels, "label store JSONL");
    app.add_option("--remote-url", f.remote_url, "inference service base URL (fallback: $MEDCOMM_REMOTE_URL)");
    app.add_option("--ratings", f.ratings, "Likert ratings (.csv or .jsonl)");
    app.add_option("--out", f.out, "output directory");
    app.add_option("--systems", f.systems, "restrict to these systems, e.g. GPT5_Base")->delimiter(',');
    app.add_option("--seed", f.seed, "seed for all randomness");
    app.add_option("--threads", f.threads, "worker threads")->check(CLI::PositiveNumber);
    app.add_option("--sample-k", f.sample_k, "select k representative records by k-means")->check(CLI::PositiveNumber);
    app.add_flag("--stratified", f.stratified, "severity-stratified selection");
    app.add_option("--quota", f.quota, "records per severity class when stratified")->check(CLI::PositiveNumber);
    app.add_flag("--allow-partial", f.allow_partial, "accept systems that do not cover every record");
    app.add_flag("--no-iqr", f.no_iqr, "skip IQR outlier filtering before clustering");
    app.add_flag("--stratified-iqr", f.stratified_iqr, "apply IQR filtering within each severity class");
    app.add_option("--target", f.target, "sampling features from 'question' or 'answer'");
    app.add_option("--formats", f.formats, "table formats: csv,json");
}

mp::PipelineConfig to_config(const CLI::App& app, const Flags& f) {
    mp::PipelineConfig cfg;
    if (!f.config.empty()) cfg = mp::load_config_file(f.config);
    auto given = [&](const char* name) { return app.count(name) > 0; };
    if (given("--corpus")) cfg.corpus_paths.assign(f.corpus.begin(), f.corpus.end());
    if (given("--responses")) cfg.response_paths.assign(f.responses.begin(), f.responses.end());
    if (given("--vectors")) cfg.vectors = f.vectors;
    if (given("--labels")) cfg.labels = f.labels;
    if (given("--remote-url")) cfg.remote_url = f.remote_url;
    if (given("--ratings")) cfg.ratings = f.ratings;
    if (given("--out")) cfg.out_dir = f.out;
    if (given("--systems")) cfg.systems = f.systems;
    if (given("--seed")) cfg.seed = f.seed;
    if (given("--threads")) cfg.threads = f.threads;
    if (given("--sample-k")) cfg.sample_k = f.sample_k;
    if (given("--stratified")) cfg.stratified = true;
    if (given("--quota")) cfg.quota = f.quota;
    if (given("--allow-partial")) cfg.allow_partial = true;
    if (given("--no-iqr")) cfg.sample_iqr = false;
    if (given("--stratified-iqr")) cfg.stratified_iqr = true;
    if (given("--target")) mp::apply_setting(cfg, "target", f.target);
    if (given("--formats")) mp::apply_setting(cfg, "formats", f.formats);
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Compare model-generated medical answers with physician answers"};
    app.require_subcommand(1);
    Flags flags;
    add_options(app, flags);
    app.fallthrough();

    const std::map<std::string, std::pair<mp::Stage, std::string>> stages = {
        {"ingest", {mp::Stage::Ingest, "load corpora and responses, report alignment"}},
        {"sample", {mp::Stage::Sample, "select a representative subset"}},
        {"score", {mp::Stage::Score, "per-record readability, fidelity and affect scores"}},
        {"compare", {mp::Stage::Compare, "pairwise statistical comparison matrices"}},
        {"report", {mp::Stage::Report, "full report: tables, plot data, manifest"}},
        {"all", {mp::Stage::All, "every stage"}},
    };
    for (const auto& [name, info] : stages) app.add_subcommand(name, info.second);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        auto* sub = app.get_subcommands().front();
        auto cfg = to_config(app, flags);
        auto result = mp::run_pipeline(cfg, stages.at(sub->get_name()).first);
        for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
        std::cerr << "medcomm " << sub->get_name() << ": " << result.alignment.record_count << " records, "
                  << result.alignment.systems.size() << " systems";
        if (result.records_scored) std::cerr << ", " << result.records_scored << " scored";
        std::cerr << "; wrote " << result.manifest.files.size() << " files to " << cfg.out_dir.string() << "\n";
        return 0;
    } catch (const medcomm::Error& e) {
        std::cerr << "medcomm: " << e.what() << "\n";
        return mp::exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "medcomm: " << e.what() << "\n";
        return 3;
    }
}
