#include <gtest/gtest.h>

#include <cstdlib>

#include "medcomm/pipeline.hpp"
#include "mock_service.hpp"
#include "test_util.hpp"

using namespace medcomm;
using namespace medcomm::pipeline;

namespace {

PipelineConfig fixture_config(const std::string& out) {
    PipelineConfig cfg;
    cfg.corpus_paths = {testutil::data("fixture/corpus.jsonl")};
    cfg.response_paths = {testutil::data("fixture/responses.jsonl")};
    cfg.vectors = testutil::data("fixture/vectors.jsonl");
    cfg.labels = testutil::data("fixture/labels.jsonl");
    cfg.ratings = testutil::data("fixture/ratings.csv");
    cfg.out_dir = testutil::scratch(out);
    return cfg;
}

std::size_t line_count(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

class NoRemoteEnv : public ::testing::Test {
protected:
    void SetUp() override { ::unsetenv(kRemoteUrlEnv); }
};

}  // namespace

TEST_F(NoRemoteEnv, FullRunWritesEveryArtifact) {
    auto cfg = fixture_config("pipe_full");
    auto r = run_pipeline(cfg);
    EXPECT_EQ(r.records_scored, 12u);
    EXPECT_TRUE(r.warnings.empty());
    std::set<std::string> names;
    for (const auto& f : r.manifest.files) names.insert(f.path);
    for (const char* want : {"alignment.json", "scores.jsonl", "sentiment_table.csv", "top_emotions.csv",
                             "readability_summary.csv", "fidelity_summary.csv", "likert.csv", "matrix_fkgl.csv",
                             "matrix_gfi.csv", "matrix_fidelity.csv", "matrix_sentiment.csv", "heatmap_sentiment.json",
                             "violin_fkgl.json", "violin_fidelity.json"}) {
        EXPECT_TRUE(names.contains(want)) << want;
    }
    EXPECT_EQ(line_count(testutil::slurp(cfg.out_dir / "scores.jsonl")), 48u);
    EXPECT_EQ(testutil::slurp(cfg.out_dir / "manifest.json"), r.manifest.to_json());
}

TEST_F(NoRemoteEnv, SentimentTableMatchesGoldenCounts) {
    auto cfg = fixture_config("pipe_sent");
    run_pipeline(cfg);
    auto rows = medcomm::detail::parse_csv(testutil::slurp(cfg.out_dir / "sentiment_table.csv"));
    auto golden = testutil::load_json("fixture/affect_golden.json")["sentiment_counts"];
    ASSERT_EQ(rows.size(), 5u);
    EXPECT_EQ(rows[1].fields[0], "Physician Answer");
    for (std::size_t i = 1; i < rows.size(); ++i) {
        auto counts = golden[rows[i].fields[0]];
        for (std::size_t k = 0; k < 5; ++k) {
            EXPECT_EQ(rows[i].fields[k + 1], medcomm::detail::fmt2(100.0 * counts[k].get<double>() / 12.0));
        }
    }
}

TEST_F(NoRemoteEnv, ManifestIdenticalAcrossRunsAndThreads) {
    auto a = fixture_config("pipe_det_a");
    auto want = run_pipeline(a).manifest.to_json();
    for (std::size_t threads : {1u, 4u, 8u}) {
        auto b = fixture_config("pipe_det_b");
        b.threads = threads;
        EXPECT_EQ(run_pipeline(b).manifest.to_json(), want) << threads;
    }
}

TEST_F(NoRemoteEnv, RemoteProvidersMatchFileStores) {
    auto file = fixture_config("pipe_file");
    auto want = run_pipeline(file).manifest.to_json();
    testutil::MockService service;
    auto remote = fixture_config("pipe_remote");
    remote.vectors.reset();
    remote.labels.reset();
    remote.remote_url = service.url();
    remote.threads = 4;
    EXPECT_EQ(run_pipeline(remote).manifest.to_json(), want);
}

TEST_F(NoRemoteEnv, StagesWriteTheirOwnFiles) {
    auto cfg = fixture_config("pipe_ingest");
    auto ingest_only = run_pipeline(cfg, Stage::Ingest);
    ASSERT_EQ(ingest_only.manifest.files.size(), 1u);
    EXPECT_EQ(ingest_only.manifest.files[0].path, "alignment.json");

    cfg.out_dir = testutil::scratch("pipe_sample");
    EXPECT_THROW(run_pipeline(cfg, Stage::Sample), ConfigError);
    cfg.sample_k = 4;
    cfg.sample_iqr = false;
    auto sampled = run_pipeline(cfg, Stage::Sample);
    auto sel = nlohmann::json::parse(testutil::slurp(cfg.out_dir / "selection.json"));
    EXPECT_EQ(sel["chosen"].size(), 4u);
    EXPECT_EQ(sampled.records_scored, 0u);

    cfg.out_dir = testutil::scratch("pipe_score");
    auto scored = run_pipeline(cfg, Stage::Score);
    EXPECT_EQ(scored.records_scored, 4u);
    EXPECT_EQ(line_count(testutil::slurp(cfg.out_dir / "scores.jsonl")), 16u);
    EXPECT_FALSE(std::filesystem::exists(cfg.out_dir / "matrix_fkgl.csv"));

    cfg.sample_k.reset();
    cfg.out_dir = testutil::scratch("pipe_compare");
    auto compared = run_pipeline(cfg, Stage::Compare);
    EXPECT_TRUE(std::filesystem::exists(cfg.out_dir / "matrix_fkgl.csv"));
    EXPECT_FALSE(std::filesystem::exists(cfg.out_dir / "sentiment_table.csv"));
}

TEST_F(NoRemoteEnv, MissingStoreEntryIsProviderErrorNamingHash) {
    auto content = testutil::slurp(testutil::data("fixture/vectors.jsonl"));
    auto first = content.substr(0, content.find('\n'));
    auto hash = nlohmann::json::parse(first)["sha256"].get<std::string>();
    auto dir = testutil::scratch("pipe_missing");
    testutil::spit(dir / "vectors.jsonl", content.substr(first.size() + 1));
    auto cfg = fixture_config("pipe_missing_out");
    cfg.vectors = dir / "vectors.jsonl";
    try {
        run_pipeline(cfg);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Provider);
        EXPECT_EQ(exit_code(e.kind()), 4);
        EXPECT_NE(std::string(e.what()).find(hash), std::string::npos) << e.what();
        EXPECT_EQ(std::string(e.what()).rfind("semantic: ", 0), 0u) << e.what();
    }
}

TEST_F(NoRemoteEnv, PartialResponsesNeedOptIn) {
    auto all = testutil::slurp(testutil::data("fixture/responses.jsonl"));
    auto dir = testutil::scratch("pipe_partial_in");
    testutil::spit(dir / "responses.jsonl", all.substr(all.find('\n') + 1));
    auto cfg = fixture_config("pipe_partial");
    cfg.response_paths = {dir / "responses.jsonl"};
    try {
        run_pipeline(cfg);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Data);
        EXPECT_EQ(exit_code(e.kind()), 3);
    }
    cfg.allow_partial = true;
    auto r = run_pipeline(cfg);
    ASSERT_EQ(r.warnings.size(), 1u);
    EXPECT_NE(r.warnings[0].find("GPT5_Base is missing 1 of 12"), std::string::npos) << r.warnings[0];
}

TEST_F(NoRemoteEnv, ConfigurationErrors) {
    auto cfg = fixture_config("pipe_cfg");
    auto expect_config = [&](PipelineConfig c, Stage s = Stage::All) {
        try {
            run_pipeline(c, s);
            FAIL();
        } catch (const Error& e) {
            EXPECT_EQ(e.kind(), ErrorKind::Config) << e.what();
            EXPECT_EQ(exit_code(e.kind()), 2);
        }
    };
    auto c = cfg;
    c.threads = 0;
    expect_config(c);
    c = cfg;
    c.sample_k = 3;
    c.stratified = true;
    expect_config(c);
    c = cfg;
    c.remote_url = "http://127.0.0.1:1";
    expect_config(c);
    c = cfg;
    c.vectors.reset();
    expect_config(c);
    c = cfg;
    c.systems = {"Llama_Base"};
    expect_config(c);
    c = cfg;
    c.corpus_paths.clear();
    expect_config(c);
}

TEST_F(NoRemoteEnv, SystemSelection) {
    auto cfg = fixture_config("pipe_systems");
    cfg.systems = {"GPT5_Empathy", "Physician Answer", "GPT5_empathy"};
    run_pipeline(cfg);
    auto rows = medcomm::detail::parse_csv(testutil::slurp(cfg.out_dir / "sentiment_table.csv"));
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[1].fields[0], "Physician Answer");
    EXPECT_EQ(rows[2].fields[0], "GPT5_Empathy");
}

TEST(ConfigFile, ParsesAndResolvesRelativePaths) {
    auto dir = testutil::scratch("cfgfile");
    testutil::spit(dir / "run.conf",
                   "# fixture run\n"
                   "corpus = data/corpus.jsonl\n"
                   "corpus = /abs/extra.csv\n"
                   "responses = data/responses.jsonl  # trailing comment\n"
                   "vectors = v.jsonl\n"
                   "seed = 7\n"
                   "threads = 3\n"
                   "stratified = yes\n"
                   "stratified-iqr = on\n"
                   "systems = GPT5_Base, GPT5_Empathy\n"
                   "target = question\n"
                   "formats = csv\n");
    auto cfg = load_config_file(dir / "run.conf");
    ASSERT_EQ(cfg.corpus_paths.size(), 2u);
    EXPECT_EQ(cfg.corpus_paths[0], dir / "data/corpus.jsonl");
    EXPECT_EQ(cfg.corpus_paths[1], std::filesystem::path("/abs/extra.csv"));
    EXPECT_EQ(cfg.response_paths.at(0), dir / "data/responses.jsonl");
    EXPECT_EQ(*cfg.vectors, dir / "v.jsonl");
    EXPECT_EQ(cfg.seed, 7u);
    EXPECT_EQ(cfg.threads, 3u);
    EXPECT_TRUE(cfg.stratified);
    EXPECT_TRUE(cfg.stratified_iqr);
    EXPECT_TRUE(sampler_config(cfg).stratified_iqr);
    EXPECT_EQ(cfg.systems, (std::vector<std::string>{"GPT5_Base", "GPT5_Empathy"}));
    EXPECT_EQ(cfg.sample_target, sampler::Target::Question);
    EXPECT_TRUE(cfg.formats.csv);
    EXPECT_FALSE(cfg.formats.json);
}

TEST(ConfigFile, ErrorsNameTheLine) {
    auto dir = testutil::scratch("cfgbad");
    for (const auto& [body, needle] : std::vector<std::pair<std::string, std::string>>{
             {"seed = 1\ncolour = red\n", "run.conf:2: config: unknown key"},
             {"stratified = maybe\n", "expects a boolean"},
             {"seed = -4\n", "non-negative integer"},
             {"threads\n", "expected key = value"},
             {"formats = pdf\n", "unknown format"}}) {
        testutil::spit(dir / "run.conf", body);
        try {
            load_config_file(dir / "run.conf");
            FAIL() << body;
        } catch (const ConfigError& e) {
            EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
        }
    }
    EXPECT_THROW(load_config_file(dir / "absent.conf"), ConfigError);
}

TEST(ExitCodes, Mapping) {
    EXPECT_EQ(exit_code(ErrorKind::Config), 2);
    EXPECT_EQ(exit_code(ErrorKind::Data), 3);
    EXPECT_EQ(exit_code(ErrorKind::Provider), 4);
}
