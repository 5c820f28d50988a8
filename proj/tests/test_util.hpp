#pragma once

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <nlohmann/json.hpp>

namespace testutil {

inline std::filesystem::path data(const std::string& rel) { return std::filesystem::path(MEDCOMM_TEST_DATA) / rel; }

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline nlohmann::json load_json(const std::string& rel) { return nlohmann::json::parse(slurp(data(rel))); }

inline void spit(const std::filesystem::path& p, const std::string& content) {
    std::filesystem::create_directories(p.parent_path());
    std::ofstream(p, std::ios::binary) << content;
}

struct ReadabilityGolden {
    std::string text;
    std::int64_t w, s, sy, c;
    double fkgl, gfi;
};

/// readability_goldens.jsonl: {"text", "stats": {"w","s","sy","c"}, "fkgl", "gfi"} per line.
inline std::vector<ReadabilityGolden> readability_goldens() {
    std::vector<ReadabilityGolden> out;
    std::istringstream in(slurp(data("readability_goldens.jsonl")));
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto j = nlohmann::json::parse(line);
        const auto& st = j.at("stats");
        out.push_back({j.at("text"), st.at("w"), st.at("s"), st.at("sy"), st.at("c"), j.at("fkgl"), j.at("gfi")});
    }
    return out;
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("medcomm_test_" + name + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace testutil
