#pragma once

// Presentation layer: comparison arrows against the physician baseline,
// Likert summaries, and the report directory writer (tables as CSV/JSON,
// plot-ready violin and heatmap data, and a hashed manifest).

#include <algorithm>
#include <array>
#include <cmath>
#include <iterator>
#include <span>
#include <tuple>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "medcomm/affect.hpp"
#include "medcomm/corpus.hpp"
#include "medcomm/detail/csv.hpp"
#include "medcomm/detail/hash.hpp"
#include "medcomm/detail/strings.hpp"
#include "medcomm/error.hpp"
#include "medcomm/stats.hpp"

namespace medcomm::report {

enum class Arrow { Up, Down, Similar };

inline char arrow_code(Arrow a) {
    switch (a) {
        case Arrow::Up: return 'u';
        case Arrow::Down: return 'd';
        case Arrow::Similar: return 's';
    }
    return '?';
}

/// Default tolerance: values equal when printed to two decimals are Similar.
inline constexpr double kArrowTolerance = 0.005;

inline Arrow comparison_arrow(double value, double baseline, double tolerance = kArrowTolerance) {
    double diff = value - baseline;
    if (std::fabs(diff) <= tolerance) return Arrow::Similar;
    return diff > 0.0 ? Arrow::Up : Arrow::Down;
}

// ---------------------------------------------------------------------------
// Likert ratings
// ---------------------------------------------------------------------------

enum class Criterion { Accuracy, Style, Precision, Trust, Comprehensibility, EmotionalTone };
enum class RaterRole { Expert, Patient };

inline constexpr std::array<Criterion, 6> kCriteria = {Criterion::Accuracy, Criterion::Style, Criterion::Precision,
                                                       Criterion::Trust, Criterion::Comprehensibility,
                                                       Criterion::EmotionalTone};

inline std::string_view to_string(Criterion c) {
    switch (c) {
        case Criterion::Accuracy: return "Accuracy";
        case Criterion::Style: return "Style";
        case Criterion::Precision: return "Precision";
        case Criterion::Trust: return "Trust";
        case Criterion::Comprehensibility: return "Comprehensibility";
        case Criterion::EmotionalTone: return "EmotionalTone";
    }
    return "?";
}

inline std::string_view to_string(RaterRole r) { return r == RaterRole::Expert ? "Expert" : "Patient"; }

inline std::optional<Criterion> parse_criterion(std::string_view s) {
    auto key = detail::fold_label(s);
    for (auto c : kCriteria) {
        if (key == detail::fold_label(to_string(c))) return c;
    }
    return std::nullopt;
}

inline std::optional<RaterRole> parse_role(std::string_view s) {
    auto key = detail::fold_label(s);
    if (key == "expert") return RaterRole::Expert;
    if (key == "patient") return RaterRole::Patient;
    return std::nullopt;
}

struct LikertRating {
    corpus::SystemId variant;
    Criterion criterion = Criterion::Accuracy;
    RaterRole role = RaterRole::Expert;
    int score = 3;
};

struct LikertCell {
    RaterRole role;
    corpus::SystemId variant;
    Criterion criterion;
    stats::DescriptiveSummary summary;
    bool single_rater = false;

    double std_or_zero() const { return summary.std.value_or(0.0); }
};

inline std::vector<LikertCell> likert_summary(std::span<const LikertRating> ratings) {
    if (ratings.empty()) throw DataError("likert_summary: no ratings");
    using Key = std::tuple<int, std::string, int>;
    std::map<Key, std::pair<LikertRating, std::vector<double>>> groups;
    for (const auto& r : ratings) {
        if (r.score < 1 || r.score > 5) {
            throw DataError("likert rating outside 1..5 for " + r.variant.str() + "/" + std::string(to_string(r.criterion)));
        }
        Key key{static_cast<int>(r.role), r.variant.str(), static_cast<int>(r.criterion)};
        auto& g = groups[key];
        g.first = r;
        g.second.push_back(static_cast<double>(r.score));
    }
    std::vector<LikertCell> out;
    for (const auto& [key, g] : groups) {
        LikertCell cell{g.first.role, g.first.variant, g.first.criterion, stats::descriptive(g.second), false};
        cell.single_rater = g.second.size() == 1;
        out.push_back(std::move(cell));
    }
    return out;
}

/// Ratings as CSV (role,variant,criterion,score) or JSONL with the same keys.
inline std::vector<LikertRating> parse_ratings(std::string_view content, corpus::Format format) {
    content = detail::strip_bom(content);
    std::vector<LikertRating> out;
    auto build = [&](const std::string& role, const std::string& variant, const std::string& crit, int score,
                     std::size_t line) {
        auto where = "ratings line " + std::to_string(line) + ": ";
        auto r = parse_role(role);
        if (!r) throw DataError(where + "unknown role \"" + role + "\"");
        auto c = parse_criterion(crit);
        if (!c) throw DataError(where + "unknown criterion \"" + crit + "\"");
        if (score < 1 || score > 5) throw DataError(where + "score must be 1..5");
        out.push_back({corpus::SystemId::parse(variant), *c, *r, score});
    };
    if (format == corpus::Format::Csv) {
        auto rows = detail::parse_csv(content);
        if (rows.empty()) throw DataError("ratings: header row required");
        std::map<std::string, std::size_t> col;
        for (std::size_t i = 0; i < rows[0].fields.size(); ++i) col[detail::to_lower(detail::trim(rows[0].fields[i]))] = i;
        for (const char* req : {"role", "variant", "criterion", "score"}) {
            if (!col.contains(req)) throw DataError("ratings header: missing column \"" + std::string(req) + "\"");
        }
        for (std::size_t i = 1; i < rows.size(); ++i) {
            const auto& f = rows[i].fields;
            auto get = [&](const char* k) {
                auto idx = col.at(k);
                if (idx >= f.size()) throw DataError("ratings line " + std::to_string(rows[i].line) + ": missing " + k);
                return detail::trim(f[idx]);
            };
            int score = 0;
            try {
                score = std::stoi(get("score"));
            } catch (const std::logic_error&) {
                throw DataError("ratings line " + std::to_string(rows[i].line) + ": score is not an integer");
            }
            build(get("role"), get("variant"), get("criterion"), score, rows[i].line);
        }
        return out;
    }
    corpus::detail_::for_each_line(content, [&](std::string_view row, std::size_t line) {
        try {
            auto j = nlohmann::json::parse(row);
            build(j.at("role").get<std::string>(), j.at("variant").get<std::string>(),
                  j.at("criterion").get<std::string>(), j.at("score").get<int>(), line);
        } catch (const nlohmann::json::exception& e) {
            throw DataError("ratings line " + std::to_string(line) + ": " + e.what());
        }
    });
    return out;
}

// ---------------------------------------------------------------------------
// Bundle and writer
// ---------------------------------------------------------------------------

/// Everything the report writer renders. System labels are canonical
/// SystemId renderings; `systems` fixes the row order everywhere.
struct ReportBundle {
    std::vector<std::string> systems;
    std::string baseline = std::string(corpus::kPhysicianLabel);
    std::map<std::string, affect::SentimentShares> sentiment;
    std::map<std::string, std::vector<affect::EmotionShare>> top_emotions;
    /// Per-record values by metric ("fkgl", "gfi", "fidelity"). Fidelity has
    /// no baseline column (the baseline is what it is measured against).
    std::map<std::string, stats::ScoreTable> metrics;
    /// Pairwise matrices by metric ("fkgl", "gfi", "fidelity", "sentiment").
    std::map<std::string, stats::PairwiseMatrix> matrices;
    std::vector<LikertCell> likert;
};

struct ManifestEntry {
    std::string path;
    std::string sha256;
    std::size_t bytes = 0;
};

struct Manifest {
    std::vector<ManifestEntry> files;  // sorted by path

    std::string to_json() const {
        nlohmann::ordered_json j;
        j["files"] = nlohmann::ordered_json::array();
        for (const auto& f : files) j["files"].push_back({{"path", f.path}, {"sha256", f.sha256}, {"bytes", f.bytes}});
        return j.dump(2) + "\n";
    }
};

struct Formats {
    bool csv = true;
    bool json = true;
};

namespace detail {

inline std::string labels_of(const std::set<std::string>& s) {
    std::string out;
    for (const auto& x : s) out += (out.empty() ? "" : ", ") + x;
    return out.empty() ? "(none)" : out;
}

inline void expect_systems(const std::string& what, const std::set<std::string>& got, const std::set<std::string>& want) {
    if (got == want) return;
    std::set<std::string> missing, extra;
    std::set_difference(want.begin(), want.end(), got.begin(), got.end(), std::inserter(missing, missing.end()));
    std::set_difference(got.begin(), got.end(), want.begin(), want.end(), std::inserter(extra, extra.end()));
    std::string msg = "inconsistent report bundle: " + what;
    if (!missing.empty()) msg += " is missing " + labels_of(missing);
    if (!extra.empty()) msg += (missing.empty() ? " has extra " : "; has extra ") + labels_of(extra);
    throw DataError(msg);
}

template <class Map>
std::set<std::string> keys_of(const Map& m) {
    std::set<std::string> s;
    for (const auto& [k, v] : m) s.insert(k);
    return s;
}

inline std::set<std::string> columns_of(const stats::ScoreTable& t) {
    std::set<std::string> s;
    for (const auto& c : t) s.insert(c.system);
    return s;
}

inline std::vector<double> column_values(const stats::ScoreColumn& c) {
    std::vector<double> v;
    for (const auto& [id, x] : c.values) v.push_back(x);
    return v;
}

inline const stats::ScoreColumn* find_column(const stats::ScoreTable& t, const std::string& system) {
    for (const auto& c : t) {
        if (c.system == system) return &c;
    }
    return nullptr;
}

inline std::string fmt_p(double p) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", p);
    return buf;
}

}  // namespace detail

inline void validate_bundle(const ReportBundle& b) {
    std::set<std::string> all(b.systems.begin(), b.systems.end());
    if (all.size() != b.systems.size()) throw DataError("inconsistent report bundle: duplicate system labels");
    std::set<std::string> candidates = all;
    candidates.erase(b.baseline);
    if (!b.sentiment.empty()) detail::expect_systems("sentiment table", detail::keys_of(b.sentiment), all);
    if (!b.top_emotions.empty()) detail::expect_systems("top emotions", detail::keys_of(b.top_emotions), all);
    for (const auto& [metric, table] : b.metrics) {
        detail::expect_systems("metric " + metric, detail::columns_of(table), metric == "fidelity" ? candidates : all);
    }
    for (const auto& [metric, m] : b.matrices) {
        std::set<std::string> labels(m.labels.begin(), m.labels.end());
        detail::expect_systems("matrix " + metric, labels, metric == "fidelity" ? candidates : all);
    }
}

inline nlohmann::ordered_json to_json(const stats::PairwiseMatrix& m) {
    nlohmann::ordered_json j;
    j["kind"] = m.kind == stats::CompareKind::TTest ? "t_test" : "contingency";
    j["labels"] = m.labels;
    j["mean_diff"] = m.mean_diff;
    j["statistic"] = m.statistic;
    j["effect"] = m.effect;
    j["p_raw"] = m.p_raw;
    j["p_adj"] = m.p_adj;
    j["stars"] = m.stars;
    return j;
}

/// Cell payload "diff|p_adj|stars", header row and column of labels.
inline std::string matrix_csv(const stats::PairwiseMatrix& m) {
    std::string out = "system";
    for (const auto& l : m.labels) out += "," + medcomm::detail::csv_escape(l);
    out += "\n";
    for (std::size_t i = 0; i < m.labels.size(); ++i) {
        out += medcomm::detail::csv_escape(m.labels[i]);
        for (std::size_t j = 0; j < m.labels.size(); ++j) {
            double shown = m.kind == stats::CompareKind::Contingency && i != j ? m.effect[i][j] : m.mean_diff[i][j];
            out += "," + medcomm::detail::fmt2(shown) + "|" + detail::fmt_p(m.p_adj[i][j]) + "|" + m.stars[i][j];
        }
        out += "\n";
    }
    return out;
}

inline std::string sentiment_table_csv(const ReportBundle& b) {
    std::string out = "system,very_negative,negative,neutral,positive,very_positive,arrows\n";
    const auto* base = b.sentiment.contains(b.baseline) ? &b.sentiment.at(b.baseline) : nullptr;
    for (const auto& s : b.systems) {
        const auto& shares = b.sentiment.at(s);
        out += medcomm::detail::csv_escape(s);
        std::string arrows;
        for (std::size_t i = 0; i < 5; ++i) {
            out += "," + medcomm::detail::fmt2(shares.percent[i]);
            Arrow a = Arrow::Similar;
            if (base) a = comparison_arrow(medcomm::detail::round2(shares.percent[i]), medcomm::detail::round2(base->percent[i]));
            arrows.push_back(arrow_code(a));
        }
        out += "," + arrows + "\n";
    }
    return out;
}

inline std::string top_emotions_csv(const ReportBundle& b) {
    std::string out = "system,rank,emotion,count,percent\n";
    for (const auto& s : b.systems) {
        const auto& list = b.top_emotions.at(s);
        for (std::size_t r = 0; r < list.size(); ++r) {
            out += medcomm::detail::csv_escape(s) + "," + std::to_string(r + 1) + "," + list[r].emotion + "," +
                   std::to_string(list[r].count) + "," + medcomm::detail::fmt2(list[r].percent) + "\n";
        }
    }
    return out;
}

inline std::string summary_row(const stats::DescriptiveSummary& d) {
    return std::to_string(d.n) + "," + medcomm::detail::fmt2(d.mean) + "," + medcomm::detail::fmt2(d.std.value_or(0.0));
}

inline std::string readability_csv(const ReportBundle& b) {
    std::string out = "system,metric,n,mean,std,delta_vs_baseline\n";
    for (const char* metric : {"fkgl", "gfi"}) {
        auto it = b.metrics.find(metric);
        if (it == b.metrics.end()) continue;
        std::optional<double> base;
        if (const auto* c = detail::find_column(it->second, b.baseline)) base = stats::descriptive(detail::column_values(*c)).mean;
        for (const auto& s : b.systems) {
            const auto* col = detail::find_column(it->second, s);
            auto d = stats::descriptive(detail::column_values(*col));
            out += medcomm::detail::csv_escape(s) + "," + metric + "," + summary_row(d) + "," +
                   (base ? medcomm::detail::fmt2(d.mean - *base) : std::string()) + "\n";
        }
    }
    return out;
}

inline std::string fidelity_csv(const ReportBundle& b) {
    std::string out = "system,n,mean,std\n";
    auto it = b.metrics.find("fidelity");
    if (it == b.metrics.end()) return out;
    for (const auto& s : b.systems) {
        if (s == b.baseline) continue;
        auto d = stats::descriptive(detail::column_values(*detail::find_column(it->second, s)));
        out += medcomm::detail::csv_escape(s) + "," + summary_row(d) + "\n";
    }
    return out;
}

inline std::string likert_csv(const std::vector<LikertCell>& cells) {
    std::string out = "role,variant,criterion,n,mean,std,flags\n";
    for (const auto& c : cells) {
        out += std::string(to_string(c.role)) + "," + medcomm::detail::csv_escape(c.variant.str()) + "," +
               std::string(to_string(c.criterion)) + "," + std::to_string(c.summary.n) + "," +
               medcomm::detail::fmt2(c.summary.mean) + "," + medcomm::detail::fmt2(c.std_or_zero()) + "," +
               (c.single_rater ? "single_rater" : "") + "\n";
    }
    return out;
}

inline nlohmann::ordered_json violin_json(const ReportBundle& b, const stats::ScoreTable& table) {
    nlohmann::ordered_json j;
    j["systems"] = nlohmann::ordered_json::array();
    j["values"] = nlohmann::ordered_json::object();
    for (const auto& s : b.systems) {
        const auto* c = detail::find_column(table, s);
        if (!c) continue;
        j["systems"].push_back(s);
        j["values"][s] = detail::column_values(*c);
    }
    return j;
}

namespace detail {

/// Reads a table CSV back into rows (for the JSON mirrors).
inline nlohmann::ordered_json csv_to_json(const std::string& csv) {
    auto rows = medcomm::detail::parse_csv(csv);
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (std::size_t i = 1; i < rows.size(); ++i) {
        nlohmann::ordered_json obj;
        for (std::size_t c = 0; c < rows[0].fields.size(); ++c) {
            obj[rows[0].fields[c]] = c < rows[i].fields.size() ? rows[i].fields[c] : "";
        }
        arr.push_back(std::move(obj));
    }
    return arr;
}

}  // namespace detail

/// Writes every table and plot file under out_dir plus manifest.json, and
/// returns the manifest. `extra` files (name -> content) are written and
/// listed alongside. Output is byte-stable for identical inputs.
inline Manifest emit_report_files(const ReportBundle& bundle, const std::filesystem::path& out_dir, Formats formats,
                                  const std::map<std::string, std::string>& extra) {
    validate_bundle(bundle);
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec || !std::filesystem::is_directory(out_dir)) {
        throw DataError("cannot create output directory " + out_dir.string() + (ec ? ": " + ec.message() : ""));
    }

    std::map<std::string, std::string> files = extra;
    auto table = [&](const std::string& stem, const std::string& csv) {
        if (formats.csv) files[stem + ".csv"] = csv;
        if (formats.json) files[stem + ".json"] = detail::csv_to_json(csv).dump(2) + "\n";
    };
    if (!bundle.sentiment.empty()) table("sentiment_table", sentiment_table_csv(bundle));
    if (!bundle.top_emotions.empty()) table("top_emotions", top_emotions_csv(bundle));
    if (bundle.metrics.contains("fkgl") || bundle.metrics.contains("gfi")) table("readability_summary", readability_csv(bundle));
    if (bundle.metrics.contains("fidelity")) table("fidelity_summary", fidelity_csv(bundle));
    if (!bundle.likert.empty()) table("likert", likert_csv(bundle.likert));
    for (const auto& [metric, m] : bundle.matrices) {
        if (formats.csv) files["matrix_" + metric + ".csv"] = matrix_csv(m);
        files["heatmap_" + metric + ".json"] = to_json(m).dump(2) + "\n";
    }
    for (const auto& [metric, t] : bundle.metrics) files["violin_" + metric + ".json"] = violin_json(bundle, t).dump(2) + "\n";

    Manifest manifest;
    for (const auto& [name, content] : files) {
        auto path = out_dir / name;
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write " + path.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw DataError("write failed for " + path.string());
        manifest.files.push_back({name, medcomm::detail::sha256_hex(content), content.size()});
    }
    auto mpath = out_dir / "manifest.json";
    std::ofstream mout(mpath, std::ios::binary | std::ios::trunc);
    if (!mout) throw DataError("cannot write " + mpath.string());
    mout << manifest.to_json();
    if (!mout) throw DataError("write failed for " + mpath.string());
    return manifest;
}

inline Manifest emit_report(const ReportBundle& bundle, const std::filesystem::path& out_dir, Formats formats = {}) {
    return emit_report_files(bundle, out_dir, formats, {});
}

}  // namespace medcomm::report
