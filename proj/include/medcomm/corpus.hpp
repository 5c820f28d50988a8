#pragma once

// Question/answer corpora with system-labeled candidate answers.
//
// A Corpus holds the physician reference answers (one QARecord per question)
// plus any number of ResponseVariants, each tagged with the SystemId that
// produced it. Values are immutable once built; attach_responses returns a
// new Corpus.

#include <algorithm>
#include <array>
#include <compare>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "medcomm/detail/csv.hpp"
#include "medcomm/detail/strings.hpp"
#include "medcomm/error.hpp"

namespace medcomm::corpus {

enum class Mode { Base, Empathy, Rephrase, Physician };

inline std::string_view to_string(Mode m) {
    switch (m) {
        case Mode::Base: return "Base";
        case Mode::Empathy: return "Empathy";
        case Mode::Rephrase: return "Rephrase";
        case Mode::Physician: return "Physician";
    }
    return "?";
}

inline constexpr std::string_view kPhysicianLabel = "Physician Answer";

/// Which system produced an answer. Renders as "<model>_<mode>", except the
/// physician reference which renders as "Physician Answer".
struct SystemId {
    std::string model;
    Mode mode = Mode::Base;

    static SystemId physician() { return {"", Mode::Physician}; }

    bool is_physician() const { return mode == Mode::Physician; }

    std::string str() const {
        if (is_physician()) return std::string(kPhysicianLabel);
        return model + "_" + std::string(to_string(mode));
    }

    /// Parses a canonical rendering. The mode is the suffix after the last
    /// underscore and is matched case-insensitively.
    static SystemId parse(std::string_view s) {
        if (detail::fold_label(s) == "physiciananswer") return physician();
        auto pos = s.rfind('_');
        if (pos == std::string_view::npos || pos == 0 || pos + 1 == s.size()) {
            throw DataError("invalid system id \"" + std::string(s) + "\": expected <model>_<Base|Empathy|Rephrase>");
        }
        std::string mode = detail::to_lower(s.substr(pos + 1));
        SystemId id;
        id.model = std::string(s.substr(0, pos));
        if (mode == "base") id.mode = Mode::Base;
        else if (mode == "empathy") id.mode = Mode::Empathy;
        else if (mode == "rephrase") id.mode = Mode::Rephrase;
        else throw DataError("invalid system id \"" + std::string(s) + "\": unknown mode \"" + std::string(s.substr(pos + 1)) + "\"");
        return id;
    }

    friend bool operator==(const SystemId& a, const SystemId& b) {
        return a.mode == b.mode && a.model == b.model;
    }
    friend std::strong_ordering operator<=>(const SystemId& a, const SystemId& b) {
        return a.str() <=> b.str();
    }
};

enum class Severity { White, Green, Yellow, Orange, Red };

inline constexpr std::array<Severity, 5> kSeverities = {
    Severity::White, Severity::Green, Severity::Yellow, Severity::Orange, Severity::Red};

inline std::string_view to_string(Severity s) {
    switch (s) {
        case Severity::White: return "White";
        case Severity::Green: return "Green";
        case Severity::Yellow: return "Yellow";
        case Severity::Orange: return "Orange";
        case Severity::Red: return "Red";
    }
    return "?";
}

inline std::optional<Severity> parse_severity(std::string_view s) {
    std::string key = detail::to_lower(detail::trim(s));
    for (Severity v : kSeverities) {
        if (key == detail::to_lower(to_string(v))) return v;
    }
    return std::nullopt;
}

struct QARecord {
    std::string id;
    std::string question;
    std::string reference_answer;
    std::string source;
    std::optional<Severity> severity;
    std::map<std::string, std::string> metadata;
};

struct ResponseVariant {
    std::string record_id;
    SystemId system;
    std::string text;
};

enum class Format { Jsonl, Csv };

class Corpus {
public:
    Corpus() = default;

    /// Validates id uniqueness, non-empty answers and variant references.
    Corpus(std::string name, std::vector<QARecord> records, std::vector<ResponseVariant> variants = {})
        : name_(std::move(name)), records_(std::move(records)), variants_(std::move(variants)) {
        std::vector<std::string> dups;
        for (std::size_t i = 0; i < records_.size(); ++i) {
            const auto& r = records_[i];
            if (r.id.empty()) throw DataError("record " + std::to_string(i + 1) + ": empty id");
            if (r.reference_answer.empty()) throw DataError("record \"" + r.id + "\": empty answer");
            if (!index_.emplace(r.id, i).second) dups.push_back(r.id);
        }
        if (!dups.empty()) throw DataError("duplicate record id(s): " + join(dups));
        std::set<std::pair<std::string, std::string>> seen;
        for (const auto& v : variants_) {
            if (!index_.contains(v.record_id)) throw DataError("variant references unknown record id \"" + v.record_id + "\"");
            if (!seen.emplace(v.record_id, v.system.str()).second) {
                throw DataError("conflicting variants for (" + v.record_id + ", " + v.system.str() + ")");
            }
        }
    }

    const std::string& name() const { return name_; }
    const std::vector<QARecord>& records() const { return records_; }
    const std::vector<ResponseVariant>& variants() const { return variants_; }
    bool empty() const { return records_.empty(); }
    std::size_t size() const { return records_.size(); }

    const QARecord* find(std::string_view id) const {
        auto it = index_.find(std::string(id));
        return it == index_.end() ? nullptr : &records_[it->second];
    }

    /// Distinct candidate systems, sorted by canonical rendering.
    std::vector<SystemId> systems() const {
        std::set<SystemId> s;
        for (const auto& v : variants_) s.insert(v.system);
        return {s.begin(), s.end()};
    }

    /// record id -> text for one system. The physician system maps to the
    /// reference answers.
    std::map<std::string, std::string> texts_for(const SystemId& system) const {
        std::map<std::string, std::string> out;
        if (system.is_physician()) {
            for (const auto& r : records_) out.emplace(r.id, r.reference_answer);
            return out;
        }
        for (const auto& v : variants_) {
            if (v.system == system) out.emplace(v.record_id, v.text);
        }
        return out;
    }

    /// Same records/variants restricted to the given ids, original order kept.
    Corpus subset(const std::set<std::string>& ids) const {
        std::vector<QARecord> recs;
        for (const auto& r : records_) {
            if (ids.contains(r.id)) recs.push_back(r);
        }
        std::vector<ResponseVariant> vars;
        for (const auto& v : variants_) {
            if (ids.contains(v.record_id)) vars.push_back(v);
        }
        return Corpus(name_, std::move(recs), std::move(vars));
    }

    static std::string join(const std::vector<std::string>& items) {
        std::string out;
        for (std::size_t i = 0; i < items.size(); ++i) {
            if (i) out += ", ";
            out += items[i];
        }
        return out;
    }

private:
    std::string name_;
    std::vector<QARecord> records_;
    std::vector<ResponseVariant> variants_;
    std::unordered_map<std::string, std::size_t> index_;
};

namespace detail_ {

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::string required_string(const nlohmann::json& obj, const char* field, std::size_t line) {
    auto it = obj.find(field);
    if (it == obj.end() || it->is_null()) {
        throw DataError("line " + std::to_string(line) + ": missing required field \"" + field + "\"");
    }
    if (!it->is_string()) {
        throw DataError("line " + std::to_string(line) + ": field \"" + field + "\" must be a string");
    }
    return it->get<std::string>();
}

inline std::string optional_string(const nlohmann::json& obj, const char* field, std::size_t line) {
    auto it = obj.find(field);
    if (it == obj.end() || it->is_null()) return {};
    if (!it->is_string()) {
        throw DataError("line " + std::to_string(line) + ": field \"" + field + "\" must be a string");
    }
    return it->get<std::string>();
}

inline std::optional<Severity> severity_field(const std::string& raw, std::size_t line) {
    if (medcomm::detail::trim(raw).empty()) return std::nullopt;
    auto s = parse_severity(raw);
    if (!s) throw DataError("line " + std::to_string(line) + ": unknown severity \"" + raw + "\"");
    return s;
}

/// Iterates non-blank lines with their 1-based line numbers.
template <class Fn>
void for_each_line(std::string_view text, Fn&& fn) {
    std::size_t line = 0, start = 0;
    while (start <= text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        ++line;
        std::string_view row = text.substr(start, end - start);
        if (!row.empty() && row.back() == '\r') row.remove_suffix(1);
        if (!medcomm::detail::trim(row).empty()) fn(row, line);
        if (end == text.size()) break;
        start = end + 1;
    }
}

}  // namespace detail_

inline Corpus parse_corpus(std::string_view content, Format format, std::string name = "corpus") {
    content = detail::strip_bom(content);
    std::vector<QARecord> records;
    if (format == Format::Jsonl) {
        detail_::for_each_line(content, [&](std::string_view row, std::size_t line) {
            nlohmann::json obj;
            try {
                obj = nlohmann::json::parse(row);
            } catch (const nlohmann::json::parse_error& e) {
                throw DataError("line " + std::to_string(line) + ": invalid JSON (" + e.what() + ")");
            }
            if (!obj.is_object()) throw DataError("line " + std::to_string(line) + ": expected a JSON object");
            QARecord r;
            r.id = detail_::required_string(obj, "id", line);
            r.question = detail::trim(detail_::required_string(obj, "question", line));
            r.reference_answer = detail::trim(detail_::required_string(obj, "answer", line));
            r.source = detail_::optional_string(obj, "source", line);
            r.severity = detail_::severity_field(detail_::optional_string(obj, "severity", line), line);
            if (auto it = obj.find("meta"); it != obj.end() && !it->is_null()) {
                if (!it->is_object()) throw DataError("line " + std::to_string(line) + ": field \"meta\" must be an object");
                for (const auto& [k, v] : it->items()) {
                    if (!v.is_string()) {
                        throw DataError("line " + std::to_string(line) + ": meta value \"" + k + "\" must be a string");
                    }
                    r.metadata.emplace(k, v.get<std::string>());
                }
            }
            if (r.id.empty()) throw DataError("line " + std::to_string(line) + ": field \"id\" is empty");
            if (r.reference_answer.empty()) throw DataError("line " + std::to_string(line) + ": field \"answer\" is empty");
            records.push_back(std::move(r));
        });
    } else {
        auto rows = detail::parse_csv(content);
        if (rows.empty()) throw DataError("csv: header row required");
        const auto& header = rows.front().fields;
        std::map<std::string, std::size_t> col;
        for (std::size_t i = 0; i < header.size(); ++i) col.emplace(detail::to_lower(detail::trim(header[i])), i);
        for (const char* req : {"id", "question", "answer"}) {
            if (!col.contains(req)) throw DataError("csv header: missing required column \"" + std::string(req) + "\"");
        }
        for (std::size_t r = 1; r < rows.size(); ++r) {
            const auto& row = rows[r];
            auto get = [&](const char* name, bool required) -> std::string {
                auto it = col.find(name);
                if (it == col.end()) return {};
                if (it->second >= row.fields.size()) {
                    if (required) {
                        throw DataError("line " + std::to_string(row.line) + ": missing required field \"" + name + "\"");
                    }
                    return {};
                }
                return row.fields[it->second];
            };
            QARecord rec;
            rec.id = get("id", true);
            rec.question = detail::trim(get("question", true));
            rec.reference_answer = detail::trim(get("answer", true));
            rec.source = get("source", false);
            rec.severity = detail_::severity_field(get("severity", false), row.line);
            if (rec.id.empty()) throw DataError("line " + std::to_string(row.line) + ": field \"id\" is empty");
            if (rec.reference_answer.empty()) {
                throw DataError("line " + std::to_string(row.line) + ": missing required field \"answer\"");
            }
            records.push_back(std::move(rec));
        }
    }
    return Corpus(std::move(name), std::move(records));
}

inline Corpus load_corpus(const std::filesystem::path& path, Format format) {
    return parse_corpus(detail_::read_file(path), format, path.stem().string());
}

/// Guesses the format from the extension: ".csv" is CSV, anything else JSONL.
inline Format format_for(const std::filesystem::path& path) {
    return detail::to_lower(path.extension().string()) == ".csv" ? Format::Csv : Format::Jsonl;
}

inline std::string serialize_corpus(const Corpus& corpus, Format format) {
    std::string out;
    if (format == Format::Jsonl) {
        for (const auto& r : corpus.records()) {
            nlohmann::ordered_json obj;
            obj["id"] = r.id;
            obj["question"] = r.question;
            obj["answer"] = r.reference_answer;
            if (!r.source.empty()) obj["source"] = r.source;
            if (r.severity) obj["severity"] = to_string(*r.severity);
            if (!r.metadata.empty()) obj["meta"] = r.metadata;
            out += obj.dump();
            out += '\n';
        }
        return out;
    }
    out = "id,question,answer,source,severity\n";
    for (const auto& r : corpus.records()) {
        out += detail::csv_escape(r.id) + ',' + detail::csv_escape(r.question) + ',' +
               detail::csv_escape(r.reference_answer) + ',' + detail::csv_escape(r.source) + ',' +
               (r.severity ? std::string(to_string(*r.severity)) : std::string()) + '\n';
    }
    return out;
}

/// system -> (record id -> text), parsed from the response JSONL schema
/// {"id", "system", "text"}.
using ResponseSet = std::map<SystemId, std::map<std::string, std::string>>;

inline ResponseSet parse_responses(std::string_view content) {
    content = detail::strip_bom(content);
    ResponseSet out;
    detail_::for_each_line(content, [&](std::string_view row, std::size_t line) {
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(row);
        } catch (const nlohmann::json::parse_error& e) {
            throw DataError("line " + std::to_string(line) + ": invalid JSON (" + e.what() + ")");
        }
        if (!obj.is_object()) throw DataError("line " + std::to_string(line) + ": expected a JSON object");
        auto id = detail_::required_string(obj, "id", line);
        SystemId system;
        try {
            system = SystemId::parse(detail_::required_string(obj, "system", line));
        } catch (const DataError& e) {
            throw DataError("line " + std::to_string(line) + ": " + e.what());
        }
        if (system.is_physician()) {
            throw DataError("line " + std::to_string(line) + ": \"Physician Answer\" is reserved for corpus reference answers");
        }
        auto text = detail::trim(detail_::required_string(obj, "text", line));
        if (!out[system].emplace(id, std::move(text)).second) {
            throw DataError("line " + std::to_string(line) + ": duplicate response for (" + id + ", " + system.str() + ")");
        }
    });
    return out;
}

inline ResponseSet load_responses(const std::filesystem::path& path) {
    return parse_responses(detail_::read_file(path));
}

/// Returns a new corpus with `responses` attached under `system`. Existing
/// (id, system) variants are never overwritten.
inline Corpus attach_responses(const Corpus& corpus, const SystemId& system,
                               const std::map<std::string, std::string>& responses) {
    if (system.is_physician()) {
        throw DataError("cannot attach responses as \"Physician Answer\"");
    }
    std::vector<std::string> unknown;
    for (const auto& [id, text] : responses) {
        if (!corpus.find(id)) unknown.push_back(id);
    }
    if (!unknown.empty()) throw DataError("unknown record id(s) for " + system.str() + ": " + Corpus::join(unknown));

    std::vector<std::string> conflicts;
    for (const auto& v : corpus.variants()) {
        if (v.system == system && responses.contains(v.record_id)) conflicts.push_back(v.record_id);
    }
    if (!conflicts.empty()) {
        throw DataError("conflict: " + system.str() + " already has responses for " + Corpus::join(conflicts));
    }

    auto variants = corpus.variants();
    // Attach in corpus record order so variant order is independent of map order.
    for (const auto& r : corpus.records()) {
        if (auto it = responses.find(r.id); it != responses.end()) {
            variants.push_back({r.id, system, it->second});
        }
    }
    return Corpus(corpus.name(), corpus.records(), std::move(variants));
}

inline Corpus attach_all(Corpus corpus, const ResponseSet& set) {
    for (const auto& [system, responses] : set) corpus = attach_responses(corpus, system, responses);
    return corpus;
}

struct SystemCoverage {
    SystemId system;
    std::vector<std::string> covered;  // corpus order
    std::vector<std::string> missing;  // corpus order
    bool pair_complete = false;
};

struct AlignmentReport {
    std::size_t record_count = 0;
    std::vector<SystemCoverage> systems;  // sorted by canonical id

    const SystemCoverage* find(const SystemId& id) const {
        for (const auto& s : systems) {
            if (s.system == id) return &s;
        }
        return nullptr;
    }
};

inline AlignmentReport validate_alignment(const Corpus& corpus) {
    AlignmentReport report;
    report.record_count = corpus.size();
    for (const auto& system : corpus.systems()) {
        std::set<std::string> have;
        for (const auto& v : corpus.variants()) {
            if (v.system == system) have.insert(v.record_id);
        }
        SystemCoverage cov{system, {}, {}, false};
        for (const auto& r : corpus.records()) {
            (have.contains(r.id) ? cov.covered : cov.missing).push_back(r.id);
        }
        cov.pair_complete = cov.covered.size() == corpus.size();
        report.systems.push_back(std::move(cov));
    }
    return report;
}

inline nlohmann::ordered_json to_json(const AlignmentReport& report) {
    nlohmann::ordered_json j;
    j["records"] = report.record_count;
    j["systems"] = nlohmann::ordered_json::array();
    for (const auto& s : report.systems) {
        j["systems"].push_back({{"system", s.system.str()},
                                {"covered", s.covered.size()},
                                {"missing", s.missing},
                                {"pair_complete", s.pair_complete}});
    }
    return j;
}

/// Throws unless every listed system covers every record (or allow_partial).
inline void require_pair_complete(const Corpus& corpus, const std::vector<SystemId>& systems, bool allow_partial) {
    if (allow_partial) return;
    auto report = validate_alignment(corpus);
    std::vector<std::string> bad;
    for (const auto& s : systems) {
        if (s.is_physician()) continue;
        const auto* cov = report.find(s);
        if (!cov || !cov->pair_complete) {
            bad.push_back(s.str() + " (missing " + std::to_string(cov ? cov->missing.size() : corpus.size()) + ")");
        }
    }
    if (!bad.empty()) throw DataError("systems not pair-complete: " + Corpus::join(bad));
}

}  // namespace medcomm::corpus
