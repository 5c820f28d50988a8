#pragma once

// Representative subset selection over linguistic features.
//
// Per record the feature row is (FKGL, GFI, lexical representativeness,
// answer length in words). Lexical representativeness is the cosine between
// the record's TF-IDF vector and the corpus TF-IDF centroid.
//
// Two procedures:
//   select_subset               features -> IQR filter on FKGL/GFI ->
//                               z-score -> k-means -> closest member per cluster
//   stratified_representatives  the same per severity class, k = quota,
//                               IQR filtering off unless requested

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "medcomm/corpus.hpp"
#include "medcomm/detail/parallel.hpp"
#include "medcomm/error.hpp"
#include "medcomm/textmetrics.hpp"

namespace medcomm::sampler {

inline constexpr std::size_t kFeatureCount = 4;
enum Feature : std::size_t { Fkgl = 0, Gfi = 1, LexicalRepr = 2, AnswerLength = 3 };
inline constexpr std::array<const char*, kFeatureCount> kFeatureNames = {"fkgl", "gfi", "lexical_repr",
                                                                        "answer_length"};

using FeatureRow = std::array<double, kFeatureCount>;

enum class Target { Question, Answer };

struct FeatureMatrix {
    std::vector<std::string> record_ids;
    std::vector<FeatureRow> rows;
    bool normalized = false;
    std::array<bool, kFeatureCount> zero_variance{};  // set by zscore_normalize
    std::vector<std::pair<std::string, std::string>> skipped;  // (id, reason)

    std::size_t size() const { return rows.size(); }

    FeatureMatrix select(const std::vector<std::size_t>& keep) const {
        FeatureMatrix out;
        out.normalized = normalized;
        out.zero_variance = zero_variance;
        out.skipped = skipped;
        for (auto i : keep) {
            out.record_ids.push_back(record_ids[i]);
            out.rows.push_back(rows[i]);
        }
        return out;
    }
};

struct SamplerConfig {
    std::size_t k = 50;
    std::uint64_t seed = 42;
    double iqr_multiplier = 1.5;
    std::size_t max_iterations = 300;
    std::size_t per_class_quota = 10;
    std::size_t restarts = 10;           // k-means++ restarts, lowest SSE kept
    bool apply_iqr = true;               // select_subset
    bool stratified_iqr = false;         // stratified_representatives
    Target target = Target::Answer;
    std::size_t threads = 1;
};

struct Selection {
    std::vector<std::string> chosen_ids;                   // sorted
    std::map<std::string, std::size_t> cluster_assignment;  // id -> cluster
    std::vector<std::string> excluded_outliers;             // sorted
    std::vector<std::pair<std::string, std::string>> skipped;
};

// ---------------------------------------------------------------------------
// Features
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::string> lower_tokens(std::string_view text) {
    auto seg = textmetrics::segment(text);
    std::vector<std::string> out;
    out.reserve(seg.words.size());
    for (auto& w : seg.words) out.push_back(textmetrics::detail::lower_ascii(w.text));
    return out;
}

}  // namespace detail

/// Lexical representativeness of each document: cosine between its TF-IDF
/// vector (raw counts x (ln(N/df) + 1)) and the mean TF-IDF vector.
inline std::vector<double> lexical_representativeness(const std::vector<std::vector<std::string>>& docs) {
    const std::size_t n = docs.size();
    if (n == 0) return {};
    std::map<std::string, std::size_t> vocab;
    for (const auto& d : docs) {
        for (const auto& t : d) vocab.emplace(t, 0);
    }
    std::size_t next = 0;
    for (auto& [t, id] : vocab) id = next++;

    std::vector<std::map<std::size_t, double>> tf(n);
    std::vector<std::size_t> df(vocab.size(), 0);
    for (std::size_t i = 0; i < n; ++i) {
        for (const auto& t : docs[i]) tf[i][vocab.at(t)] += 1.0;
        for (const auto& [id, c] : tf[i]) ++df[id];
    }
    std::vector<double> idf(vocab.size());
    for (std::size_t t = 0; t < idf.size(); ++t) {
        idf[t] = std::log(static_cast<double>(n) / static_cast<double>(df[t])) + 1.0;
    }
    std::vector<double> centroid(vocab.size(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (auto& [id, v] : tf[i]) {
            v *= idf[id];
            centroid[id] += v;
        }
    }
    double cnorm = 0.0;
    for (auto& c : centroid) {
        c /= static_cast<double>(n);
        cnorm += c * c;
    }
    cnorm = std::sqrt(cnorm);

    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double dot = 0.0, dn = 0.0;
        for (const auto& [id, v] : tf[i]) {
            dot += v * centroid[id];
            dn += v * v;
        }
        if (dn == 0.0 || cnorm == 0.0) continue;
        out[i] = std::clamp(dot / (std::sqrt(dn) * cnorm), -1.0, 1.0);
    }
    return out;
}

inline FeatureMatrix extract_features(const corpus::Corpus& corpus, Target target, std::size_t threads = 1) {
    if (corpus.empty()) throw DataError("extract_features: empty corpus");
    const auto& recs = corpus.records();
    struct Row {
        textmetrics::TextStats stats;
        std::int64_t answer_words = 0;
        std::vector<std::string> tokens;
    };
    std::vector<Row> rows(recs.size());
    medcomm::detail::parallel_for(recs.size(), threads, [&](std::size_t i) {
        const auto& text = target == Target::Question ? recs[i].question : recs[i].reference_answer;
        rows[i].stats = textmetrics::analyze_text(text);
        rows[i].answer_words = target == Target::Answer ? rows[i].stats.words
                                                        : textmetrics::analyze_text(recs[i].reference_answer).words;
        rows[i].tokens = detail::lower_tokens(text);
    });

    FeatureMatrix m;
    std::vector<std::vector<std::string>> docs;
    for (std::size_t i = 0; i < recs.size(); ++i) {
        if (rows[i].stats.words == 0) {
            m.skipped.emplace_back(recs[i].id, std::string(target == Target::Question ? "question" : "answer") +
                                                   " has no words; readability undefined");
            continue;
        }
        auto r = textmetrics::readability(rows[i].stats);
        m.record_ids.push_back(recs[i].id);
        m.rows.push_back({r.fkgl, r.gfi, 0.0, static_cast<double>(rows[i].answer_words)});
        docs.push_back(std::move(rows[i].tokens));
    }
    auto lex = lexical_representativeness(docs);
    for (std::size_t i = 0; i < m.rows.size(); ++i) m.rows[i][LexicalRepr] = lex[i];
    return m;
}

// ---------------------------------------------------------------------------
// Filtering and normalization
// ---------------------------------------------------------------------------

/// Quantile by linear interpolation between order statistics (type 7).
inline double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw DataError("quantile: empty sample");
    std::sort(values.begin(), values.end());
    double h = (static_cast<double>(values.size()) - 1.0) * q;
    auto lo = static_cast<std::size_t>(std::floor(h));
    auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

struct Fences {
    double lower = 0.0;
    double upper = 0.0;
};

inline Fences iqr_fences(const std::vector<double>& values, double multiplier) {
    double q1 = quantile(values, 0.25), q3 = quantile(values, 0.75);
    double iqr = q3 - q1;
    return {q1 - multiplier * iqr, q3 + multiplier * iqr};
}

struct FilterResult {
    FeatureMatrix kept;
    std::vector<std::string> excluded;  // matrix order
};

/// Drops any record outside the fences of FKGL or of GFI (fences computed
/// independently per column).
inline FilterResult iqr_filter(const FeatureMatrix& matrix, double multiplier = 1.5,
                               std::span<const Feature> columns = std::array{Fkgl, Gfi}) {
    if (matrix.size() < 4) {
        throw DataError("iqr_filter: need at least 4 records, got " + std::to_string(matrix.size()));
    }
    if (!(multiplier > 0.0)) throw ConfigError("iqr_filter: multiplier must be positive");
    std::vector<bool> out(matrix.size(), false);
    for (auto col : columns) {
        std::vector<double> v;
        v.reserve(matrix.size());
        for (const auto& r : matrix.rows) v.push_back(r[col]);
        auto f = iqr_fences(v, multiplier);
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (v[i] < f.lower || v[i] > f.upper) out[i] = true;
        }
    }
    FilterResult res;
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < matrix.size(); ++i) {
        if (out[i]) res.excluded.push_back(matrix.record_ids[i]);
        else keep.push_back(i);
    }
    res.kept = matrix.select(keep);
    return res;
}

/// Per-column (x - mean) / population sd. Constant columns become zeros and
/// are flagged in zero_variance.
inline FeatureMatrix zscore_normalize(const FeatureMatrix& matrix) {
    if (matrix.size() < 2) throw DataError("zscore_normalize: need at least 2 records");
    FeatureMatrix out = matrix;
    const double n = static_cast<double>(matrix.size());
    for (std::size_t c = 0; c < kFeatureCount; ++c) {
        double sum = 0.0;
        for (const auto& r : matrix.rows) sum += r[c];
        double mean = sum / n;
        double ss = 0.0;
        for (const auto& r : matrix.rows) ss += (r[c] - mean) * (r[c] - mean);
        double sd = std::sqrt(ss / n);
        out.zero_variance[c] = sd == 0.0;
        for (std::size_t i = 0; i < matrix.size(); ++i) {
            out.rows[i][c] = sd == 0.0 ? 0.0 : (matrix.rows[i][c] - mean) / sd;
        }
    }
    out.normalized = true;
    return out;
}

// ---------------------------------------------------------------------------
// k-means
// ---------------------------------------------------------------------------

template <std::size_t D>
struct Clustering {
    std::vector<std::size_t> assignments;
    std::vector<std::array<double, D>> centroids;
    double sse = 0.0;
    std::size_t iterations = 0;
};

namespace detail {

template <std::size_t D>
double sq_dist(const std::array<double, D>& a, const std::array<double, D>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < D; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s;
}

// Portable uniform [0,1): std distributions are implementation-defined.
inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

template <std::size_t D>
std::vector<std::array<double, D>> kmeanspp_init(std::span<const std::array<double, D>> pts, std::size_t k,
                                                 std::mt19937_64& rng) {
    const std::size_t n = pts.size();
    std::vector<std::array<double, D>> centers;
    std::vector<bool> taken(n, false);
    auto first = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n));
    first = std::min(first, n - 1);
    centers.push_back(pts[first]);
    taken[first] = true;
    std::vector<double> d2(n);
    for (std::size_t i = 0; i < n; ++i) d2[i] = sq_dist(pts[i], centers.back());
    while (centers.size() < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) total += taken[i] ? 0.0 : d2[i];
        std::size_t pick = n;
        if (total > 0.0) {
            double r = uniform01(rng) * total, acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (taken[i] || d2[i] == 0.0) continue;
                acc += d2[i];
                pick = i;
                if (acc > r) break;
            }
        } else {
            // Remaining points coincide with chosen centers; pick an unused index.
            std::size_t remaining = 0;
            for (std::size_t i = 0; i < n; ++i) remaining += taken[i] ? 0 : 1;
            auto nth = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(remaining));
            for (std::size_t i = 0; i < n; ++i) {
                if (taken[i]) continue;
                if (nth-- == 0) {
                    pick = i;
                    break;
                }
            }
        }
        taken[pick] = true;
        centers.push_back(pts[pick]);
        for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], sq_dist(pts[i], centers.back()));
    }
    return centers;
}

template <std::size_t D>
Clustering<D> lloyd(std::span<const std::array<double, D>> pts, std::vector<std::array<double, D>> centroids,
                    std::size_t max_iterations, std::size_t threads) {
    const std::size_t n = pts.size(), k = centroids.size();
    Clustering<D> c;
    c.assignments.assign(n, k);  // sentinel: unassigned
    std::vector<std::size_t> next(n);
    std::vector<double> dist(n);

    auto recompute = [&] {
        std::vector<std::array<double, D>> sum(k, std::array<double, D>{});
        std::vector<std::size_t> count(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            auto a = c.assignments[i];
            for (std::size_t d = 0; d < D; ++d) sum[a][d] += pts[i][d];
            ++count[a];
        }
        for (std::size_t j = 0; j < k; ++j) {
            if (count[j] == 0) continue;
            for (std::size_t d = 0; d < D; ++d) centroids[j][d] = sum[j][d] / static_cast<double>(count[j]);
        }
    };

    for (std::size_t iter = 0; iter < std::max<std::size_t>(1, max_iterations); ++iter) {
        medcomm::detail::parallel_for(n, threads, [&](std::size_t i) {
            std::size_t best = 0;
            double bd = sq_dist(pts[i], centroids[0]);
            for (std::size_t j = 1; j < k; ++j) {
                double d = sq_dist(pts[i], centroids[j]);
                if (d < bd) {
                    bd = d;
                    best = j;
                }
            }
            next[i] = best;
            dist[i] = bd;
        });
        c.iterations = iter + 1;
        bool changed = next != c.assignments;
        c.assignments = next;

        // Re-seed empty clusters with the point farthest from its centroid,
        // taken from a cluster that keeps at least one member.
        std::vector<std::size_t> count(k, 0);
        for (auto a : c.assignments) ++count[a];
        bool reseeded = false;
        for (std::size_t j = 0; j < k; ++j) {
            if (count[j] > 0) continue;
            std::size_t far = n;
            for (std::size_t i = 0; i < n; ++i) {
                if (count[c.assignments[i]] < 2) continue;
                if (far == n || dist[i] > dist[far]) far = i;
            }
            if (far == n) break;  // fewer distinct members than clusters; cannot happen when n >= k
            --count[c.assignments[far]];
            c.assignments[far] = j;
            count[j] = 1;
            dist[far] = 0.0;
            centroids[j] = pts[far];
            reseeded = true;
        }
        recompute();
        if (!changed && !reseeded) break;
    }
    c.centroids = std::move(centroids);
    c.sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) c.sse += sq_dist(pts[i], c.centroids[c.assignments[i]]);
    return c;
}

}  // namespace detail

/// Seeded k-means++ / Lloyd clustering; the lowest-SSE of `restarts` runs is
/// returned. Deterministic for a given seed and independent of `threads`.
template <std::size_t D>
Clustering<D> kmeans_cluster(std::span<const std::array<double, D>> points, std::size_t k, std::uint64_t seed,
                             std::size_t max_iterations = 300, std::size_t restarts = 10, std::size_t threads = 1) {
    if (k == 0) throw ConfigError("kmeans: k must be >= 1");
    if (points.size() < k) {
        throw DataError("kmeans: " + std::to_string(points.size()) + " records is fewer than k=" + std::to_string(k));
    }
    std::mt19937_64 rng(seed);
    Clustering<D> best;
    bool have = false;
    for (std::size_t r = 0; r < std::max<std::size_t>(1, restarts); ++r) {
        auto init = detail::kmeanspp_init(points, k, rng);
        auto c = detail::lloyd(points, std::move(init), max_iterations, threads);
        if (!have || c.sse < best.sse) {
            best = std::move(c);
            have = true;
        }
    }
    return best;
}

inline Clustering<kFeatureCount> kmeans_cluster(const FeatureMatrix& matrix, const SamplerConfig& config) {
    return kmeans_cluster<kFeatureCount>(matrix.rows, config.k, config.seed, config.max_iterations, config.restarts,
                                         config.threads);
}

/// Per cluster, the member nearest its centroid; ties go to the smaller id.
template <std::size_t D>
Selection select_representatives(std::span<const std::string> ids, std::span<const std::array<double, D>> points,
                                 const Clustering<D>& clustering) {
    const std::size_t k = clustering.centroids.size();
    std::vector<std::size_t> best(k, points.size());
    std::vector<double> best_d(k, std::numeric_limits<double>::infinity());
    Selection sel;
    for (std::size_t i = 0; i < points.size(); ++i) {
        auto c = clustering.assignments[i];
        sel.cluster_assignment[ids[i]] = c;
        double d = detail::sq_dist(points[i], clustering.centroids[c]);
        if (d < best_d[c] || (d == best_d[c] && best[c] < points.size() && ids[i] < ids[best[c]])) {
            best_d[c] = d;
            best[c] = i;
        }
    }
    for (auto b : best) {
        if (b < points.size()) sel.chosen_ids.push_back(ids[b]);
    }
    std::sort(sel.chosen_ids.begin(), sel.chosen_ids.end());
    return sel;
}

inline Selection select_representatives(const FeatureMatrix& matrix, const Clustering<kFeatureCount>& clustering) {
    return select_representatives<kFeatureCount>(matrix.record_ids, matrix.rows, clustering);
}

// ---------------------------------------------------------------------------
// Procedures
// ---------------------------------------------------------------------------

/// extract -> (IQR filter) -> z-score -> k-means -> nearest member per cluster.
inline Selection select_subset(const corpus::Corpus& corpus, const SamplerConfig& config) {
    auto features = extract_features(corpus, config.target, config.threads);
    std::vector<std::string> excluded;
    if (config.apply_iqr && features.size() >= 4) {
        auto filtered = iqr_filter(features, config.iqr_multiplier);
        excluded = std::move(filtered.excluded);
        features = std::move(filtered.kept);
    }
    if (features.size() < config.k) {
        throw DataError("sample: " + std::to_string(features.size()) + " records remain after filtering, fewer than k=" +
                        std::to_string(config.k));
    }
    auto z = features.size() >= 2 ? zscore_normalize(features) : features;
    auto clustering = kmeans_cluster(z, config);
    auto sel = select_representatives(z, clustering);
    std::sort(excluded.begin(), excluded.end());
    sel.excluded_outliers = std::move(excluded);
    sel.skipped = features.skipped;
    return sel;
}

/// Per severity class: features and normalization within the class, k-means
/// with k = quota, one representative per cluster. Union of all classes.
inline Selection stratified_representatives(const corpus::Corpus& corpus, const SamplerConfig& config) {
    if (config.per_class_quota == 0) throw ConfigError("stratified: quota must be >= 1");
    std::vector<std::string> unlabeled;
    std::array<std::set<std::string>, 5> classes;
    for (const auto& r : corpus.records()) {
        if (!r.severity) unlabeled.push_back(r.id);
        else classes[static_cast<std::size_t>(*r.severity)].insert(r.id);
    }
    if (!unlabeled.empty()) throw DataError("stratified: records without severity: " + corpus::Corpus::join(unlabeled));
    for (std::size_t c = 0; c < 5; ++c) {
        if (classes[c].size() < config.per_class_quota) {
            throw DataError("stratified: class " + std::string(corpus::to_string(corpus::kSeverities[c])) + " has " +
                            std::to_string(classes[c].size()) + " records, quota " +
                            std::to_string(config.per_class_quota));
        }
    }

    std::array<Selection, 5> per_class;
    medcomm::detail::parallel_for(5, config.threads, [&](std::size_t c) {
        auto sub = corpus.subset(classes[c]);
        auto features = extract_features(sub, config.target, 1);
        std::vector<std::string> excluded;
        if (config.stratified_iqr && features.size() >= 4) {
            auto filtered = iqr_filter(features, config.iqr_multiplier);
            excluded = std::move(filtered.excluded);
            features = std::move(filtered.kept);
        }
        auto cls = std::string(corpus::to_string(corpus::kSeverities[c]));
        if (features.size() < config.per_class_quota) {
            throw DataError("stratified: class " + cls + " has " + std::to_string(features.size()) +
                            " usable records, quota " + std::to_string(config.per_class_quota));
        }
        auto z = features.size() >= 2 ? zscore_normalize(features) : features;
        auto clustering = kmeans_cluster<kFeatureCount>(z.rows, config.per_class_quota,
                                                        detail::mix_seed(config.seed, c), config.max_iterations,
                                                        config.restarts, 1);
        per_class[c] = select_representatives(z, clustering);
        per_class[c].excluded_outliers = std::move(excluded);
        per_class[c].skipped = features.skipped;
    });

    Selection out;
    for (std::size_t c = 0; c < 5; ++c) {
        auto& s = per_class[c];
        out.chosen_ids.insert(out.chosen_ids.end(), s.chosen_ids.begin(), s.chosen_ids.end());
        for (auto& [id, cl] : s.cluster_assignment) out.cluster_assignment[id] = c * config.per_class_quota + cl;
        out.excluded_outliers.insert(out.excluded_outliers.end(), s.excluded_outliers.begin(), s.excluded_outliers.end());
        out.skipped.insert(out.skipped.end(), s.skipped.begin(), s.skipped.end());
    }
    std::sort(out.chosen_ids.begin(), out.chosen_ids.end());
    std::sort(out.excluded_outliers.begin(), out.excluded_outliers.end());
    return out;
}

inline nlohmann::ordered_json to_json(const Selection& sel, const SamplerConfig& config, bool stratified) {
    nlohmann::ordered_json j;
    j["chosen"] = sel.chosen_ids;
    j["excluded_outliers"] = sel.excluded_outliers;
    j["clusters"] = nlohmann::ordered_json::object();
    for (const auto& [id, c] : sel.cluster_assignment) j["clusters"][id] = c;
    j["config"] = {{"mode", stratified ? "stratified" : "kmeans"},
                   {"k", stratified ? config.per_class_quota : config.k},
                   {"seed", config.seed},
                   {"iqr_multiplier", config.iqr_multiplier},
                   {"iqr", stratified ? config.stratified_iqr : config.apply_iqr},
                   {"max_iterations", config.max_iterations},
                   {"restarts", config.restarts},
                   {"per_class_quota", config.per_class_quota},
                   {"target", config.target == Target::Question ? "question" : "answer"}};
    return j;
}

}  // namespace medcomm::sampler
