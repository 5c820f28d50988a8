#pragma once

// Descriptive statistics, two-sided paired t-tests, Benjamini-Hochberg
// adjustment, Pearson chi-square with Cramer's V, and pairwise comparison
// matrices across systems.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "medcomm/detail/parallel.hpp"
#include "medcomm/error.hpp"

namespace medcomm::stats {

struct DescriptiveSummary {
    std::size_t n = 0;
    double mean = 0.0;
    std::optional<double> std;  // sample (n-1) deviation; empty when n < 2
};

inline DescriptiveSummary descriptive(std::span<const double> values) {
    if (values.empty()) throw DataError("descriptive: empty sample");
    DescriptiveSummary out;
    out.n = values.size();
    double sum = 0.0;
    for (double v : values) sum += v;
    out.mean = sum / static_cast<double>(out.n);
    if (out.n >= 2) {
        double ss = 0.0;
        for (double v : values) ss += (v - out.mean) * (v - out.mean);
        out.std = std::sqrt(ss / static_cast<double>(out.n - 1));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Special functions
// ---------------------------------------------------------------------------

namespace detail {

// Continued fraction for the incomplete beta function (modified Lentz).
inline double beta_cf(double a, double b, double x) {
    constexpr int kMaxIter = 20000;
    constexpr double kEps = 1e-16;
    constexpr double kTiny = 1e-300;
    double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) break;
    }
    return h;
}

}  // namespace detail

/// Regularized incomplete beta I_x(a, b).
inline double incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::beta_cf(a, b, x) / a;
    return 1.0 - front * detail::beta_cf(b, a, 1.0 - x) / b;
}

/// Two-sided tail probability P(|T| >= |t|) for Student's t with df degrees.
inline double student_t_two_sided(double t, double df) {
    if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
    if (std::isinf(t)) return 0.0;
    double p = incomplete_beta(0.5 * df, 0.5, df / (df + t * t));
    return std::clamp(p, 0.0, 1.0);
}

/// Regularized upper incomplete gamma Q(a, x).
inline double upper_incomplete_gamma(double a, double x) {
    if (x <= 0.0) return 1.0;
    constexpr int kMaxIter = 20000;
    constexpr double kEps = 1e-16;
    double gln = std::lgamma(a);
    if (x < a + 1.0) {
        double ap = a, sum = 1.0 / a, del = sum;
        for (int n = 0; n < kMaxIter; ++n) {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if (std::fabs(del) < std::fabs(sum) * kEps) break;
        }
        return std::clamp(1.0 - sum * std::exp(-x + a * std::log(x) - gln), 0.0, 1.0);
    }
    constexpr double kTiny = 1e-300;
    double b = x + 1.0 - a, c = 1.0 / kTiny, d = 1.0 / b, h = d;
    for (int i = 1; i <= kMaxIter; ++i) {
        double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = b + an / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) break;
    }
    return std::clamp(std::exp(-x + a * std::log(x) - gln) * h, 0.0, 1.0);
}

/// Upper tail of the chi-square distribution.
inline double chi_square_sf(double chi2, double dof) {
    if (dof <= 0.0) return 1.0;
    return upper_incomplete_gamma(0.5 * dof, 0.5 * chi2);
}

// ---------------------------------------------------------------------------
// Paired t-test
// ---------------------------------------------------------------------------

struct PairedTestResult {
    double t_stat = 0.0;
    double p_value = 1.0;
    std::size_t df = 0;
    double mean_diff = 0.0;
    /// All differences equal and nonzero: t is infinite, p reported as 0.
    bool degenerate = false;
};

inline PairedTestResult paired_t_test(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) {
        throw DataError("paired_t_test: length mismatch (" + std::to_string(x.size()) + " vs " +
                        std::to_string(y.size()) + ")");
    }
    if (x.size() < 2) throw DataError("paired_t_test: need at least 2 pairs");
    const std::size_t n = x.size();
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(x[i]) || !std::isfinite(y[i])) throw DataError("paired_t_test: non-finite value");
        d[i] = x[i] - y[i];
    }
    PairedTestResult r;
    r.df = n - 1;
    double sum = 0.0;
    for (double v : d) sum += v;
    r.mean_diff = sum / static_cast<double>(n);

    bool all_equal = std::all_of(d.begin(), d.end(), [&](double v) { return v == d.front(); });
    if (all_equal) {
        if (d.front() == 0.0) {
            r.t_stat = 0.0;
            r.p_value = 1.0;
        } else {
            r.t_stat = std::copysign(std::numeric_limits<double>::infinity(), d.front());
            r.p_value = 0.0;
            r.degenerate = true;
        }
        return r;
    }
    double ss = 0.0;
    for (double v : d) ss += (v - r.mean_diff) * (v - r.mean_diff);
    double sd = std::sqrt(ss / static_cast<double>(n - 1));
    r.t_stat = r.mean_diff / (sd / std::sqrt(static_cast<double>(n)));
    r.p_value = student_t_two_sided(r.t_stat, static_cast<double>(r.df));
    return r;
}

// ---------------------------------------------------------------------------
// Benjamini-Hochberg
// ---------------------------------------------------------------------------

/// Step-up BH adjusted p-values, returned in input order.
inline std::vector<double> bh_adjust(std::span<const double> p) {
    for (double v : p) {
        if (!(v >= 0.0 && v <= 1.0)) throw DataError("bh_adjust: p-value outside [0,1]");
    }
    const std::size_t m = p.size();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });
    std::vector<double> adj(m);
    double running = 1.0;
    for (std::size_t k = m; k-- > 0;) {
        std::size_t idx = order[k];
        double cand = std::min(1.0, p[idx] * (static_cast<double>(m) / static_cast<double>(k + 1)));
        running = std::min(running, cand);
        adj[idx] = running;
    }
    return adj;
}

inline std::string stars(double p) {
    if (p < 0.001) return "***";
    if (p < 0.01) return "**";
    if (p < 0.05) return "*";
    return "";
}

// ---------------------------------------------------------------------------
// Chi-square / Cramer's V
// ---------------------------------------------------------------------------

struct ContingencyResult {
    double chi2 = 0.0;
    double p_value = 1.0;
    std::size_t dof = 0;
    double cramers_v = 0.0;
    std::int64_t n = 0;
    bool low_expected = false;         // some expected count < 5
    std::size_t dropped_columns = 0;   // all-zero columns removed before testing
};

using CountTable = std::vector<std::vector<std::int64_t>>;

/// Pearson chi-square (no continuity correction) on an r x c count table.
/// `row_names` is only used for error messages.
inline ContingencyResult chi_square_cramers_v(const CountTable& table, std::span<const std::string> row_names = {}) {
    const std::size_t r = table.size();
    if (r < 2) throw DataError("chi_square: need at least 2 rows");
    const std::size_t c = table.front().size();
    if (c < 2) throw DataError("chi_square: need at least 2 columns");
    for (const auto& row : table) {
        if (row.size() != c) throw DataError("chi_square: ragged table");
        for (auto v : row) {
            if (v < 0) throw DataError("chi_square: negative count");
        }
    }
    std::vector<std::int64_t> row_sum(r, 0), col_sum(c, 0);
    std::int64_t n = 0;
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
            row_sum[i] += table[i][j];
            col_sum[j] += table[i][j];
        }
        if (row_sum[i] == 0) {
            std::string name = i < row_names.size() ? row_names[i] : "row " + std::to_string(i);
            throw DataError("chi_square: " + name + " has no observations");
        }
        n += row_sum[i];
    }
    std::vector<std::size_t> cols;
    for (std::size_t j = 0; j < c; ++j) {
        if (col_sum[j] > 0) cols.push_back(j);
    }
    ContingencyResult out;
    out.n = n;
    out.dropped_columns = c - cols.size();
    if (cols.size() < 2) {
        // Every observation falls in one category: no association to measure.
        return out;
    }
    // chi2 = n (sum O^2 / (R C) - 1); integer products keep each term to one
    // rounding, so perfect association gives V = 1 exactly.
    bool independent = true;
    double sum = 0.0;
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j : cols) {
            double expected = static_cast<double>(row_sum[i]) * static_cast<double>(col_sum[j]) / static_cast<double>(n);
            if (expected < 5.0) out.low_expected = true;
            independent = independent && table[i][j] * n == row_sum[i] * col_sum[j];
            sum += static_cast<double>(table[i][j] * table[i][j]) / static_cast<double>(row_sum[i] * col_sum[j]);
        }
    }
    double chi2 = independent ? 0.0 : std::max(0.0, static_cast<double>(n) * (sum - 1.0));
    out.chi2 = chi2;
    out.dof = (r - 1) * (cols.size() - 1);
    out.p_value = chi_square_sf(chi2, static_cast<double>(out.dof));
    double k = static_cast<double>(std::min(r - 1, cols.size() - 1));
    out.cramers_v = std::clamp(std::sqrt(chi2 / static_cast<double>(n) / k), 0.0, 1.0);
    return out;
}

// ---------------------------------------------------------------------------
// Pairwise matrices
// ---------------------------------------------------------------------------

enum class CompareKind { TTest, Contingency };

/// One system's per-record values. For contingency comparisons the values
/// are category codes (e.g. sentiment class indices).
struct ScoreColumn {
    std::string system;
    std::map<std::string, double> values;  // record id -> value
};
using ScoreTable = std::vector<ScoreColumn>;

template <class T>
using Square = std::vector<std::vector<T>>;

struct PairwiseMatrix {
    CompareKind kind = CompareKind::TTest;
    std::vector<std::string> labels;
    Square<double> mean_diff;  // row minus column
    Square<double> statistic;  // t (antisymmetric) or chi-square (symmetric)
    Square<double> effect;     // Cramer's V for contingency; zero for t-tests
    Square<double> p_raw;
    Square<double> p_adj;
    Square<std::string> stars;
};

inline PairwiseMatrix pairwise_compare(const ScoreTable& table, CompareKind kind, std::size_t threads = 1) {
    const std::size_t k = table.size();
    if (k < 2) throw DataError("pairwise_compare: need at least 2 systems");

    if (kind == CompareKind::TTest) {
        std::vector<std::string> bad;
        for (std::size_t i = 1; i < k; ++i) {
            bool same = table[i].values.size() == table[0].values.size() &&
                        std::equal(table[i].values.begin(), table[i].values.end(), table[0].values.begin(),
                                   [](const auto& a, const auto& b) { return a.first == b.first; });
            if (!same) bad.push_back(table[i].system);
        }
        if (!bad.empty()) {
            std::string msg = "pairwise_compare: record sets differ from " + table[0].system + " for:";
            for (const auto& b : bad) msg += " " + b;
            throw DataError(msg);
        }
    }

    PairwiseMatrix m;
    m.kind = kind;
    for (const auto& col : table) m.labels.push_back(col.system);
    auto square = [k](auto fill) { return Square<decltype(fill)>(k, std::vector<decltype(fill)>(k, fill)); };
    m.mean_diff = square(0.0);
    m.statistic = square(0.0);
    m.effect = square(0.0);
    m.p_raw = square(1.0);
    m.p_adj = square(1.0);
    m.stars = square(std::string());

    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = i + 1; j < k; ++j) pairs.emplace_back(i, j);
    }

    auto values_of = [&](std::size_t i) {
        std::vector<double> v;
        v.reserve(table[i].values.size());
        for (const auto& [id, x] : table[i].values) v.push_back(x);
        return v;
    };
    auto mean_of = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x;
        return v.empty() ? 0.0 : s / static_cast<double>(v.size());
    };

    // Shared category axis for contingency tables.
    std::vector<double> categories;
    if (kind == CompareKind::Contingency) {
        std::set<double> cats;
        for (const auto& col : table) {
            if (col.values.empty()) throw DataError("pairwise_compare: " + col.system + " has no observations");
            for (const auto& [id, x] : col.values) cats.insert(x);
        }
        categories.assign(cats.begin(), cats.end());
    }

    struct PairOut {
        double diff = 0, stat = 0, effect = 0, p = 1;
    };
    std::vector<PairOut> out(pairs.size());
    medcomm::detail::parallel_for(pairs.size(), threads, [&](std::size_t idx) {
        auto [i, j] = pairs[idx];
        auto xi = values_of(i), xj = values_of(j);
        if (kind == CompareKind::TTest) {
            auto r = paired_t_test(xi, xj);
            out[idx] = {r.mean_diff, r.t_stat, 0.0, r.p_value};
        } else {
            CountTable ct(2, std::vector<std::int64_t>(categories.size(), 0));
            for (int row = 0; row < 2; ++row) {
                for (double x : row == 0 ? xi : xj) {
                    auto pos = std::lower_bound(categories.begin(), categories.end(), x) - categories.begin();
                    ++ct[row][static_cast<std::size_t>(pos)];
                }
            }
            std::vector<std::string> names = {table[i].system, table[j].system};
            ContingencyResult r;
            if (categories.size() >= 2) r = chi_square_cramers_v(ct, names);
            out[idx] = {mean_of(xi) - mean_of(xj), r.chi2, r.cramers_v, r.p_value};
        }
    });

    std::vector<double> raw;
    raw.reserve(out.size());
    for (const auto& o : out) raw.push_back(o.p);
    auto adj = bh_adjust(raw);

    for (std::size_t idx = 0; idx < pairs.size(); ++idx) {
        auto [i, j] = pairs[idx];
        const auto& o = out[idx];
        m.mean_diff[i][j] = o.diff;
        m.mean_diff[j][i] = o.diff == 0.0 ? 0.0 : -o.diff;
        m.statistic[i][j] = o.stat;
        m.statistic[j][i] = kind == CompareKind::TTest && o.stat != 0.0 ? -o.stat : o.stat;
        m.effect[i][j] = m.effect[j][i] = o.effect;
        m.p_raw[i][j] = m.p_raw[j][i] = o.p;
        m.p_adj[i][j] = m.p_adj[j][i] = adj[idx];
        m.stars[i][j] = m.stars[j][i] = stars(adj[idx]);
    }
    return m;
}

}  // namespace medcomm::stats
