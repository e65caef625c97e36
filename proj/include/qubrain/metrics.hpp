#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

// Evaluation metrics for imbalanced binary classification, plus the record
// types the benchmark harness emits.

namespace qubrain::bench {

struct Confusion {
    std::size_t tp = 0, tn = 0, fp = 0, fn = 0;
};

/// Predict positive iff score > threshold (strict: a score exactly at the
/// threshold counts as negative).
inline Confusion confusion(const std::vector<double>& scores, const std::vector<int>& labels,
                           double threshold = 0.5) {
    if (scores.size() != labels.size())
        throw std::invalid_argument("confusion: " + std::to_string(scores.size()) + " scores vs " +
                                    std::to_string(labels.size()) + " labels");
    Confusion c;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool predicted = scores[i] > threshold;
        const bool actual = labels[i] == 1;
        if (predicted && actual)
            ++c.tp;
        else if (predicted)
            ++c.fp;
        else if (actual)
            ++c.fn;
        else
            ++c.tn;
    }
    return c;
}

struct Prf1 {
    double precision = 0.0, recall = 0.0, f1 = 0.0;
};

/// P = tp/(tp+fp), R = tp/(tp+fn), F1 = 2PR/(P+R); every 0/0 yields 0.
inline Prf1 prf1(std::size_t tp, std::size_t fp, std::size_t fn) {
    Prf1 out;
    if (tp + fp > 0) out.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    if (tp + fn > 0) out.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    if (out.precision + out.recall > 0.0)
        out.f1 = 2.0 * out.precision * out.recall / (out.precision + out.recall);
    return out;
}

/// Rank-based (Mann-Whitney) AUC; tied scores contribute one half through
/// average ranks.  Requires both classes to be present.
inline double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size())
        throw std::invalid_argument("roc_auc: score/label length mismatch");
    const std::size_t n = scores.size();
    std::size_t n_pos = 0;
    for (int l : labels) n_pos += l == 1 ? 1 : 0;
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0)
        throw std::domain_error("roc_auc: undefined when only one class is present");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // ranks are 1-based
        for (std::size_t k = i; k < j; ++k)
            if (labels[order[k]] == 1) rank_sum_pos += avg_rank;
        i = j;
    }
    const double np = static_cast<double>(n_pos);
    return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

struct Metrics {
    std::size_t tp = 0, tn = 0, fp = 0, fn = 0;
    double precision = 0.0, recall = 0.0, f1 = 0.0, auc = 0.0;
};

inline Metrics compute_metrics(const std::vector<double>& scores, const std::vector<int>& labels,
                               double threshold = 0.5) {
    const Confusion c = confusion(scores, labels, threshold);
    const Prf1 p = prf1(c.tp, c.fp, c.fn);
    Metrics m;
    m.tp = c.tp;
    m.tn = c.tn;
    m.fp = c.fp;
    m.fn = c.fn;
    m.precision = p.precision;
    m.recall = p.recall;
    m.f1 = p.f1;
    m.auc = roc_auc(scores, labels);
    return m;
}

struct BoxplotStats {
    double median = 0.0, q1 = 0.0, q3 = 0.0;
    double whisker_low = 0.0, whisker_high = 0.0;
    std::vector<double> outliers;
};

namespace detail {
// Linear interpolation of order statistics at fraction q of (n-1).
inline double quantile_sorted(const std::vector<double>& sorted, double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    if (lo + 1 >= sorted.size()) return sorted.back();
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}
}  // namespace detail

/// Tukey boxplot summary: quartiles by linear interpolation, whiskers at the
/// most extreme values within 1.5 IQR of the quartiles, the rest outliers.
inline BoxplotStats boxplot_stats(std::vector<double> values) {
    if (values.size() < 4)
        throw std::invalid_argument("boxplot_stats: need at least 4 values, got " +
                                    std::to_string(values.size()));
    std::sort(values.begin(), values.end());
    BoxplotStats s;
    s.q1 = detail::quantile_sorted(values, 0.25);
    s.median = detail::quantile_sorted(values, 0.5);
    s.q3 = detail::quantile_sorted(values, 0.75);
    const double iqr = s.q3 - s.q1;
    const double lo_fence = s.q1 - 1.5 * iqr;
    const double hi_fence = s.q3 + 1.5 * iqr;
    s.whisker_low = s.q3;
    s.whisker_high = s.q1;
    for (double v : values) {
        if (v < lo_fence || v > hi_fence) {
            s.outliers.push_back(v);
        } else {
            s.whisker_low = std::min(s.whisker_low, v);
            s.whisker_high = std::max(s.whisker_high, v);
        }
    }
    return s;
}

/// One seeded experiment: per-epoch losses plus final test metrics.
struct RunRecord {
    std::string model;
    std::uint64_t seed = 0;
    std::size_t epochs = 0;
    std::vector<double> train_loss;
    std::vector<double> val_loss;
    Metrics metrics;
    double duration_seconds = 0.0;
};

}  // namespace qubrain::bench
