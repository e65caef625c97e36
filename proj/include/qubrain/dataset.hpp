#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <limits>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "qubrain/random.hpp"

// Credit-card transaction ingestion, feature scaling, and the seeded
// imbalanced splits used by the benchmark protocol.

namespace qubrain::data {

inline constexpr std::size_t kFeatureCount = 30;  // Time, V1..V28, Amount

inline const std::vector<std::string>& feature_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> n;
        n.emplace_back("Time");
        for (int i = 1; i <= 28; ++i) n.emplace_back("V" + std::to_string(i));
        n.emplace_back("Amount");
        return n;
    }();
    return names;
}

struct Dataset {
    std::vector<double> features;  // row-major [rows x kFeatureCount]
    std::vector<int> labels;       // 0 = legitimate, 1 = fraud

    std::size_t rows() const { return labels.size(); }
    const double* row(std::size_t r) const { return features.data() + r * kFeatureCount; }

    std::size_t count_label(int label) const {
        std::size_t n = 0;
        for (int l : labels)
            if (l == label) ++n;
        return n;
    }
};

namespace detail {

inline std::string_view strip_quotes(std::string_view field) {
    if (field.size() >= 2 && field.front() == '"' && field.back() == '"')
        return field.substr(1, field.size() - 2);
    return field;
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return out;
}

inline double parse_double(std::string_view field, std::size_t row, const std::string& column) {
    field = strip_quotes(field);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc{} || ptr != field.data() + field.size() || !std::isfinite(value))
        throw std::runtime_error("non-numeric cell '" + std::string(field) + "' in column " + column + " at data row " +
                                 std::to_string(row));
    return value;
}

}  // namespace detail

/// Parses a transactions CSV with header Time,V1..V28,Amount,Class.
/// Quoted fields are accepted; Class must be 0 or 1.
inline Dataset load_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open dataset file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty dataset file: " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();

    std::vector<std::string> expected = feature_names();
    expected.emplace_back("Class");
    const auto header = detail::split_fields(line);
    for (std::size_t i = 0; i < expected.size(); ++i) {
        if (i >= header.size())
            throw std::runtime_error("dataset schema error: missing column " + expected[i]);
        if (detail::strip_quotes(header[i]) != expected[i])
            throw std::runtime_error("dataset schema error: expected column " + expected[i] + " at position " +
                                     std::to_string(i) + ", found '" +
                                     std::string(detail::strip_quotes(header[i])) + "'");
    }
    if (header.size() != expected.size())
        throw std::runtime_error("dataset schema error: " + std::to_string(header.size() - expected.size()) +
                                 " unexpected trailing column(s)");

    Dataset ds;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = detail::split_fields(line);
        if (fields.size() != expected.size())
            throw std::runtime_error("row " + std::to_string(row) + " has " + std::to_string(fields.size()) +
                                     " fields, expected " + std::to_string(expected.size()));
        for (std::size_t c = 0; c < kFeatureCount; ++c)
            ds.features.push_back(detail::parse_double(fields[c], row, expected[c]));
        const double cls = detail::parse_double(fields[kFeatureCount], row, "Class");
        if (cls != 0.0 && cls != 1.0)
            throw std::runtime_error("row " + std::to_string(row) + " has non-binary Class value");
        ds.labels.push_back(cls == 1.0 ? 1 : 0);
        ++row;
    }
    return ds;
}

struct Matrix {
    std::vector<double> values;  // row-major
    std::size_t rows = 0;
    std::size_t cols = 0;
};

inline Matrix gather_features(const Dataset& ds, std::span<const std::size_t> row_ids) {
    Matrix m;
    m.rows = row_ids.size();
    m.cols = kFeatureCount;
    m.values.reserve(m.rows * m.cols);
    for (std::size_t r : row_ids)
        m.values.insert(m.values.end(), ds.row(r), ds.row(r) + kFeatureCount);
    return m;
}

inline std::vector<int> gather_labels(const Dataset& ds, std::span<const std::size_t> row_ids) {
    std::vector<int> out;
    out.reserve(row_ids.size());
    for (std::size_t r : row_ids) out.push_back(ds.labels[r]);
    return out;
}

enum class ScalerKind { Standard, MinMax, L2Row };

/// Per-feature scaling with statistics fitted on training rows only; L2Row is
/// stateless (each row divided by its own norm).
class Scaler {
  public:
    static Scaler fit_standard(const Matrix& train) {
        Scaler s;
        s.kind_ = ScalerKind::Standard;
        s.a_.assign(train.cols, 0.0);
        s.b_.assign(train.cols, 0.0);
        for (std::size_t r = 0; r < train.rows; ++r)
            for (std::size_t c = 0; c < train.cols; ++c) s.a_[c] += train.values[r * train.cols + c];
        for (double& m : s.a_) m /= static_cast<double>(train.rows);
        for (std::size_t r = 0; r < train.rows; ++r)
            for (std::size_t c = 0; c < train.cols; ++c) {
                const double d = train.values[r * train.cols + c] - s.a_[c];
                s.b_[c] += d * d;
            }
        for (double& v : s.b_) v = std::sqrt(v / static_cast<double>(train.rows));
        return s;
    }

    static Scaler fit_minmax(const Matrix& train, double lo, double hi) {
        if (!(lo < hi)) throw std::invalid_argument("Scaler: MinMax range requires lo < hi");
        Scaler s;
        s.kind_ = ScalerKind::MinMax;
        s.lo_ = lo;
        s.hi_ = hi;
        s.a_.assign(train.cols, std::numeric_limits<double>::infinity());
        s.b_.assign(train.cols, -std::numeric_limits<double>::infinity());
        for (std::size_t r = 0; r < train.rows; ++r)
            for (std::size_t c = 0; c < train.cols; ++c) {
                const double v = train.values[r * train.cols + c];
                s.a_[c] = std::min(s.a_[c], v);
                s.b_[c] = std::max(s.b_[c], v);
            }
        return s;
    }

    static Scaler l2row() {
        Scaler s;
        s.kind_ = ScalerKind::L2Row;
        return s;
    }

    ScalerKind kind() const { return kind_; }

    Matrix apply(const Matrix& m) const {
        Matrix out = m;
        switch (kind_) {
            case ScalerKind::Standard:
                for (std::size_t r = 0; r < m.rows; ++r)
                    for (std::size_t c = 0; c < m.cols; ++c) {
                        double& v = out.values[r * m.cols + c];
                        // zero-variance features pass through unscaled
                        if (b_[c] > 0.0) v = (v - a_[c]) / b_[c];
                    }
                break;
            case ScalerKind::MinMax:
                for (std::size_t r = 0; r < m.rows; ++r)
                    for (std::size_t c = 0; c < m.cols; ++c) {
                        double& v = out.values[r * m.cols + c];
                        const double range = b_[c] - a_[c];
                        v = range > 0.0 ? lo_ + (v - a_[c]) / range * (hi_ - lo_) : lo_;
                        v = std::clamp(v, lo_, hi_);  // unseen extremes stay inside the range
                    }
                break;
            case ScalerKind::L2Row:
                for (std::size_t r = 0; r < m.rows; ++r) {
                    double sq = 0.0;
                    for (std::size_t c = 0; c < m.cols; ++c) sq += m.values[r * m.cols + c] * m.values[r * m.cols + c];
                    if (sq <= 1e-24)
                        throw std::domain_error("L2Row scaler: row " + std::to_string(r) + " has (near-)zero norm");
                    const double inv = 1.0 / std::sqrt(sq);
                    for (std::size_t c = 0; c < m.cols; ++c) out.values[r * m.cols + c] *= inv;
                }
                break;
        }
        return out;
    }

  private:
    ScalerKind kind_ = ScalerKind::Standard;
    double lo_ = 0.0, hi_ = 1.0;
    std::vector<double> a_, b_;  // mean/std or min/max
};

enum class Regime { Classical, Quantum };

inline const char* regime_name(Regime r) { return r == Regime::Classical ? "classical" : "quantum"; }

struct SplitSpec {
    std::uint64_t seed = 0;
    std::size_t train_fraud = 0;
    std::size_t train_nonfraud = 0;
    std::size_t test_fraud = 0;
    std::size_t test_nonfraud = 0;
    double validation_fraction = 0.2;
};

/// The benchmark counts: classical trains on 390 fraud + 5000 non-fraud,
/// quantum on 390 fraud + 1000 non-fraud; both test on 101 fraud + 999
/// non-fraud drawn before the training rows so the test set per seed is
/// shared across regimes.
inline SplitSpec split_spec_for(Regime regime, std::uint64_t seed) {
    SplitSpec s;
    s.seed = seed;
    s.train_fraud = 390;
    s.train_nonfraud = regime == Regime::Classical ? 5000 : 1000;
    s.test_fraud = 101;
    s.test_nonfraud = 999;
    return s;
}

/// Reduced counts for the bundled synthetic fixture (about a tenth of the
/// benchmark sizes); keeps CI runs fast while exercising the same machinery.
inline SplitSpec fixture_split_spec(Regime regime, std::uint64_t seed) {
    SplitSpec s;
    s.seed = seed;
    s.train_fraud = 39;
    s.train_nonfraud = regime == Regime::Classical ? 500 : 100;
    s.test_fraud = 10;
    s.test_nonfraud = 100;
    return s;
}

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
    std::vector<std::size_t> test;
};

namespace detail {

/// Removes k uniformly chosen entries from `pool` (partial Fisher-Yates) and
/// returns them.
inline std::vector<std::size_t> sample_k(std::vector<std::size_t>& pool, std::size_t k, Rng& rng,
                                         const char* what) {
    if (k > pool.size())
        throw std::invalid_argument(std::string("make_splits: requested ") + std::to_string(k) + " " + what +
                                    " rows but only " + std::to_string(pool.size()) + " are available");
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.bounded(pool.size() - i));
        std::swap(pool[i], pool[j]);
    }
    std::vector<std::size_t> out(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k));
    pool.erase(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k));
    return out;
}

}  // namespace detail

/// Seeded class-stratified sampling: test rows first, then training rows from
/// the remainder, then a stratified validation_fraction carved out of train.
/// All index sets are returned sorted and are pairwise disjoint.
inline Split make_splits(const Dataset& ds, const SplitSpec& spec) {
    std::vector<std::size_t> fraud, nonfraud;
    for (std::size_t r = 0; r < ds.rows(); ++r) (ds.labels[r] == 1 ? fraud : nonfraud).push_back(r);

    Rng rng = Rng::derive(spec.seed, "data/split");
    Split out;
    auto test_f = detail::sample_k(fraud, spec.test_fraud, rng, "test fraud");
    auto test_n = detail::sample_k(nonfraud, spec.test_nonfraud, rng, "test non-fraud");
    auto train_f = detail::sample_k(fraud, spec.train_fraud, rng, "train fraud");
    auto train_n = detail::sample_k(nonfraud, spec.train_nonfraud, rng, "train non-fraud");

    const auto val_count = [&](std::size_t n) {
        return static_cast<std::size_t>(std::llround(spec.validation_fraction * static_cast<double>(n)));
    };
    auto val_f = detail::sample_k(train_f, val_count(spec.train_fraud), rng, "validation fraud");
    auto val_n = detail::sample_k(train_n, val_count(spec.train_nonfraud), rng, "validation non-fraud");

    auto collect = [](std::vector<std::size_t> a, std::vector<std::size_t> b) {
        a.insert(a.end(), b.begin(), b.end());
        std::sort(a.begin(), a.end());
        return a;
    };
    out.test = collect(std::move(test_f), std::move(test_n));
    out.train = collect(std::move(train_f), std::move(train_n));
    out.val = collect(std::move(val_f), std::move(val_n));
    return out;
}

inline Split make_splits(const Dataset& ds, std::uint64_t seed, Regime regime) {
    return make_splits(ds, split_spec_for(regime, seed));
}

/// Epoch-dependent deterministic shuffle into consecutive batches; the final
/// partial batch is kept.
inline std::vector<std::vector<std::size_t>> make_batches(std::size_t n, std::size_t batch_size,
                                                          std::uint64_t seed, std::uint64_t epoch) {
    if (batch_size == 0) throw std::invalid_argument("make_batches: batch_size must be >= 1");
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng = Rng::derive(seed, "data/batch/" + std::to_string(epoch));
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.bounded(i));
        std::swap(order[i - 1], order[j]);
    }
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t start = 0; start < n; start += batch_size) {
        const std::size_t end = std::min(n, start + batch_size);
        batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                             order.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return batches;
}

/// Synthetic transactions with the production schema: class-conditional
/// Gaussian features over a handful of informative components, so models can
/// separate the classes without the restricted-source download.
inline Dataset synthetic_fixture(std::size_t rows, std::size_t fraud_rows, std::uint64_t seed) {
    if (fraud_rows > rows) throw std::invalid_argument("synthetic_fixture: more fraud rows than rows");
    Rng rng = Rng::derive(seed, "data/fixture");

    std::vector<std::size_t> ids(rows);
    for (std::size_t i = 0; i < rows; ++i) ids[i] = i;
    const auto fraud_ids = detail::sample_k(ids, fraud_rows, rng, "fixture fraud");
    std::vector<bool> is_fraud(rows, false);
    for (std::size_t i : fraud_ids) is_fraud[i] = true;

    // Mean shifts on a few anonymized components for the fraud class.
    constexpr int shifted[] = {1, 3, 4, 10, 12, 14, 17};
    constexpr double shift[] = {-2.2, 1.8, -2.6, -1.9, 1.6, -2.4, 2.0};

    Dataset ds;
    ds.features.reserve(rows * kFeatureCount);
    ds.labels.reserve(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        const bool fraud = is_fraud[r];
        ds.features.push_back(rng.uniform(0.0, 172800.0));  // Time
        double v[28];
        for (double& x : v) x = rng.normal();
        if (fraud)
            for (std::size_t k = 0; k < std::size(shifted); ++k) v[shifted[k] - 1] += shift[k];
        for (double x : v) ds.features.push_back(x);
        const double amount = std::abs(rng.normal()) * (fraud ? 120.0 : 80.0);
        ds.features.push_back(amount);
        ds.labels.push_back(fraud ? 1 : 0);
    }
    return ds;
}

/// Canonical 2000-row fixture (120 fraud) used by tests and `--fixture` runs.
inline Dataset canonical_fixture() { return synthetic_fixture(2000, 120, 42); }

inline void write_csv(const Dataset& ds, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write dataset file: " + path);
    const auto& names = feature_names();
    for (const auto& n : names) out << '"' << n << "\",";
    out << "\"Class\"\n";
    std::ostringstream line;
    line.precision(17);
    for (std::size_t r = 0; r < ds.rows(); ++r) {
        line.str("");
        for (std::size_t c = 0; c < kFeatureCount; ++c) line << ds.features[r * kFeatureCount + c] << ',';
        line << "\"" << ds.labels[r] << "\"";
        out << line.str() << '\n';
    }
}

}  // namespace qubrain::data
