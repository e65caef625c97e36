#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "qubrain/dataset.hpp"
#include "qubrain/metrics.hpp"
#include "qubrain/models.hpp"
#include "qubrain/train.hpp"

// Serialization of benchmark artifacts: run records, boxplot summaries, split
// manifests (JSON) and parameter checkpoints (JSON header + little-endian
// 64-bit float blob, bit-exact on reload).

namespace qubrain::bench {

using nlohmann::json;

inline constexpr const char* kRunRecordSchema = "qubrain.run_record/1";
inline constexpr const char* kSummarySchema = "qubrain.summary/1";
inline constexpr const char* kSplitManifestSchema = "qubrain.split_manifest/1";
inline constexpr const char* kCheckpointMagic = "QBCKPT01";

inline json metrics_json(const Metrics& m) {
    return json{{"tp", m.tp},           {"tn", m.tn},       {"fp", m.fp},   {"fn", m.fn},
                {"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}, {"auc", m.auc}};
}

inline Metrics metrics_from_json(const json& j) {
    Metrics m;
    m.tp = j.at("tp").get<std::size_t>();
    m.tn = j.at("tn").get<std::size_t>();
    m.fp = j.at("fp").get<std::size_t>();
    m.fn = j.at("fn").get<std::size_t>();
    m.precision = j.at("precision").get<double>();
    m.recall = j.at("recall").get<double>();
    m.f1 = j.at("f1").get<double>();
    m.auc = j.at("auc").get<double>();
    return m;
}

inline json run_record_json(const RunRecord& r) {
    return json{{"schema", kRunRecordSchema},
                {"model", r.model},
                {"seed", r.seed},
                {"epochs", r.epochs},
                {"train_loss", r.train_loss},
                {"val_loss", r.val_loss},
                {"metrics", metrics_json(r.metrics)},
                {"duration_seconds", r.duration_seconds}};
}

inline RunRecord run_record_from_json(const json& j) {
    if (j.value("schema", "") != kRunRecordSchema)
        throw std::runtime_error("run record: unexpected schema tag");
    RunRecord r;
    r.model = j.at("model").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.epochs = j.at("epochs").get<std::size_t>();
    r.train_loss = j.at("train_loss").get<std::vector<double>>();
    r.val_loss = j.at("val_loss").get<std::vector<double>>();
    r.metrics = metrics_from_json(j.at("metrics"));
    r.duration_seconds = j.at("duration_seconds").get<double>();
    return r;
}

inline json boxplot_json(const BoxplotStats& s) {
    return json{{"median", s.median},           {"q1", s.q1},
                {"q3", s.q3},                   {"whisker_low", s.whisker_low},
                {"whisker_high", s.whisker_high}, {"outliers", s.outliers}};
}

/// Tukey summaries of the four reported metrics over one model's seed runs.
inline json summary_json(const std::string& model, const std::vector<RunRecord>& runs) {
    std::vector<double> f1, auc, recall, precision;
    std::vector<std::uint64_t> seeds;
    for (const RunRecord& r : runs) {
        f1.push_back(r.metrics.f1);
        auc.push_back(r.metrics.auc);
        recall.push_back(r.metrics.recall);
        precision.push_back(r.metrics.precision);
        seeds.push_back(r.seed);
    }
    return json{{"schema", kSummarySchema},
                {"model", model},
                {"seeds", seeds},
                {"metrics",
                 json{{"f1", boxplot_json(boxplot_stats(f1))},
                      {"auc", boxplot_json(boxplot_stats(auc))},
                      {"recall", boxplot_json(boxplot_stats(recall))},
                      {"precision", boxplot_json(boxplot_stats(precision))}}}};
}

inline json split_manifest_json(std::uint64_t seed, data::Regime regime, const data::Split& split) {
    return json{{"schema", kSplitManifestSchema},
                {"seed", seed},
                {"regime", data::regime_name(regime)},
                {"train", split.train},
                {"val", split.val},
                {"test", split.test}};
}

inline void write_json(const json& j, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << '\n';
}

inline json read_json(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    return json::parse(in);
}

/// FNV-1a hash of the training configuration; checkpoints refuse to load
/// under a different configuration.
inline std::string config_hash(const std::string& model_id, const models::TrainConfig& cfg) {
    const std::string canon = model_id + "|" + cfg.optimizer + "|" + std::to_string(cfg.lr) + "|" +
                              std::to_string(cfg.batch_size) + "|" + std::to_string(cfg.epochs) + "|" +
                              (cfg.plateau ? std::to_string(cfg.patience) : "-") + "|" +
                              std::to_string(cfg.steps);
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : canon) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

namespace detail {

inline void put_u64_le(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline std::uint64_t get_u64_le(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return v;
}

inline void put_doubles_le(std::string& out, const std::vector<double>& values) {
    for (double d : values) {
        std::uint64_t bits;
        std::memcpy(&bits, &d, 8);
        put_u64_le(out, bits);
    }
}

}  // namespace detail

/// Layout: magic, u64 header length, JSON header, then all parameters as
/// little-endian IEEE-754 doubles in registration order.
inline void save_checkpoint(const std::string& path, models::Model& model, const std::string& cfg_hash,
                            std::uint64_t seed, std::size_t epoch) {
    json header{{"schema", "qubrain.checkpoint/1"},
                {"model", model.id()},
                {"config_hash", cfg_hash},
                {"seed", seed},
                {"epoch", epoch}};
    json params = json::array();
    for (auto& np : model.named_params())
        params.push_back(json{{"name", np.name}, {"shape", np.param->shape}, {"count", np.param->size()}});
    header["params"] = params;

    std::string blob;
    const std::string head = header.dump();
    blob.append(kCheckpointMagic, 8);
    detail::put_u64_le(blob, head.size());
    blob += head;
    for (auto& np : model.named_params()) detail::put_doubles_le(blob, np.param->value);

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint " + path);
    out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
}

/// Restores parameters bit-exactly; nothing is modified unless every
/// compatibility check passes and the payload is complete.
inline void load_checkpoint(const std::string& path, models::Model& model, const std::string& expected_hash) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read checkpoint " + path);
    std::string blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (blob.size() < 16 || blob.compare(0, 8, kCheckpointMagic) != 0)
        throw std::runtime_error("checkpoint " + path + ": bad magic");
    const std::uint64_t head_len = detail::get_u64_le(reinterpret_cast<const unsigned char*>(blob.data()) + 8);
    if (blob.size() < 16 + head_len) throw std::runtime_error("checkpoint " + path + ": truncated header");
    const json header = json::parse(blob.substr(16, head_len));

    if (header.at("model").get<std::string>() != model.id())
        throw std::runtime_error("checkpoint " + path + ": incompatible model '" +
                                 header.at("model").get<std::string>() + "', expected '" + model.id() + "'");
    if (!expected_hash.empty() && header.at("config_hash").get<std::string>() != expected_hash)
        throw std::runtime_error("checkpoint " + path + ": configuration hash mismatch");

    auto named = model.named_params();
    const json& params = header.at("params");
    if (params.size() != named.size())
        throw std::runtime_error("checkpoint " + path + ": parameter list mismatch");

    std::size_t offset = 16 + head_len;
    std::vector<std::vector<double>> staged;
    for (std::size_t i = 0; i < named.size(); ++i) {
        const json& meta = params[i];
        if (meta.at("name").get<std::string>() != named[i].name)
            throw std::runtime_error("checkpoint " + path + ": parameter name mismatch at index " +
                                     std::to_string(i));
        const std::size_t count = meta.at("count").get<std::size_t>();
        if (count != named[i].param->size() ||
            meta.at("shape").get<std::vector<std::size_t>>() != named[i].param->shape)
            throw std::runtime_error("checkpoint " + path + ": parameter shape mismatch for " + named[i].name);
        if (blob.size() < offset + 8 * count)
            throw std::runtime_error("checkpoint " + path + ": truncated payload");
        std::vector<double> values(count);
        for (std::size_t j = 0; j < count; ++j) {
            const std::uint64_t bits =
                detail::get_u64_le(reinterpret_cast<const unsigned char*>(blob.data()) + offset + 8 * j);
            std::memcpy(&values[j], &bits, 8);
        }
        staged.push_back(std::move(values));
        offset += 8 * count;
    }
    for (std::size_t i = 0; i < named.size(); ++i) named[i].param->value = std::move(staged[i]);
}

}  // namespace qubrain::bench
