#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qubrain/records.hpp"

#if defined(__GLIBC__)
#include <malloc.h>
#endif

// The benchmark harness: per-seed training runs with flushed artifacts, and
// the Tukey summaries + learning-curve tables derived from them.

namespace qubrain::bench {

/// Training builds and tears down one tape per mini-batch; with default
/// glibc settings the freed buffers are returned to the kernel and every
/// batch pays page-fault costs again.  Keeping the arenas roughly triples
/// training throughput on the spiking models.
inline void tune_allocator() {
#if defined(__GLIBC__)
    static const bool once = [] {
        mallopt(M_TRIM_THRESHOLD, -1);
        mallopt(M_MMAP_MAX, 0);
        return true;
    }();
    (void)once;
#endif
}

struct ExperimentOptions {
    std::string model_id;
    std::string data_path;  // ignored when fixture is set
    bool fixture = false;
    std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    std::string out_dir = "results";
    std::optional<std::size_t> epochs_override;
    std::optional<std::size_t> batch_override;
    bool quiet = false;
};

struct ExperimentResult {
    std::vector<RunRecord> records;
    json summary;
};

namespace detail {

inline std::string run_path(const std::string& dir, const std::string& model, std::uint64_t seed) {
    return dir + "/run_" + model + "_" + std::to_string(seed) + ".json";
}

}  // namespace detail

inline void write_curves_csv(const std::string& path, const std::vector<RunRecord>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "epoch,seed,train_loss,val_loss\n";
    std::ostringstream line;
    line.precision(17);
    for (const RunRecord& r : records)
        for (std::size_t e = 0; e < r.epochs; ++e) {
            line.str("");
            line << e << ',' << r.seed << ',' << r.train_loss[e] << ',' << r.val_loss[e] << '\n';
            out << line.str();
        }
}

/// Runs the seeded protocol for one model: split, train, evaluate, and flush
/// the run record, split manifest and checkpoint per completed seed; then the
/// boxplot summary and learning-curve table over all seeds.
inline ExperimentResult run_experiment(const ExperimentOptions& opt, const data::Dataset& ds) {
    namespace fs = std::filesystem;
    tune_allocator();
    fs::create_directories(opt.out_dir);

    ExperimentResult result;
    for (const std::uint64_t seed : opt.seeds) {
        models::ModelSetup setup = models::make_model(opt.model_id, seed);
        if (opt.epochs_override) setup.cfg.epochs = *opt.epochs_override;
        if (opt.batch_override) setup.cfg.batch_size = *opt.batch_override;

        const data::SplitSpec spec = opt.fixture ? data::fixture_split_spec(setup.regime, seed)
                                                 : data::split_spec_for(setup.regime, seed);
        const data::Split split = data::make_splits(ds, spec);
        const models::TrainData d = models::preprocess_splits(ds, split, setup.preprocess);

        RunRecord rec = models::train_any(setup, d);
        result.records.push_back(rec);

        const std::string stem = opt.out_dir + "/run_" + opt.model_id + "_" + std::to_string(seed);
        write_json(run_record_json(rec), stem + ".json");
        write_json(split_manifest_json(seed, setup.regime, split), opt.out_dir + "/splits_" + opt.model_id + "_" +
                                                                       std::to_string(seed) + ".json");
        save_checkpoint(stem + ".ckpt", *setup.model, config_hash(opt.model_id, setup.cfg), seed,
                        setup.cfg.epochs);
        if (!opt.quiet)
            std::fprintf(stderr, "[%s seed %llu] f1=%.4f auc=%.4f (%.1fs)\n", opt.model_id.c_str(),
                         static_cast<unsigned long long>(seed), rec.metrics.f1, rec.metrics.auc,
                         rec.duration_seconds);
    }

    if (result.records.size() >= 4) {  // quartiles need at least four runs
        result.summary = summary_json(opt.model_id, result.records);
        write_json(result.summary, opt.out_dir + "/summary_" + opt.model_id + ".json");
    }
    write_curves_csv(opt.out_dir + "/curves_" + opt.model_id + ".csv", result.records);
    return result;
}

inline ExperimentResult run_experiment(const ExperimentOptions& opt) {
    const data::Dataset ds = opt.fixture ? data::canonical_fixture() : data::load_csv(opt.data_path);
    return run_experiment(opt, ds);
}

/// Rebuilds every summary and curve table from the run records found in a
/// results directory.
inline std::vector<std::string> summarize_dir(const std::string& dir) {
    namespace fs = std::filesystem;
    std::map<std::string, std::vector<RunRecord>> by_model;
    std::vector<fs::path> paths;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("run_", 0) == 0 && entry.path().extension() == ".json") paths.push_back(entry.path());
    }
    std::sort(paths.begin(), paths.end());
    for (const auto& p : paths) {
        const RunRecord rec = run_record_from_json(read_json(p.string()));
        by_model[rec.model].push_back(rec);
    }
    std::vector<std::string> written;
    for (auto& [model, records] : by_model) {
        std::sort(records.begin(), records.end(),
                  [](const RunRecord& a, const RunRecord& b) { return a.seed < b.seed; });
        write_curves_csv(dir + "/curves_" + model + ".csv", records);
        if (records.size() < 4) continue;
        const std::string summary_path = dir + "/summary_" + model + ".json";
        write_json(summary_json(model, records), summary_path);
        written.push_back(summary_path);
    }
    return written;
}

}  // namespace qubrain::bench
