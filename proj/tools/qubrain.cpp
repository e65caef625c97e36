#include <cstdio>
#include <cstdlib>
#include <exception>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "qubrain/experiment.hpp"
#include "qubrain/gradcheck.hpp"

namespace {

/// Accepts "0..9" (inclusive) or a comma list like "0,3,7".
std::vector<std::uint64_t> parse_seeds(const std::string& text) {
    std::vector<std::uint64_t> seeds;
    const std::size_t dots = text.find("..");
    if (dots != std::string::npos) {
        const std::uint64_t lo = std::stoull(text.substr(0, dots));
        const std::uint64_t hi = std::stoull(text.substr(dots + 2));
        if (hi < lo) throw CLI::ValidationError("--seeds", "range end precedes start");
        for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
        return seeds;
    }
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t comma = text.find(',', start);
        const std::string tok = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        if (!tok.empty()) seeds.push_back(std::stoull(tok));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (seeds.empty()) throw CLI::ValidationError("--seeds", "no seeds given");
    return seeds;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"qubrain: hybrid quantum-classical models benchmarked on credit-card fraud"};
    app.require_subcommand(1);

    const std::vector<std::string>& ids = qubrain::models::model_ids();

    // run
    auto* run = app.add_subcommand("run", "Train one model over a list of seeds and write result files");
    std::string model_id, data_path, seeds_text = "0..9", out_dir = "results";
    bool fixture = false;
    std::optional<std::size_t> epochs_override, batch_override;
    run->add_option("--model", model_id, "Model id")->required()->check(CLI::IsMember(ids));
    run->add_option("--data", data_path, "Transactions CSV (Time,V1..V28,Amount,Class)")
        ->envname("QUBRAIN_DATA");
    run->add_option("--seeds", seeds_text, "Seed range 'a..b' or comma list")->capture_default_str();
    run->add_option("--out", out_dir, "Output directory")->capture_default_str();
    run->add_flag("--fixture", fixture, "Use the bundled synthetic fixture (reduced split sizes)");
    run->add_option("--epochs", epochs_override, "Override the configured epoch count")
        ->check(CLI::PositiveNumber);
    run->add_option("--batch", batch_override, "Override the configured batch size")->check(CLI::PositiveNumber);

    // summarize
    auto* summarize = app.add_subcommand("summarize", "Rebuild summaries and curve tables from run records");
    std::string in_dir;
    summarize->add_option("--in", in_dir, "Directory holding run_*.json files")->required();

    // gradcheck
    auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference and cross-method gradient verification");
    std::string module = "all";
    gradcheck->add_option("--module", module, "Restrict to one module")
        ->check(CLI::IsMember({"all", "autodiff", "qsim", "nn", "models"}));

    // paramcount
    auto* paramcount = app.add_subcommand("paramcount", "Print registered and reference parameter counts");
    std::string count_model;
    paramcount->add_option("--model", count_model, "Model id")->required()->check(CLI::IsMember(ids));

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            if (!fixture && data_path.empty())
                throw std::runtime_error("no dataset: pass --data, set QUBRAIN_DATA, or use --fixture");
            qubrain::bench::ExperimentOptions opt;
            opt.model_id = model_id;
            opt.data_path = data_path;
            opt.fixture = fixture;
            opt.seeds = parse_seeds(seeds_text);
            opt.out_dir = out_dir;
            opt.epochs_override = epochs_override;
            opt.batch_override = batch_override;
            const auto result = qubrain::bench::run_experiment(opt);
            std::printf("wrote %zu run record(s) to %s\n", result.records.size(), out_dir.c_str());
            return 0;
        }
        if (summarize->parsed()) {
            const auto written = qubrain::bench::summarize_dir(in_dir);
            for (const auto& p : written) std::printf("wrote %s\n", p.c_str());
            if (written.empty()) std::printf("no model with enough runs for a summary in %s\n", in_dir.c_str());
            return 0;
        }
        if (gradcheck->parsed()) {
            const auto reports = qubrain::bench::run_gradcheck(module);
            bool all_ok = true;
            for (const auto& r : reports) {
                std::printf("[%s] %-38s max rel err %.3e (tol %.0e)\n", r.pass ? "ok" : "FAIL", r.name.c_str(),
                            r.max_rel_err, r.tol);
                all_ok = all_ok && r.pass;
            }
            return all_ok ? 0 : 1;
        }
        if (paramcount->parsed()) {
            auto setup = qubrain::models::make_model(count_model, 0);
            const std::size_t actual = setup.model->param_count();
            const std::size_t expected = qubrain::models::expected_param_count(count_model);
            std::printf("%s: registered=%zu reference=%zu %s\n", count_model.c_str(), actual, expected,
                        actual == expected ? "(match)" : "(MISMATCH)");
            return actual == expected ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
