#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include "helpers.hpp"
#include "qubrain/experiment.hpp"
#include "qubrain/metrics.hpp"
#include "qubrain/records.hpp"
#include "qubrain/schema.hpp"

using namespace qubrain;
using namespace qubrain::bench;
using Catch::Approx;

namespace {

/// O(n^2) pair-counting oracle for the rank-based AUC.
double auc_bruteforce(const std::vector<double>& scores, const std::vector<int>& labels) {
    double wins = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] != 1) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j] != 0) continue;
            ++pairs;
            if (scores[i] > scores[j])
                wins += 1.0;
            else if (scores[i] == scores[j])
                wins += 0.5;
        }
    }
    return wins / static_cast<double>(pairs);
}

std::string schema_path(const char* name) {
    return std::string(QUBRAIN_SOURCE_DIR) + "/schemas/" + name;
}

}  // namespace

TEST_CASE("confusion counts with a strict threshold") {
    {
        const Confusion c = confusion({0.9, 0.1}, {1, 0});
        CHECK(c.tp == 1);
        CHECK(c.tn == 1);
        CHECK(c.fp == 0);
        CHECK(c.fn == 0);
    }
    {
        const Confusion c = confusion({0.9, 0.9}, {1, 0});
        CHECK(c.tp == 1);
        CHECK(c.fp == 1);
    }
    {
        const Confusion c = confusion({0.5}, {1});  // exactly at threshold: negative
        CHECK(c.tp == 0);
        CHECK(c.fn == 1);
    }
    REQUIRE_THROWS_AS(confusion({0.5, 0.5}, {1}), std::invalid_argument);
}

TEST_CASE("precision recall f1") {
    {
        const Prf1 p = prf1(1, 0, 0);
        CHECK(p.precision == 1.0);
        CHECK(p.recall == 1.0);
        CHECK(p.f1 == 1.0);
    }
    {
        const Prf1 p = prf1(0, 0, 3);
        CHECK(p.precision == 0.0);
        CHECK(p.recall == 0.0);
        CHECK(p.f1 == 0.0);
    }
    {
        const Prf1 p = prf1(8, 2, 4);
        CHECK(p.precision == Approx(0.8));
        CHECK(p.recall == Approx(2.0 / 3.0));
        CHECK(p.f1 == Approx(0.72727272727272729));
    }
}

TEST_CASE("roc auc basics") {
    CHECK(roc_auc({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0}) == 1.0);
    CHECK(roc_auc({0.7, 0.7, 0.7, 0.7}, {1, 0, 1, 0}) == 0.5);
    {
        const std::vector<double> s{0.1, 0.4, 0.35, 0.8, 0.65, 0.4};
        const std::vector<int> y{0, 0, 1, 1, 0, 1};
        CHECK(roc_auc(s, y) == auc_bruteforce(s, y));
    }
    REQUIRE_THROWS_AS(roc_auc({0.4, 0.6}, {1, 1}), std::domain_error);
}

TEST_CASE("roc auc equals the pair-counting oracle on random draws") {
    Rng rng(101);
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t n = 2 + rng.bounded(49);
        std::vector<double> scores(n);
        std::vector<int> labels(n);
        bool has_pos = false, has_neg = false;
        for (std::size_t i = 0; i < n; ++i) {
            // coarse grid so that ties actually occur
            scores[i] = static_cast<double>(rng.bounded(10)) / 10.0;
            labels[i] = static_cast<int>(rng.bounded(2));
            (labels[i] == 1 ? has_pos : has_neg) = true;
        }
        if (!has_pos || !has_neg) continue;
        CHECK(roc_auc(scores, labels) == auc_bruteforce(scores, labels));
    }
}

TEST_CASE("metrics are invariant under joint permutation") {
    Rng rng(103);
    std::vector<double> scores(40);
    std::vector<int> labels(40);
    for (std::size_t i = 0; i < 40; ++i) {
        scores[i] = rng.uniform();
        labels[i] = static_cast<int>(rng.bounded(2));
    }
    labels[0] = 1;
    labels[1] = 0;
    const Metrics base = compute_metrics(scores, labels);

    std::vector<std::size_t> perm(40);
    for (std::size_t i = 0; i < 40; ++i) perm[i] = i;
    for (std::size_t i = 40; i > 1; --i) std::swap(perm[i - 1], perm[rng.bounded(i)]);
    std::vector<double> ps(40);
    std::vector<int> pl(40);
    for (std::size_t i = 0; i < 40; ++i) {
        ps[i] = scores[perm[i]];
        pl[i] = labels[perm[i]];
    }
    const Metrics permuted = compute_metrics(ps, pl);
    CHECK(base.tp == permuted.tp);
    CHECK(base.f1 == permuted.f1);
    CHECK(base.auc == permuted.auc);
}

TEST_CASE("boxplot statistics") {
    {
        const BoxplotStats s = boxplot_stats({1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
        CHECK(s.median == Approx(5.5));
        CHECK(s.q1 == Approx(3.25));
        CHECK(s.q3 == Approx(7.75));
        CHECK(s.whisker_low == 1.0);
        CHECK(s.whisker_high == 10.0);
        CHECK(s.outliers.empty());
    }
    {
        const BoxplotStats s = boxplot_stats({2, 2, 2, 2, 2});
        CHECK(s.median == 2.0);
        CHECK(s.q1 == 2.0);
        CHECK(s.q3 == 2.0);
        CHECK(s.outliers.empty());
    }
    {
        const BoxplotStats s = boxplot_stats({1.0, 1.1, 1.2, 1.3, 9.0});
        REQUIRE(s.outliers.size() == 1);
        CHECK(s.outliers[0] == 9.0);
        CHECK(s.whisker_high == Approx(1.3));
    }
    REQUIRE_THROWS_AS(boxplot_stats({1, 2, 3}), std::invalid_argument);
}

TEST_CASE("boxplot ordering invariants on random samples") {
    Rng rng(109);
    for (int rep = 0; rep < 100; ++rep) {
        const std::size_t n = 4 + rng.bounded(17);
        std::vector<double> values(n);
        for (double& v : values) v = rng.uniform(-5.0, 5.0);
        const BoxplotStats s = boxplot_stats(values);
        const double lo = *std::min_element(values.begin(), values.end());
        const double hi = *std::max_element(values.begin(), values.end());
        REQUIRE(s.q1 <= s.median);
        REQUIRE(s.median <= s.q3);
        REQUIRE(s.whisker_low <= s.whisker_high);
        REQUIRE(s.whisker_low >= lo);
        REQUIRE(s.whisker_high <= hi);
        const double iqr = s.q3 - s.q1;
        for (double o : s.outliers) REQUIRE((o < s.q1 - 1.5 * iqr || o > s.q3 + 1.5 * iqr));
    }
}

TEST_CASE("run record json round trip and schema") {
    RunRecord r;
    r.model = "ann";
    r.seed = 3;
    r.epochs = 2;
    r.train_loss = {0.7, 0.6};
    r.val_loss = {0.72, 0.61};
    r.metrics.tp = 9;
    r.metrics.tn = 90;
    r.metrics.fp = 1;
    r.metrics.fn = 2;
    r.metrics.precision = 0.9;
    r.metrics.recall = 0.8181;
    r.metrics.f1 = 0.857;
    r.metrics.auc = 0.97;
    r.duration_seconds = 1.25;

    const json j = run_record_json(r);
    const RunRecord back = run_record_from_json(j);
    CHECK(back.model == r.model);
    CHECK(back.train_loss == r.train_loss);
    CHECK(back.metrics.auc == r.metrics.auc);

    const json schema = read_json(schema_path("run_record.schema.json"));
    CHECK(schema_errors(j, schema).empty());

    json broken = j;
    broken.erase("metrics");
    CHECK_FALSE(validate_schema(broken, schema));
    json wrong_model = j;
    wrong_model["model"] = "perceptron";
    CHECK_FALSE(validate_schema(wrong_model, schema));
}

TEST_CASE("checkpoint round trip is bit exact") {
    models::ModelSetup setup = models::make_model("qnn", 21);
    const std::string hash = config_hash("qnn", setup.cfg);
    const std::string path = "qubrain_test_ckpt.bin";
    save_checkpoint(path, *setup.model, hash, 21, 5);

    // probe outputs before/after reload into a differently initialized model
    Rng rng(22);
    data::Matrix x;
    x.rows = 2;
    x.cols = 30;
    x.values = testing::random_vector(rng, 60, 0.1, 1.0);
    x = data::Scaler::l2row().apply(x);
    autodiff::Tape t1;
    const auto before = dynamic_cast<models::QnnModel&>(*setup.model).forward(t1, x).value();

    models::ModelSetup other = models::make_model("qnn", 99);
    load_checkpoint(path, *other.model, hash);
    autodiff::Tape t2;
    const auto after = dynamic_cast<models::QnnModel&>(*other.model).forward(t2, x).value();
    CHECK(before == after);

    for (std::size_t i = 0; i < setup.model->params().size(); ++i)
        CHECK(setup.model->params()[i]->value == other.model->params()[i]->value);
    std::remove(path.c_str());
}

TEST_CASE("checkpoint rejects corruption and mismatches") {
    models::ModelSetup setup = models::make_model("ann", 4);
    const std::string hash = config_hash("ann", setup.cfg);
    const std::string path = "qubrain_test_ckpt2.bin";
    save_checkpoint(path, *setup.model, hash, 4, 1);

    {
        // truncated payload: no partial model state
        std::ifstream in(path, std::ios::binary);
        std::string blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        const std::string trunc_path = "qubrain_test_ckpt2_trunc.bin";
        std::ofstream out(trunc_path, std::ios::binary);
        out.write(blob.data(), static_cast<std::streamsize>(blob.size() / 2));
        out.close();
        models::ModelSetup victim = models::make_model("ann", 5);
        const auto original = victim.model->params()[0]->value;
        REQUIRE_THROWS_WITH(load_checkpoint(trunc_path, *victim.model, hash),
                            Catch::Matchers::ContainsSubstring("truncated"));
        CHECK(victim.model->params()[0]->value == original);
        std::remove(trunc_path.c_str());
    }
    {
        models::ModelSetup wrong = models::make_model("qnn", 4);
        REQUIRE_THROWS_WITH(load_checkpoint(path, *wrong.model, ""),
                            Catch::Matchers::ContainsSubstring("incompatible"));
    }
    {
        models::ModelSetup victim = models::make_model("ann", 6);
        REQUIRE_THROWS_WITH(load_checkpoint(path, *victim.model, "deadbeefdeadbeef"),
                            Catch::Matchers::ContainsSubstring("hash"));
    }
    std::remove(path.c_str());
}

TEST_CASE("experiment harness emits the full artifact set") {
    namespace fs = std::filesystem;
    const std::string dir = "qubrain_test_results";
    fs::remove_all(dir);

    ExperimentOptions opt;
    opt.model_id = "ann";
    opt.fixture = true;
    opt.seeds = {0, 1, 2, 3};
    opt.out_dir = dir;
    opt.epochs_override = 3;
    opt.quiet = true;
    const ExperimentResult result = run_experiment(opt);
    REQUIRE(result.records.size() == 4);

    for (std::uint64_t seed : opt.seeds) {
        const std::string stem = dir + "/run_ann_" + std::to_string(seed);
        CHECK(fs::exists(stem + ".json"));
        CHECK(fs::exists(stem + ".ckpt"));
        CHECK(fs::exists(dir + "/splits_ann_" + std::to_string(seed) + ".json"));
        const json rec = read_json(stem + ".json");
        CHECK(schema_errors(rec, read_json(schema_path("run_record.schema.json"))).empty());
        const json manifest = read_json(dir + "/splits_ann_" + std::to_string(seed) + ".json");
        CHECK(schema_errors(manifest, read_json(schema_path("split_manifest.schema.json"))).empty());
    }
    CHECK(schema_errors(read_json(dir + "/summary_ann.json"), read_json(schema_path("summary.schema.json"))).empty());

    // curves: header + one line per (seed, epoch)
    std::ifstream curves(dir + "/curves_ann.csv");
    std::size_t lines = 0;
    std::string line;
    while (std::getline(curves, line)) ++lines;
    CHECK(lines == 1 + 4 * 3);

    // summarize_dir reproduces the summary from the stored records
    const json original = read_json(dir + "/summary_ann.json");
    fs::remove(dir + "/summary_ann.json");
    const auto written = summarize_dir(dir);
    REQUIRE(written.size() == 1);
    CHECK(read_json(dir + "/summary_ann.json") == original);

    fs::remove_all(dir);
}

TEST_CASE("repeated seeds reproduce identical records") {
    ExperimentOptions opt;
    opt.model_id = "qnn";
    opt.fixture = true;
    opt.seeds = {2};
    opt.out_dir = "qubrain_test_repeat";
    std::filesystem::remove_all(opt.out_dir);
    opt.epochs_override = 2;
    opt.quiet = true;
    const auto a = run_experiment(opt);
    const auto b = run_experiment(opt);
    json ja = run_record_json(a.records[0]);
    json jb = run_record_json(b.records[0]);
    ja.erase("duration_seconds");  // wall-clock time is the only volatile field
    jb.erase("duration_seconds");
    CHECK(ja == jb);
    std::filesystem::remove_all(opt.out_dir);
}
