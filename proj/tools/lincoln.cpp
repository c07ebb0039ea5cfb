// lincoln — dynamic hyperedge prediction: ingest, train, analyze, gradcheck.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "lincoln/analysis.hpp"
#include "lincoln/checkpoint.hpp"
#include "lincoln/config.hpp"
#include "lincoln/errors.hpp"
#include "lincoln/hypergraph.hpp"
#include "lincoln/synthetic.hpp"
#include "lincoln/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kToolVersion = "0.1.0";
constexpr int kExitOk = 0;
constexpr int kExitVerificationFailure = 1;
constexpr int kExitInputError = 2;

void write_file_atomic(const fs::path& path, const std::string& content) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) lincoln::raise(lincoln::ErrorCode::IoError, "cannot write " + tmp.string());
        out << content;
    }
    fs::rename(tmp, path);
}

std::string hash_hex(const std::string& s) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(lincoln::fnv1a64(s)));
    return buf;
}

struct ManifestInfo {
    json effective_config;
    std::string dataset_path;
    std::uint64_t seed = 0;
    std::vector<std::string> outputs;
    std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();
};

// Written atomically at run end; wall-clock is the one volatile field.
void write_manifest(const fs::path& path, const ManifestInfo& info) {
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - info.started).count();
    json j;
    j["config_hash"] = hash_hex(info.effective_config.dump());
    j["dataset_path"] = info.dataset_path;
    j["seed"] = info.seed;
    j["tool_version"] = kToolVersion;
    j["wall_clock_seconds"] = elapsed;
    j["outputs"] = info.outputs;
    write_file_atomic(path, j.dump(2) + "\n");
}

json load_json_file(const fs::path& path, const char* what) {
    std::ifstream in(path);
    if (!in) lincoln::raise(lincoln::ErrorCode::IoError, std::string(what) + " not readable: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& ex) {
        lincoln::raise(lincoln::ErrorCode::IoError,
                       std::string(what) + " is not valid JSON: " + ex.what());
    }
    return j;
}

lincoln::DynamicHypergraph load_dataset(const fs::path& path) {
    return lincoln::dataset_from_json(load_json_file(path, "dataset"));
}

std::uint64_t seed_with_env_override(std::uint64_t config_seed) {
    if (const char* env = std::getenv("LINCOLN_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            lincoln::raise(lincoln::ErrorCode::InvalidConfig,
                           std::string("LINCOLN_SEED is not an integer: ") + env);
        }
    }
    return config_seed;
}

int cmd_ingest(const std::string& nverts, const std::string& simplices, const std::string& times,
               const std::string& out, const std::string& policy, int snapshots) {
    ManifestInfo manifest;

    auto open = [](const std::string& p, const char* what) {
        std::ifstream in(p);
        if (!in)
            lincoln::raise(lincoln::ErrorCode::IoError, std::string(what) + " not readable: " + p);
        return in;
    };
    std::ifstream nv = open(nverts, "nverts");
    std::ifstream sx = open(simplices, "simplices");
    std::ifstream tm = open(times, "times");

    auto parsed = lincoln::parse_simplex_dataset(nv, sx, tm);
    lincoln::PartitionPolicy pol = policy == "equal_duration"
                                       ? lincoln::PartitionPolicy::equal_duration(snapshots)
                                       : lincoln::PartitionPolicy::equal_count(snapshots);
    auto result =
        lincoln::partition_into_snapshots(std::move(parsed.edges), pol, std::move(parsed.raw_ids));

    write_file_atomic(out, lincoln::dataset_to_json(result.dataset).dump(2) + "\n");

    manifest.effective_config = {{"command", "ingest"},
                                 {"nverts", nverts},
                                 {"simplices", simplices},
                                 {"times", times},
                                 {"policy", policy},
                                 {"snapshots", snapshots}};
    manifest.dataset_path = out;
    manifest.outputs = {out};
    write_manifest(out + ".manifest.json", manifest);

    std::cout << "nodes=" << result.dataset.global_node_count
              << ", edges=" << result.dataset.total_edges()
              << ", snapshots=" << result.dataset.snapshot_count() << "\n";
    if (result.dropped_empty > 0)
        std::cout << "warning: dropped " << result.dropped_empty << " empty snapshot(s)\n";
    return kExitOk;
}

int cmd_train(const std::string& dataset_path, const std::string& config_path,
              const std::string& out_dir, const std::vector<std::string>& ablate, int runs_override,
              bool parallel) {
    ManifestInfo manifest;

    auto data = load_dataset(dataset_path);
    lincoln::TrainConfig cfg = lincoln::train_config_from_json(load_json_file(config_path, "config"));
    cfg.seed = seed_with_env_override(cfg.seed);
    for (const auto& a : ablate) {
        if (a == "pin")
            cfg.disable_pin = true;
        else if (a == "bihe")
            cfg.disable_bihe = true;
        else
            lincoln::raise(lincoln::ErrorCode::InvalidConfig, "unknown ablation '" + a + "'");
    }
    if (runs_override > 0) cfg.runs = runs_override;
    cfg.validate();

    fs::create_directories(out_dir);

    lincoln::detail::FinalState state;
    const auto report = lincoln::live_update_run(data, cfg, parallel, &state);

    const fs::path report_path = fs::path(out_dir) / "report.json";
    const fs::path csv_path = fs::path(out_dir) / "metrics.csv";
    const fs::path curves_path = fs::path(out_dir) / "curves.csv";
    const fs::path ckpt_path = fs::path(out_dir) / "checkpoint.bin";

    write_file_atomic(report_path, lincoln::report_to_json(report).dump(2) + "\n");
    {
        std::ostringstream s;
        lincoln::report_to_csv(report, s);
        write_file_atomic(csv_path, s.str());
    }
    {
        std::ostringstream s;
        lincoln::report_curves_csv(report, s);
        write_file_atomic(curves_path, s.str());
    }
    {
        lincoln::Checkpoint ckpt;
        ckpt.d = cfg.d;
        ckpt.k = cfg.k;
        ckpt.intermediate_layers = cfg.intermediate_layers;
        ckpt.time_offset = state.time_offset;
        ckpt.time_unit = state.time_unit;
        for (const auto& [name, e] : state.params) {
            ckpt.params.create(name, e.value);
            auto& entry = ckpt.params.entries().at(name);
            entry.m = e.m;
            entry.v = e.v;
            entry.step = e.step;
        }
        ckpt.hidden = state.hidden;
        std::ostringstream s(std::ios::binary);
        lincoln::save_checkpoint(ckpt, s);
        write_file_atomic(ckpt_path, s.str());
    }

    manifest.effective_config = lincoln::train_config_to_json(cfg);
    manifest.effective_config["command"] = "train";
    manifest.dataset_path = dataset_path;
    manifest.seed = cfg.seed;
    manifest.outputs = {report_path.string(), csv_path.string(), curves_path.string(),
                        ckpt_path.string()};
    write_manifest(fs::path(out_dir) / "manifest.json", manifest);

    std::printf("mean test AUROC=%.4f AP=%.4f over %zu run(s)\n", report.mean_auroc,
                report.mean_ap, report.runs.size());
    std::cout << "report: " << report_path.string() << "\n";
    return kExitOk;
}

int cmd_analyze(const std::string& dataset_path, const std::string& out_dir,
                const std::string& mode, std::uint64_t seed, std::size_t sample_size,
                const std::string& bucket_mode) {
    ManifestInfo manifest;

    auto data = load_dataset(dataset_path);
    fs::create_directories(out_dir);
    seed = seed_with_env_override(seed);

    lincoln::AnalysisOptions opt;
    opt.sample_size = sample_size;
    opt.bucket_mode = bucket_mode == "jaccard" ? lincoln::OverlapBucketMode::Jaccard
                                               : lincoln::OverlapBucketMode::IntersectionCount;

    std::vector<std::string> outputs;
    if (mode == "o1" || mode == "both") {
        lincoln::Rng rng(lincoln::derive_seed(seed, "analysis/o1"));
        const auto rows = lincoln::overlap_vs_time_gap(data, opt, rng);
        std::ostringstream s;
        lincoln::overlap_rows_csv(rows, s);
        const fs::path p = fs::path(out_dir) / "overlap_gap.csv";
        write_file_atomic(p, s.str());
        outputs.push_back(p.string());
    }
    if (mode == "o2" || mode == "both") {
        lincoln::Rng rng(lincoln::derive_seed(seed, "analysis/o2"));
        const auto rows = lincoln::reappearance_rate(data, opt, rng);
        std::ostringstream s;
        lincoln::reappearance_rows_csv(rows, s);
        const fs::path p = fs::path(out_dir) / "reappearance.csv";
        write_file_atomic(p, s.str());
        outputs.push_back(p.string());
    }

    manifest.effective_config = {{"command", "analyze"}, {"mode", mode},
                                 {"seed", seed},         {"sample_size", sample_size},
                                 {"bucket_mode", bucket_mode}};
    manifest.dataset_path = dataset_path;
    manifest.seed = seed;
    manifest.outputs = outputs;
    write_manifest(fs::path(out_dir) / "manifest.json", manifest);

    for (const auto& p : outputs) std::cout << p << "\n";
    return kExitOk;
}

int cmd_gradcheck(const std::string& config_path, double epsilon, bool corrupt) {
    lincoln::ToyGradCheck toy;
    if (!config_path.empty()) {
        lincoln::TrainConfig cfg =
            lincoln::train_config_from_json(load_json_file(config_path, "config"));
        toy.model_config.d = cfg.d;
        toy.model_config.k = cfg.k;
        toy.model_config.intermediate = cfg.intermediate_mode();
        toy.beta = cfg.beta;
        toy.seed = cfg.seed;
    }
    toy.leak_param = corrupt;

    const auto result = toy.run(epsilon);
    std::printf("gradcheck: max relative error = %.3e (epsilon=%.1e, worst=%s[%zu])\n",
                result.max_rel_error, epsilon, result.worst_param.c_str(), result.worst_index);
    if (result.max_rel_error <= 1e-4) {
        std::cout << "gradcheck: PASS\n";
        return kExitOk;
    }
    std::cout << "gradcheck: FAIL\n";
    return kExitVerificationFailure;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"LINCOLN dynamic hyperedge prediction toolkit"};
    app.require_subcommand(1);

    // ingest
    auto* ingest = app.add_subcommand("ingest", "Convert a simplex triple into a dataset file");
    std::string nverts, simplices, times, ingest_out;
    std::string policy = "equal_count";
    int snapshots = 12;
    ingest->add_option("--nverts", nverts, "nverts file")->required();
    ingest->add_option("--simplices", simplices, "simplices file")->required();
    ingest->add_option("--times", times, "times file")->required();
    ingest->add_option("--out", ingest_out, "output dataset JSON path")->required();
    ingest->add_option("--policy", policy, "equal_count|equal_duration")
        ->check(CLI::IsMember({"equal_count", "equal_duration"}));
    ingest->add_option("--snapshots", snapshots, "number of snapshots T");

    // train
    auto* train = app.add_subcommand("train", "Run the live-update protocol");
    std::string train_dataset, train_config, train_out;
    std::vector<std::string> ablate;
    int runs_override = 0;
    bool parallel = false;
    train->add_option("--dataset", train_dataset, "dataset JSON")->required();
    train->add_option("--config", train_config, "train config JSON")->required();
    train->add_option("--out", train_out, "output directory")->required();
    train->add_option("--ablate", ablate, "disable a strategy: pin|bihe (repeatable)");
    train->add_option("--runs", runs_override, "override config run count");
    train->add_flag("--parallel", parallel, "execute runs on separate threads");

    // analyze
    auto* analyze = app.add_subcommand("analyze", "Observation analyses (O1/O2) as CSV");
    std::string an_dataset, an_out;
    std::string an_mode = "both";
    std::string bucket_mode = "count";
    std::uint64_t an_seed = 42;
    std::size_t sample_size = 50;
    analyze->add_option("--dataset", an_dataset, "dataset JSON")->required();
    analyze->add_option("--out", an_out, "output directory")->required();
    analyze->add_option("--mode", an_mode, "o1|o2|both")->check(CLI::IsMember({"o1", "o2", "both"}));
    analyze->add_option("--seed", an_seed, "sampling seed");
    analyze->add_option("--sample-size", sample_size, "relations to sample");
    analyze->add_option("--bucket-mode", bucket_mode, "count|jaccard")
        ->check(CLI::IsMember({"count", "jaccard"}));

    // gradcheck
    auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check on the toy instance");
    std::string gc_config;
    double epsilon = 1e-5;
    bool corrupt = false;
    gradcheck->add_option("--config", gc_config, "optional config JSON (d, k, beta, seed)");
    gradcheck->add_option("--epsilon", epsilon, "central difference step");
    gradcheck->add_flag("--corrupt-gradient", corrupt, "test hook: inject a broken gradient");

    CLI11_PARSE(app, argc, argv);

    try {
        if (ingest->parsed())
            return cmd_ingest(nverts, simplices, times, ingest_out, policy, snapshots);
        if (train->parsed())
            return cmd_train(train_dataset, train_config, train_out, ablate, runs_override, parallel);
        if (analyze->parsed())
            return cmd_analyze(an_dataset, an_out, an_mode, an_seed, sample_size, bucket_mode);
        if (gradcheck->parsed()) return cmd_gradcheck(gc_config, epsilon, corrupt);
    } catch (const lincoln::LincolnError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInputError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInputError;
    }
    return kExitInputError;
}
