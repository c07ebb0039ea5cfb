#ifndef LINCOLN_CONFIG_HPP
#define LINCOLN_CONFIG_HPP

#include <cstdint>
#include <set>
#include <string>

#include "json.hpp"

#include "lincoln/errors.hpp"
#include "lincoln/hypergraph.hpp"
#include "lincoln/inter_encoder.hpp"

namespace lincoln {

// Flat run configuration; the JSON form rejects unknown keys.
struct TrainConfig {
    std::size_t d = 64;
    std::size_t k = 2;
    double beta = 0.5;
    double lr = 1e-3;
    int epochs_per_snapshot = 50;
    std::size_t negative_ratio = 1;
    std::string snapshot_policy = "equal_count"; // used by ingestion; echoed in reports
    int snapshots = 12;                          // T for ingestion
    std::uint64_t seed = 42;
    std::string intermediate_layers = "all"; // final_only | half | all
    bool disable_pin = false;
    bool disable_bihe = false;
    int runs = 5;
    int bptt_window = 1; // 1 = detached carry; 2 = chain two snapshots (tests)

    void validate() const {
        if (d == 0 || d % 2 != 0) raise(ErrorCode::InvalidConfig, "d must be a positive even number");
        if (k < 1) raise(ErrorCode::InvalidConfig, "k must be >= 1");
        if (beta < 0.0) raise(ErrorCode::InvalidConfig, "beta must be >= 0");
        if (!(lr > 0.0)) raise(ErrorCode::InvalidConfig, "lr must be > 0");
        if (epochs_per_snapshot < 1) raise(ErrorCode::InvalidConfig, "epochs_per_snapshot must be >= 1");
        if (negative_ratio < 1) raise(ErrorCode::InvalidConfig, "negative_ratio must be >= 1");
        if (snapshot_policy != "equal_count" && snapshot_policy != "equal_duration")
            raise(ErrorCode::InvalidConfig, "snapshot_policy must be equal_count or equal_duration");
        if (snapshots < 1) raise(ErrorCode::InvalidT, "snapshots must be >= 1");
        if (intermediate_layers != "final_only" && intermediate_layers != "half" &&
            intermediate_layers != "all")
            raise(ErrorCode::InvalidConfig, "intermediate_layers must be final_only, half or all");
        if (runs < 1) raise(ErrorCode::InvalidConfig, "runs must be >= 1");
        if (bptt_window < 1 || bptt_window > 2)
            raise(ErrorCode::InvalidConfig, "bptt_window must be 1 or 2");
    }

    IntermediateLayers intermediate_mode() const {
        if (intermediate_layers == "final_only") return IntermediateLayers::FinalOnly;
        if (intermediate_layers == "half") return IntermediateLayers::Half;
        return IntermediateLayers::All;
    }

    PartitionPolicy partition_policy() const {
        return snapshot_policy == "equal_duration" ? PartitionPolicy::equal_duration(snapshots)
                                                   : PartitionPolicy::equal_count(snapshots);
    }
};

inline nlohmann::json train_config_to_json(const TrainConfig& c) {
    nlohmann::json j;
    j["d"] = c.d;
    j["k"] = c.k;
    j["beta"] = c.beta;
    j["lr"] = c.lr;
    j["epochs_per_snapshot"] = c.epochs_per_snapshot;
    j["negative_ratio"] = c.negative_ratio;
    j["snapshot_policy"] = c.snapshot_policy;
    j["snapshots"] = c.snapshots;
    j["seed"] = c.seed;
    j["intermediate_layers"] = c.intermediate_layers;
    j["disable_pin"] = c.disable_pin;
    j["disable_bihe"] = c.disable_bihe;
    j["runs"] = c.runs;
    j["bptt_window"] = c.bptt_window;
    return j;
}

inline TrainConfig train_config_from_json(const nlohmann::json& j) {
    static const std::set<std::string> known = {
        "d", "k", "beta", "lr", "epochs_per_snapshot", "negative_ratio",
        "snapshot_policy", "snapshots", "seed", "intermediate_layers",
        "disable_pin", "disable_bihe", "runs", "bptt_window"};
    for (auto it = j.begin(); it != j.end(); ++it)
        if (known.count(it.key()) == 0)
            raise(ErrorCode::InvalidConfig, "unknown config key '" + it.key() + "'");

    TrainConfig c;
    try {
        if (j.contains("d")) c.d = j.at("d").get<std::size_t>();
        if (j.contains("k")) c.k = j.at("k").get<std::size_t>();
        if (j.contains("beta")) c.beta = j.at("beta").get<double>();
        if (j.contains("lr")) c.lr = j.at("lr").get<double>();
        if (j.contains("epochs_per_snapshot"))
            c.epochs_per_snapshot = j.at("epochs_per_snapshot").get<int>();
        if (j.contains("negative_ratio")) c.negative_ratio = j.at("negative_ratio").get<std::size_t>();
        if (j.contains("snapshot_policy")) c.snapshot_policy = j.at("snapshot_policy").get<std::string>();
        if (j.contains("snapshots")) c.snapshots = j.at("snapshots").get<int>();
        if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("intermediate_layers"))
            c.intermediate_layers = j.at("intermediate_layers").get<std::string>();
        if (j.contains("disable_pin")) c.disable_pin = j.at("disable_pin").get<bool>();
        if (j.contains("disable_bihe")) c.disable_bihe = j.at("disable_bihe").get<bool>();
        if (j.contains("runs")) c.runs = j.at("runs").get<int>();
        if (j.contains("bptt_window")) c.bptt_window = j.at("bptt_window").get<int>();
    } catch (const nlohmann::json::exception& ex) {
        raise(ErrorCode::InvalidConfig, std::string("bad config value: ") + ex.what());
    }
    c.validate();
    return c;
}

} // namespace lincoln

#endif // LINCOLN_CONFIG_HPP
