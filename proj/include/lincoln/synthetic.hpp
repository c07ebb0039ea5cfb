#ifndef LINCOLN_SYNTHETIC_HPP
#define LINCOLN_SYNTHETIC_HPP

#include <algorithm>
#include <cstdint>
#include <optional>
#include <set>
#include <vector>

#include "lincoln/hypergraph.hpp"
#include "lincoln/model.hpp"
#include "lincoln/param_store.hpp"
#include "lincoln/rng.hpp"
#include "lincoln/trainer.hpp"

namespace lincoln {

// ---- bundled toy instance (6 nodes, 3 hyperedges, 2 snapshots) -------------------

inline DynamicHypergraph make_toy_instance() {
    DynamicHypergraph d;
    d.global_node_count = 6;
    d.raw_ids = {0, 1, 2, 3, 4, 5};
    d.snapshots.push_back(build_snapshot(
        {Hyperedge::make({0, 1, 2}, 0), Hyperedge::make({2, 3}, 1)}, SnapshotSpec{0, 0, 2}));
    d.snapshots.push_back(
        build_snapshot({Hyperedge::make({3, 4, 5}, 2)}, SnapshotSpec{1, 2, 4}));
    return d;
}

// Full-model loss over both toy snapshots, chained on one tape so gradients
// cross the snapshot boundary: BCE over two candidates plus both snapshots'
// contrastive terms. With `leak_param` set, the loss also adds a parameter
// value read outside the tape; finite differences see it, the reverse pass
// cannot, so a gradient check must fail (CLI/test corruption hook).
struct ToyGradCheck {
    ModelConfig model_config;
    std::uint64_t seed = 7;
    double beta = 0.5;
    bool leak_param = false;

    ToyGradCheck() {
        model_config.d = 4;
        model_config.k = 2;
        model_config.intermediate = IntermediateLayers::All;
    }

    GradCheckResult run(double epsilon) const {
        const DynamicHypergraph data = make_toy_instance();
        LincolnModel model(model_config, data.global_node_count, seed);
        const double offset = 0.0;
        const double unit = 2.0; // two snapshots spanning [0, 4)
        std::vector<SnapshotContext> contexts;
        for (const auto& s : data.snapshots)
            contexts.push_back(model.make_context(s, offset, unit));

        const std::vector<std::vector<NodeId>> candidates = {{3, 4, 5}, {0, 4, 5}};
        const std::vector<int> labels = {1, 0};

        auto build = [&](Tape& tape, const ParamStore&) -> Var {
            HiddenStates init = model.initial_hidden();
            std::vector<Var> hvars;
            for (const Tensor& h : init.layers) hvars.push_back(tape.constant(h));
            std::vector<char> seen = init.seen;

            auto step0 = model.process_snapshot(tape, contexts[0], hvars, seen);
            for (NodeId v : contexts[0].snap->local_nodes) seen[static_cast<std::size_t>(v)] = 1;
            auto step1 =
                model.process_snapshot(tape, contexts[1], step0.advanced.hidden_global, seen);
            for (NodeId v : contexts[1].snap->local_nodes) seen[static_cast<std::size_t>(v)] = 1;

            SparseMatrix pooling = model.candidate_pooling(candidates, seen);
            Var scores = model.predict_scores(tape, pooling, step1.advanced.hidden_global.back());
            Var loss = bce_loss(tape, scores, labels);
            if (step0.stack.q_struct) {
                Var con = add(contrastive_loss(tape, *step0.stack.q_struct, *step0.stack.q_temp),
                              contrastive_loss(tape, *step1.stack.q_struct, *step1.stack.q_temp));
                loss = total_loss(loss, scalar_mul(0.5, con), beta);
            }
            if (leak_param) {
                Tensor leak(1, 1, std::vector<double>{model.store().value("pred/b")(0, 0)});
                loss = add(loss, tape.constant(leak));
            }
            return loss;
        };

        // grad_check perturbs the model's own store; `build` re-reads it.
        return grad_check(build, model.store(), epsilon);
    }
};

// ---- planted-period synthetic (O2 mechanism) --------------------------------------

struct PeriodicSpec {
    int snapshot_count = 12;
    int tracked_edges = 30;   // planted hyperedges, all re-appearing with `period`
    int phase_classes = 3;    // tracked edges split round-robin over phases
    int period = 3;
    int instances_per_appearance = 2; // duplicate instances per due snapshot
    int noise_per_snapshot = 2;
    int min_size = 3, max_size = 5;
    int extra_noise_nodes = 40;
    Timestamp snapshot_span = 100;
    // Singleton edge per node per snapshot: keeps every node's recurrent
    // state ticking between its group's appearances. Singletons are never
    // prediction candidates.
    bool singleton_background = false;
    // Chance of one off-phase appearance per group per non-due snapshot.
    // Extras make steps-since-last-appearance a misleading predictor while
    // the absolute snapshot phase stays exact.
    double extra_appearance_prob = 0.0;
    std::uint64_t seed = 1;
};

// Tracked edge g (node-disjoint groups) appears in every snapshot s with
// s % period == g % phase_classes; uniform noise edges fill every snapshot.
inline DynamicHypergraph make_periodic_dataset(const PeriodicSpec& spec) {
    Rng rng(derive_seed(spec.seed, "periodic"));

    std::vector<std::vector<NodeId>> groups;
    NodeId next = 0;
    for (int g = 0; g < spec.tracked_edges; ++g) {
        const int size = spec.min_size + static_cast<int>(rng.below(
                             static_cast<std::uint64_t>(spec.max_size - spec.min_size + 1)));
        std::vector<NodeId> members;
        for (int i = 0; i < size; ++i) members.push_back(next++);
        groups.push_back(std::move(members));
    }
    const NodeId total_nodes = next + spec.extra_noise_nodes;

    DynamicHypergraph d;
    d.global_node_count = static_cast<std::size_t>(total_nodes);
    d.raw_ids.resize(d.global_node_count);
    for (std::size_t i = 0; i < d.raw_ids.size(); ++i) d.raw_ids[i] = static_cast<std::int64_t>(i);

    for (int s = 0; s < spec.snapshot_count; ++s) {
        const Timestamp base = static_cast<Timestamp>(s) * spec.snapshot_span;
        std::vector<Hyperedge> edges;
        for (int g = 0; g < spec.tracked_edges; ++g) {
            const bool due = s % spec.period == g % spec.phase_classes;
            if (due) {
                for (int i = 0; i < spec.instances_per_appearance; ++i) {
                    const Timestamp jitter = static_cast<Timestamp>(
                        rng.below(static_cast<std::uint64_t>(spec.snapshot_span)));
                    edges.push_back(
                        Hyperedge::make(groups[static_cast<std::size_t>(g)], base + jitter));
                }
            } else if (spec.extra_appearance_prob > 0.0 &&
                       rng.real01() < spec.extra_appearance_prob) {
                const Timestamp jitter = static_cast<Timestamp>(
                    rng.below(static_cast<std::uint64_t>(spec.snapshot_span)));
                edges.push_back(Hyperedge::make(groups[static_cast<std::size_t>(g)], base + jitter));
            }
        }
        for (int i = 0; i < spec.noise_per_snapshot; ++i) {
            const int size = spec.min_size + static_cast<int>(rng.below(
                                 static_cast<std::uint64_t>(spec.max_size - spec.min_size + 1)));
            std::set<NodeId> members;
            while (static_cast<int>(members.size()) < size)
                members.insert(static_cast<NodeId>(rng.below(static_cast<std::uint64_t>(total_nodes))));
            const Timestamp jitter =
                static_cast<Timestamp>(rng.below(static_cast<std::uint64_t>(spec.snapshot_span)));
            edges.push_back(
                Hyperedge::make(std::vector<NodeId>(members.begin(), members.end()), base + jitter));
        }
        if (spec.singleton_background) {
            for (NodeId v = 0; v < total_nodes; ++v) {
                const Timestamp jitter = static_cast<Timestamp>(
                    rng.below(static_cast<std::uint64_t>(spec.snapshot_span)));
                edges.push_back(Hyperedge::make({v}, base + jitter));
            }
        }
        d.snapshots.push_back(build_snapshot(
            std::move(edges), SnapshotSpec{s, base, base + spec.snapshot_span}));
    }
    return d;
}

// ---- planted-similarity synthetic (O1 mechanism) -----------------------------------

struct OverlapSpec {
    int snapshot_count = 10;
    int cores = 10;            // persistent node cores
    int core_size = 5;
    int edges_per_core = 2;    // burst size per snapshot
    int noise_per_snapshot = 2;
    int extra_noise_nodes = 30;
    Timestamp snapshot_span = 100;
    Timestamp burst_width = 4; // bursts are temporally tight inside a snapshot
    std::uint64_t seed = 1;
};

// Future edges are node-overlapping perturbations of recent ones: each core
// emits a short burst of near-copies every snapshot (one member swapped per
// instance), and cores drift by one node per snapshot.
inline DynamicHypergraph make_overlap_dataset(const OverlapSpec& spec) {
    Rng rng(derive_seed(spec.seed, "overlap"));

    std::vector<std::vector<NodeId>> cores;
    NodeId next = 0;
    for (int c = 0; c < spec.cores; ++c) {
        std::vector<NodeId> members;
        for (int i = 0; i < spec.core_size; ++i) members.push_back(next++);
        cores.push_back(std::move(members));
    }
    const NodeId total_nodes = next + spec.extra_noise_nodes;

    DynamicHypergraph d;
    d.global_node_count = static_cast<std::size_t>(total_nodes);
    d.raw_ids.resize(d.global_node_count);
    for (std::size_t i = 0; i < d.raw_ids.size(); ++i) d.raw_ids[i] = static_cast<std::int64_t>(i);

    auto perturb = [&](const std::vector<NodeId>& core) {
        std::vector<NodeId> e = core;
        const std::size_t drop = rng.index(e.size());
        NodeId candidate;
        do {
            candidate = static_cast<NodeId>(rng.below(static_cast<std::uint64_t>(total_nodes)));
        } while (std::find(core.begin(), core.end(), candidate) != core.end());
        e[drop] = candidate;
        std::sort(e.begin(), e.end());
        return e;
    };

    for (int s = 0; s < spec.snapshot_count; ++s) {
        const Timestamp base = static_cast<Timestamp>(s) * spec.snapshot_span;
        std::vector<Hyperedge> edges;
        for (auto& core : cores) {
            const Timestamp burst_at = base + static_cast<Timestamp>(rng.below(
                static_cast<std::uint64_t>(spec.snapshot_span - spec.burst_width)));
            edges.push_back(Hyperedge::make(core, burst_at));
            for (int i = 1; i < spec.edges_per_core; ++i) {
                const Timestamp offset =
                    1 + static_cast<Timestamp>(rng.below(static_cast<std::uint64_t>(spec.burst_width)));
                edges.push_back(Hyperedge::make(perturb(core), burst_at + offset));
            }
            // Slow drift keeps future bursts overlapping recent ones.
            if (rng.real01() < 0.25) core = perturb(core);
        }
        for (int i = 0; i < spec.noise_per_snapshot; ++i) {
            std::set<NodeId> members;
            while (static_cast<int>(members.size()) < spec.core_size)
                members.insert(static_cast<NodeId>(rng.below(static_cast<std::uint64_t>(total_nodes))));
            const Timestamp jitter =
                static_cast<Timestamp>(rng.below(static_cast<std::uint64_t>(spec.snapshot_span)));
            edges.push_back(
                Hyperedge::make(std::vector<NodeId>(members.begin(), members.end()), base + jitter));
        }
        std::stable_sort(edges.begin(), edges.end(), [](const Hyperedge& a, const Hyperedge& b) {
            return a.timestamp < b.timestamp;
        });
        d.snapshots.push_back(build_snapshot(
            std::move(edges), SnapshotSpec{s, base, base + spec.snapshot_span}));
    }
    return d;
}

} // namespace lincoln

#endif // LINCOLN_SYNTHETIC_HPP
