#ifndef LINCOLN_NEGATIVE_SAMPLING_HPP
#define LINCOLN_NEGATIVE_SAMPLING_HPP

#include <algorithm>
#include <ostream>
#include <set>
#include <vector>

#include "lincoln/errors.hpp"
#include "lincoln/hypergraph.hpp"
#include "lincoln/rng.hpp"

namespace lincoln {

struct CandidateBatch {
    std::vector<std::vector<NodeId>> candidates; // sorted node sets drawn from V_t
    std::vector<int> labels;                     // 1 positive, 0 negative
    int snapshot_index = 0;
    std::size_t dropped_positives = 0; // degenerate positives skipped
    std::size_t fallback_count = 0;    // times MNS drew a uniform node instead of an edge

    std::size_t size() const { return candidates.size(); }
};

namespace detail {

inline std::vector<NodeId> random_subset(std::vector<NodeId> pool, std::size_t count, Rng& rng) {
    rng.shuffle(pool);
    pool.resize(count);
    std::sort(pool.begin(), pool.end());
    return pool;
}

struct MnsScratch {
    std::vector<std::vector<std::size_t>> node_edges; // local row -> incident edge indices
    std::set<std::vector<NodeId>> positive_sets;
};

inline MnsScratch make_mns_scratch(const Snapshot& snap) {
    MnsScratch s;
    s.node_edges.resize(snap.node_count());
    for (const auto& e : snap.incidence.entries()) s.node_edges[e.row].push_back(e.col);
    for (const auto& e : snap.edges) s.positive_sets.insert(e.nodes);
    return s;
}

} // namespace detail

// Motif negative sampling: grow a set from a random hyperedge by unioning
// adjacent hyperedges (sharing >= 1 node and contributing >= 1 novel node)
// until exactly target_size nodes; an overshooting union contributes a uniform
// random subset of the new edge's novel nodes. When no adjacent hyperedge
// exists the growth falls back to one uniform node from V_t \ S. The result
// must differ from every positive edge of the snapshot; up to 50 attempts.
inline std::vector<NodeId> mns_negative(const Snapshot& snap, std::size_t target_size, Rng& rng,
                                        const detail::MnsScratch& scratch,
                                        std::size_t* fallback_count = nullptr) {
    if (target_size < 2) raise(ErrorCode::InvalidConfig, "mns target_size must be >= 2");
    if (snap.edge_count() == 0) raise(ErrorCode::NoNegativeFound, "snapshot has no edges");

    for (int attempt = 0; attempt < 50; ++attempt) {
        const std::size_t seed_idx = rng.index(snap.edge_count());
        std::vector<NodeId> grown = snap.edges[seed_idx].nodes;
        if (grown.size() > target_size) grown = detail::random_subset(grown, target_size, rng);

        bool dead_end = false;
        while (grown.size() < target_size) {
            // Adjacent edges with at least one novel node, deduplicated.
            std::set<std::size_t> adjacent;
            for (NodeId v : grown) {
                const auto local = snap.local_index(v);
                if (!local) continue;
                for (std::size_t e : scratch.node_edges[*local]) adjacent.insert(e);
            }
            std::vector<std::size_t> growable;
            for (std::size_t e : adjacent) {
                for (NodeId v : snap.edges[e].nodes)
                    if (!std::binary_search(grown.begin(), grown.end(), v)) {
                        growable.push_back(e);
                        break;
                    }
            }

            if (!growable.empty()) {
                const std::size_t pick = growable[rng.index(growable.size())];
                std::vector<NodeId> novel;
                for (NodeId v : snap.edges[pick].nodes)
                    if (!std::binary_search(grown.begin(), grown.end(), v)) novel.push_back(v);
                const std::size_t need = target_size - grown.size();
                if (novel.size() > need) novel = detail::random_subset(std::move(novel), need, rng);
                grown.insert(grown.end(), novel.begin(), novel.end());
                std::sort(grown.begin(), grown.end());
            } else {
                std::vector<NodeId> pool;
                for (NodeId v : snap.local_nodes)
                    if (!std::binary_search(grown.begin(), grown.end(), v)) pool.push_back(v);
                if (pool.empty()) {
                    dead_end = true;
                    break;
                }
                grown.push_back(pool[rng.index(pool.size())]);
                std::sort(grown.begin(), grown.end());
                if (fallback_count) ++*fallback_count;
            }
        }
        if (dead_end) continue;
        if (scratch.positive_sets.count(grown) == 0) return grown;

        // Collision with a positive (e.g. a seed edge of exactly target size):
        // swap one member for a uniform node outside S. An empty pool means a
        // genuinely degenerate snapshot and the attempt fails.
        std::vector<NodeId> pool;
        for (NodeId v : snap.local_nodes)
            if (!std::binary_search(grown.begin(), grown.end(), v)) pool.push_back(v);
        if (pool.empty()) continue;
        grown[rng.index(grown.size())] = pool[rng.index(pool.size())];
        std::sort(grown.begin(), grown.end());
        if (scratch.positive_sets.count(grown) == 0) return grown;
    }
    raise(ErrorCode::NoNegativeFound, "exhausted 50 attempts (degenerate snapshot)");
}

inline std::vector<NodeId> mns_negative(const Snapshot& snap, std::size_t target_size, Rng& rng,
                                        std::size_t* fallback_count = nullptr) {
    const auto scratch = detail::make_mns_scratch(snap);
    return mns_negative(snap, target_size, rng, scratch, fallback_count);
}

// Each usable positive contributes itself (label 1) and `ratio` size-matched
// MNS negatives (label 0); the assembled batch is shuffled. Positives that are
// singletons or defeat the sampler are dropped and counted.
inline CandidateBatch make_candidate_batch(const Snapshot& snap,
                                           const std::vector<Hyperedge>& positives,
                                           std::size_t ratio, Rng& rng) {
    if (ratio < 1) raise(ErrorCode::InvalidConfig, "negative ratio must be >= 1");

    CandidateBatch batch;
    batch.snapshot_index = snap.spec.index;
    const auto scratch = detail::make_mns_scratch(snap);

    for (const auto& pos : positives) {
        if (pos.size() < 2) {
            ++batch.dropped_positives;
            continue;
        }
        std::vector<std::vector<NodeId>> negatives;
        bool failed = false;
        for (std::size_t r = 0; r < ratio; ++r) {
            try {
                negatives.push_back(
                    mns_negative(snap, pos.size(), rng, scratch, &batch.fallback_count));
            } catch (const LincolnError& e) {
                if (e.code() != ErrorCode::NoNegativeFound) throw;
                failed = true;
                break;
            }
        }
        if (failed) {
            ++batch.dropped_positives;
            continue;
        }
        batch.candidates.push_back(pos.nodes);
        batch.labels.push_back(1);
        for (auto& n : negatives) {
            batch.candidates.push_back(std::move(n));
            batch.labels.push_back(0);
        }
    }

    // One permutation applied to candidates and labels together.
    std::vector<std::size_t> order(batch.candidates.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    std::vector<std::vector<NodeId>> shuffled_c(order.size());
    std::vector<int> shuffled_l(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        shuffled_c[i] = std::move(batch.candidates[order[i]]);
        shuffled_l[i] = batch.labels[order[i]];
    }
    batch.candidates = std::move(shuffled_c);
    batch.labels = std::move(shuffled_l);
    return batch;
}

// Audit dump: snapshot,label,node_ids...
inline void dump_candidates_csv(const CandidateBatch& batch, std::ostream& out) {
    out << "snapshot,label,node_ids\n";
    for (std::size_t i = 0; i < batch.size(); ++i) {
        out << batch.snapshot_index << ',' << batch.labels[i] << ',';
        for (std::size_t j = 0; j < batch.candidates[i].size(); ++j) {
            if (j) out << ' ';
            out << batch.candidates[i][j];
        }
        out << '\n';
    }
}

} // namespace lincoln

#endif // LINCOLN_NEGATIVE_SAMPLING_HPP
