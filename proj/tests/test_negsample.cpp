#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <sstream>

#include "lincoln/negative_sampling.hpp"
#include "lincoln/rng.hpp"

using namespace lincoln;

namespace {

Snapshot random_snapshot(Rng& rng, std::size_t n_edges, std::size_t node_pool) {
    std::vector<Hyperedge> edges;
    for (std::size_t e = 0; e < n_edges; ++e) {
        std::set<NodeId> members;
        const std::size_t size = 2 + rng.index(3);
        while (members.size() < size)
            members.insert(static_cast<NodeId>(rng.below(node_pool)));
        edges.push_back(Hyperedge::make({members.begin(), members.end()},
                                        static_cast<Timestamp>(rng.below(40))));
    }
    return build_snapshot(std::move(edges), SnapshotSpec{0, 0, 40});
}

} // namespace

TEST_CASE("mns growth has a single reachable outcome on the two-edge chain", "[negsample]") {
    auto snap = build_snapshot({Hyperedge::make({1, 2}, 0), Hyperedge::make({2, 3}, 1)},
                               SnapshotSpec{0, 0, 2});
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed);
        CHECK(mns_negative(snap, 3, rng) == std::vector<NodeId>{1, 2, 3});
    }
}

TEST_CASE("mns reports a degenerate snapshot", "[negsample]") {
    // the only size-2 connected set is the positive itself and V_t \ S is empty
    auto snap = build_snapshot({Hyperedge::make({1, 2}, 0)}, SnapshotSpec{0, 0, 1});
    Rng rng(3);
    CHECK_THROWS_AS(mns_negative(snap, 2, rng), LincolnError);
}

TEST_CASE("mns subsets avoid the positives on the overlapping pair", "[negsample]") {
    auto snap = build_snapshot({Hyperedge::make({1, 2, 3}, 0), Hyperedge::make({3, 4}, 1)},
                               SnapshotSpec{0, 0, 2});
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        Rng rng(seed);
        const auto neg = mns_negative(snap, 2, rng);
        CHECK(neg.size() == 2);
        CHECK(neg != std::vector<NodeId>{3, 4});
        CHECK(neg != std::vector<NodeId>{1, 2, 3});
        for (NodeId v : neg) CHECK(snap.local_index(v).has_value());
    }
}

TEST_CASE("candidate batches pair each positive with ratio negatives", "[negsample]") {
    auto snap = build_snapshot({Hyperedge::make({0, 1}, 0), Hyperedge::make({1, 2}, 1),
                                Hyperedge::make({2, 3, 4}, 2)},
                               SnapshotSpec{0, 0, 3});
    std::vector<Hyperedge> positives = {snap.edges[0], snap.edges[2]};
    Rng rng(7);
    auto batch = make_candidate_batch(snap, positives, 1, rng);
    CHECK(batch.size() == 4);
    int label_sum = 0;
    for (int l : batch.labels) label_sum += l;
    CHECK(label_sum == 2);
    CHECK(batch.dropped_positives == 0);
}

TEST_CASE("singleton positives are dropped with a count", "[negsample]") {
    auto snap = build_snapshot({Hyperedge::make({0}, 0), Hyperedge::make({1}, 1),
                                Hyperedge::make({2, 3}, 2)},
                               SnapshotSpec{0, 0, 3});
    std::vector<Hyperedge> positives = {snap.edges[0], snap.edges[1]};
    Rng rng(9);
    auto batch = make_candidate_batch(snap, positives, 1, rng);
    CHECK(batch.size() == 0);
    CHECK(batch.dropped_positives == 2);
}

TEST_CASE("seeded batches are identical across runs", "[negsample]") {
    Rng data_rng(20);
    auto snap = random_snapshot(data_rng, 12, 15);
    auto run = [&snap]() {
        Rng rng(77);
        return make_candidate_batch(snap, snap.edges, 2, rng);
    };
    auto a = run();
    auto b = run();
    CHECK(a.candidates == b.candidates);
    CHECK(a.labels == b.labels);
}

TEST_CASE("negatives never equal a positive and sizes match exactly", "[negsample]") {
    Rng data_rng(31);
    for (int trial = 0; trial < 15; ++trial) {
        auto snap = random_snapshot(data_rng, 6 + data_rng.index(10), 18);
        std::set<std::vector<NodeId>> positive_sets;
        for (const auto& e : snap.edges) positive_sets.insert(e.nodes);

        Rng rng(1000 + static_cast<std::uint64_t>(trial));
        auto batch = make_candidate_batch(snap, snap.edges, 1, rng);

        std::map<std::size_t, long> size_balance; // positives +1, negatives -1
        for (std::size_t i = 0; i < batch.size(); ++i) {
            if (batch.labels[i] == 0) {
                CHECK(positive_sets.count(batch.candidates[i]) == 0);
                size_balance[batch.candidates[i].size()] -= 1;
            } else {
                size_balance[batch.candidates[i].size()] += 1;
            }
            CHECK(batch.candidates[i].size() >= 2);
        }
        for (const auto& [size, balance] : size_balance) {
            INFO("candidate size " << size);
            CHECK(balance == 0);
        }
    }
}

TEST_CASE("connected growth: negatives overlap some positive unless the fallback fired",
          "[negsample]") {
    Rng data_rng(42);
    auto snap = random_snapshot(data_rng, 10, 14);
    Rng rng(5);
    auto batch = make_candidate_batch(snap, snap.edges, 1, rng);
    if (batch.fallback_count == 0) {
        for (std::size_t i = 0; i < batch.size(); ++i) {
            if (batch.labels[i] == 1) continue;
            bool overlaps = false;
            for (const auto& e : snap.edges) {
                for (NodeId v : batch.candidates[i])
                    if (std::binary_search(e.nodes.begin(), e.nodes.end(), v)) overlaps = true;
            }
            CHECK(overlaps);
        }
    }
}

TEST_CASE("ratio below one is rejected", "[negsample]") {
    auto snap = build_snapshot({Hyperedge::make({0, 1}, 0)}, SnapshotSpec{0, 0, 1});
    Rng rng(1);
    CHECK_THROWS_AS(make_candidate_batch(snap, snap.edges, 0, rng), LincolnError);
}

TEST_CASE("audit csv lists one row per candidate", "[negsample]") {
    auto snap = build_snapshot({Hyperedge::make({0, 1}, 0), Hyperedge::make({1, 2}, 1)},
                               SnapshotSpec{3, 0, 2});
    Rng rng(2);
    auto batch = make_candidate_batch(snap, snap.edges, 1, rng);
    std::ostringstream out;
    dump_candidates_csv(batch, out);
    std::size_t lines = 0;
    for (char c : out.str())
        if (c == '\n') ++lines;
    CHECK(lines == batch.size() + 1);
    CHECK(out.str().rfind("snapshot,label,node_ids\n", 0) == 0);
}
