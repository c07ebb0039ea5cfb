#ifndef LINCOLN_HYPERGRAPH_HPP
#define LINCOLN_HYPERGRAPH_HPP

#include <algorithm>
#include <cstdint>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "lincoln/errors.hpp"
#include "lincoln/tensor.hpp"

namespace lincoln {

using NodeId = std::int64_t;    // dense, stable across snapshots: 0..|V|-1
using Timestamp = std::int64_t; // dataset-native integer units

struct Hyperedge {
    std::vector<NodeId> nodes; // strictly increasing, non-empty
    Timestamp timestamp = 0;

    std::size_t size() const { return nodes.size(); }

    static Hyperedge make(std::vector<NodeId> nodes, Timestamp ts) {
        std::sort(nodes.begin(), nodes.end());
        nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
        if (nodes.empty()) raise(ErrorCode::ZeroSizeSimplex, "hyperedge with no nodes");
        if (ts < 0) raise(ErrorCode::TimestampOutOfRange, "negative timestamp");
        return Hyperedge{std::move(nodes), ts};
    }

    bool operator==(const Hyperedge& o) const {
        return nodes == o.nodes && timestamp == o.timestamp;
    }
};

struct SnapshotSpec {
    int index = 0;          // 0-based position in the sequence
    Timestamp t_start = 0;  // half-open [t_start, t_end)
    Timestamp t_end = 0;
};

struct Snapshot {
    SnapshotSpec spec;
    std::vector<Hyperedge> edges;
    std::vector<NodeId> local_nodes; // sorted global ids present in edges
    SparseMatrix incidence;          // |V_t| × |E_t|
    std::vector<double> node_degree; // d_v, row sums
    std::vector<double> edge_degree; // d_e, column sums

    std::size_t node_count() const { return local_nodes.size(); }
    std::size_t edge_count() const { return edges.size(); }

    // Global id -> local row, or nullopt when the node is not in this snapshot.
    std::optional<std::size_t> local_index(NodeId global) const {
        auto it = std::lower_bound(local_nodes.begin(), local_nodes.end(), global);
        if (it == local_nodes.end() || *it != global) return std::nullopt;
        return static_cast<std::size_t>(it - local_nodes.begin());
    }
};

struct DynamicHypergraph {
    std::vector<Snapshot> snapshots;
    std::size_t global_node_count = 0;
    std::vector<std::int64_t> raw_ids; // dense NodeId -> original dataset id

    std::size_t snapshot_count() const { return snapshots.size(); }

    std::size_t total_edges() const {
        std::size_t n = 0;
        for (const auto& s : snapshots) n += s.edge_count();
        return n;
    }

    Timestamp time_min() const { return snapshots.empty() ? 0 : snapshots.front().spec.t_start; }
    Timestamp time_end() const { return snapshots.empty() ? 0 : snapshots.back().spec.t_end; }
};

// ---- ingestion --------------------------------------------------------------

struct ParsedSimplexData {
    std::vector<Hyperedge> edges;      // dense NodeIds, input order preserved
    std::vector<std::int64_t> raw_ids; // dense id -> raw id (first-appearance order)
};

namespace detail {

inline std::vector<std::int64_t> read_integer_stream(std::istream& in, const char* stream_name) {
    std::vector<std::int64_t> values;
    std::string token;
    while (in >> token) {
        std::size_t pos = 0;
        std::int64_t v = 0;
        try {
            v = std::stoll(token, &pos);
        } catch (const std::exception&) {
            raise(ErrorCode::NonIntegerToken, std::string(stream_name) + ": '" + token + "'");
        }
        if (pos != token.size())
            raise(ErrorCode::NonIntegerToken, std::string(stream_name) + ": '" + token + "'");
        values.push_back(v);
    }
    return values;
}

} // namespace detail

// Reads the public simplex triple (<name>-nverts, -simplices, -times): the
// i-th simplex takes the next nverts[i] vertex ids and times[i]. Raw vertex
// ids are remapped to dense NodeIds in first-appearance order.
inline ParsedSimplexData parse_simplex_dataset(std::istream& nverts_stream,
                                               std::istream& simplices_stream,
                                               std::istream& times_stream) {
    const auto nverts = detail::read_integer_stream(nverts_stream, "nverts");
    const auto simplices = detail::read_integer_stream(simplices_stream, "simplices");
    const auto times = detail::read_integer_stream(times_stream, "times");

    if (nverts.size() != times.size())
        raise(ErrorCode::LengthMismatch,
              "nverts has " + std::to_string(nverts.size()) + " entries, times has " +
                  std::to_string(times.size()));
    std::size_t total = 0;
    for (std::size_t i = 0; i < nverts.size(); ++i) {
        if (nverts[i] == 0) raise(ErrorCode::ZeroSizeSimplex, "simplex " + std::to_string(i));
        if (nverts[i] < 0) raise(ErrorCode::NonIntegerToken, "negative nverts entry");
        total += static_cast<std::size_t>(nverts[i]);
    }
    if (total != simplices.size())
        raise(ErrorCode::LengthMismatch,
              "nverts sums to " + std::to_string(total) + ", simplices has " +
                  std::to_string(simplices.size()) + " entries");

    ParsedSimplexData out;
    std::unordered_map<std::int64_t, NodeId> dense;
    std::size_t cursor = 0;
    for (std::size_t i = 0; i < nverts.size(); ++i) {
        std::vector<NodeId> members;
        members.reserve(static_cast<std::size_t>(nverts[i]));
        for (std::int64_t j = 0; j < nverts[i]; ++j) {
            const std::int64_t raw = simplices[cursor++];
            auto it = dense.find(raw);
            if (it == dense.end()) {
                it = dense.emplace(raw, static_cast<NodeId>(out.raw_ids.size())).first;
                out.raw_ids.push_back(raw);
            }
            members.push_back(it->second);
        }
        out.edges.push_back(Hyperedge::make(std::move(members), times[i]));
    }
    return out;
}

// ---- snapshot construction --------------------------------------------------

inline Snapshot build_snapshot(std::vector<Hyperedge> edges, SnapshotSpec spec) {
    for (const auto& e : edges)
        if (e.timestamp < spec.t_start || e.timestamp >= spec.t_end)
            raise(ErrorCode::TimestampOutOfRange,
                  "edge at t=" + std::to_string(e.timestamp) + " outside [" +
                      std::to_string(spec.t_start) + ", " + std::to_string(spec.t_end) + ")");

    Snapshot snap;
    snap.spec = spec;
    snap.edges = std::move(edges);

    std::set<NodeId> nodes;
    for (const auto& e : snap.edges) nodes.insert(e.nodes.begin(), e.nodes.end());
    snap.local_nodes.assign(nodes.begin(), nodes.end());

    std::vector<SparseMatrix::Entry> entries;
    snap.node_degree.assign(snap.local_nodes.size(), 0.0);
    snap.edge_degree.assign(snap.edges.size(), 0.0);
    for (std::size_t j = 0; j < snap.edges.size(); ++j) {
        for (NodeId v : snap.edges[j].nodes) {
            const std::size_t i = *snap.local_index(v);
            entries.push_back({i, j, 1.0});
            snap.node_degree[i] += 1.0;
            snap.edge_degree[j] += 1.0;
        }
    }
    snap.incidence = SparseMatrix::from_entries(snap.local_nodes.size(), snap.edges.size(),
                                                std::move(entries));
    return snap;
}

// ---- partitioning -----------------------------------------------------------

struct PartitionPolicy {
    enum class Kind { EqualCount, EqualDuration };
    Kind kind = Kind::EqualCount;
    int snapshot_count = 1;

    static PartitionPolicy equal_count(int t) { return {Kind::EqualCount, t}; }
    static PartitionPolicy equal_duration(int t) { return {Kind::EqualDuration, t}; }
};

struct PartitionResult {
    DynamicHypergraph dataset;
    std::size_t dropped_empty = 0;
};

namespace detail {

// Cut positions honor timestamp ties: a cut inside a tie run slides forward so
// snapshot specs stay disjoint half-open intervals. Counts can deviate from
// ceil(E/T) only when ties force it.
inline std::vector<std::size_t> count_cuts(const std::vector<Hyperedge>& sorted, int t) {
    const std::size_t n = sorted.size();
    const std::size_t chunk = (n + static_cast<std::size_t>(t) - 1) / static_cast<std::size_t>(t);
    std::vector<std::size_t> cuts;
    cuts.push_back(0);
    for (int i = 1; i < t; ++i) {
        std::size_t c = std::min(static_cast<std::size_t>(i) * chunk, n);
        c = std::max(c, cuts.back());
        while (c > 0 && c < n && sorted[c].timestamp == sorted[c - 1].timestamp) ++c;
        cuts.push_back(c);
    }
    cuts.push_back(n);
    return cuts;
}

} // namespace detail

inline PartitionResult partition_into_snapshots(std::vector<Hyperedge> edges,
                                                PartitionPolicy policy,
                                                std::vector<std::int64_t> raw_ids = {}) {
    if (edges.empty()) raise(ErrorCode::EmptyEdgeList, "no edges to partition");
    if (policy.snapshot_count < 1)
        raise(ErrorCode::InvalidT, "snapshot count " + std::to_string(policy.snapshot_count));
    // equal_count cannot fill more snapshots than there are edges;
    // equal_duration may legitimately produce (and drop) empty intervals.
    if (policy.kind == PartitionPolicy::Kind::EqualCount &&
        static_cast<std::size_t>(policy.snapshot_count) > edges.size())
        raise(ErrorCode::InvalidT, "snapshot count " + std::to_string(policy.snapshot_count) +
                                       " exceeds edge count " + std::to_string(edges.size()));

    std::stable_sort(edges.begin(), edges.end(), [](const Hyperedge& a, const Hyperedge& b) {
        return a.timestamp < b.timestamp;
    });

    const int t = policy.snapshot_count;
    std::vector<std::pair<std::vector<Hyperedge>, Timestamp>> chunks; // edges + interval end
    std::size_t dropped = 0;
    const Timestamp t_min = edges.front().timestamp;
    const Timestamp t_max = edges.back().timestamp;

    if (policy.kind == PartitionPolicy::Kind::EqualCount) {
        const auto cuts = detail::count_cuts(edges, t);
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
            if (cuts[i] == cuts[i + 1]) {
                ++dropped;
                continue;
            }
            std::vector<Hyperedge> part(edges.begin() + cuts[i], edges.begin() + cuts[i + 1]);
            const Timestamp end =
                cuts[i + 1] == edges.size() ? t_max + 1 : edges[cuts[i + 1]].timestamp;
            chunks.emplace_back(std::move(part), end);
        }
    } else {
        // Integer interval boundaries b_i = t_min + floor(i*range/T).
        const unsigned __int128 range =
            static_cast<unsigned __int128>(t_max - t_min) + 1;
        std::vector<Timestamp> bounds(static_cast<std::size_t>(t) + 1);
        for (int i = 0; i <= t; ++i)
            bounds[static_cast<std::size_t>(i)] =
                t_min + static_cast<Timestamp>(range * static_cast<unsigned __int128>(i) /
                                               static_cast<unsigned __int128>(t));
        std::size_t cursor = 0;
        for (int i = 0; i < t; ++i) {
            std::vector<Hyperedge> part;
            while (cursor < edges.size() &&
                   edges[cursor].timestamp < bounds[static_cast<std::size_t>(i) + 1]) {
                part.push_back(edges[cursor++]);
            }
            if (part.empty())
                ++dropped;
            else
                chunks.emplace_back(std::move(part), bounds[static_cast<std::size_t>(i) + 1]);
        }
        if (!chunks.empty()) chunks.back().second = bounds.back(); // absorb trailing empties
    }

    PartitionResult result;
    Timestamp cursor = t_min;
    for (std::size_t i = 0; i < chunks.size(); ++i) {
        SnapshotSpec spec;
        spec.index = static_cast<int>(i);
        spec.t_start = cursor;
        spec.t_end = chunks[i].second;
        cursor = spec.t_end;
        result.dataset.snapshots.push_back(build_snapshot(std::move(chunks[i].first), spec));
    }
    result.dropped_empty = dropped;

    NodeId max_id = -1;
    for (const auto& s : result.dataset.snapshots)
        for (const auto& e : s.edges)
            max_id = std::max(max_id, e.nodes.back());
    if (!raw_ids.empty()) {
        result.dataset.global_node_count = raw_ids.size();
        result.dataset.raw_ids = std::move(raw_ids);
    } else {
        result.dataset.global_node_count = static_cast<std::size_t>(max_id + 1);
        result.dataset.raw_ids.resize(result.dataset.global_node_count);
        for (std::size_t i = 0; i < result.dataset.raw_ids.size(); ++i)
            result.dataset.raw_ids[i] = static_cast<std::int64_t>(i);
    }
    return result;
}

// ---- dataset file (self-describing JSON) ------------------------------------

inline nlohmann::json dataset_to_json(const DynamicHypergraph& d) {
    nlohmann::json j;
    j["node_count"] = d.global_node_count;
    j["id_map"] = d.raw_ids;
    j["snapshots"] = nlohmann::json::array();
    for (const auto& s : d.snapshots) {
        nlohmann::json js;
        js["t_start"] = s.spec.t_start;
        js["t_end"] = s.spec.t_end;
        js["edges"] = nlohmann::json::array();
        for (const auto& e : s.edges) js["edges"].push_back({e.nodes, e.timestamp});
        j["snapshots"].push_back(std::move(js));
    }
    return j;
}

inline DynamicHypergraph dataset_from_json(const nlohmann::json& j) {
    DynamicHypergraph d;
    try {
        d.global_node_count = j.at("node_count").get<std::size_t>();
        d.raw_ids = j.at("id_map").get<std::vector<std::int64_t>>();
        int index = 0;
        for (const auto& js : j.at("snapshots")) {
            SnapshotSpec spec;
            spec.index = index++;
            spec.t_start = js.at("t_start").get<Timestamp>();
            spec.t_end = js.at("t_end").get<Timestamp>();
            std::vector<Hyperedge> edges;
            for (const auto& je : js.at("edges")) {
                Hyperedge e;
                e.nodes = je.at(0).get<std::vector<NodeId>>();
                e.timestamp = je.at(1).get<Timestamp>();
                edges.push_back(std::move(e));
            }
            d.snapshots.push_back(build_snapshot(std::move(edges), spec));
        }
    } catch (const nlohmann::json::exception& ex) {
        raise(ErrorCode::IoError, std::string("malformed dataset file: ") + ex.what());
    }
    for (const auto& s : d.snapshots)
        for (const auto& e : s.edges)
            for (NodeId v : e.nodes)
                if (v < 0 || static_cast<std::size_t>(v) >= d.global_node_count)
                    raise(ErrorCode::IndexOutOfRange, "node id exceeds node_count");
    return d;
}

} // namespace lincoln

#endif // LINCOLN_HYPERGRAPH_HPP
