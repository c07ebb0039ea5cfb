#ifndef LINCOLN_ANALYSIS_HPP
#define LINCOLN_ANALYSIS_HPP

#include <algorithm>
#include <cstdio>
#include <map>
#include <ostream>
#include <set>
#include <vector>

#include "lincoln/errors.hpp"
#include "lincoln/hypergraph.hpp"
#include "lincoln/rng.hpp"

namespace lincoln {

struct OverlapGapRow {
    double overlap_bucket = 0.0;    // intersection size, or Jaccard bucket lower bound
    double mean_abs_time_gap = 0.0; // dataset time units
    std::size_t pair_count = 0;
};

struct ReappearanceRow {
    int snapshot = 0;
    double rate = 0.0; // fraction of tracked relations re-occurring here
};

enum class OverlapBucketMode { IntersectionCount, Jaccard };

struct AnalysisOptions {
    std::size_t sample_size = 50;
    double window_fraction = 0.2; // sample from the first 20% of snapshots
    OverlapBucketMode bucket_mode = OverlapBucketMode::IntersectionCount;
};

namespace detail {

struct SampledEdge {
    std::size_t snapshot;
    const Hyperedge* edge;
};

inline std::vector<SampledEdge> sample_window_edges(const DynamicHypergraph& data,
                                                    const AnalysisOptions& opt, Rng& rng) {
    if (data.snapshot_count() == 0) raise(ErrorCode::WindowEmpty, "dataset has no snapshots");
    std::size_t window = static_cast<std::size_t>(
        opt.window_fraction * static_cast<double>(data.snapshot_count()));
    window = std::max<std::size_t>(window, 1);

    std::vector<SampledEdge> pool;
    for (std::size_t s = 0; s < window; ++s)
        for (const auto& e : data.snapshots[s].edges) pool.push_back({s, &e});
    if (pool.empty()) raise(ErrorCode::WindowEmpty, "no edges in the sampling window");

    rng.shuffle(pool);
    if (pool.size() > opt.sample_size) pool.resize(opt.sample_size);
    return pool;
}

inline std::size_t intersection_size(const std::vector<NodeId>& a, const std::vector<NodeId>& b) {
    std::size_t i = 0, j = 0, n = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] < b[j])
            ++i;
        else if (a[i] > b[j])
            ++j;
        else {
            ++n;
            ++i;
            ++j;
        }
    }
    return n;
}

} // namespace detail

// O1: mean |t_i - t_j| of same-snapshot sampled pairs, bucketed by overlap.
inline std::vector<OverlapGapRow> overlap_vs_time_gap(const DynamicHypergraph& data,
                                                      const AnalysisOptions& opt, Rng& rng) {
    if (opt.sample_size < 2) raise(ErrorCode::InvalidConfig, "sample_size must be >= 2");
    const auto sampled = detail::sample_window_edges(data, opt, rng);

    std::map<double, std::pair<double, std::size_t>> buckets; // key -> (gap sum, count)
    for (std::size_t a = 0; a < sampled.size(); ++a) {
        for (std::size_t b = a + 1; b < sampled.size(); ++b) {
            if (sampled[a].snapshot != sampled[b].snapshot) continue;
            const auto& ea = *sampled[a].edge;
            const auto& eb = *sampled[b].edge;
            const std::size_t inter = detail::intersection_size(ea.nodes, eb.nodes);
            if (inter == 0) continue;
            double key;
            if (opt.bucket_mode == OverlapBucketMode::IntersectionCount) {
                key = static_cast<double>(inter);
            } else {
                const double uni = static_cast<double>(ea.size() + eb.size() - inter);
                const double jac = static_cast<double>(inter) / uni;
                key = std::min(std::floor(jac * 10.0), 9.0) / 10.0; // 0.1-wide buckets
            }
            const double gap = std::abs(static_cast<double>(ea.timestamp) -
                                        static_cast<double>(eb.timestamp));
            auto& slot = buckets[key];
            slot.first += gap;
            slot.second += 1;
        }
    }

    std::vector<OverlapGapRow> rows;
    for (const auto& [key, agg] : buckets)
        rows.push_back({key, agg.first / static_cast<double>(agg.second), agg.second});
    return rows;
}

// O2: fraction of tracked node sets occurring as an edge in each snapshot.
inline std::vector<ReappearanceRow> reappearance_rate(const DynamicHypergraph& data,
                                                      const AnalysisOptions& opt, Rng& rng) {
    if (data.snapshot_count() < 2) raise(ErrorCode::WindowEmpty, "need at least 2 snapshots");
    const auto sampled = detail::sample_window_edges(data, opt, rng);

    std::vector<ReappearanceRow> rows;
    for (std::size_t s = 0; s < data.snapshot_count(); ++s) {
        std::set<std::vector<NodeId>> present;
        for (const auto& e : data.snapshots[s].edges) present.insert(e.nodes);
        std::size_t hits = 0;
        for (const auto& tracked : sampled)
            if (present.count(tracked.edge->nodes)) ++hits;
        rows.push_back({static_cast<int>(s),
                        static_cast<double>(hits) / static_cast<double>(sampled.size())});
    }
    return rows;
}

inline void overlap_rows_csv(const std::vector<OverlapGapRow>& rows, std::ostream& out) {
    char buf[64];
    out << "overlap,mean_gap,count\n";
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%.17g", r.overlap_bucket);
        out << buf << ',';
        std::snprintf(buf, sizeof(buf), "%.17g", r.mean_abs_time_gap);
        out << buf << ',' << r.pair_count << '\n';
    }
}

inline void reappearance_rows_csv(const std::vector<ReappearanceRow>& rows, std::ostream& out) {
    char buf[64];
    out << "snapshot,rate\n";
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%.17g", r.rate);
        out << r.snapshot << ',' << buf << '\n';
    }
}

} // namespace lincoln

#endif // LINCOLN_ANALYSIS_HPP
