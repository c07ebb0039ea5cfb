#ifndef LINCOLN_INTRA_ENCODER_HPP
#define LINCOLN_INTRA_ENCODER_HPP

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <ostream>
#include <utility>
#include <vector>

#include "lincoln/errors.hpp"
#include "lincoln/hypergraph.hpp"
#include "lincoln/param_store.hpp"
#include "lincoln/tape.hpp"
#include "lincoln/tensor.hpp"

namespace lincoln {

// ---- periodic time embedding -------------------------------------------------

// snap_t = [cos(omega*t_start + phi); cos(omega*t_end + phi)], a d×1 column
// with d = 2*|omega|. Times arrive already rescaled by the caller.
inline Var periodic_time_embedding(Tape& tape, double t_start, double t_end, Var omega, Var phi) {
    (void)tape;
    return concat_rows(cos_affine(omega, phi, t_start), cos_affine(omega, phi, t_end));
}

inline void validate_even_dimension(std::size_t d) {
    if (d % 2 != 0) raise(ErrorCode::OddDimension, "embedding dimension must be even");
}

// ---- snapshot-aware attention --------------------------------------------------

// Per-node sigmoid gate on a scaled dot score with residual injection:
//   s_v = (W_q p_v)·(W_k snap)/sqrt(d),  alpha = sigmoid(s),
//   p'_v = p_v + alpha_v * (W_v snap).
inline Var snapshot_attention(Var p, Var snap, Var wq, Var wk, Var wv) {
    const std::size_t d = p.cols();
    if (snap.rows() != d || snap.cols() != 1) raise(ErrorCode::ShapeMismatch, "snapshot_attention snap");
    if (wq.rows() != d || wq.cols() != d || wk.rows() != d || wk.cols() != d ||
        wv.rows() != d || wv.cols() != d)
        raise(ErrorCode::ShapeMismatch, "snapshot_attention weights");
    Var key = matmul(wk, snap);                                   // d×1
    Var scores = scalar_mul(1.0 / std::sqrt(static_cast<double>(d)),
                            matmul(matmul(p, transpose(wq)), key)); // n×1
    Var alpha = sigmoid(scores);
    Var inject = matmul(alpha, transpose(matmul(wv, snap)));      // n×d
    return add(p, inject);
}

// ---- 2-stage aggregation --------------------------------------------------------

// D_E^{-1} H^T as a constant sparse matrix (|E|×|V|): row j averages member nodes.
inline SparseMatrix node_to_edge_matrix(const Snapshot& snap) {
    std::vector<SparseMatrix::Entry> entries;
    entries.reserve(snap.incidence.nnz());
    for (const auto& e : snap.incidence.entries())
        entries.push_back({e.col, e.row, e.value / snap.edge_degree[e.col]});
    return SparseMatrix::from_entries(snap.edge_count(), snap.node_count(), std::move(entries));
}

// D_V^{-1} H (|V|×|E|): row i averages incident hyperedges.
inline SparseMatrix edge_to_node_matrix(const Snapshot& snap) {
    std::vector<SparseMatrix::Entry> entries;
    entries.reserve(snap.incidence.nnz());
    for (const auto& e : snap.incidence.entries())
        entries.push_back({e.row, e.col, e.value / snap.node_degree[e.row]});
    return SparseMatrix::from_entries(snap.node_count(), snap.edge_count(), std::move(entries));
}

// Q = act(D_E^{-1} H^T P' W_E + b_E)
inline Var n2e_aggregate(const SparseMatrix& n2e, Var p, Var we, Var be,
                         Activation act = Activation::ReLU) {
    return activate(affine(spmm(n2e, p), we, be), act);
}

// P = act(D_V^{-1} H Q' W_V + b_V)
inline Var e2n_aggregate(const SparseMatrix& e2n, Var q, Var wv, Var bv,
                         Activation act = Activation::ReLU) {
    return activate(affine(spmm(e2n, q), wv, bv), act);
}

// ---- bi-interactional hyperedge encoding ----------------------------------------

struct ProximityGraph {
    enum class Kind { Structural, Temporal };

    struct Edge {
        std::size_t i, j; // i < j, hyperedge indices
        double weight;    // in (0, 1]
    };

    Kind kind = Kind::Structural;
    std::size_t n = 0; // number of hyperedges
    std::vector<Edge> edges;
};

// Hyperedges sharing at least one node are connected in both graphs:
//   w^S = |e_i ∩ e_j| / |e_i ∪ e_j|,  w^T = exp(-|t_i - t_j| / tau).
inline std::pair<ProximityGraph, ProximityGraph> build_proximity_graphs(const Snapshot& snap,
                                                                        double tau) {
    if (!(tau > 0.0)) raise(ErrorCode::InvalidTau, "tau must be positive");

    // Shared-node counts via the node -> incident edge lists.
    std::vector<std::vector<std::size_t>> incident(snap.node_count());
    for (const auto& e : snap.incidence.entries()) incident[e.row].push_back(e.col);
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> overlap;
    for (const auto& edges_here : incident)
        for (std::size_t a = 0; a < edges_here.size(); ++a)
            for (std::size_t b = a + 1; b < edges_here.size(); ++b)
                overlap[{edges_here[a], edges_here[b]}] += 1;

    ProximityGraph gs{ProximityGraph::Kind::Structural, snap.edge_count(), {}};
    ProximityGraph gt{ProximityGraph::Kind::Temporal, snap.edge_count(), {}};
    for (const auto& [pair, inter] : overlap) {
        const auto [i, j] = pair;
        const double uni = static_cast<double>(snap.edges[i].size() + snap.edges[j].size() - inter);
        const double dt = std::abs(static_cast<double>(snap.edges[i].timestamp) -
                                   static_cast<double>(snap.edges[j].timestamp));
        gs.edges.push_back({i, j, static_cast<double>(inter) / uni});
        gt.edges.push_back({i, j, std::exp(-dt / tau)});
    }
    return {std::move(gs), std::move(gt)};
}

// Â = D̃^{-1/2} (A + I) D̃^{-1/2} over the weighted adjacency, self-loop weight 1.
inline SparseMatrix normalized_adjacency(const ProximityGraph& g) {
    std::vector<double> degree(g.n, 1.0); // self loop
    for (const auto& e : g.edges) {
        degree[e.i] += e.weight;
        degree[e.j] += e.weight;
    }
    std::vector<double> inv_sqrt(g.n);
    for (std::size_t i = 0; i < g.n; ++i) inv_sqrt[i] = 1.0 / std::sqrt(degree[i]);

    std::vector<SparseMatrix::Entry> entries;
    entries.reserve(g.n + 2 * g.edges.size());
    for (std::size_t i = 0; i < g.n; ++i) entries.push_back({i, i, inv_sqrt[i] * inv_sqrt[i]});
    for (const auto& e : g.edges) {
        const double w = e.weight * inv_sqrt[e.i] * inv_sqrt[e.j];
        entries.push_back({e.i, e.j, w});
        entries.push_back({e.j, e.i, w});
    }
    return SparseMatrix::from_entries(g.n, g.n, std::move(entries));
}

// One GCN layer over a proximity graph: act(Â Q W).
inline Var gcn_propagate(Var q, const SparseMatrix& a_hat, Var w,
                         Activation act = Activation::ReLU) {
    if (q.rows() != a_hat.rows()) raise(ErrorCode::ShapeMismatch, "gcn_propagate");
    return activate(matmul(spmm(a_hat, q), w), act);
}

// Q' = act([Q^S | Q^T] W_ST + b_ST), W_ST maps 2d -> d.
inline Var st_aggregate(Var qs, Var qt, Var wst, Var bst, Activation act = Activation::ReLU) {
    if (qs.rows() != qt.rows() || qs.cols() != qt.cols())
        raise(ErrorCode::ShapeMismatch, "st_aggregate inputs");
    if (wst.rows() != 2 * qs.cols() || wst.cols() != qs.cols())
        raise(ErrorCode::ShapeMismatch, "st_aggregate weight");
    return activate(affine(concat_cols(qs, qt), wst, bst), act);
}

// Debug dump: edge_i,edge_j,w_s,w_t (both graphs share one sparsity pattern).
inline void dump_proximity_csv(const ProximityGraph& gs, const ProximityGraph& gt,
                               std::ostream& out) {
    out << "edge_i,edge_j,w_s,w_t\n";
    char buf[64];
    for (std::size_t idx = 0; idx < gs.edges.size(); ++idx) {
        const auto& s = gs.edges[idx];
        const auto& t = gt.edges[idx];
        out << s.i << ',' << s.j << ',';
        std::snprintf(buf, sizeof(buf), "%.17g", s.weight);
        out << buf << ',';
        std::snprintf(buf, sizeof(buf), "%.17g", t.weight);
        out << buf << '\n';
    }
}

// ---- full intra-snapshot encoding ------------------------------------------------

// Constant structures derived from one snapshot, shared across epochs/tapes.
struct SnapshotContext {
    const Snapshot* snap = nullptr;
    SparseMatrix n2e;            // |E|×|V_t|
    SparseMatrix e2n;            // |V_t|×|E|
    ProximityGraph gs, gt;
    SparseMatrix a_hat_s, a_hat_t;
    double t_start_scaled = 0.0; // snapshot bounds after time rescaling
    double t_end_scaled = 0.0;
    SparseMatrix gather;         // |V_t|×|V| picks local rows from a global matrix
    SparseMatrix scatter;        // |V|×|V_t| writes local rows back
    Tensor nonlocal_mask;        // |V|×d, 1 on rows outside the snapshot
};

inline SnapshotContext make_snapshot_context(const Snapshot& snap, std::size_t global_nodes,
                                             std::size_t d, double time_offset,
                                             double time_unit) {
    SnapshotContext ctx;
    ctx.snap = &snap;
    ctx.n2e = node_to_edge_matrix(snap);
    ctx.e2n = edge_to_node_matrix(snap);
    const double tau = static_cast<double>(snap.spec.t_end - snap.spec.t_start);
    auto graphs = build_proximity_graphs(snap, tau > 0.0 ? tau : 1.0);
    ctx.gs = std::move(graphs.first);
    ctx.gt = std::move(graphs.second);
    ctx.a_hat_s = normalized_adjacency(ctx.gs);
    ctx.a_hat_t = normalized_adjacency(ctx.gt);
    ctx.t_start_scaled = (static_cast<double>(snap.spec.t_start) - time_offset) / time_unit;
    ctx.t_end_scaled = (static_cast<double>(snap.spec.t_end) - time_offset) / time_unit;

    std::vector<SparseMatrix::Entry> gather, scatter;
    for (std::size_t i = 0; i < snap.local_nodes.size(); ++i) {
        const auto g = static_cast<std::size_t>(snap.local_nodes[i]);
        if (g >= global_nodes) raise(ErrorCode::IndexOutOfRange, "local node beyond global count");
        gather.push_back({i, g, 1.0});
        scatter.push_back({g, i, 1.0});
    }
    ctx.gather = SparseMatrix::from_entries(snap.local_nodes.size(), global_nodes, std::move(gather));
    ctx.scatter = SparseMatrix::from_entries(global_nodes, snap.local_nodes.size(), std::move(scatter));

    ctx.nonlocal_mask = Tensor(global_nodes, d, 1.0);
    for (NodeId v : snap.local_nodes)
        for (std::size_t j = 0; j < d; ++j) ctx.nonlocal_mask(static_cast<std::size_t>(v), j) = 0.0;
    return ctx;
}

// Parameter handles for the intra encoder, bound to one tape.
struct IntraParams {
    Var omega, phi;     // periodic time embedding
    Var wq, wk, wv;     // snapshot attention
    std::vector<Var> we, be;   // per layer 1..k, node-to-edge
    std::vector<Var> wn, bn;   // per layer 1..k, edge-to-node
    std::vector<Var> ws, wt;   // per layer GCN weights
    std::vector<Var> wst, bst; // per layer ST aggregation
};

struct EncoderOptions {
    std::size_t layers = 2; // k
    bool disable_pin = false;
    bool disable_bihe = false;
    Activation activation = Activation::ReLU;
};

// Per-layer embedding stack produced by encode_snapshot.
struct LayerStack {
    std::vector<Var> node_layers;  // P^(0..k)
    std::vector<Var> edge_layers;  // hyperedge embedding consumed per layer, 1..k
    std::optional<Var> q_struct;   // last-layer Q^S (absent when Bi-HE disabled)
    std::optional<Var> q_temp;     // last-layer Q^T
};

// P^(0)=P_in; per layer: PIN -> N2E -> Bi-HE(GCN over G^S,G^T then ST-Agg) -> E2N.
inline LayerStack encode_snapshot(Tape& tape, const SnapshotContext& ctx, Var p_in,
                                  const IntraParams& params, const EncoderOptions& opt) {
    if (p_in.rows() != ctx.snap->node_count())
        raise(ErrorCode::ShapeMismatch, "encode_snapshot p_in rows");
    if (opt.layers < 1) raise(ErrorCode::LayerCountMismatch, "need k >= 1");

    LayerStack stack;
    stack.node_layers.push_back(p_in);

    Var snap_vec;
    if (!opt.disable_pin)
        snap_vec = periodic_time_embedding(tape, ctx.t_start_scaled, ctx.t_end_scaled,
                                           params.omega, params.phi);

    Var p = p_in;
    for (std::size_t l = 0; l < opt.layers; ++l) {
        Var p_att = opt.disable_pin
                        ? p
                        : snapshot_attention(p, snap_vec, params.wq, params.wk, params.wv);
        Var q = n2e_aggregate(ctx.n2e, p_att, params.we[l], params.be[l], opt.activation);
        Var q_used = q;
        if (!opt.disable_bihe) {
            Var qs = gcn_propagate(q, ctx.a_hat_s, params.ws[l], opt.activation);
            Var qt = gcn_propagate(q, ctx.a_hat_t, params.wt[l], opt.activation);
            q_used = st_aggregate(qs, qt, params.wst[l], params.bst[l], opt.activation);
            if (l + 1 == opt.layers) {
                stack.q_struct = qs;
                stack.q_temp = qt;
            }
        }
        p = e2n_aggregate(ctx.e2n, q_used, params.wn[l], params.bn[l], opt.activation);
        stack.edge_layers.push_back(q_used);
        stack.node_layers.push_back(p);
    }
    return stack;
}

} // namespace lincoln

#endif // LINCOLN_INTRA_ENCODER_HPP
