#ifndef LINCOLN_INTER_ENCODER_HPP
#define LINCOLN_INTER_ENCODER_HPP

#include <cstddef>
#include <vector>

#include "lincoln/errors.hpp"
#include "lincoln/intra_encoder.hpp"
#include "lincoln/tape.hpp"
#include "lincoln/tensor.hpp"

namespace lincoln {

// Which encoder layers carry recurrent state across snapshots.
enum class IntermediateLayers { FinalOnly, Half, All };

// Selected layer indices out of 0..k: FinalOnly = {k}, Half = top half, All = 0..k.
inline std::vector<std::size_t> selected_layers(IntermediateLayers mode, std::size_t k) {
    const std::size_t total = k + 1;
    std::size_t count = 1;
    switch (mode) {
        case IntermediateLayers::FinalOnly: count = 1; break;
        case IntermediateLayers::Half: count = (total + 1) / 2; break;
        case IntermediateLayers::All: count = total; break;
    }
    std::vector<std::size_t> out;
    for (std::size_t l = total - count; l <= k; ++l) out.push_back(l);
    return out;
}

// One GRU parameter set (all d×d weights, 1×d biases), one cell per layer.
struct GruParams {
    Var wz, uz, bz; // update gate
    Var wr, ur, br; // reset gate
    Var wh, uh, bh; // candidate
};

// Gating convention, fixed for the whole artifact:
//   z = sigmoid(x W_z + h U_z + b_z)
//   r = sigmoid(x W_r + h U_r + b_r)
//   h~ = tanh(x W_h + (r ⊙ h) U_h + b_h)
//   h' = (1 - z) ⊙ h + z ⊙ h~          (z moves the state toward the candidate)
inline Var gru_step(Var x, Var h, const GruParams& p) {
    if (x.rows() != h.rows() || x.cols() != h.cols())
        raise(ErrorCode::ShapeMismatch, "gru_step input/state");
    Var z = sigmoid(add(affine(x, p.wz, p.bz), matmul(h, p.uz)));
    Var r = sigmoid(add(affine(x, p.wr, p.br), matmul(h, p.ur)));
    Var cand = tanh_activate(add(affine(x, p.wh, p.bh), matmul(mul(r, h), p.uh)));
    Var one = x.tape()->constant(Tensor(z.rows(), z.cols(), 1.0));
    return add(mul(sub(one, z), h), mul(z, cand));
}

// Recurrent node state: one global matrix per encoder layer plus seen flags.
// Rows of never-seen nodes stay exactly zero.
struct HiddenStates {
    std::vector<Tensor> layers; // (k+1) matrices, |V| × d
    std::vector<char> seen;     // |V|

    static HiddenStates zeros(std::size_t layer_count, std::size_t nodes, std::size_t d) {
        HiddenStates h;
        h.layers.assign(layer_count, Tensor(nodes, d, 0.0));
        h.seen.assign(nodes, 0);
        return h;
    }

    void mark_seen(const Snapshot& snap) {
        for (NodeId v : snap.local_nodes) seen[static_cast<std::size_t>(v)] = 1;
    }
};

struct TemporalUpdateResult {
    Var p_star;        // |V_t| × d, updated local states
    Var hidden_global; // |V| × d, rows of non-local nodes untouched
};

// GRU update of layer-l states for the snapshot's local nodes. `hidden_global`
// may be a constant (detached carry) or an on-tape Var (BPTT window 2).
inline TemporalUpdateResult temporal_update(Tape& tape, Var p_local, Var hidden_global,
                                            const GruParams& cell, const SnapshotContext& ctx) {
    if (p_local.rows() != ctx.snap->node_count())
        raise(ErrorCode::ShapeMismatch, "temporal_update p_local rows");
    if (hidden_global.rows() != ctx.gather.cols() || hidden_global.cols() != p_local.cols())
        raise(ErrorCode::IndexOutOfRange, "temporal_update hidden shape");
    Var h_local = spmm(ctx.gather, hidden_global);
    Var h_new = gru_step(p_local, h_local, cell);
    Var kept = mul(hidden_global, tape.constant(ctx.nonlocal_mask));
    Var hidden_next = add(kept, spmm(ctx.scatter, h_new));
    return {h_new, hidden_next};
}

struct AdvanceResult {
    std::vector<Var> p_star;        // per layer 0..k; pass-through for unselected layers
    std::vector<Var> hidden_global; // per layer 0..k
};

// Applies temporal_update independently per selected layer. P*^(k) is the
// prediction embedding; P*^(0) seeds the next snapshot's input rows.
inline AdvanceResult advance_snapshot(Tape& tape, const LayerStack& stack,
                                      const std::vector<Var>& hidden_globals,
                                      const std::vector<GruParams>& cells,
                                      const SnapshotContext& ctx,
                                      const std::vector<std::size_t>& selected) {
    const std::size_t layer_count = stack.node_layers.size();
    if (hidden_globals.size() != layer_count || cells.size() != layer_count)
        raise(ErrorCode::LayerCountMismatch, "advance_snapshot layer counts");

    std::vector<char> is_selected(layer_count, 0);
    for (std::size_t l : selected) {
        if (l >= layer_count) raise(ErrorCode::LayerCountMismatch, "selected layer out of range");
        is_selected[l] = 1;
    }

    AdvanceResult out;
    out.p_star.resize(layer_count);
    out.hidden_global.resize(layer_count);
    for (std::size_t l = 0; l < layer_count; ++l) {
        if (is_selected[l]) {
            auto r = temporal_update(tape, stack.node_layers[l], hidden_globals[l], cells[l], ctx);
            out.p_star[l] = r.p_star;
            out.hidden_global[l] = r.hidden_global;
        } else {
            out.p_star[l] = stack.node_layers[l];
            out.hidden_global[l] = hidden_globals[l];
        }
    }
    return out;
}

} // namespace lincoln

#endif // LINCOLN_INTER_ENCODER_HPP
