#ifndef LINCOLN_MODEL_HPP
#define LINCOLN_MODEL_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lincoln/errors.hpp"
#include "lincoln/hypergraph.hpp"
#include "lincoln/inter_encoder.hpp"
#include "lincoln/intra_encoder.hpp"
#include "lincoln/param_store.hpp"
#include "lincoln/rng.hpp"
#include "lincoln/tape.hpp"

namespace lincoln {

struct ModelConfig {
    std::size_t d = 64;
    std::size_t k = 2;
    bool disable_pin = false;
    bool disable_bihe = false;
    IntermediateLayers intermediate = IntermediateLayers::All;
    Activation activation = Activation::ReLU;
};

// Owns every trainable tensor and knows how to run one snapshot step.
// Ablations switch code paths only: the parameter set (and its seeded init)
// is identical across modes, so runs differ only by the ablated computation.
class LincolnModel {
public:
    LincolnModel(ModelConfig cfg, std::size_t global_nodes, std::uint64_t seed)
        : cfg_(cfg), global_nodes_(global_nodes) {
        validate_even_dimension(cfg_.d);
        if (cfg_.k < 1) raise(ErrorCode::LayerCountMismatch, "k must be >= 1");
        const std::size_t d = cfg_.d;

        // Node feature table: first-appearance input rows.
        store_.create_uniform("x/features", global_nodes_, d, seed, d);

        // Periodic time embedding: strictly positive frequencies covering
        // periods from one snapshot up to 32 in rescaled time (the trainer
        // normalizes one snapshot span to ~1 unit), log-spaced with jitter;
        // phases uniform in (-pi, pi).
        {
            Rng rng(derive_seed(seed, "param/pin"));
            const double two_pi = 6.283185307179586;
            const std::size_t half = d / 2;
            Tensor omega(half, 1), phi(half, 1);
            for (std::size_t i = 0; i < half; ++i) {
                const double lo = std::log(1.0), hi = std::log(32.0);
                const double span = (hi - lo) / static_cast<double>(half);
                const double log_period = lo + span * (static_cast<double>(i) + rng.real01());
                omega(i, 0) = two_pi / std::exp(log_period);
            }
            for (double& p : phi.raw()) p = rng.uniform(-3.14159, 3.14159);
            store_.create("pin/omega", std::move(omega));
            store_.create("pin/phi", std::move(phi));
        }

        store_.create_uniform("att/wq", d, d, seed, d);
        store_.create_uniform("att/wk", d, d, seed, d);
        store_.create_uniform("att/wv", d, d, seed, d);

        for (std::size_t l = 1; l <= cfg_.k; ++l) {
            const std::string p = "layer" + std::to_string(l);
            store_.create_uniform(p + "/n2e/w", d, d, seed, d);
            store_.create_uniform(p + "/n2e/b", 1, d, seed, d);
            store_.create_uniform(p + "/e2n/w", d, d, seed, d);
            store_.create_uniform(p + "/e2n/b", 1, d, seed, d);
            store_.create_uniform(p + "/gcn_s/w", d, d, seed, d);
            store_.create_uniform(p + "/gcn_t/w", d, d, seed, d);
            store_.create_uniform(p + "/st/w", 2 * d, d, seed, 2 * d);
            store_.create_uniform(p + "/st/b", 1, d, seed, 2 * d);
        }

        for (std::size_t l = 0; l <= cfg_.k; ++l) {
            const std::string p = "gru" + std::to_string(l);
            for (const char* gate : {"z", "r", "h"}) {
                store_.create_uniform(p + "/w" + gate, d, d, seed, d);
                store_.create_uniform(p + "/u" + gate, d, d, seed, d);
                store_.create_uniform(p + "/b" + gate, 1, d, seed, d);
            }
        }

        store_.create_uniform("pred/w", d, 1, seed, d);
        store_.create_uniform("pred/b", 1, 1, seed, d);
    }

    const ModelConfig& config() const { return cfg_; }
    std::size_t global_nodes() const { return global_nodes_; }
    ParamStore& store() { return store_; }
    const ParamStore& store() const { return store_; }

    std::vector<std::size_t> recurrent_layers() const {
        return selected_layers(cfg_.intermediate, cfg_.k);
    }

    HiddenStates initial_hidden() const {
        return HiddenStates::zeros(cfg_.k + 1, global_nodes_, cfg_.d);
    }

    IntraParams intra_params(Tape& tape) const {
        IntraParams p;
        p.omega = store_.use(tape, "pin/omega");
        p.phi = store_.use(tape, "pin/phi");
        p.wq = store_.use(tape, "att/wq");
        p.wk = store_.use(tape, "att/wk");
        p.wv = store_.use(tape, "att/wv");
        for (std::size_t l = 1; l <= cfg_.k; ++l) {
            const std::string pre = "layer" + std::to_string(l);
            p.we.push_back(store_.use(tape, pre + "/n2e/w"));
            p.be.push_back(store_.use(tape, pre + "/n2e/b"));
            p.wn.push_back(store_.use(tape, pre + "/e2n/w"));
            p.bn.push_back(store_.use(tape, pre + "/e2n/b"));
            p.ws.push_back(store_.use(tape, pre + "/gcn_s/w"));
            p.wt.push_back(store_.use(tape, pre + "/gcn_t/w"));
            p.wst.push_back(store_.use(tape, pre + "/st/w"));
            p.bst.push_back(store_.use(tape, pre + "/st/b"));
        }
        return p;
    }

    std::vector<GruParams> gru_params(Tape& tape) const {
        std::vector<GruParams> cells;
        for (std::size_t l = 0; l <= cfg_.k; ++l) {
            const std::string p = "gru" + std::to_string(l);
            GruParams c;
            c.wz = store_.use(tape, p + "/wz");
            c.uz = store_.use(tape, p + "/uz");
            c.bz = store_.use(tape, p + "/bz");
            c.wr = store_.use(tape, p + "/wr");
            c.ur = store_.use(tape, p + "/ur");
            c.br = store_.use(tape, p + "/br");
            c.wh = store_.use(tape, p + "/wh");
            c.uh = store_.use(tape, p + "/uh");
            c.bh = store_.use(tape, p + "/bh");
            cells.push_back(c);
        }
        return cells;
    }

    SnapshotContext make_context(const Snapshot& snap, double time_offset,
                                 double time_unit) const {
        return make_snapshot_context(snap, global_nodes_, cfg_.d, time_offset, time_unit);
    }

    EncoderOptions encoder_options() const {
        return EncoderOptions{cfg_.k, cfg_.disable_pin, cfg_.disable_bihe, cfg_.activation};
    }

    // Input rows for the snapshot's local nodes: the trainable feature row,
    // mixed with the carried layer-0 state for nodes already seen when layer 0
    // is recurrent. `hidden0` may be on-tape (chained BPTT) or constant.
    Var input_features(Tape& tape, const SnapshotContext& ctx, Var hidden0,
                       const std::vector<char>& seen) const {
        const std::size_t n = ctx.snap->node_count();
        const std::size_t d = cfg_.d;
        const bool layer0_recurrent = cfg_.intermediate == IntermediateLayers::All;

        Var p_in = spmm(ctx.gather, store_.use(tape, "x/features"));
        if (layer0_recurrent) {
            Tensor use_h(n, d, 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                const auto g = static_cast<std::size_t>(ctx.snap->local_nodes[i]);
                if (seen[g])
                    for (std::size_t j = 0; j < d; ++j) use_h(i, j) = 1.0;
            }
            Var h_rows = spmm(ctx.gather, hidden0);
            p_in = add(p_in, mul(h_rows, tape.constant(use_h)));
        }
        return p_in;
    }

    struct StepResult {
        LayerStack stack;
        AdvanceResult advanced;
    };

    // Encode one snapshot from on-tape hidden state Vars and advance the
    // recurrent layers. Chaining steps on one tape gives BPTT windows > 1.
    StepResult process_snapshot(Tape& tape, const SnapshotContext& ctx,
                                const std::vector<Var>& hidden_vars,
                                const std::vector<char>& seen) const {
        Var p_in = input_features(tape, ctx, hidden_vars[0], seen);
        StepResult r;
        r.stack = encode_snapshot(tape, ctx, p_in, intra_params(tape), encoder_options());
        r.advanced = advance_snapshot(tape, r.stack, hidden_vars, gru_params(tape), ctx,
                                      recurrent_layers());
        return r;
    }

    // Detached-carry entry point: hidden state enters as constants.
    StepResult process_snapshot(Tape& tape, const SnapshotContext& ctx,
                                const HiddenStates& hidden) const {
        std::vector<Var> hvars;
        for (const Tensor& h : hidden.layers) hvars.push_back(tape.constant(h));
        return process_snapshot(tape, ctx, hvars, hidden.seen);
    }

    // Persist a step's updated states: detach values into HiddenStates.
    void commit(const StepResult& step, const SnapshotContext& ctx, HiddenStates& hidden) const {
        for (std::size_t l = 0; l < hidden.layers.size(); ++l)
            hidden.layers[l] = step.advanced.hidden_global[l].value();
        hidden.mark_seen(*ctx.snap);
    }

    // Pooling matrix scoring candidates against a global |V|×d state matrix:
    // row c averages the rows of the candidate's scoreable member nodes.
    // Members never seen are skipped; candidates with no scoreable member are
    // rejected (their index lands in `rejected`).
    SparseMatrix candidate_pooling(const std::vector<std::vector<NodeId>>& candidates,
                                   const std::vector<char>& seen,
                                   std::vector<std::size_t>* rejected = nullptr) const {
        std::vector<SparseMatrix::Entry> entries;
        for (std::size_t c = 0; c < candidates.size(); ++c) {
            std::vector<std::size_t> rows;
            for (NodeId v : candidates[c]) {
                const auto g = static_cast<std::size_t>(v);
                if (g >= global_nodes_) raise(ErrorCode::UnknownNode, "candidate node id out of range");
                if (seen[g]) rows.push_back(g);
            }
            if (rows.empty()) {
                if (rejected) rejected->push_back(c);
                continue;
            }
            std::sort(rows.begin(), rows.end());
            const double w = 1.0 / static_cast<double>(rows.size());
            for (std::size_t g : rows) entries.push_back({c, g, w});
        }
        return SparseMatrix::from_entries(candidates.size(), global_nodes_, std::move(entries));
    }

    // Scores for pooled candidates: sigmoid(C · H^(k) · w + b), n_cand×1.
    Var predict_scores(Tape& tape, const SparseMatrix& pooling, Var hidden_k) const {
        Var pooled = spmm(pooling, hidden_k);
        Var w = store_.use(tape, "pred/w");
        Var b = store_.use(tape, "pred/b");
        Var linear = add(matmul(pooled, w), broadcast_row(b, pooled.rows()));
        return sigmoid(linear);
    }

private:
    ModelConfig cfg_;
    std::size_t global_nodes_;
    ParamStore store_;
};

} // namespace lincoln

#endif // LINCOLN_MODEL_HPP
