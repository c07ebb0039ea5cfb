#ifndef LINCOLN_TRAINER_HPP
#define LINCOLN_TRAINER_HPP

#include <algorithm>
#include <cstdio>
#include <deque>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "lincoln/config.hpp"
#include "lincoln/errors.hpp"
#include "lincoln/hypergraph.hpp"
#include "lincoln/metrics.hpp"
#include "lincoln/model.hpp"
#include "lincoln/negative_sampling.hpp"
#include "lincoln/param_store.hpp"
#include "lincoln/rng.hpp"
#include "lincoln/tape.hpp"

namespace lincoln {

constexpr double kLossEps = 1e-7;

// ---- losses -----------------------------------------------------------------

// Mean over the batch of -[y log y_hat + (1-y) log(1-y_hat)], y_hat clamped
// to [eps, 1-eps].
inline Var bce_loss(Tape& tape, Var y_hat, const std::vector<int>& labels) {
    if (y_hat.rows() == 0) raise(ErrorCode::EmptyBatch, "bce_loss");
    if (y_hat.cols() != 1 || y_hat.rows() != labels.size())
        raise(ErrorCode::ShapeMismatch, "bce_loss labels");
    const std::size_t n = labels.size();
    Tensor y(n, 1), y_inv(n, 1);
    for (std::size_t i = 0; i < n; ++i) {
        y(i, 0) = labels[i] ? 1.0 : 0.0;
        y_inv(i, 0) = labels[i] ? 0.0 : 1.0;
    }
    Var ones = tape.constant(Tensor(n, 1, 1.0));
    // clamp y_hat into [eps, 1-eps]
    Var clamped = sub(ones, clamp_below(sub(ones, clamp_below(y_hat, kLossEps)), kLossEps));
    Var log_p = natural_log(clamped);
    Var log_q = natural_log(sub(ones, clamped));
    Var per_item = add(mul(tape.constant(y), log_p), mul(tape.constant(y_inv), log_q));
    return scalar_mul(-1.0, mean_all(per_item));
}

// Per row: s = (1 + cos(Q^S_i, Q^T_i)) / 2; loss = -mean log(max(s, eps)).
// Zero rows contribute cos = 0 by convention.
inline Var contrastive_loss(Tape& tape, Var q_struct, Var q_temp) {
    if (q_struct.rows() != q_temp.rows() || q_struct.cols() != q_temp.cols())
        raise(ErrorCode::ShapeMismatch, "contrastive_loss");
    if (q_struct.rows() == 0) raise(ErrorCode::EmptyBatch, "contrastive_loss");
    Var cos = rowwise_cosine(q_struct, q_temp);
    Var ones = tape.constant(Tensor(cos.rows(), 1, 1.0));
    Var sim01 = scalar_mul(0.5, add(cos, ones));
    return scalar_mul(-1.0, mean_all(natural_log(clamp_below(sim01, kLossEps))));
}

// L = L_pred + beta * L_con
inline Var total_loss(Var pred_loss, std::optional<Var> con_loss, double beta) {
    if (beta < 0.0) raise(ErrorCode::InvalidConfig, "beta must be >= 0");
    if (!con_loss || beta == 0.0) return pred_loss;
    return add(pred_loss, scalar_mul(beta, *con_loss));
}

// ---- unit-level predictor -----------------------------------------------------

// y_hat = sigmoid(mean(member rows of p_star) · w + b). Member order never
// matters: rows are summed in sorted order.
inline double predict_candidate(const Tensor& p_star, std::vector<std::size_t> member_rows,
                                const Tensor& w, double bias) {
    if (member_rows.size() < 2) raise(ErrorCode::InvalidConfig, "candidate needs >= 2 members");
    if (w.rows() != p_star.cols() || w.cols() != 1) raise(ErrorCode::ShapeMismatch, "predictor w");
    std::sort(member_rows.begin(), member_rows.end());
    for (std::size_t r : member_rows)
        if (r >= p_star.rows()) raise(ErrorCode::UnknownNode, "row " + std::to_string(r));
    const std::size_t d = p_star.cols();
    std::vector<double> pooled(d, 0.0);
    for (std::size_t r : member_rows)
        for (std::size_t j = 0; j < d; ++j) pooled[j] += p_star(r, j);
    double z = bias;
    const double inv = 1.0 / static_cast<double>(member_rows.size());
    for (std::size_t j = 0; j < d; ++j) z += pooled[j] * inv * w(j, 0);
    return 1.0 / (1.0 + std::exp(-z));
}

// ---- report types ---------------------------------------------------------------

struct SnapshotMetrics {
    int snapshot = 0; // index of the predicted snapshot
    double auroc = 0.0;
    double ap = 0.0;
    std::size_t n_test = 0; // candidates (positives + negatives) in the test batch
};

struct RunMetrics {
    std::uint64_t seed = 0;
    std::vector<SnapshotMetrics> per_snapshot;
    double mean_auroc = 0.0;
    double mean_ap = 0.0;
    std::size_t skipped_snapshots = 0;
};

struct MetricsReport {
    TrainConfig config;
    std::vector<RunMetrics> runs;
    double mean_auroc = 0.0; // mean over runs of per-run snapshot means
    double mean_ap = 0.0;
};

// ---- split -------------------------------------------------------------------

// 70/20/10 by largest remainder; remainder ties resolved train > val > test.
struct SplitSizes {
    std::size_t train = 0, val = 0, test = 0;
};

inline SplitSizes split_sizes(std::size_t n) {
    const double fracs[3] = {0.7, 0.2, 0.1};
    std::size_t base[3];
    double rem[3];
    std::size_t assigned = 0;
    for (int i = 0; i < 3; ++i) {
        const double exact = fracs[i] * static_cast<double>(n);
        base[i] = static_cast<std::size_t>(exact);
        rem[i] = exact - static_cast<double>(base[i]);
        assigned += base[i];
    }
    std::size_t left = n - assigned;
    int order[3] = {0, 1, 2};
    std::stable_sort(order, order + 3, [&](int a, int b) { return rem[a] > rem[b]; });
    for (std::size_t i = 0; i < left; ++i) base[order[i]] += 1;
    return {base[0], base[1], base[2]};
}

// ---- live-update protocol -------------------------------------------------------

namespace detail {

struct ScoreableBatch {
    std::vector<std::vector<NodeId>> candidates;
    std::vector<int> labels;
    std::size_t rejected = 0; // candidates with no scoreable member
};

inline ScoreableBatch filter_scoreable(const CandidateBatch& batch, const std::vector<char>& seen) {
    ScoreableBatch out;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        bool any = false;
        for (NodeId v : batch.candidates[i])
            if (seen[static_cast<std::size_t>(v)]) {
                any = true;
                break;
            }
        if (!any) {
            ++out.rejected;
            continue;
        }
        out.candidates.push_back(batch.candidates[i]);
        out.labels.push_back(batch.labels[i]);
    }
    return out;
}

struct LiveUpdateState {
    const DynamicHypergraph* data = nullptr;
    TrainConfig cfg;
    LincolnModel* model = nullptr;
    std::vector<SnapshotContext>* contexts = nullptr;
    // Hidden states entering context index t (history for BPTT windows > 1).
    std::deque<std::pair<std::size_t, HiddenStates>> history;

    // Chain the last `window` contexts ending at `last_ctx` on one tape.
    LincolnModel::StepResult chain_forward(Tape& tape, std::size_t last_ctx) const {
        const std::size_t window = static_cast<std::size_t>(cfg.bptt_window);
        std::size_t first_ctx = last_ctx + 1 >= window ? last_ctx + 1 - window : 0;
        const HiddenStates* base = nullptr;
        for (const auto& [idx, h] : history)
            if (idx == first_ctx) base = &h;
        if (!base) {
            first_ctx = last_ctx;
            base = &history.back().second;
        }
        std::vector<Var> hvars;
        for (const Tensor& h : base->layers) hvars.push_back(tape.constant(h));
        std::vector<char> seen = base->seen;
        LincolnModel::StepResult step;
        for (std::size_t c = first_ctx; c <= last_ctx; ++c) {
            step = model->process_snapshot(tape, (*contexts)[c], hvars, seen);
            hvars = step.advanced.hidden_global;
            for (NodeId v : (*contexts)[c].snap->local_nodes)
                seen[static_cast<std::size_t>(v)] = 1;
        }
        return step;
    }

    std::vector<char> seen_after(std::size_t last_ctx) const {
        std::vector<char> seen = history.back().second.seen;
        for (NodeId v : (*contexts)[last_ctx].snap->local_nodes)
            seen[static_cast<std::size_t>(v)] = 1;
        return seen;
    }

    // Forward-only candidate scores against the state after context last_ctx.
    std::vector<double> score_batch(std::size_t last_ctx, const ScoreableBatch& batch) const {
        Tape tape;
        auto step = chain_forward(tape, last_ctx);
        auto seen = seen_after(last_ctx);
        SparseMatrix pooling = model->candidate_pooling(batch.candidates, seen);
        Var scores = model->predict_scores(tape, pooling, step.advanced.hidden_global.back());
        std::vector<double> out(scores.rows());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = scores.value()(i, 0);
        return out;
    }

    // Advance the persistent state through context `ctx_idx` with current params.
    void commit_context(std::size_t ctx_idx) {
        Tape tape;
        HiddenStates next = history.back().second;
        {
            std::vector<Var> hvars;
            for (const Tensor& h : next.layers) hvars.push_back(tape.constant(h));
            auto step = model->process_snapshot(tape, (*contexts)[ctx_idx], hvars, next.seen);
            model->commit(step, (*contexts)[ctx_idx], next);
        }
        history.emplace_back(ctx_idx + 1, std::move(next));
        while (history.size() > static_cast<std::size_t>(cfg.bptt_window) + 1) history.pop_front();
    }
};

struct FinalState {
    std::map<std::string, ParamStore::Entry> params;
    HiddenStates hidden;
    double time_offset = 0.0;
    double time_unit = 1.0;
};

inline RunMetrics run_live_update_single(const DynamicHypergraph& data, const TrainConfig& cfg,
                                         std::uint64_t run_seed,
                                         FinalState* final_state = nullptr) {
    ModelConfig mc;
    mc.d = cfg.d;
    mc.k = cfg.k;
    mc.disable_pin = cfg.disable_pin;
    mc.disable_bihe = cfg.disable_bihe;
    mc.intermediate = cfg.intermediate_mode();
    LincolnModel model(mc, data.global_node_count, run_seed);

    const double time_offset = static_cast<double>(data.time_min());
    double time_unit = (static_cast<double>(data.time_end()) - time_offset) /
                       static_cast<double>(data.snapshot_count());
    if (!(time_unit > 0.0)) time_unit = 1.0;

    std::vector<SnapshotContext> contexts;
    contexts.reserve(data.snapshot_count());
    for (const auto& snap : data.snapshots)
        contexts.push_back(model.make_context(snap, time_offset, time_unit));

    LiveUpdateState st;
    st.data = &data;
    st.cfg = cfg;
    st.model = &model;
    st.contexts = &contexts;
    st.history.emplace_back(0, model.initial_hidden());

    AdamConfig adam;
    adam.lr = cfg.lr;

    RunMetrics run;
    run.seed = run_seed;

    for (std::size_t target = 1; target < data.snapshot_count(); ++target) {
        const std::size_t ctx_idx = target - 1;
        const Snapshot& snap = data.snapshots[target];

        std::vector<Hyperedge> eligible;
        for (const auto& e : snap.edges)
            if (e.size() >= 2) eligible.push_back(e);
        if (eligible.size() < 10) {
            ++run.skipped_snapshots;
            st.commit_context(ctx_idx);
            continue;
        }

        Rng split_rng(derive_seed(run_seed, "split/" + std::to_string(target)));
        split_rng.shuffle(eligible);
        const SplitSizes sizes = split_sizes(eligible.size());
        std::vector<Hyperedge> train_pos(eligible.begin(), eligible.begin() + sizes.train);
        std::vector<Hyperedge> val_pos(eligible.begin() + sizes.train,
                                       eligible.begin() + sizes.train + sizes.val);
        std::vector<Hyperedge> test_pos(eligible.begin() + sizes.train + sizes.val, eligible.end());

        // Validation/test negatives are frozen per target; training negatives
        // are resampled every epoch from a continuing stream.
        Rng val_rng(derive_seed(run_seed, "negatives/val/" + std::to_string(target)));
        Rng test_rng(derive_seed(run_seed, "negatives/test/" + std::to_string(target)));
        Rng train_rng(derive_seed(run_seed, "negatives/train/" + std::to_string(target)));
        const CandidateBatch val_batch =
            make_candidate_batch(snap, val_pos, cfg.negative_ratio, val_rng);
        const CandidateBatch test_batch =
            make_candidate_batch(snap, test_pos, cfg.negative_ratio, test_rng);

        const auto seen = st.seen_after(ctx_idx);
        const ScoreableBatch val_sb = filter_scoreable(val_batch, seen);
        const ScoreableBatch test_sb = filter_scoreable(test_batch, seen);

        double best_val = -1.0;
        auto best_state = model.store().snapshot_state();
        for (int epoch = 0; epoch < cfg.epochs_per_snapshot; ++epoch) {
            const CandidateBatch train_batch =
                make_candidate_batch(snap, train_pos, cfg.negative_ratio, train_rng);
            const ScoreableBatch train_sb = filter_scoreable(train_batch, seen);
            if (train_sb.candidates.empty()) break;

            Tape tape;
            auto step = st.chain_forward(tape, ctx_idx);
            SparseMatrix pooling = model.candidate_pooling(train_sb.candidates, seen);
            Var scores = model.predict_scores(tape, pooling, step.advanced.hidden_global.back());
            Var pred = bce_loss(tape, scores, train_sb.labels);
            std::optional<Var> con;
            if (step.stack.q_struct)
                con = contrastive_loss(tape, *step.stack.q_struct, *step.stack.q_temp);
            Var loss = total_loss(pred, con, cfg.beta);
            auto grads = tape.backward(loss);
            adam_step(model.store(), grads, adam);

            bool both_classes = false;
            if (!val_sb.candidates.empty()) {
                const int first = val_sb.labels.front();
                for (int l : val_sb.labels)
                    if (l != first) {
                        both_classes = true;
                        break;
                    }
            }
            if (both_classes) {
                const auto val_scores = st.score_batch(ctx_idx, val_sb);
                const double v = auroc(val_scores, val_sb.labels);
                if (v > best_val) {
                    best_val = v;
                    best_state = model.store().snapshot_state();
                }
            } else {
                best_state = model.store().snapshot_state();
            }
        }
        model.store().restore_state(best_state);

        bool test_ok = !test_sb.candidates.empty();
        if (test_ok) {
            const int first = test_sb.labels.front();
            test_ok = false;
            for (int l : test_sb.labels)
                if (l != first) {
                    test_ok = true;
                    break;
                }
        }
        if (test_ok) {
            const auto test_scores = st.score_batch(ctx_idx, test_sb);
            SnapshotMetrics m;
            m.snapshot = static_cast<int>(target);
            m.auroc = auroc(test_scores, test_sb.labels);
            m.ap = average_precision(test_scores, test_sb.labels);
            m.n_test = test_sb.candidates.size();
            run.per_snapshot.push_back(m);
        } else {
            ++run.skipped_snapshots;
        }

        st.commit_context(ctx_idx);
    }

    if (run.per_snapshot.empty())
        raise(ErrorCode::DatasetTooSmall, "no snapshot produced test metrics");
    for (const auto& m : run.per_snapshot) {
        run.mean_auroc += m.auroc;
        run.mean_ap += m.ap;
    }
    run.mean_auroc /= static_cast<double>(run.per_snapshot.size());
    run.mean_ap /= static_cast<double>(run.per_snapshot.size());

    if (final_state) {
        final_state->params = model.store().entries();
        final_state->hidden = st.history.back().second;
        final_state->time_offset = time_offset;
        final_state->time_unit = time_unit;
    }
    return run;
}

} // namespace detail

// Live-update evaluation: within every predicted snapshot, split hyperedges
// 70/20/10, train on the train split while model parameters and hidden states
// persist across snapshots, select the best-validation-AUROC epoch, report
// test AUROC/AP there, then carry the restored parameters forward. Repeated
// `runs` times with derived seeds; means of per-run means are reported.
inline MetricsReport live_update_run(const DynamicHypergraph& data, const TrainConfig& cfg,
                                     bool parallel_runs = false,
                                     detail::FinalState* first_run_state = nullptr) {
    cfg.validate();
    if (data.snapshot_count() < 2)
        raise(ErrorCode::DatasetTooSmall, "need at least 2 snapshots");

    MetricsReport report;
    report.config = cfg;
    report.runs.resize(static_cast<std::size_t>(cfg.runs));

    std::vector<std::uint64_t> seeds(static_cast<std::size_t>(cfg.runs));
    for (int r = 0; r < cfg.runs; ++r)
        seeds[static_cast<std::size_t>(r)] = derive_seed(cfg.seed, "run/" + std::to_string(r));

    if (parallel_runs && cfg.runs > 1) {
        std::vector<std::thread> threads;
        std::vector<std::exception_ptr> errors(static_cast<std::size_t>(cfg.runs));
        for (int r = 0; r < cfg.runs; ++r) {
            threads.emplace_back([&, r]() {
                try {
                    report.runs[static_cast<std::size_t>(r)] = detail::run_live_update_single(
                        data, cfg, seeds[static_cast<std::size_t>(r)],
                        r == 0 ? first_run_state : nullptr);
                } catch (...) {
                    errors[static_cast<std::size_t>(r)] = std::current_exception();
                }
            });
        }
        for (auto& t : threads) t.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    } else {
        for (int r = 0; r < cfg.runs; ++r)
            report.runs[static_cast<std::size_t>(r)] = detail::run_live_update_single(
                data, cfg, seeds[static_cast<std::size_t>(r)], r == 0 ? first_run_state : nullptr);
    }

    for (const auto& run : report.runs) {
        report.mean_auroc += run.mean_auroc;
        report.mean_ap += run.mean_ap;
    }
    report.mean_auroc /= static_cast<double>(report.runs.size());
    report.mean_ap /= static_cast<double>(report.runs.size());
    return report;
}

// ---- report serialization ---------------------------------------------------------

inline nlohmann::json report_to_json(const MetricsReport& report) {
    nlohmann::json j;
    j["config"] = train_config_to_json(report.config);
    j["runs"] = nlohmann::json::array();
    for (const auto& run : report.runs) {
        nlohmann::json jr;
        jr["seed"] = run.seed;
        jr["mean_auroc"] = run.mean_auroc;
        jr["mean_ap"] = run.mean_ap;
        jr["skipped_snapshots"] = run.skipped_snapshots;
        jr["snapshots"] = nlohmann::json::array();
        for (const auto& m : run.per_snapshot) {
            nlohmann::json jm;
            jm["snapshot"] = m.snapshot;
            jm["auroc"] = m.auroc;
            jm["ap"] = m.ap;
            jm["n_test"] = m.n_test;
            jr["snapshots"].push_back(std::move(jm));
        }
        j["runs"].push_back(std::move(jr));
    }
    j["mean_auroc"] = report.mean_auroc;
    j["mean_ap"] = report.mean_ap;
    return j;
}

namespace detail {
inline std::string format_double(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}
} // namespace detail

// Flat rows: run,snapshot,auroc,ap,n_test
inline void report_to_csv(const MetricsReport& report, std::ostream& out) {
    out << "run,snapshot,auroc,ap,n_test\n";
    for (std::size_t r = 0; r < report.runs.size(); ++r)
        for (const auto& m : report.runs[r].per_snapshot)
            out << r << ',' << m.snapshot << ',' << detail::format_double(m.auroc) << ','
                << detail::format_double(m.ap) << ',' << m.n_test << '\n';
}

// Per-snapshot means across runs, for accuracy-across-snapshots plots.
inline void report_curves_csv(const MetricsReport& report, std::ostream& out) {
    out << "snapshot,auroc_mean,ap_mean\n";
    if (report.runs.empty()) return;
    const auto& first = report.runs.front().per_snapshot;
    for (std::size_t i = 0; i < first.size(); ++i) {
        double sa = 0.0, sp = 0.0;
        for (const auto& run : report.runs) {
            sa += run.per_snapshot[i].auroc;
            sp += run.per_snapshot[i].ap;
        }
        out << first[i].snapshot << ',' << detail::format_double(sa / report.runs.size()) << ','
            << detail::format_double(sp / report.runs.size()) << '\n';
    }
}

} // namespace lincoln

#endif // LINCOLN_TRAINER_HPP
