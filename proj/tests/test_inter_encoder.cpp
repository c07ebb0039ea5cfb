#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "lincoln/checkpoint.hpp"
#include "lincoln/inter_encoder.hpp"
#include "lincoln/model.hpp"
#include "lincoln/rng.hpp"
#include "lincoln/synthetic.hpp"

using namespace lincoln;

namespace {

// Fixed gating convention, spelled out in scalars.
double gru_scalar(double x, double h, double wz, double uz, double bz, double wr, double ur,
                  double br, double wh, double uh, double bh) {
    const double z = 1.0 / (1.0 + std::exp(-(x * wz + h * uz + bz)));
    const double r = 1.0 / (1.0 + std::exp(-(x * wr + h * ur + br)));
    const double cand = std::tanh(x * wh + r * h * uh + bh);
    return (1.0 - z) * h + z * cand;
}

GruParams scalar_cell(Tape& tape, double wz, double uz, double bz, double wr, double ur,
                      double br, double wh, double uh, double bh) {
    auto c = [&](double v) { return tape.constant(Tensor(1, 1, v)); };
    return GruParams{c(wz), c(uz), c(bz), c(wr), c(ur), c(br), c(wh), c(uh), c(bh)};
}

Tensor random_tensor(std::size_t r, std::size_t c, Rng& rng) {
    Tensor t(r, c);
    for (double& x : t.raw()) x = rng.uniform(-1.0, 1.0);
    return t;
}

GruParams random_cell(Tape& tape, std::size_t d, Rng& rng) {
    auto mk = [&](std::size_t r, std::size_t c) { return tape.constant(random_tensor(r, c, rng)); };
    GruParams cell;
    cell.wz = mk(d, d);
    cell.uz = mk(d, d);
    cell.bz = mk(1, d);
    cell.wr = mk(d, d);
    cell.ur = mk(d, d);
    cell.br = mk(1, d);
    cell.wh = mk(d, d);
    cell.uh = mk(d, d);
    cell.bh = mk(1, d);
    return cell;
}

} // namespace

TEST_CASE("gru matches the scalar oracle", "[inter]") {
    Rng rng(12);
    for (int trial = 0; trial < 50; ++trial) {
        double prm[9];
        for (double& p : prm) p = rng.uniform(-1.5, 1.5);
        const double x = rng.uniform(-2, 2), h = rng.uniform(-2, 2);
        Tape tape;
        GruParams cell =
            scalar_cell(tape, prm[0], prm[1], prm[2], prm[3], prm[4], prm[5], prm[6], prm[7], prm[8]);
        Var out = gru_step(tape.constant(Tensor(1, 1, x)), tape.constant(Tensor(1, 1, h)), cell);
        const double expected =
            gru_scalar(x, h, prm[0], prm[1], prm[2], prm[3], prm[4], prm[5], prm[6], prm[7], prm[8]);
        CHECK(out.value()(0, 0) == Catch::Approx(expected).margin(1e-14));
    }
}

TEST_CASE("gru frozen example from the documented equations", "[inter]") {
    // W_z=W_r=0, b_z=b_r=0 (z=r=1/2 at h=0), W_h=1, input 1, h=0:
    // h' = 0.5 * tanh(1) = 0.38079707797788231
    Tape tape;
    GruParams cell = scalar_cell(tape, 0, 0, 0, 0, 0, 0, 1, 0.7, 0);
    Var out = gru_step(tape.constant(Tensor(1, 1, 1.0)), tape.constant(Tensor(1, 1, 0.0)), cell);
    CHECK(out.value()(0, 0) == Catch::Approx(0.38079707797788231).margin(1e-15));
}

TEST_CASE("saturated update gate keeps the prior state", "[inter]") {
    // z -> 0 via a very negative update bias: h' = (1-z)h + z*cand ~= h
    Rng rng(13);
    Tape tape;
    GruParams cell = scalar_cell(tape, 0.3, -0.4, -50.0, 0.2, 0.1, 0.0, 1.1, -0.6, 0.2);
    const double h = rng.uniform(-2, 2);
    Var out = gru_step(tape.constant(Tensor(1, 1, 3.0)), tape.constant(Tensor(1, 1, h)), cell);
    CHECK(out.value()(0, 0) == Catch::Approx(h).margin(1e-12));
}

TEST_CASE("temporal update touches only local rows", "[inter]") {
    Rng rng(14);
    const std::size_t d = 3, global = 5;
    auto snap = build_snapshot({Hyperedge::make({1, 3}, 0)}, SnapshotSpec{0, 0, 1});
    SnapshotContext ctx = make_snapshot_context(snap, global, d, 0.0, 1.0);

    Tape tape;
    Tensor hidden = random_tensor(global, d, rng);
    Tensor p_local = random_tensor(2, d, rng);
    GruParams cell = random_cell(tape, d, rng);

    auto result = temporal_update(tape, tape.constant(p_local), tape.constant(hidden), cell, ctx);
    const Tensor& next = result.hidden_global.value();

    for (std::size_t row : {0u, 2u, 4u})
        for (std::size_t j = 0; j < d; ++j) CHECK(next(row, j) == hidden(row, j));
    for (std::size_t j = 0; j < d; ++j) {
        CHECK(next(1, j) == result.p_star.value()(0, j));
        CHECK(next(3, j) == result.p_star.value()(1, j));
    }
}

TEST_CASE("advance applies one independent cell per layer", "[inter]") {
    // k=1, one node: each layer equals its own scalar GRU run
    Rng rng(15);
    auto snap = build_snapshot({Hyperedge::make({0}, 0)}, SnapshotSpec{0, 0, 1});
    SnapshotContext ctx = make_snapshot_context(snap, 1, 1, 0.0, 1.0);

    Tape tape;
    double prm_a[9], prm_b[9];
    for (double& p : prm_a) p = rng.uniform(-1, 1);
    for (double& p : prm_b) p = rng.uniform(-1, 1);
    std::vector<GruParams> cells = {
        scalar_cell(tape, prm_a[0], prm_a[1], prm_a[2], prm_a[3], prm_a[4], prm_a[5], prm_a[6],
                    prm_a[7], prm_a[8]),
        scalar_cell(tape, prm_b[0], prm_b[1], prm_b[2], prm_b[3], prm_b[4], prm_b[5], prm_b[6],
                    prm_b[7], prm_b[8])};

    const double x0 = 0.8, x1 = -0.4, h0 = 0.2, h1 = -0.9;
    LayerStack stack;
    stack.node_layers = {tape.constant(Tensor(1, 1, x0)), tape.constant(Tensor(1, 1, x1))};
    std::vector<Var> hidden = {tape.constant(Tensor(1, 1, h0)), tape.constant(Tensor(1, 1, h1))};

    auto result = advance_snapshot(tape, stack, hidden, cells, ctx, {0, 1});
    CHECK(result.p_star[0].value()(0, 0) ==
          Catch::Approx(gru_scalar(x0, h0, prm_a[0], prm_a[1], prm_a[2], prm_a[3], prm_a[4],
                                   prm_a[5], prm_a[6], prm_a[7], prm_a[8]))
              .margin(1e-14));
    CHECK(result.p_star[1].value()(0, 0) ==
          Catch::Approx(gru_scalar(x1, h1, prm_b[0], prm_b[1], prm_b[2], prm_b[3], prm_b[4],
                                   prm_b[5], prm_b[6], prm_b[7], prm_b[8]))
              .margin(1e-14));
}

TEST_CASE("final_only updates only the last layer", "[inter]") {
    auto snap = build_snapshot({Hyperedge::make({0}, 0)}, SnapshotSpec{0, 0, 1});
    SnapshotContext ctx = make_snapshot_context(snap, 1, 1, 0.0, 1.0);
    Tape tape;
    std::vector<GruParams> cells = {scalar_cell(tape, 1, 1, 0, 1, 1, 0, 1, 1, 0),
                                    scalar_cell(tape, 1, 1, 0, 1, 1, 0, 1, 1, 0)};
    LayerStack stack;
    stack.node_layers = {tape.constant(Tensor(1, 1, 0.5)), tape.constant(Tensor(1, 1, 0.7))};
    std::vector<Var> hidden = {tape.constant(Tensor(1, 1, 0.1)), tape.constant(Tensor(1, 1, 0.2))};

    const auto selected = selected_layers(IntermediateLayers::FinalOnly, 1);
    REQUIRE(selected == std::vector<std::size_t>{1});
    auto result = advance_snapshot(tape, stack, hidden, cells, ctx, selected);
    CHECK(result.p_star[0].value()(0, 0) == 0.5); // pass-through of P^(0)
    CHECK(result.hidden_global[0].value()(0, 0) == 0.1);
    CHECK(result.p_star[1].value()(0, 0) != 0.7);
}

TEST_CASE("selected_layers spans the modes", "[inter]") {
    CHECK(selected_layers(IntermediateLayers::FinalOnly, 2) == std::vector<std::size_t>{2});
    CHECK(selected_layers(IntermediateLayers::Half, 2) == std::vector<std::size_t>{1, 2});
    CHECK(selected_layers(IntermediateLayers::All, 2) == std::vector<std::size_t>{0, 1, 2});
}

TEST_CASE("disjoint snapshots never touch each other's rows", "[inter]") {
    Rng rng(17);
    const std::size_t d = 2, global = 6;
    auto snap_a = build_snapshot({Hyperedge::make({0, 1, 2}, 0)}, SnapshotSpec{0, 0, 1});
    auto snap_b = build_snapshot({Hyperedge::make({3, 4, 5}, 1)}, SnapshotSpec{1, 1, 2});
    auto ctx_a = make_snapshot_context(snap_a, global, d, 0.0, 1.0);
    auto ctx_b = make_snapshot_context(snap_b, global, d, 0.0, 1.0);

    Tape tape;
    GruParams cell = random_cell(tape, d, rng);

    Tensor hidden0(global, d, 0.0);
    auto r1 = temporal_update(tape, tape.constant(random_tensor(3, d, rng)),
                              tape.constant(hidden0), cell, ctx_a);
    auto r2 = temporal_update(tape, tape.constant(random_tensor(3, d, rng)), r1.hidden_global,
                              cell, ctx_b);
    // rows written by A are untouched by B's update
    for (std::size_t row = 0; row < 3; ++row)
        for (std::size_t j = 0; j < d; ++j)
            CHECK(r2.hidden_global.value()(row, j) == r1.hidden_global.value()(row, j));
}

TEST_CASE("processing [A, B] differs from processing [B] alone when nodes repeat", "[inter]") {
    const DynamicHypergraph toy = make_toy_instance();
    ModelConfig mc;
    mc.d = 4;
    mc.k = 2;
    LincolnModel model(mc, toy.global_node_count, 23);
    auto ctx0 = model.make_context(toy.snapshots[0], 0.0, 2.0);
    auto ctx1 = model.make_context(toy.snapshots[1], 0.0, 2.0);

    // chained: A then B
    Tape t1;
    HiddenStates h = model.initial_hidden();
    auto step_a = model.process_snapshot(t1, ctx0, h);
    HiddenStates h_after = h;
    model.commit(step_a, ctx0, h_after);
    auto step_b_chained = model.process_snapshot(t1, ctx1, h_after);

    // B alone from the initial state
    Tape t2;
    auto step_b_alone = model.process_snapshot(t2, ctx1, h);

    // node 3 is shared between the toy snapshots
    const std::size_t row = *toy.snapshots[1].local_index(3);
    bool any_diff = false;
    for (std::size_t j = 0; j < mc.d; ++j)
        if (step_b_chained.advanced.p_star.back().value()(row, j) !=
            step_b_alone.advanced.p_star.back().value()(row, j))
            any_diff = true;
    CHECK(any_diff);
}

TEST_CASE("perturbing layer-0 hidden state leaves the last layer unchanged within a step",
          "[inter]") {
    // cross-layer influence happens only through the next snapshot's encoding,
    // so run with final_only input seeding: the only layer-0 consumer is gone.
    const DynamicHypergraph toy = make_toy_instance();
    ModelConfig mc;
    mc.d = 4;
    mc.k = 2;
    mc.intermediate = IntermediateLayers::All;
    LincolnModel model(mc, toy.global_node_count, 29);
    auto ctx = model.make_context(toy.snapshots[0], 0.0, 2.0);

    HiddenStates h = model.initial_hidden();
    h.seen.assign(h.seen.size(), 0); // unseen: layer-0 hidden is not read as input

    Tape t1;
    auto base = model.process_snapshot(t1, ctx, h);
    HiddenStates h2 = h;
    h2.layers[0](0, 0) += 0.5;
    Tape t2;
    auto pert = model.process_snapshot(t2, ctx, h2);

    CHECK(base.advanced.p_star.back().value() == pert.advanced.p_star.back().value());
    // while the layer-0 output itself does change
    CHECK(base.advanced.hidden_global[0].value() != pert.advanced.hidden_global[0].value());
}

TEST_CASE("advance validates layer counts", "[inter]") {
    Tape tape;
    auto snap = build_snapshot({Hyperedge::make({0}, 0)}, SnapshotSpec{0, 0, 1});
    SnapshotContext ctx = make_snapshot_context(snap, 1, 1, 0.0, 1.0);
    LayerStack stack;
    stack.node_layers = {tape.constant(Tensor(1, 1, 0.0))};
    std::vector<GruParams> cells; // empty: mismatch
    std::vector<Var> hidden = {tape.constant(Tensor(1, 1, 0.0))};
    CHECK_THROWS_AS(advance_snapshot(tape, stack, hidden, cells, ctx, {0}), LincolnError);
}

TEST_CASE("gradients flow through two chained snapshots", "[inter]") {
    ToyGradCheck toy;
    const auto result = toy.run(1e-5);
    INFO("worst: " << result.worst_param << " rel=" << result.max_rel_error);
    CHECK(result.max_rel_error <= 1e-4);
}

TEST_CASE("checkpoint round-trips parameters, optimizer state and hidden rows", "[inter]") {
    Rng rng(31);
    Checkpoint ckpt;
    ckpt.d = 4;
    ckpt.k = 2;
    ckpt.intermediate_layers = "all";
    ckpt.time_offset = 17.0;
    ckpt.time_unit = 3.5;
    ckpt.params.create("a/w", random_tensor(3, 4, rng));
    ckpt.params.create("b/w", random_tensor(1, 2, rng));
    ckpt.params.entries().at("a/w").m = random_tensor(3, 4, rng);
    ckpt.params.entries().at("a/w").v = random_tensor(3, 4, rng);
    ckpt.params.entries().at("a/w").step = 41;
    ckpt.hidden.layers = {random_tensor(5, 4, rng), random_tensor(5, 4, rng)};
    ckpt.hidden.seen = {1, 0, 1, 1, 0};

    std::stringstream buffer(std::ios::in | std::ios::out | std::ios::binary);
    save_checkpoint(ckpt, buffer);
    const Checkpoint loaded = load_checkpoint(buffer);

    CHECK(loaded.d == 4);
    CHECK(loaded.k == 2);
    CHECK(loaded.intermediate_layers == "all");
    CHECK(loaded.time_offset == 17.0);
    CHECK(loaded.time_unit == 3.5);
    CHECK(loaded.params.value("a/w") == ckpt.params.value("a/w"));
    CHECK(loaded.params.entries().at("a/w").m == ckpt.params.entries().at("a/w").m);
    CHECK(loaded.params.entries().at("a/w").v == ckpt.params.entries().at("a/w").v);
    CHECK(loaded.params.entries().at("a/w").step == 41);
    CHECK(loaded.params.value("b/w") == ckpt.params.value("b/w"));
    CHECK(loaded.hidden.layers[1] == ckpt.hidden.layers[1]);
    CHECK(loaded.hidden.seen == ckpt.hidden.seen);

    std::stringstream corrupt(std::ios::in | std::ios::out | std::ios::binary);
    corrupt << "oops";
    CHECK_THROWS_AS(load_checkpoint(corrupt), LincolnError);
}
