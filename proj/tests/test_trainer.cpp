#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "lincoln/metrics.hpp"
#include "lincoln/rng.hpp"
#include "lincoln/synthetic.hpp"
#include "lincoln/trainer.hpp"

using namespace lincoln;

namespace {

// O(n_pos * n_neg) pairwise oracle, ties count one half.
double auroc_bruteforce(const std::vector<double>& scores, const std::vector<int>& labels) {
    double wins = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!labels[i]) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j]) continue;
            ++pairs;
            if (scores[i] > scores[j])
                wins += 1.0;
            else if (scores[i] == scores[j])
                wins += 0.5;
        }
    }
    return wins / static_cast<double>(pairs);
}

// Definition-level AP: stable sort by descending score, average precision at
// each positive's rank.
double ap_enumeration(std::vector<double> scores, std::vector<int> labels) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    double sum = 0;
    std::size_t pos_seen = 0, n_pos = 0;
    for (int l : labels) n_pos += l ? 1 : 0;
    for (std::size_t rank = 1; rank <= order.size(); ++rank)
        if (labels[order[rank - 1]]) {
            ++pos_seen;
            sum += static_cast<double>(pos_seen) / static_cast<double>(rank);
        }
    return sum / static_cast<double>(n_pos);
}

} // namespace

TEST_CASE("predict_candidate forced cases", "[trainer]") {
    SECTION("zero predictor scores one half") {
        Tensor p(4, 3, 0.7);
        Tensor w(3, 1, 0.0);
        CHECK(predict_candidate(p, {0, 2}, w, 0.0) == 0.5);
    }
    SECTION("hand-evaluated pooled score") {
        Tensor p = Tensor::from_rows({{1, 0}, {0, 1}});
        Tensor w = Tensor::from_rows({{1}, {1}});
        const double got = predict_candidate(p, {0, 1}, w, 0.0);
        CHECK(got == Catch::Approx(1.0 / (1.0 + std::exp(-1.0))).margin(1e-15));
        CHECK(got == Catch::Approx(0.7311).margin(5e-5));
    }
    SECTION("permutation invariance is exact") {
        Rng rng(3);
        Tensor p(8, 5);
        for (double& x : p.raw()) x = rng.uniform(-2, 2);
        Tensor w(5, 1);
        for (double& x : w.raw()) x = rng.uniform(-1, 1);
        std::vector<std::size_t> members = {1, 3, 4, 6, 7};
        const double reference = predict_candidate(p, members, w, 0.3);
        for (int t = 0; t < 100; ++t) {
            std::vector<std::size_t> shuffled = members;
            rng.shuffle(shuffled);
            CHECK(predict_candidate(p, shuffled, w, 0.3) == reference);
        }
    }
    SECTION("errors") {
        Tensor p(3, 2, 0.0);
        Tensor w(2, 1, 0.0);
        CHECK_THROWS_AS(predict_candidate(p, {0}, w, 0.0), LincolnError);       // size < 2
        CHECK_THROWS_AS(predict_candidate(p, {0, 9}, w, 0.0), LincolnError);    // unknown row
        CHECK_THROWS_AS(predict_candidate(p, {0, 1}, Tensor(3, 1, 0.0), 0.0), LincolnError);
    }
}

TEST_CASE("bce loss matches the calculator", "[trainer]") {
    SECTION("uninformative predictions give ln 2") {
        Tape tape;
        Var y_hat = tape.constant(Tensor(4, 1, 0.5));
        Var loss = bce_loss(tape, y_hat, {1, 0, 1, 0});
        CHECK(loss.value()(0, 0) == Catch::Approx(std::log(2.0)).margin(1e-12));
    }
    SECTION("perfect predictions cost only the clamp") {
        Tape tape;
        Tensor t(2, 1);
        t(0, 0) = 1.0;
        t(1, 0) = 0.0;
        Var loss = bce_loss(tape, tape.constant(t), {1, 0});
        CHECK(loss.value()(0, 0) == Catch::Approx(-std::log(1.0 - 1e-7)).margin(1e-12));
    }
    SECTION("hand-computed mixed batch") {
        Tape tape;
        Tensor t(2, 1);
        t(0, 0) = 0.9;
        t(1, 0) = 0.2;
        Var loss = bce_loss(tape, tape.constant(t), {1, 0});
        CHECK(loss.value()(0, 0) ==
              Catch::Approx(-(std::log(0.9) + std::log(0.8)) / 2.0).margin(1e-12));
        CHECK(loss.value()(0, 0) == Catch::Approx(0.164252).margin(1e-6));
    }
    SECTION("empty batches are rejected") {
        Tape tape;
        Var empty = tape.constant(Tensor(0, 1, 0.0));
        CHECK_THROWS_AS(bce_loss(tape, empty, {}), LincolnError);
    }
}

TEST_CASE("contrastive loss follows the similarity mapping", "[trainer]") {
    Rng rng(8);
    Tensor q(3, 4);
    for (double& x : q.raw()) x = rng.uniform(-1, 1);
    SECTION("identical sides cost nothing") {
        Tape tape;
        Var qs = tape.constant(q);
        Var loss = contrastive_loss(tape, qs, tape.constant(q));
        CHECK(loss.value()(0, 0) == Catch::Approx(0.0).margin(1e-12));
    }
    SECTION("orthogonal rows cost ln 2") {
        Tape tape;
        Var qs = tape.constant(Tensor::from_rows({{1, 0}, {0, 2}}));
        Var qt = tape.constant(Tensor::from_rows({{0, 3}, {5, 0}}));
        Var loss = contrastive_loss(tape, qs, qt);
        CHECK(loss.value()(0, 0) == Catch::Approx(std::log(2.0)).margin(1e-12));
    }
    SECTION("antipodal rows hit the clamp") {
        Tape tape;
        Var qs = tape.constant(q);
        Var qt = scalar_mul(-1.0, tape.constant(q));
        Var loss = contrastive_loss(tape, qs, qt);
        CHECK(loss.value()(0, 0) == Catch::Approx(-std::log(1e-7)).margin(1e-9));
    }
    SECTION("shape mismatch") {
        Tape tape;
        CHECK_THROWS_AS(
            contrastive_loss(tape, tape.constant(Tensor(2, 2, 1.0)), tape.constant(Tensor(3, 2, 1.0))),
            LincolnError);
    }
}

TEST_CASE("total loss combines with beta", "[trainer]") {
    Tape tape;
    Var pred = tape.constant(Tensor(1, 1, 0.5));
    Var con = tape.constant(Tensor(1, 1, 0.2));
    CHECK(total_loss(pred, con, 0.0).value()(0, 0) == 0.5);
    CHECK(total_loss(pred, con, 1.0).value()(0, 0) == Catch::Approx(0.7).margin(1e-15));
    Var con_ln2 = tape.constant(Tensor(1, 1, std::log(2.0)));
    CHECK(total_loss(pred, con_ln2, 0.5).value()(0, 0) ==
          Catch::Approx(0.5 + 0.346574).margin(1e-6));
    CHECK(total_loss(pred, std::nullopt, 0.7).value()(0, 0) == 0.5);
    CHECK_THROWS_AS(total_loss(pred, con, -0.1), LincolnError);
}

TEST_CASE("auroc forced examples", "[trainer]") {
    CHECK(auroc({0.9, 0.8, 0.3, 0.2}, {1, 1, 0, 0}) == 1.0);
    CHECK(auroc({0.4, 0.4, 0.4, 0.4}, {1, 0, 1, 0}) == 0.5);
    // pairwise oracle on [0.8, 0.7, 0.6] / [1, 0, 1]: one win, one loss -> 0.5
    const std::vector<double> s = {0.8, 0.7, 0.6};
    const std::vector<int> l = {1, 0, 1};
    CHECK(auroc_bruteforce(s, l) == 0.5);
    CHECK(auroc(s, l) == 0.5);
    CHECK_THROWS_AS(auroc({0.5, 0.4}, {1, 1}), LincolnError);
}

TEST_CASE("average precision forced examples", "[trainer]") {
    CHECK(average_precision({0.9, 0.8, 0.1, 0.2}, {1, 1, 0, 0}) == 1.0);
    CHECK(average_precision({0.9, 0.5, 0.4}, {1, 0, 1}) ==
          Catch::Approx((1.0 + 2.0 / 3.0) / 2.0).margin(1e-12));
    CHECK(average_precision({0.9, 0.5, 0.4, 0.1}, {0, 0, 0, 1}) == 0.25); // 1/n when last
    CHECK_THROWS_AS(average_precision({0.5, 0.4}, {0, 0}), LincolnError);
}

TEST_CASE("metrics match oracles on random batches", "[trainer]") {
    Rng rng(41);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 2 + rng.index(63);
        std::vector<double> scores(n);
        std::vector<int> labels(n);
        bool pos = false, neg = false;
        for (std::size_t i = 0; i < n; ++i) {
            // quantized scores force plenty of ties
            scores[i] = std::floor(rng.uniform(0, 8)) / 8.0;
            labels[i] = rng.below(2) ? 1 : 0;
            (labels[i] ? pos : neg) = true;
        }
        if (!pos || !neg) continue;
        CHECK(std::abs(auroc(scores, labels) - auroc_bruteforce(scores, labels)) <= 1e-12);
        CHECK(std::abs(average_precision(scores, labels) - ap_enumeration(scores, labels)) <=
              1e-12);
    }
}

TEST_CASE("rank metrics ignore monotone score transforms", "[trainer]") {
    Rng rng(43);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 4 + rng.index(40);
        std::vector<double> scores(n);
        std::vector<int> labels(n);
        bool pos = false, neg = false;
        for (std::size_t i = 0; i < n; ++i) {
            scores[i] = rng.uniform(-3, 3);
            labels[i] = rng.below(2) ? 1 : 0;
            (labels[i] ? pos : neg) = true;
        }
        if (!pos || !neg) continue;
        std::vector<double> mapped(n);
        for (std::size_t i = 0; i < n; ++i) mapped[i] = std::exp(2.0 * scores[i]) + 1.0;
        CHECK(auroc(scores, labels) == auroc(mapped, labels));
        CHECK(average_precision(scores, labels) == average_precision(mapped, labels));
    }
}

TEST_CASE("largest-remainder split covers every count", "[trainer]") {
    const SplitSizes ten = split_sizes(10);
    CHECK(ten.train == 7);
    CHECK(ten.val == 2);
    CHECK(ten.test == 1);
    const SplitSizes nineteen = split_sizes(19);
    CHECK(nineteen.train == 13);
    CHECK(nineteen.val == 4);
    CHECK(nineteen.test == 2);
    for (std::size_t n = 1; n <= 200; ++n) {
        const SplitSizes s = split_sizes(n);
        CHECK(s.train + s.val + s.test == n);
        if (n >= 10) {
            CHECK(s.test >= 1);
            CHECK(s.val >= 2);
        }
    }
}

TEST_CASE("live update rejects undersized datasets", "[trainer]") {
    PeriodicSpec spec;
    spec.snapshot_count = 1;
    spec.tracked_edges = 5;
    spec.phase_classes = 1;
    auto data = make_periodic_dataset(spec);
    TrainConfig cfg;
    cfg.runs = 1;
    CHECK_THROWS_AS(live_update_run(data, cfg), LincolnError);
}

TEST_CASE("live update produces a full deterministic report", "[trainer]") {
    PeriodicSpec spec;
    spec.snapshot_count = 6;
    spec.tracked_edges = 9;
    spec.phase_classes = 3;
    spec.instances_per_appearance = 4;
    spec.noise_per_snapshot = 2;
    spec.seed = 5;
    auto data = make_periodic_dataset(spec);

    TrainConfig cfg;
    cfg.d = 8;
    cfg.k = 2;
    cfg.epochs_per_snapshot = 3;
    cfg.runs = 2;
    cfg.seed = 99;

    const auto report_a = live_update_run(data, cfg);
    const auto report_b = live_update_run(data, cfg);

    REQUIRE(report_a.runs.size() == 2);
    CHECK(report_a.runs[0].seed != report_a.runs[1].seed);
    // targets whose test candidates contain no previously-seen node are
    // skipped (a fresh phase class can be unscoreable), the rest report
    CHECK(report_a.runs[0].per_snapshot.size() + report_a.runs[0].skipped_snapshots == 5);
    CHECK(report_a.runs[0].per_snapshot.size() >= 3);
    for (const auto& m : report_a.runs[0].per_snapshot) {
        CHECK(m.auroc >= 0.0);
        CHECK(m.auroc <= 1.0);
        CHECK(m.ap >= 0.0);
        CHECK(m.ap <= 1.0);
        CHECK(m.n_test >= 2);
    }
    CHECK(report_to_json(report_a).dump() == report_to_json(report_b).dump());

    // parallel execution merges identical results in run order
    const auto report_c = live_update_run(data, cfg, /*parallel_runs=*/true);
    CHECK(report_to_json(report_c).dump() == report_to_json(report_a).dump());
}

TEST_CASE("snapshots with too few usable edges are skipped with a count", "[trainer]") {
    // snapshot 1 holds a single tiny edge: skipped as a prediction target
    DynamicHypergraph data;
    data.global_node_count = 30;
    data.raw_ids.resize(30);
    for (std::size_t i = 0; i < 30; ++i) data.raw_ids[i] = static_cast<std::int64_t>(i);
    Rng rng(12);
    auto fill = [&](int index, Timestamp t0, std::size_t count) {
        std::vector<Hyperedge> edges;
        for (std::size_t e = 0; e < count; ++e) {
            std::set<NodeId> m;
            while (m.size() < 3) m.insert(static_cast<NodeId>(rng.below(30)));
            edges.push_back(Hyperedge::make({m.begin(), m.end()}, t0 + static_cast<Timestamp>(e)));
        }
        data.snapshots.push_back(build_snapshot(std::move(edges), SnapshotSpec{index, t0, t0 + 100}));
    };
    fill(0, 0, 12);
    data.snapshots.push_back(
        build_snapshot({Hyperedge::make({0, 1}, 100)}, SnapshotSpec{1, 100, 200}));
    fill(2, 200, 12);

    TrainConfig cfg;
    cfg.d = 6;
    cfg.k = 1;
    cfg.epochs_per_snapshot = 2;
    cfg.runs = 1;
    const auto report = live_update_run(data, cfg);
    CHECK(report.runs[0].skipped_snapshots == 1);
    REQUIRE(report.runs[0].per_snapshot.size() == 1);
    CHECK(report.runs[0].per_snapshot[0].snapshot == 2);
}

TEST_CASE("bptt window two stays deterministic and finite", "[trainer]") {
    PeriodicSpec spec;
    spec.snapshot_count = 4;
    spec.tracked_edges = 6;
    spec.phase_classes = 2;
    spec.period = 2;
    spec.instances_per_appearance = 4;
    spec.seed = 6;
    auto data = make_periodic_dataset(spec);

    TrainConfig cfg;
    cfg.d = 6;
    cfg.k = 1;
    cfg.epochs_per_snapshot = 2;
    cfg.runs = 1;
    cfg.bptt_window = 2;
    const auto a = live_update_run(data, cfg);
    const auto b = live_update_run(data, cfg);
    CHECK(report_to_json(a).dump() == report_to_json(b).dump());
}

TEST_CASE("reports serialize with csv rows per snapshot", "[trainer]") {
    MetricsReport report;
    report.config = TrainConfig{};
    RunMetrics run;
    run.seed = 7;
    run.per_snapshot = {{1, 0.75, 0.8, 12}, {2, 0.5, 0.625, 10}};
    run.mean_auroc = 0.625;
    run.mean_ap = 0.7125;
    report.runs = {run};
    report.mean_auroc = 0.625;
    report.mean_ap = 0.7125;

    std::ostringstream csv;
    report_to_csv(report, csv);
    CHECK(csv.str() ==
          "run,snapshot,auroc,ap,n_test\n0,1,0.75,0.80000000000000004,12\n0,2,0.5,0.625,10\n");

    std::ostringstream curves;
    report_curves_csv(report, curves);
    CHECK(curves.str() == "snapshot,auroc_mean,ap_mean\n1,0.75,0.80000000000000004\n2,0.5,0.625\n");

    const auto j = report_to_json(report);
    CHECK(j["mean_auroc"] == 0.625);
    CHECK(j["runs"][0]["snapshots"][1]["n_test"] == 10);
}
