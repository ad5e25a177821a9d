#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>

#include "cne/optimizer.hpp"

using namespace cne;

namespace {

SkNNGraph toy_graph() {
    SkNNGraph g;
    g.n = 3;
    g.k = 2;
    g.edges = {{0, 1}, {0, 2}, {1, 0}, {1, 2}, {2, 0}, {2, 1}};
    g.degrees = {2, 2, 2};
    return g;
}

EmbeddingState toy_init(std::uint64_t seed) {
    EmbeddingState s;
    s.n = 3;
    s.d = 2;
    s.coords.resize(6);
    Rng rng = Rng::stream(seed, 99);
    for (auto& v : s.coords) v = 0.5 * rng.normal();
    return s;
}

}  // namespace

TEST_CASE("learning rate anneals linearly to zero within a phase") {
    OptimizerConfig cfg;
    cfg.lr = 2.0;
    CHECK(lr_schedule(cfg, 0, 100) == doctest::Approx(2.0));
    CHECK(lr_schedule(cfg, 50, 100) == doctest::Approx(1.0));
    CHECK(lr_schedule(cfg, 99, 100) == doctest::Approx(0.02));
    cfg.anneal = Anneal::none;
    CHECK(lr_schedule(cfg, 99, 100) == doctest::Approx(2.0));
}

TEST_CASE("slider endpoints and geometric interpolation") {
    CHECK(zbar_from_slider(1000, 5, 0.0) == doctest::Approx(100000.0));
    // s=1 must hit n(n-1)/(2m) exactly
    CHECK(zbar_from_slider(1000, 5, 1.0) == 1000.0 * 999.0 / 10.0);
    CHECK(zbar_from_slider(100, 5, 1.0) == 100.0 * 99.0 / 10.0);
    const double mid = zbar_from_slider(1000, 1, 0.5);
    CHECK(mid == doctest::Approx(std::sqrt(100000.0 * 499500.0)));
    // extrapolation beyond [0,1] is allowed
    CHECK(zbar_from_slider(1000, 1, 1.25) > zbar_from_slider(1000, 1, 1.0));
    CHECK_THROWS(zbar_from_slider(1, 5, 0.5));
}

TEST_CASE("negative sampling draws uniformly from the batch pool, never the head") {
    const std::vector<std::uint32_t> heads{0, 1, 2, 0};
    const std::vector<std::uint32_t> tails{1, 2, 3, 3};
    Rng rng(7);
    std::vector<std::uint32_t> out;
    std::map<std::uint32_t, std::size_t> counts;
    const std::size_t draws = 200000;
    for (std::size_t i = 0; i < draws / 10; ++i) {
        sample_negatives(heads, tails, 0, 10, rng, out);
        REQUIRE(out.size() == 10);
        for (auto v : out) {
            CHECK(v != 0);
            ++counts[v];
        }
    }
    // pool without the head: 1 x2, 2 x2, 3 x2 -> uniform over {1,2,3}
    for (auto v : {1u, 2u, 3u}) {
        const double freq = static_cast<double>(counts[v]) / static_cast<double>(draws);
        CHECK(freq == doctest::Approx(1.0 / 3.0).epsilon(0.02));
    }

    // every pool entry equal to the head -> no valid candidate
    const std::vector<std::uint32_t> solo{5, 5};
    CHECK_THROWS(sample_negatives(solo, solo, 5, 1, rng, out));
}

TEST_CASE("toy three-point run converges to the fixed normalization") {
    const SkNNGraph g = toy_graph();
    for (double zbar : {2.0, 3.0}) {
        LossSpec spec;
        spec.mode = LossMode::NEG;
        spec.zbar = zbar;
        spec.n = 3;
        OptimizerConfig cfg;
        cfg.epochs = 2000;
        cfg.batch_size = 6;
        cfg.lr = 0.01;
        cfg.anneal = Anneal::none;
        cfg.early_exag_epochs = 0;
        const EmbeddingState out = run_training(g, toy_init(0), spec, cfg);
        const double part = partition_function(out.coords, 3, 2);
        CHECK(part == doctest::Approx(zbar).epsilon(0.01));

        const double expect = equilibrium_distance_toy(zbar);
        for (auto [i, j] : std::vector<std::pair<int, int>>{{0, 1}, {0, 2}, {1, 2}}) {
            const double dx = out.coords[2 * i] - out.coords[2 * j];
            const double dy = out.coords[2 * i + 1] - out.coords[2 * j + 1];
            CHECK(std::sqrt(dx * dx + dy * dy) == doctest::Approx(expect).epsilon(0.02));
        }
    }
}

TEST_CASE("toy equilibrium distance closed form") {
    CHECK(equilibrium_distance_toy(3.0) == doctest::Approx(1.0));
    CHECK(equilibrium_distance_toy(6.0) == doctest::Approx(0.0));
    CHECK(equilibrium_distance_toy(1.0) == doctest::Approx(std::sqrt(5.0)));
    CHECK_THROWS(equilibrium_distance_toy(0.0));
    CHECK_THROWS(equilibrium_distance_toy(6.5));
}

TEST_CASE("training is deterministic in the seed") {
    const SkNNGraph g = toy_graph();
    LossSpec spec;
    spec.mode = LossMode::NEG;
    spec.zbar = 3.0;
    spec.n = 3;
    OptimizerConfig cfg;
    cfg.epochs = 50;
    cfg.batch_size = 2;
    cfg.lr = 0.05;
    cfg.early_exag_epochs = 0;
    cfg.seed = 123;

    const EmbeddingState a = run_training(g, toy_init(1), spec, cfg);
    const EmbeddingState b = run_training(g, toy_init(1), spec, cfg);
    CHECK(a.coords == b.coords);  // bitwise

    cfg.seed = 124;
    const EmbeddingState c = run_training(g, toy_init(1), spec, cfg);
    CHECK(a.coords != c.coords);
}

TEST_CASE("early exaggeration switches the effective loss at the phase boundary") {
    LossSpec spec;
    spec.mode = LossMode::NEG;
    spec.zbar = 7.5;
    spec.n = 20;
    spec.m = 4;
    OptimizerConfig cfg;
    cfg.early_exag_epochs = 3;
    cfg.epochs = 6;

    const LossSpec ee = spec_at_epoch(spec, cfg, 0);
    CHECK(ee.zbar == doctest::Approx(20.0 * 19.0 / 4.0));
    const LossSpec main = spec_at_epoch(spec, cfg, 3);
    CHECK(main.zbar == doctest::Approx(7.5));

    spec.mode = LossMode::INFONCE;
    spec.m = 17;
    CHECK(spec_at_epoch(spec, cfg, 2).m == 5);
    CHECK(spec_at_epoch(spec, cfg, 5).m == 17);

    spec.mode = LossMode::UMAP;
    CHECK(spec_at_epoch(spec, cfg, 0).zbar == spec.zbar);
    CHECK(spec_at_epoch(spec, cfg, 0).m == spec.m);
}

TEST_CASE("epoch hook reports the effective normalization and every epoch") {
    const SkNNGraph g = toy_graph();
    LossSpec spec;
    spec.mode = LossMode::NEG;
    spec.zbar = 3.0;
    spec.n = 3;
    spec.m = 2;
    OptimizerConfig cfg;
    cfg.epochs = 10;
    cfg.batch_size = 6;
    cfg.lr = 0.001;
    cfg.early_exag_epochs = 4;

    std::vector<EpochStats> log;
    run_training(g, toy_init(2), spec, cfg, [&](const EpochStats& s) { log.push_back(s); });
    REQUIRE(log.size() == 10);
    for (std::size_t e = 0; e < 10; ++e) {
        CHECK(log[e].epoch == e);
        CHECK(log[e].zbar_or_Z == doctest::Approx(e < 4 ? 3.0 * 2.0 / 2.0 : 3.0));
        CHECK(std::isfinite(log[e].loss));
    }
}

TEST_CASE("per-phase annealing resets after early exaggeration") {
    OptimizerConfig cfg;
    cfg.lr = 1.0;
    cfg.epochs = 100;
    cfg.early_exag_epochs = 40;
    // last exaggeration epoch is nearly annealed out, first main epoch resets
    CHECK(epoch_lr(cfg, 39) == doctest::Approx(1.0 - 39.0 / 40.0));
    CHECK(epoch_lr(cfg, 40) == doctest::Approx(1.0));
    cfg.single_phase_anneal = true;
    CHECK(epoch_lr(cfg, 40) == doctest::Approx(1.0 - 40.0 / 100.0));
}

TEST_CASE("divergent learning rate raises a divergence error") {
    const SkNNGraph g = toy_graph();
    LossSpec spec;
    spec.mode = LossMode::NEG;
    spec.zbar = 3.0;
    spec.n = 3;
    OptimizerConfig cfg;
    cfg.epochs = 200;
    cfg.batch_size = 6;
    cfg.lr = 1e160;  // one step pushes coordinates past the overflow guard
    cfg.anneal = Anneal::none;
    cfg.early_exag_epochs = 0;
    CHECK_THROWS_AS(run_training(g, toy_init(3), spec, cfg), DivergenceError);
}

TEST_CASE("nce learns an approximately normalized model on the toy graph") {
    const SkNNGraph g = toy_graph();
    LossSpec spec;
    spec.mode = LossMode::NCE;
    spec.n = 3;
    spec.m = 5;
    OptimizerConfig cfg;
    cfg.epochs = 4000;
    cfg.batch_size = 6;
    cfg.lr = 0.01;
    cfg.z_lr = 0.001;
    cfg.anneal = Anneal::none;
    cfg.early_exag_epochs = 0;
    const EmbeddingState out = run_training(g, toy_init(4), spec, cfg);
    const double part = partition_function(out.coords, 3, 2);
    // learned Z approximates partition/(n(n-1)) (spec formula has the pair
    // count absorbed into Z)
    CHECK(out.Z * 6.0 / part == doctest::Approx(1.0).epsilon(0.2));
}

TEST_CASE("config validation") {
    OptimizerConfig cfg;
    cfg.epochs = 0;
    CHECK_THROWS(cfg.validate());
    cfg = {};
    cfg.lr = -1.0;
    CHECK_THROWS(cfg.validate());
    cfg = {};
    cfg.early_exag_epochs = 750;  // must be < epochs
    CHECK_THROWS(cfg.validate());
    cfg = {};
    CHECK_NOTHROW(cfg.validate());
}
