#include "piano/operators.hpp"

#include "piano/pdesim.hpp"
#include "piano/rng.hpp"

#include <doctest.h>

#include <cmath>

using namespace piano;

namespace {

FrameSequence random_frames(int T, int C, int H, int W, std::uint64_t seed) {
    RngStream rng(seed);
    FrameSequence seq;
    for (int t = 0; t < T; ++t) {
        Frame f;
        for (int c = 0; c < C; ++c) {
            ScalarField field(H, W);
            for (double& v : field.values) v = rng.uniform01();
            f.channels.push_back(std::move(field));
        }
        seq.frames.push_back(std::move(f));
        seq.timestamps.push_back(t);
    }
    return seq;
}

} // namespace

TEST_CASE("frames_to_tensor / tensor_to_frames round-trip") {
    const FrameSequence seq = random_frames(6, 2, 5, 7, 1);
    const Tensor4 t = frames_to_tensor(seq, 1, 4);
    CHECK(t.n == 1);
    CHECK(t.c == 8);
    CHECK(t.h == 5);
    CHECK(t.w == 7);
    const FrameSequence back = tensor_to_frames(t, 2);
    REQUIRE(back.frames.size() == 4);
    for (int k = 0; k < 4; ++k)
        for (int c = 0; c < 2; ++c)
            CHECK(back.frames[k].channels[c].values == seq.frames[k + 1].channels[c].values);
}

TEST_CASE("init_param_maps gives D=1, R=0") {
    const ParamMaps pm = init_param_maps(4, 6);
    for (double d : pm.D.values) CHECK(d == 1.0);
    for (double r : pm.R.values) CHECK(r == 0.0);
}

TEST_CASE("append_param_maps: D node equals d_raw squared, initializes to 1/0") {
    DiffGraph g;
    const ParamMapNodes pm = append_param_maps(g, 4, 4);
    g.forward();
    for (double d : g.value(pm.D).v) CHECK(d == 1.0);
    for (double r : g.value(pm.R).v) CHECK(r == 0.0);
    // perturb d_raw negative: D must stay non-negative
    auto params = g.export_params();
    for (double& v : params.at("pmap.d_raw").v) v = -0.7;
    g.import_params(params);
    g.forward();
    for (double d : g.value(pm.D).v) CHECK(d == doctest::Approx(0.49));
}

TEST_CASE("stencil kernels match the gridcore finite differences") {
    DiffGraph g;
    const StencilKernels st = append_stencil_kernels(g);
    const int x = g.input("x", 1, 1, 8, 8);
    const int gx = g.conv2d(x, st.grad_x);
    const int gy = g.conv2d(x, st.grad_y);
    const int lap = g.conv2d(x, st.laplace);

    RngStream rng(4);
    ScalarField f(8, 8);
    for (double& v : f.values) v = rng.gaussian();
    g.set_input("x", field_to_tensor(f));
    g.forward();

    const StencilSpec spec;
    const VectorField grad = gradient(f, spec);
    const ScalarField lp = laplacian(f, spec);
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j) {
            CHECK(g.value(gx).at(0, 0, i, j) == grad.x(i, j));
            CHECK(g.value(gy).at(0, 0, i, j) == grad.y(i, j));
            // accumulation order differs from the hand-written stencil, so
            // agreement is to the last ulp rather than bitwise
            CHECK(g.value(lap).at(0, 0, i, j) ==
                  doctest::Approx(lp.at(i, j)).epsilon(1e-15));
        }
}

TEST_CASE("differentiable residual agrees with the solver residual") {
    const int H = 12, W = 12;
    RngStream rng(5);
    ScalarField u(H, W), un(H, W);
    VectorField vel(H, W);
    for (double& v : u.values) v = rng.uniform01();
    for (std::size_t k = 0; k < vel.vx.size(); ++k) {
        vel.vx[k] = rng.uniform(-0.4, 0.4);
        vel.vy[k] = rng.uniform(-0.4, 0.4);
    }
    PDEParams p;
    p.D = ScalarField(H, W, 1.0);
    p.R = ScalarField(H, W, 0.0);
    un = step(u, vel, p);
    for (double& v : un.values) v += 0.01; // make the residual non-trivial

    DiffGraph g;
    const StencilKernels st = append_stencil_kernels(g);
    const ParamMapNodes pm = append_param_maps(g, H, W);
    const int nu = g.input("u", 1, 1, H, W);
    const int nun = g.input("un", 1, 1, H, W);
    const int nvx = g.input("vx", 1, 1, H, W);
    const int nvy = g.input("vy", 1, 1, H, W);
    const int res = append_transition_residual(g, st, nu, nun, nvx, nvy, pm);
    g.set_input("u", field_to_tensor(u));
    g.set_input("un", field_to_tensor(un));
    Tensor4 tvx(1, 1, H, W), tvy(1, 1, H, W);
    tvx.v = vel.vx;
    tvy.v = vel.vy;
    g.set_input("vx", tvx);
    g.set_input("vy", tvy);
    g.forward();

    const ScalarField oracle = residual(u, un, vel, p);
    for (int i = 0; i < H; ++i)
        for (int j = 0; j < W; ++j)
            CHECK(g.value(res).at(0, 0, i, j) ==
                  doctest::Approx(oracle.at(i, j)).epsilon(1e-12));
}

TEST_CASE("append_pde_loss matches the sum-of-mean-square oracle") {
    const int H = 16, W = 16, K = 4;
    const SyntheticScenario sc = make_scenario(ScenarioKind::Shear, H, W, 12, 21);

    DiffGraph g;
    const StencilKernels st = append_stencil_kernels(g);
    const ParamMapNodes pm = append_param_maps(g, H, W);
    const int seq = g.input("seq", 1, K, H, W);
    const int vel = g.input("vel", 1, 2 * K, H, W);
    const int l = append_pde_loss(g, st, pm, seq, K, 1, vel, 1);

    g.set_input("seq", frames_to_tensor(sc.frames, 0, K));
    Tensor4 tv(1, 2 * K, H, W);
    for (int k = 0; k < K; ++k) {
        // field k serves transition k-1; pack true velocities shifted by one
        const VectorField& v = sc.true_v[k == 0 ? 0 : k - 1];
        for (int i = 0; i < H; ++i)
            for (int j = 0; j < W; ++j) {
                tv.at(0, 2 * k, i, j) = v.x(i, j);
                tv.at(0, 2 * k + 1, i, j) = v.y(i, j);
            }
    }
    g.set_input("vel", tv);
    g.forward();

    // true params + true velocities -> residual loss vanishes only when the
    // parameter maps match; here D=1 differs from the scenario's D, so compare
    // against the plain oracle instead of zero.
    PDEParams p;
    p.D = ScalarField(H, W, 1.0);
    p.R = ScalarField(H, W, 0.0);
    double oracle = 0.0;
    for (int t = 0; t + 1 < K; ++t) {
        const ScalarField r = residual(sc.frames.frames[t].channels[0],
                                       sc.frames.frames[t + 1].channels[0], sc.true_v[t], p);
        double ms = 0.0;
        for (double x : r.values) ms += x * x;
        oracle += ms / r.values.size();
    }
    CHECK(g.value(l).v[0] == doctest::Approx(oracle).epsilon(1e-12));
}

TEST_CASE("untrained T-NO is exactly the persistence forecast") {
    TNOConfig cfg;
    cfg.s = 4;
    cfg.hidden = {8, 8, 8};
    const int H = 16, W = 16;
    const FrameSequence hist = random_frames(4, 1, H, W, 31);
    const ScalarField dem(H, W, 0.2);

    DiffGraph g;
    const int frames = g.input("frames", 1, cfg.s, H, W);
    const int demn = g.input("dem", 1, 1, H, W);
    const int pred = append_tno(g, cfg, frames, demn, NormStats::identity(cfg.s + 1), 99);
    g.set_input("frames", frames_to_tensor(hist, 0, 4));
    g.set_input("dem", field_to_tensor(dem));
    g.forward();

    const ScalarField& last = hist.frames[3].channels[0];
    for (int k = 0; k < 4; ++k)
        for (int i = 0; i < H; ++i)
            for (int j = 0; j < W; ++j)
                CHECK(g.value(pred).at(0, k, i, j) == doctest::Approx(last.at(i, j)));
}

TEST_CASE("T-NO requires H and W divisible by 4") {
    TNOConfig cfg;
    cfg.s = 2;
    cfg.hidden = {4, 4, 4};
    DiffGraph g;
    const int frames = g.input("frames", 1, 2, 10, 12);
    const int dem = g.input("dem", 1, 1, 10, 12);
    CHECK_THROWS_AS(append_tno(g, cfg, frames, dem, NormStats::identity(3), 1), GraphError);
}

TEST_CASE("V-NO output is bounded by v_max and has 2s channels") {
    VNOConfig cfg;
    cfg.s = 4;
    cfg.hidden = {8, 8};
    cfg.v_max = 0.5;
    const int H = 16, W = 16;
    DiffGraph g;
    const int frames = g.input("frames", 1, cfg.s, H, W);
    const int vel = append_vno(g, cfg, frames, NormStats::identity(cfg.s), 7);
    const FrameSequence seq = random_frames(4, 1, H, W, 8);
    g.set_input("frames", frames_to_tensor(seq, 0, 4));
    g.forward();
    const Tensor4& v = g.value(vel);
    CHECK(v.c == 8);
    for (double x : v.v) CHECK(std::abs(x) <= 0.5);
}

TEST_CASE("V-NO bound stays within the stable CFL regime") {
    VNOConfig cfg;
    const StencilSpec spec;
    CHECK(cfl_check(cfg.v_max, 0.0, spec) == Stability::Stable);
}

TEST_CASE("translator output is non-negative") {
    TranslatorConfig cfg;
    cfg.hidden = 8;
    DiffGraph g;
    const int sat = g.input("sat", 1, 1, 8, 8);
    const int out = append_translator(g, cfg, sat, NormStats::identity(1), 3);
    const FrameSequence seq = random_frames(1, 1, 8, 8, 9);
    g.set_input("sat", frames_to_tensor(seq, 0, 1));
    g.forward();
    for (double x : g.value(out).v) CHECK(x >= 0.0);
}

TEST_CASE("operator initialization is deterministic in the seed") {
    TNOConfig cfg;
    cfg.s = 2;
    cfg.hidden = {4, 4, 4};
    DiffGraph g1, g2, g3;
    for (DiffGraph* g : {&g1, &g2, &g3}) {
        const int frames = g->input("frames", 1, 2, 8, 8);
        const int dem = g->input("dem", 1, 1, 8, 8);
        append_tno(*g, cfg, frames, dem, NormStats::identity(3), g == &g3 ? 43u : 42u);
    }
    const auto p1 = g1.export_params();
    const auto p2 = g2.export_params();
    const auto p3 = g3.export_params();
    CHECK(p1.size() == p2.size());
    bool diff = false;
    for (const auto& [name, t] : p1) {
        CHECK(t.v == p2.at(name).v);
        if (t.v != p3.at(name).v) diff = true;
    }
    CHECK(diff);
}

TEST_CASE("tno_predict inference wrapper reproduces the graph output") {
    TNOConfig cfg;
    cfg.s = 4;
    cfg.hidden = {8, 8, 8};
    const int H = 12, W = 12;
    const FrameSequence hist = random_frames(4, 1, H, W, 77);
    const ScalarField dem(H, W, 0.1);

    DiffGraph g;
    const int frames = g.input("frames", 1, 4, H, W);
    const int demn = g.input("dem", 1, 1, H, W);
    append_tno(g, cfg, frames, demn, NormStats::identity(5), 5);
    auto ckpt = g.export_params();
    norm_stats_to_checkpoint(ckpt, "tno", NormStats::identity(5));

    const FrameSequence pred = tno_predict(hist, dem, cfg, ckpt);
    REQUIRE(pred.frames.size() == 4);
    // untrained -> persistence
    for (int k = 0; k < 4; ++k)
        CHECK(pred.frames[k].channels[0].values == hist.frames[3].channels[0].values);
}

TEST_CASE("vno_extract returns s finite velocity fields") {
    VNOConfig cfg;
    cfg.s = 4;
    cfg.hidden = {8, 8};
    const int H = 12, W = 12;
    DiffGraph g;
    const int frames = g.input("frames", 1, 4, H, W);
    append_vno(g, cfg, frames, NormStats::identity(4), 6);
    auto ckpt = g.export_params();
    norm_stats_to_checkpoint(ckpt, "vno", NormStats::identity(4));

    const FrameSequence seq = random_frames(4, 1, H, W, 66);
    const auto vels = vno_extract(seq, cfg, ckpt);
    REQUIRE(vels.size() == 4);
    for (const auto& v : vels) {
        CHECK(v.max_abs_component() <= cfg.v_max);
        for (double x : v.vx) CHECK(std::isfinite(x));
    }
}

TEST_CASE("head_translate refuses an untrained checkpoint") {
    TranslatorConfig cfg;
    cfg.hidden = 8;
    DiffGraph g;
    const int sat = g.input("sat", 1, 1, 8, 8);
    append_translator(g, cfg, sat, NormStats::identity(1), 2);
    auto ckpt = g.export_params();
    norm_stats_to_checkpoint(ckpt, "translator", NormStats::identity(1));

    Frame f;
    f.channels.push_back(ScalarField(8, 8, 0.5));
    CHECK_THROWS_AS(head_translate(f, cfg, ckpt), GraphError);
    ckpt.emplace("translator.trained", Tensor4::scalar(1.0));
    CHECK_NOTHROW(head_translate(f, cfg, ckpt));
}

TEST_CASE("norm stats checkpoint round-trip") {
    NormStats st;
    st.mean = {0.5, -1.0};
    st.stdev = {2.0, 0.25};
    std::map<std::string, Tensor4> ckpt;
    norm_stats_to_checkpoint(ckpt, "x", st);
    const NormStats back = norm_stats_from_checkpoint(ckpt, "x");
    CHECK(back.mean == st.mean);
    CHECK(back.stdev == st.stdev);
}

TEST_CASE("gradcheck through the full T-NO + V-NO + residual stack") {
    TNOConfig tcfg;
    tcfg.s = 2;
    tcfg.hidden = {4, 4, 4};
    VNOConfig vcfg;
    vcfg.s = 2;
    vcfg.hidden = {4, 4};
    const int H = 8, W = 8;

    DiffGraph g;
    const StencilKernels st = append_stencil_kernels(g);
    const ParamMapNodes pm = append_param_maps(g, H, W);
    const int frames = g.input("frames", 1, 2, H, W);
    const int dem = g.input("dem", 1, 1, H, W);
    const int pred = append_tno(g, tcfg, frames, dem, NormStats::identity(3), 1);
    const int vel = append_vno(g, vcfg, pred, NormStats::identity(2), 2);
    const int lpde = append_pde_loss(g, st, pm, pred, 2, 1, vel, 1);
    const int target = g.input("target", 1, 2, H, W);
    const int ldata = g.scale(g.mean_square(g.sub(pred, target)), 2.0);
    const int ltotal = g.add(ldata, g.scale(lpde, 1.0));

    const FrameSequence seq = random_frames(4, 1, H, W, 13);
    g.set_input("frames", frames_to_tensor(seq, 0, 2));
    g.set_input("target", frames_to_tensor(seq, 2, 2));
    g.set_input("dem", field_to_tensor(ScalarField(H, W, 0.3)));
    // deeper stacks accumulate finite-difference truncation noise
    CHECK(g.gradcheck(ltotal, 1e-6, 300) < 1e-3);
}
