#include "piano/pdesim.hpp"

#include "piano/rng.hpp"

#include <algorithm>
#include <cmath>

namespace piano {

void PDEParams::validate(int h, int w) const {
    if (D.height != h || D.width != w) throw DimensionError("PDEParams: D dimension mismatch");
    if (R.height != h || R.width != w) throw DimensionError("PDEParams: R dimension mismatch");
    for (double d : D.values)
        if (d < 0.0) throw DimensionError("PDEParams: D must be non-negative everywhere");
}

Stability cfl_check(double v_max, double d_max, const StencilSpec& spec) {
    // dt = 1 (frame interval), dx = spec.spacing
    const double adv = std::fabs(v_max) / spec.spacing;
    const double dif = d_max / (spec.spacing * spec.spacing);
    if (adv > 1.0 || dif > 0.5) return Stability::Unstable;
    if (adv <= 0.5 && dif <= 0.25) return Stability::Stable;
    return Stability::Marginal;
}

ScalarField step(const ScalarField& u, const VectorField& v, const PDEParams& p) {
    require_stencil_input(u);
    if (v.height != u.height || v.width != u.width)
        throw DimensionError("step: velocity dimension mismatch");
    p.validate(u.height, u.width);

    const VectorField g = gradient(u, p.spec);
    const ScalarField lap = laplacian(u, p.spec);
    const ScalarField divv = divergence(v, p.spec);

    ScalarField out(u.height, u.width);
    const std::size_t n = u.values.size();
    for (std::size_t k = 0; k < n; ++k) {
        out.values[k] = u.values[k] + p.D.values[k] * lap.values[k] -
                        (v.vx[k] * g.vx[k] + v.vy[k] * g.vy[k]) -
                        u.values[k] * divv.values[k] + p.R.values[k];
    }
    return out;
}

FrameSequence rollout(const ScalarField& u0, const std::vector<VectorField>& v_seq,
                      const PDEParams& p, int n) {
    if (static_cast<int>(v_seq.size()) < n)
        throw DimensionError("rollout: need at least n velocity fields");
    FrameSequence seq;
    seq.channel_labels = {"u"};
    seq.frames.push_back(Frame{{u0}});
    seq.timestamps.push_back(0);
    ScalarField cur = u0;
    for (int k = 0; k < n; ++k) {
        cur = step(cur, v_seq[k], p);
        int bad = 0;
        for (double x : cur.values)
            if (!std::isfinite(x)) ++bad;
        if (bad > 0)
            throw InstabilityError("rollout: non-finite values at step " + std::to_string(k + 1) +
                                       " (" + std::to_string(bad) + " cells)",
                                   k + 1, bad);
        seq.frames.push_back(Frame{{cur}});
        seq.timestamps.push_back(k + 1);
    }
    return seq;
}

ScalarField residual(const ScalarField& u_t, const ScalarField& u_next,
                     const VectorField& v, const PDEParams& p) {
    if (u_next.height != u_t.height || u_next.width != u_t.width)
        throw DimensionError("residual: frame dimension mismatch");
    ScalarField pred = step(u_t, v, p);
    ScalarField out(u_t.height, u_t.width);
    for (std::size_t k = 0; k < out.values.size(); ++k)
        out.values[k] = u_next.values[k] - pred.values[k];
    return out;
}

double residual_sq_norm(const FrameSequence& frames,
                        const std::vector<VectorField>& v_seq, const PDEParams& p) {
    frames.validate();
    const int t_count = frames.length() - 1;
    if (static_cast<int>(v_seq.size()) != t_count)
        throw DimensionError("residual_sq_norm: need one velocity field per transition");
    double total = 0.0;
    for (int t = 0; t < t_count; ++t) {
        for (int c = 0; c < frames.channel_count(); ++c) {
            const ScalarField r = residual(frames.frames[t].channels[c],
                                           frames.frames[t + 1].channels[c], v_seq[t], p);
            double s = 0.0;
            for (double x : r.values) s += x * x;
            total += s / static_cast<double>(r.values.size());
        }
    }
    return total;
}

ScenarioKind scenario_kind_from_string(const std::string& s) {
    if (s == "uniform-flow") return ScenarioKind::UniformFlow;
    if (s == "rigid-rotation") return ScenarioKind::RigidRotation;
    if (s == "shear") return ScenarioKind::Shear;
    if (s == "diffusion-only") return ScenarioKind::DiffusionOnly;
    if (s == "source-sink") return ScenarioKind::SourceSink;
    throw std::invalid_argument("unknown scenario kind: " + s);
}

std::string to_string(ScenarioKind k) {
    switch (k) {
        case ScenarioKind::UniformFlow: return "uniform-flow";
        case ScenarioKind::RigidRotation: return "rigid-rotation";
        case ScenarioKind::Shear: return "shear";
        case ScenarioKind::DiffusionOnly: return "diffusion-only";
        case ScenarioKind::SourceSink: return "source-sink";
    }
    return "?";
}

namespace {

void add_blob(ScalarField& f, double ci, double cj, double sigma, double amp) {
    for (int i = 0; i < f.height; ++i)
        for (int j = 0; j < f.width; ++j) {
            const double di = i - ci, dj = j - cj;
            f.at(i, j) += amp * std::exp(-(di * di + dj * dj) / (2.0 * sigma * sigma));
        }
}

ScalarField random_blob_field(int h, int w, RngStream& rng) {
    ScalarField f(h, w, 0.0);
    const int n_blobs = rng.uniform_int(1, 4);
    for (int b = 0; b < n_blobs; ++b) {
        const double ci = rng.uniform(0.25 * h, 0.75 * h);
        const double cj = rng.uniform(0.25 * w, 0.75 * w);
        const double sigma = rng.uniform(2.0, std::min(h, w) / 8.0);
        const double amp = rng.uniform(0.5, 1.0);
        add_blob(f, ci, cj, sigma, amp);
    }
    // low-frequency background so intensity gradients carry information
    // everywhere, not only near the blobs (transport is unobservable where
    // the field is flat)
    constexpr double two_pi = 6.283185307179586;
    for (int m = 0; m < 2; ++m) {
        const double fy = rng.uniform(0.5, 1.5) * two_pi / h;
        const double fx = rng.uniform(0.5, 1.5) * two_pi / w;
        const double py = rng.uniform(0.0, two_pi);
        const double px = rng.uniform(0.0, two_pi);
        const double amp = rng.uniform(0.1, 0.2);
        for (int i = 0; i < h; ++i)
            for (int j = 0; j < w; ++j)
                f.at(i, j) += amp * (1.0 + std::sin(fy * i + py) * std::sin(fx * j + px));
    }
    return f;
}

} // namespace

SyntheticScenario make_scenario(ScenarioKind kind, int height, int width,
                                int n_frames, std::uint64_t seed,
                                const ScenarioOptions& opts) {
    if (height < 16 || width < 16)
        throw DimensionError("make_scenario: grid must be at least 16x16");
    if (n_frames < 9)
        throw DimensionError("make_scenario: need at least 9 frames");

    RngStream rng = RngStream::named(seed, "scenario/" + to_string(kind));

    SyntheticScenario sc;
    sc.kind = kind;
    sc.seed = seed;

    ScalarField u0 = random_blob_field(height, width, rng);
    VectorField v(height, width);
    double d_value = 0.0;
    ScalarField r_field(height, width, 0.0);

    switch (kind) {
        case ScenarioKind::UniformFlow: {
            double a, b;
            if (opts.pin_velocity) {
                a = opts.pinned_vx;
                b = opts.pinned_vy;
            } else {
                const double mag = rng.uniform(0.15, 0.45);
                const double theta = rng.uniform(0.0, 6.283185307179586);
                a = mag * std::cos(theta);
                b = mag * std::sin(theta);
            }
            v = VectorField(height, width, a, b);
            break;
        }
        case ScenarioKind::RigidRotation: {
            const double cy = 0.5 * (height - 1), cx = 0.5 * (width - 1);
            const double max_rad = std::hypot(cy, cx);
            const double omega = rng.uniform(0.3, 1.0) * 0.5 / max_rad;
            for (int i = 0; i < height; ++i)
                for (int j = 0; j < width; ++j) {
                    v.x(i, j) = std::clamp(-omega * (i - cy), -0.5, 0.5);
                    v.y(i, j) = std::clamp(omega * (j - cx), -0.5, 0.5);
                }
            break;
        }
        case ScenarioKind::Shear: {
            const double a = rng.uniform(0.3, 1.0);
            for (int i = 0; i < height; ++i)
                for (int j = 0; j < width; ++j)
                    v.x(i, j) = a * (static_cast<double>(i) / height - 0.5);
            break;
        }
        case ScenarioKind::DiffusionOnly: {
            d_value = rng.uniform(0.05, 0.2);
            break;
        }
        case ScenarioKind::SourceSink: {
            d_value = rng.uniform(0.01, 0.05);
            const double amp = rng.uniform(0.02, 0.06);
            add_blob(r_field, rng.uniform(0.25 * height, 0.75 * height),
                     rng.uniform(0.25 * width, 0.75 * width),
                     rng.uniform(2.0, height / 8.0), amp);
            add_blob(r_field, rng.uniform(0.25 * height, 0.75 * height),
                     rng.uniform(0.25 * width, 0.75 * width),
                     rng.uniform(2.0, height / 8.0), -amp);
            break;
        }
    }

    sc.true_params.D = ScalarField(height, width, d_value);
    sc.true_params.R = r_field;

    if (cfl_check(v.max_abs_component(), d_value, sc.true_params.spec) == Stability::Unstable)
        throw std::invalid_argument("make_scenario: CFL-violating parameters");

    sc.true_v.assign(static_cast<std::size_t>(n_frames - 1), v);
    sc.frames = rollout(u0, sc.true_v, sc.true_params, n_frames - 1);
    return sc;
}

} // namespace piano
