#include "piano/operators.hpp"

#include "piano/rng.hpp"

#include <cmath>

namespace piano {

void TNOConfig::validate() const {
    if (s < 1) throw GraphError("TNOConfig: s must be >= 1");
    if (channels < 1) throw GraphError("TNOConfig: channels must be >= 1");
    if (hidden.empty()) throw GraphError("TNOConfig: hidden widths must be non-empty");
}

void VNOConfig::validate() const {
    if (s < 1) throw GraphError("VNOConfig: s must be >= 1");
    if (hidden.empty()) throw GraphError("VNOConfig: hidden widths must be non-empty");
    if (!(v_max > 0.0)) throw GraphError("VNOConfig: v_max must be > 0");
    if (cfl_check(v_max, 0.0, StencilSpec{}) == Stability::Unstable)
        throw GraphError("VNOConfig: v_max violates the CFL bound");
}

ParamMaps init_param_maps(int height, int width) {
    return ParamMaps{ScalarField(height, width, 1.0), ScalarField(height, width, 0.0)};
}

StencilKernels append_stencil_kernels(DiffGraph& g) {
    StencilKernels st;
    Tensor4 kx(1, 1, 3, 3), ky(1, 1, 3, 3), kl(1, 1, 3, 3);
    kx.at(0, 0, 1, 0) = -0.5;
    kx.at(0, 0, 1, 2) = 0.5;
    ky.at(0, 0, 0, 1) = -0.5;
    ky.at(0, 0, 2, 1) = 0.5;
    kl.at(0, 0, 0, 1) = 1.0;
    kl.at(0, 0, 2, 1) = 1.0;
    kl.at(0, 0, 1, 0) = 1.0;
    kl.at(0, 0, 1, 2) = 1.0;
    kl.at(0, 0, 1, 1) = -4.0;
    st.grad_x = g.constant(std::move(kx));
    st.grad_y = g.constant(std::move(ky));
    st.laplace = g.constant(std::move(kl));
    return st;
}

ParamMapNodes append_param_maps(DiffGraph& g, int height, int width,
                                const std::string& prefix) {
    ParamMapNodes pm;
    pm.d_raw = g.param(prefix + ".d_raw", Tensor4(1, 1, height, width, 1.0));
    pm.r = g.param(prefix + ".r", Tensor4(1, 1, height, width, 0.0));
    pm.D = g.mul(pm.d_raw, pm.d_raw); // keeps D >= 0 under any update
    pm.R = pm.r;
    return pm;
}

namespace {

/// 3x3 conv layer with He-normal init (or zeros) and a zero bias.
int conv_layer(DiffGraph& g, const std::string& name, int x, int in_c, int out_c,
               RngStream& rng, bool zero_init = false) {
    Tensor4 wgt(out_c, in_c, 3, 3);
    if (!zero_init) {
        const double stdev = std::sqrt(2.0 / (in_c * 9.0));
        for (double& v : wgt.v) v = stdev * rng.gaussian();
    }
    const int w = g.param(name + ".w", std::move(wgt));
    const int b = g.param(name + ".b", Tensor4(1, out_c, 1, 1, 0.0));
    return g.conv2d(x, w, b);
}

int norm_layer(DiffGraph& g, int x, const NormStats& stats) {
    const int c = g.node(x).value.c;
    if (static_cast<int>(stats.mean.size()) != c)
        throw GraphError("NormStats channel count mismatch: expected " + std::to_string(c) +
                         ", got " + std::to_string(stats.mean.size()));
    std::vector<double> scale(c), shift(c);
    for (int i = 0; i < c; ++i) {
        const double sd = stats.stdev[i] > 1e-12 ? stats.stdev[i] : 1.0;
        scale[i] = 1.0 / sd;
        shift[i] = -stats.mean[i] / sd;
    }
    return g.channel_affine(x, std::move(scale), std::move(shift));
}

} // namespace

int append_tno(DiffGraph& g, const TNOConfig& cfg, int frames, int dem,
               const NormStats& stats, std::uint64_t init_seed, const std::string& prefix) {
    cfg.validate();
    const Tensor4& fv = g.node(frames).value;
    const Tensor4& dv = g.node(dem).value;
    if (fv.c != cfg.s * cfg.channels)
        throw GraphError("append_tno: frames must have s*C channels, got " + fv.shape_str());
    if (dv.h != fv.h || dv.w != fv.w || dv.c != 1)
        throw GraphError("append_tno: DEM shape mismatch, got " + dv.shape_str() +
                         " for frames " + fv.shape_str());
    if (fv.h % 4 != 0 || fv.w % 4 != 0)
        throw GraphError("append_tno: H and W must be divisible by 4");

    RngStream rng = RngStream::named(init_seed, "init/" + prefix);
    const int w1 = cfg.hidden[0];
    const int w2 = cfg.hidden.size() > 1 ? cfg.hidden[1] : cfg.hidden[0];
    const int w3 = cfg.hidden.back();

    const int x = norm_layer(g, g.concat({frames, dem}), stats);
    const int e1 = g.leaky_relu(conv_layer(g, prefix + ".enc1", x, cfg.conv_in_channels(), w1, rng));
    const int p1 = g.avgpool2(e1);
    const int e2 = g.leaky_relu(conv_layer(g, prefix + ".enc2", p1, w1, w2, rng));
    const int p2 = g.avgpool2(e2);
    const int bt = g.leaky_relu(conv_layer(g, prefix + ".bottleneck", p2, w2, w2, rng));
    const int u2 = g.concat({g.upsample2(bt), e2});
    const int d2 = g.leaky_relu(conv_layer(g, prefix + ".dec2", u2, w2 + w2, w3, rng));
    const int u1 = g.concat({g.upsample2(d2), e1});
    const int d1 = g.leaky_relu(conv_layer(g, prefix + ".dec1", u1, w3 + w1, w3, rng));
    const int head = conv_layer(g, prefix + ".head", d1, w3, cfg.s * cfg.channels, rng,
                                /*zero_init=*/true);

    // persistence anchor: zero head => exact repetition of the last frame
    const int last = g.slice_channels(frames, (cfg.s - 1) * cfg.channels, cfg.channels);
    std::vector<int> tiles(static_cast<std::size_t>(cfg.s), last);
    return g.add(head, g.concat(tiles));
}

int append_vno(DiffGraph& g, const VNOConfig& cfg, int frames, const NormStats& stats,
               std::uint64_t init_seed, const std::string& prefix) {
    cfg.validate();
    const Tensor4& fv = g.node(frames).value;
    if (fv.c != cfg.s * cfg.channels)
        throw GraphError("append_vno: frames must have s*C channels, got " + fv.shape_str());
    if (fv.h % 2 != 0 || fv.w % 2 != 0)
        throw GraphError("append_vno: H and W must be even");

    RngStream rng = RngStream::named(init_seed, "init/" + prefix);
    const int w1 = cfg.hidden[0];
    const int w2 = cfg.hidden.back();

    const int x = norm_layer(g, frames, stats);
    const int e1 = g.leaky_relu(conv_layer(g, prefix + ".enc1", x, cfg.s * cfg.channels, w1, rng));
    const int p1 = g.avgpool2(e1);
    const int e2 = g.leaky_relu(conv_layer(g, prefix + ".enc2", p1, w1, w2, rng));
    const int u1 = g.concat({g.upsample2(e2), e1});
    const int d1 = g.leaky_relu(conv_layer(g, prefix + ".dec1", u1, w2 + w1, w1, rng));
    const int raw = conv_layer(g, prefix + ".head", d1, w1, 2 * cfg.s, rng);
    return g.scale(g.tanh_op(raw), cfg.v_max);
}

int append_translator(DiffGraph& g, const TranslatorConfig& cfg, int sat,
                      const NormStats& stats, std::uint64_t init_seed,
                      const std::string& prefix) {
    RngStream rng = RngStream::named(init_seed, "init/" + prefix);
    const int x = norm_layer(g, sat, stats);
    const int h1 = g.leaky_relu(conv_layer(g, prefix + ".c1", x, cfg.channels, cfg.hidden, rng));
    const int h2 = g.leaky_relu(conv_layer(g, prefix + ".c2", h1, cfg.hidden, cfg.hidden, rng));
    const int out = conv_layer(g, prefix + ".c3", h2, cfg.hidden, 1, rng);
    return g.leaky_relu(out, 0.0); // rectified rain rate
}

int append_transition_residual(DiffGraph& g, const StencilKernels& st, int u, int u_next,
                               int vx, int vy, ParamMapNodes pm) {
    const int lap = g.conv2d(u, st.laplace);
    const int gx = g.conv2d(u, st.grad_x);
    const int gy = g.conv2d(u, st.grad_y);
    const int divv = g.add(g.conv2d(vx, st.grad_x), g.conv2d(vy, st.grad_y));
    const int adv = g.add(g.mul(vx, gx), g.mul(vy, gy));
    const int pred = g.add(g.sub(g.add(u, g.mul(pm.D, lap)), g.add(adv, g.mul(u, divv))), pm.R);
    return g.sub(u_next, pred);
}

int append_pde_loss(DiffGraph& g, const StencilKernels& st, ParamMapNodes pm, int seq,
                    int frame_count, int channels, int vel, int vel_field_offset) {
    // copy: adding nodes below may reallocate the node storage
    const int vel_channels = g.node(vel).value.c;
    int loss = -1;
    for (int t = 0; t + 1 < frame_count; ++t) {
        const int field = t + vel_field_offset;
        if (2 * field + 1 >= vel_channels)
            throw GraphError("append_pde_loss: velocity field index out of range");
        const int fvx = g.slice_channels(vel, 2 * field, 1);
        const int fvy = g.slice_channels(vel, 2 * field + 1, 1);
        for (int c = 0; c < channels; ++c) {
            const int u = g.slice_channels(seq, t * channels + c, 1);
            const int un = g.slice_channels(seq, (t + 1) * channels + c, 1);
            const int res = append_transition_residual(g, st, u, un, fvx, fvy, pm);
            const int term = g.mean_square(res);
            loss = loss < 0 ? term : g.add(loss, term);
        }
    }
    if (loss < 0) throw GraphError("append_pde_loss: need at least two frames");
    return loss;
}

Tensor4 frames_to_tensor(const FrameSequence& seq, int t0, int count) {
    seq.validate();
    if (t0 < 0 || t0 + count > seq.length())
        throw DimensionError("frames_to_tensor: window out of range");
    const int c = seq.channel_count(), h = seq.height(), w = seq.width();
    Tensor4 out(1, count * c, h, w);
    for (int t = 0; t < count; ++t)
        for (int ic = 0; ic < c; ++ic) {
            const ScalarField& f = seq.frames[t0 + t].channels[ic];
            std::copy(f.values.begin(), f.values.end(), &out.at(0, t * c + ic, 0, 0));
        }
    return out;
}

Tensor4 field_to_tensor(const ScalarField& f) {
    Tensor4 out(1, 1, f.height, f.width);
    out.v = f.values;
    return out;
}

ScalarField tensor_to_field(const Tensor4& t, int batch, int channel) {
    ScalarField f(t.h, t.w);
    std::copy(&t.at(batch, channel, 0, 0),
              &t.at(batch, channel, 0, 0) + static_cast<std::size_t>(t.h) * t.w,
              f.values.begin());
    return f;
}

FrameSequence tensor_to_frames(const Tensor4& t, int channels,
                               const std::vector<std::string>& labels) {
    if (t.n != 1 || t.c % channels != 0)
        throw DimensionError("tensor_to_frames: channel count not a multiple of C");
    FrameSequence seq;
    seq.channel_labels = labels;
    const int count = t.c / channels;
    for (int k = 0; k < count; ++k) {
        Frame fr;
        for (int c = 0; c < channels; ++c) fr.channels.push_back(tensor_to_field(t, 0, k * channels + c));
        seq.frames.push_back(std::move(fr));
        seq.timestamps.push_back(k);
    }
    return seq;
}

NormStats norm_stats_from_checkpoint(const std::map<std::string, Tensor4>& ckpt,
                                     const std::string& prefix) {
    auto im = ckpt.find(prefix + ".norm.mean");
    auto is = ckpt.find(prefix + ".norm.stdev");
    if (im == ckpt.end() || is == ckpt.end())
        throw GraphError("checkpoint missing normalization stats for '" + prefix + "'");
    return NormStats{im->second.v, is->second.v};
}

void norm_stats_to_checkpoint(std::map<std::string, Tensor4>& ckpt,
                              const std::string& prefix, const NormStats& stats) {
    Tensor4 m(1, static_cast<int>(stats.mean.size()), 1, 1);
    m.v = stats.mean;
    Tensor4 s(1, static_cast<int>(stats.stdev.size()), 1, 1);
    s.v = stats.stdev;
    ckpt[prefix + ".norm.mean"] = std::move(m);
    ckpt[prefix + ".norm.stdev"] = std::move(s);
}

FrameSequence tno_predict(const FrameSequence& history, const ScalarField& dem,
                          const TNOConfig& cfg,
                          const std::map<std::string, Tensor4>& checkpoint) {
    if (history.length() != cfg.s)
        throw DimensionError("tno_predict: history must have exactly s frames");
    if (dem.height != history.height() || dem.width != history.width())
        throw DimensionError("tno_predict: DEM dimension mismatch");

    DiffGraph g;
    const int in = g.input("frames", 1, cfg.s * cfg.channels, history.height(), history.width());
    const int dm = g.input("dem", 1, 1, dem.height, dem.width);
    const int out = append_tno(g, cfg, in, dm, norm_stats_from_checkpoint(checkpoint, "tno"), 0);
    g.import_params(checkpoint);
    g.set_input("frames", frames_to_tensor(history, 0, cfg.s));
    g.set_input("dem", field_to_tensor(dem));
    g.forward();
    return tensor_to_frames(g.value(out), cfg.channels, history.channel_labels);
}

std::vector<VectorField> vno_extract(const FrameSequence& frames, const VNOConfig& cfg,
                                     const std::map<std::string, Tensor4>& checkpoint) {
    if (frames.length() != cfg.s)
        throw DimensionError("vno_extract: need exactly s frames");

    DiffGraph g;
    const int in = g.input("frames", 1, cfg.s * cfg.channels, frames.height(), frames.width());
    const int out = append_vno(g, cfg, in, norm_stats_from_checkpoint(checkpoint, "vno"), 0);
    g.import_params(checkpoint);
    g.set_input("frames", frames_to_tensor(frames, 0, cfg.s));
    g.forward();

    const Tensor4& vt = g.value(out);
    std::vector<VectorField> fields;
    for (int k = 0; k < cfg.s; ++k) {
        VectorField vf(vt.h, vt.w);
        std::copy(&vt.at(0, 2 * k, 0, 0),
                  &vt.at(0, 2 * k, 0, 0) + static_cast<std::size_t>(vt.h) * vt.w,
                  vf.vx.begin());
        std::copy(&vt.at(0, 2 * k + 1, 0, 0),
                  &vt.at(0, 2 * k + 1, 0, 0) + static_cast<std::size_t>(vt.h) * vt.w,
                  vf.vy.begin());
        fields.push_back(std::move(vf));
    }
    return fields;
}

ScalarField head_translate(const Frame& sat, const TranslatorConfig& cfg,
                           const std::map<std::string, Tensor4>& checkpoint) {
    auto marker = checkpoint.find("translator.trained");
    if (marker == checkpoint.end() || marker->second.v.empty() || marker->second.v[0] == 0.0)
        throw GraphError("head_translate: translator checkpoint is untrained");
    if (sat.channels.empty()) throw DimensionError("head_translate: empty frame");
    const int h = sat.channels[0].height, w = sat.channels[0].width;
    if (static_cast<int>(sat.channels.size()) != cfg.channels)
        throw DimensionError("head_translate: channel count mismatch");

    DiffGraph g;
    const int in = g.input("sat", 1, cfg.channels, h, w);
    const int out = append_translator(g, cfg, in,
                                      norm_stats_from_checkpoint(checkpoint, "translator"), 0);
    g.import_params(checkpoint);
    Tensor4 t(1, cfg.channels, h, w);
    for (int c = 0; c < cfg.channels; ++c)
        std::copy(sat.channels[c].values.begin(), sat.channels[c].values.end(),
                  &t.at(0, c, 0, 0));
    g.set_input("sat", t);
    g.forward();
    return tensor_to_field(g.value(out), 0, 0);
}

} // namespace piano
