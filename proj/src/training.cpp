#include "piano/training.hpp"

#include "piano/rng.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <numeric>

namespace piano {

void TrainConfig::validate() const {
    if (alpha < 0.0) throw std::invalid_argument("TrainConfig: alpha must be >= 0");
    if (lr < 0.0) throw std::invalid_argument("TrainConfig: lr must be >= 0");
    if (steps < 1) throw std::invalid_argument("TrainConfig: steps must be >= 1");
    if (batch < 1) throw std::invalid_argument("TrainConfig: batch must be >= 1");
}

double loss_data(const FrameSequence& pred, const FrameSequence& truth) {
    pred.validate();
    truth.validate();
    if (pred.length() != truth.length() || pred.channel_count() != truth.channel_count() ||
        pred.height() != truth.height() || pred.width() != truth.width())
        throw DimensionError("loss_data: prediction/truth mismatch");
    double total = 0.0;
    const double cells = static_cast<double>(pred.channel_count()) * pred.height() * pred.width();
    for (int t = 0; t < pred.length(); ++t) {
        double s = 0.0;
        for (int c = 0; c < pred.channel_count(); ++c) {
            const auto& pv = pred.frames[t].channels[c].values;
            const auto& tv = truth.frames[t].channels[c].values;
            for (std::size_t k = 0; k < pv.size(); ++k) {
                const double e = pv[k] - tv[k];
                s += e * e;
            }
        }
        total += s / cells;
    }
    return total;
}

double loss_pde(const FrameSequence& pred_frames, const std::vector<VectorField>& v_hat,
                const ParamMaps& params) {
    PDEParams p;
    p.D = params.D;
    p.R = params.R;
    return residual_sq_norm(pred_frames, v_hat, p);
}

double loss_total(const FrameSequence& pred, const FrameSequence& truth,
                  const std::vector<VectorField>& v_hat, const ParamMaps& params,
                  double alpha) {
    if (alpha < 0.0) throw std::invalid_argument("loss_total: alpha must be >= 0");
    return loss_data(pred, truth) + alpha * loss_pde(pred, v_hat, params);
}

NormStats WindowSet::tno_stats() const {
    NormStats out;
    for (int t = 0; t < s; ++t)
        for (int c = 0; c < channels; ++c) {
            out.mean.push_back(frame_stats.mean[c]);
            out.stdev.push_back(frame_stats.stdev[c]);
        }
    out.mean.push_back(dem_mean);
    out.stdev.push_back(dem_stdev);
    return out;
}

NormStats WindowSet::vno_stats() const {
    NormStats out;
    for (int t = 0; t < s; ++t)
        for (int c = 0; c < channels; ++c) {
            out.mean.push_back(frame_stats.mean[c]);
            out.stdev.push_back(frame_stats.stdev[c]);
        }
    return out;
}

ScalarField make_dem(int height, int width, std::uint64_t seed) {
    RngStream rng = RngStream::named(seed, "dem");
    ScalarField dem(height, width, 0.0);
    // few low-frequency modes, amplitude O(100 m)
    for (int mode = 0; mode < 4; ++mode) {
        const double ay = rng.uniform(0.5, 2.0) * 6.283185307179586 / height;
        const double ax = rng.uniform(0.5, 2.0) * 6.283185307179586 / width;
        const double phy = rng.uniform(0.0, 6.283185307179586);
        const double phx = rng.uniform(0.0, 6.283185307179586);
        const double amp = rng.uniform(20.0, 120.0);
        for (int i = 0; i < height; ++i)
            for (int j = 0; j < width; ++j)
                dem.at(i, j) += amp * std::sin(ay * i + phy) * std::cos(ax * j + phx);
    }
    return dem;
}

WindowSet build_windows(const std::vector<SyntheticScenario>& scenarios, int s,
                        const ScalarField& dem) {
    if (scenarios.empty()) throw std::invalid_argument("build_windows: no scenarios");
    WindowSet ws;
    ws.s = s;
    ws.channels = scenarios[0].frames.channel_count();
    ws.height = scenarios[0].frames.height();
    ws.width = scenarios[0].frames.width();
    ws.dem = field_to_tensor(dem);

    const int stride = std::max(1, s / 2);
    for (std::size_t si = 0; si < scenarios.size(); ++si) {
        const FrameSequence& fr = scenarios[si].frames;
        if (fr.channel_count() != ws.channels || fr.height() != ws.height ||
            fr.width() != ws.width)
            throw DimensionError("build_windows: inconsistent scenario dimensions");
        for (int t0 = 0; t0 + 2 * s <= fr.length(); t0 += stride) {
            ws.tno_inputs.push_back(frames_to_tensor(fr, t0, s));
            ws.tno_targets.push_back(frames_to_tensor(fr, t0 + s, s));
            ws.scenario_of_window.push_back(static_cast<int>(si));
            ws.t0_of_window.push_back(t0);
        }
        for (int t0 = 0; t0 + s <= fr.length(); t0 += stride)
            ws.vno_windows.push_back(frames_to_tensor(fr, t0, s));
    }

    // per-channel stats over all scenario frames
    ws.frame_stats.mean.assign(ws.channels, 0.0);
    ws.frame_stats.stdev.assign(ws.channels, 0.0);
    std::vector<double> sum(ws.channels, 0.0), sumsq(ws.channels, 0.0);
    std::size_t count = 0;
    for (const SyntheticScenario& sc : scenarios) {
        for (const Frame& f : sc.frames.frames)
            for (int c = 0; c < ws.channels; ++c)
                for (double v : f.channels[c].values) {
                    sum[c] += v;
                    sumsq[c] += v * v;
                }
        count += static_cast<std::size_t>(sc.frames.length()) * ws.height * ws.width;
    }
    for (int c = 0; c < ws.channels; ++c) {
        const double m = sum[c] / static_cast<double>(count);
        ws.frame_stats.mean[c] = m;
        const double var = sumsq[c] / static_cast<double>(count) - m * m;
        ws.frame_stats.stdev[c] = std::sqrt(std::max(var, 1e-12));
    }
    double dsum = 0.0, dsumsq = 0.0;
    for (double v : dem.values) {
        dsum += v;
        dsumsq += v * v;
    }
    ws.dem_mean = dsum / static_cast<double>(dem.size());
    ws.dem_stdev = std::sqrt(
        std::max(dsumsq / static_cast<double>(dem.size()) - ws.dem_mean * ws.dem_mean, 1e-12));
    return ws;
}

void Adam::step(DiffGraph& g) {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    for (int id : g.trainable_param_ids()) {
        Node& nd = g.node(id);
        auto& [m, v] = moments_[id];
        if (m.empty()) {
            m.assign(nd.value.size(), 0.0);
            v.assign(nd.value.size(), 0.0);
        }
        for (std::size_t k = 0; k < nd.value.size(); ++k) {
            const double gk = nd.grad.v[k];
            m[k] = beta1_ * m[k] + (1.0 - beta1_) * gk;
            v[k] = beta2_ * v[k] + (1.0 - beta2_) * gk * gk;
            nd.value.v[k] -= lr_ * (m[k] / bc1) / (std::sqrt(v[k] / bc2) + eps_);
        }
    }
}

namespace {

/// Deterministic shuffled index feed (Fisher-Yates per epoch).
class BatchSampler {
public:
    BatchSampler(int pool, std::uint64_t seed)
        : pool_(pool), rng_(RngStream::named(seed, "shuffle")) {}

    int next() {
        if (cursor_ >= order_.size()) refill();
        return order_[cursor_++];
    }

private:
    void refill() {
        order_.resize(static_cast<std::size_t>(pool_));
        std::iota(order_.begin(), order_.end(), 0);
        for (int i = pool_ - 1; i > 0; --i) {
            const int j = static_cast<int>(rng_.next_u64() % static_cast<std::uint64_t>(i + 1));
            std::swap(order_[i], order_[j]);
        }
        cursor_ = 0;
    }

    int pool_;
    RngStream rng_;
    std::vector<int> order_;
    std::size_t cursor_ = 0;
};

void fill_batch(Tensor4& dst, const std::vector<Tensor4>& pool, const std::vector<int>& idx) {
    const std::size_t per = dst.size() / dst.n;
    for (int b = 0; b < dst.n; ++b)
        std::copy(pool[idx[b]].v.begin(), pool[idx[b]].v.end(), dst.v.begin() + b * per);
}

Tensor4 tile_batch(const Tensor4& one, int batch) {
    Tensor4 out(batch, one.c, one.h, one.w);
    for (int b = 0; b < batch; ++b)
        std::copy(one.v.begin(), one.v.end(), out.v.begin() + b * one.size());
    return out;
}

struct LossProbe {
    int l_data = -1, l_pde = -1, l_total = -1;
};

/// Shared optimization loop: sample, forward, log, backward, update.
TrainResult run_loop(DiffGraph& g, const TrainConfig& train, int loss_node, LossProbe probe,
                     int pool_size,
                     const std::function<void(const std::vector<int>&)>& load_batch) {
    const auto t_start = std::chrono::steady_clock::now();
    TrainResult result;
    Adam opt(train.lr);
    BatchSampler sampler(pool_size, train.seed);
    result.checkpoint = g.export_params();

    for (int step_i = 0; step_i < train.steps; ++step_i) {
        std::vector<int> idx(static_cast<std::size_t>(train.batch));
        for (int& k : idx) k = sampler.next();
        load_batch(idx);
        try {
            g.forward();
        } catch (const GraphError&) {
            result.diverged = true;
            result.diverged_at = step_i;
            break;
        }
        MetricsRow row;
        row.step = step_i;
        row.l_total = g.value(loss_node).v[0];
        row.l_data = probe.l_data >= 0 ? g.value(probe.l_data).v[0] : 0.0;
        row.l_pde = probe.l_pde >= 0 ? g.value(probe.l_pde).v[0] : 0.0;
        if (!std::isfinite(row.l_total)) {
            result.diverged = true;
            result.diverged_at = step_i;
            break;
        }
        result.metrics.push_back(row);
        g.backward(loss_node);
        opt.step(g);
        result.checkpoint = g.export_params(); // last good
    }

    result.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return result;
}

} // namespace

TrainResult pretrain_tno(const WindowSet& data, const TNOConfig& cfg, const TrainConfig& train) {
    cfg.validate();
    train.validate();
    if (data.tno_inputs.empty())
        throw std::invalid_argument("pretrain_tno: no training windows (scenarios too short?)");

    const int B = train.batch;
    DiffGraph g;
    const int in = g.input("frames", B, cfg.s * cfg.channels, data.height, data.width);
    const int dm = g.input("dem", B, 1, data.height, data.width);
    const int target = g.input("target", B, cfg.s * cfg.channels, data.height, data.width);
    const int pred = append_tno(g, cfg, in, dm, data.tno_stats(), train.seed);
    const int ld = g.scale(g.mean_square(g.sub(pred, target)), static_cast<double>(cfg.s));

    const Tensor4 dem_batch = tile_batch(data.dem, B);
    g.set_input("dem", dem_batch);
    Tensor4 in_batch(B, cfg.s * cfg.channels, data.height, data.width);
    Tensor4 tgt_batch(B, cfg.s * cfg.channels, data.height, data.width);

    TrainResult result = run_loop(
        g, train, ld, LossProbe{ld, -1, ld}, static_cast<int>(data.tno_inputs.size()),
        [&](const std::vector<int>& idx) {
            fill_batch(in_batch, data.tno_inputs, idx);
            fill_batch(tgt_batch, data.tno_targets, idx);
            g.set_input("frames", in_batch);
            g.set_input("target", tgt_batch);
        });
    norm_stats_to_checkpoint(result.checkpoint, "tno", data.tno_stats());
    return result;
}

TrainResult pretrain_vno(const WindowSet& data, const VNOConfig& cfg, const TrainConfig& train) {
    cfg.validate();
    train.validate();
    if (data.vno_windows.empty()) throw std::invalid_argument("pretrain_vno: no windows");

    const int B = train.batch;
    DiffGraph g;
    const int in = g.input("frames", B, cfg.s * cfg.channels, data.height, data.width);
    const int vel = append_vno(g, cfg, in, data.vno_stats(), train.seed);
    const StencilKernels st = append_stencil_kernels(g);
    const ParamMapNodes pm = append_param_maps(g, data.height, data.width);
    // transition t pairs ground-truth frames t,t+1 and uses velocity field t+1
    const int lpde = append_pde_loss(g, st, pm, in, cfg.s, cfg.channels, vel, 1);

    Tensor4 in_batch(B, cfg.s * cfg.channels, data.height, data.width);
    TrainResult result = run_loop(
        g, train, lpde, LossProbe{-1, lpde, lpde}, static_cast<int>(data.vno_windows.size()),
        [&](const std::vector<int>& idx) {
            fill_batch(in_batch, data.vno_windows, idx);
            g.set_input("frames", in_batch);
        });
    norm_stats_to_checkpoint(result.checkpoint, "vno", data.vno_stats());
    return result;
}

TrainResult finetune(const std::map<std::string, Tensor4>& tno_ckpt,
                     const std::map<std::string, Tensor4>& vno_ckpt, const WindowSet& data,
                     const TNOConfig& tno_cfg, const VNOConfig& vno_cfg,
                     const TrainConfig& train) {
    tno_cfg.validate();
    vno_cfg.validate();
    train.validate();
    if (tno_cfg.s != vno_cfg.s || tno_cfg.channels != vno_cfg.channels)
        throw std::invalid_argument("finetune: incompatible operator configs");
    if (data.tno_inputs.empty()) throw std::invalid_argument("finetune: no windows");

    const int B = train.batch;
    const int sc = tno_cfg.s * tno_cfg.channels;
    DiffGraph g;
    const int in = g.input("frames", B, sc, data.height, data.width);
    const int dm = g.input("dem", B, 1, data.height, data.width);
    const int target = g.input("target", B, sc, data.height, data.width);

    const int pred = append_tno(g, tno_cfg, in, dm, norm_stats_from_checkpoint(tno_ckpt, "tno"),
                                train.seed);
    const int vel = append_vno(g, vno_cfg, pred, norm_stats_from_checkpoint(vno_ckpt, "vno"),
                               train.seed);
    const StencilKernels st = append_stencil_kernels(g);
    const ParamMapNodes pm = append_param_maps(g, data.height, data.width);

    const int ld = g.scale(g.mean_square(g.sub(pred, target)), static_cast<double>(tno_cfg.s));
    int lpde = append_pde_loss(g, st, pm, pred, tno_cfg.s, tno_cfg.channels, vel, 1);
    if (train.seam_pair) {
        // seam transition: last observed frame -> first predicted frame, field 0
        const int svx = g.slice_channels(vel, 0, 1);
        const int svy = g.slice_channels(vel, 1, 1);
        for (int c = 0; c < tno_cfg.channels; ++c) {
            const int u = g.slice_channels(in, (tno_cfg.s - 1) * tno_cfg.channels + c, 1);
            const int un = g.slice_channels(pred, c, 1);
            lpde = g.add(lpde, g.mean_square(append_transition_residual(g, st, u, un, svx, svy, pm)));
        }
    }
    const int ltotal = g.add(ld, g.scale(lpde, train.alpha));

    std::map<std::string, Tensor4> merged = tno_ckpt;
    for (const auto& [k, v] : vno_ckpt) merged[k] = v;
    g.import_params(merged);

    const Tensor4 dem_batch = tile_batch(data.dem, B);
    g.set_input("dem", dem_batch);
    Tensor4 in_batch(B, sc, data.height, data.width);
    Tensor4 tgt_batch(B, sc, data.height, data.width);

    TrainResult result = run_loop(
        g, train, ltotal, LossProbe{ld, lpde, ltotal}, static_cast<int>(data.tno_inputs.size()),
        [&](const std::vector<int>& idx) {
            fill_batch(in_batch, data.tno_inputs, idx);
            fill_batch(tgt_batch, data.tno_targets, idx);
            g.set_input("frames", in_batch);
            g.set_input("target", tgt_batch);
        });
    norm_stats_to_checkpoint(result.checkpoint, "tno", norm_stats_from_checkpoint(tno_ckpt, "tno"));
    norm_stats_to_checkpoint(result.checkpoint, "vno", norm_stats_from_checkpoint(vno_ckpt, "vno"));
    return result;
}

TrainResult train_translator(const std::vector<Tensor4>& sat_frames,
                             const std::vector<Tensor4>& radar_frames,
                             const TranslatorConfig& cfg, const TrainConfig& train) {
    train.validate();
    if (sat_frames.empty() || sat_frames.size() != radar_frames.size())
        throw std::invalid_argument("train_translator: unpaired satellite/radar frames");

    const int H = sat_frames[0].h, W = sat_frames[0].w;
    NormStats stats = NormStats::identity(cfg.channels);
    {
        std::vector<double> sum(cfg.channels, 0.0), sumsq(cfg.channels, 0.0);
        std::size_t cells = 0;
        for (const Tensor4& t : sat_frames) {
            for (int c = 0; c < cfg.channels; ++c)
                for (int i = 0; i < H * W; ++i) {
                    const double v = t.v[static_cast<std::size_t>(c) * H * W + i];
                    sum[c] += v;
                    sumsq[c] += v * v;
                }
            cells += static_cast<std::size_t>(H) * W;
        }
        for (int c = 0; c < cfg.channels; ++c) {
            stats.mean[c] = sum[c] / static_cast<double>(cells);
            stats.stdev[c] = std::sqrt(std::max(
                sumsq[c] / static_cast<double>(cells) - stats.mean[c] * stats.mean[c], 1e-12));
        }
    }

    const int B = train.batch;
    DiffGraph g;
    const int in = g.input("sat", B, cfg.channels, H, W);
    const int target = g.input("radar", B, 1, H, W);
    const int pred = append_translator(g, cfg, in, stats, train.seed);
    const int loss = g.mean_square(g.sub(pred, target));

    Tensor4 in_batch(B, cfg.channels, H, W), tgt_batch(B, 1, H, W);
    TrainResult result = run_loop(
        g, train, loss, LossProbe{loss, -1, loss}, static_cast<int>(sat_frames.size()),
        [&](const std::vector<int>& idx) {
            fill_batch(in_batch, sat_frames, idx);
            fill_batch(tgt_batch, radar_frames, idx);
            g.set_input("sat", in_batch);
            g.set_input("radar", tgt_batch);
        });
    norm_stats_to_checkpoint(result.checkpoint, "translator", stats);
    result.checkpoint["translator.trained"] = Tensor4::scalar(result.diverged ? 0.0 : 1.0);
    return result;
}

} // namespace piano
