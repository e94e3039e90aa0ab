/// @file piano.cpp
/// @brief Command-line entry point: gen, train, eval, sweep, translate-train,
/// nowcast. Exit codes: 0 success, 2 config error, 3 runtime divergence or
/// failed self-check, 4 I/O error.

#include "piano/config.hpp"
#include "piano/evalmetrics.hpp"
#include "piano/io.hpp"
#include "piano/operators.hpp"
#include "piano/pdesim.hpp"
#include "piano/rng.hpp"
#include "piano/training.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include <CLI11.hpp>

namespace fs = std::filesystem;
using namespace piano;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitDivergence = 3;
constexpr int kExitIo = 4;

struct OutDirs {
    fs::path root, data, checkpoints, reports;
};

OutDirs prepare_dirs(const RunConfig& cfg, const fs::path& out) {
    OutDirs d{out, out / cfg.paths.data, out / cfg.paths.checkpoints, out / cfg.paths.reports};
    fs::create_directories(d.data);
    fs::create_directories(d.checkpoints);
    fs::create_directories(d.reports);
    return d;
}

void write_resolved_config(const RunConfig& cfg, const fs::path& out, const std::string& cmd) {
    std::ofstream os(out / (cmd + "_config.json"));
    if (!os) throw IoError("cannot write resolved config");
    os << resolved_config_json(cfg);
}

std::vector<ScenarioKind> kind_cycle(const std::string& kind) {
    if (kind == "mixed")
        return {ScenarioKind::UniformFlow, ScenarioKind::RigidRotation, ScenarioKind::Shear,
                ScenarioKind::DiffusionOnly, ScenarioKind::SourceSink};
    return {scenario_kind_from_string(kind)};
}

std::string index_name(const std::string& prefix, int i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s_%03d", prefix.c_str(), i);
    return buf;
}

/// Truth sidecar: one frame per transition with channels vx, vy, D, R.
FrameSequence truth_sidecar(const SyntheticScenario& sc) {
    FrameSequence out;
    out.channel_labels = {"vx", "vy", "D", "R"};
    for (std::size_t t = 0; t < sc.true_v.size(); ++t) {
        Frame fr;
        ScalarField vx(sc.frames.height(), sc.frames.width());
        ScalarField vy(sc.frames.height(), sc.frames.width());
        vx.values = sc.true_v[t].vx;
        vy.values = sc.true_v[t].vy;
        fr.channels = {vx, vy, sc.true_params.D, sc.true_params.R};
        out.frames.push_back(std::move(fr));
        out.timestamps.push_back(static_cast<std::int64_t>(t));
    }
    return out;
}

SyntheticScenario scenario_from_files(const fs::path& frames_path, const fs::path& truth_path) {
    SyntheticScenario sc;
    sc.frames = read_gfs1(frames_path);
    FrameSequence truth = read_gfs1(truth_path);
    for (const Frame& fr : truth.frames) {
        VectorField v(fr.channels[0].height, fr.channels[0].width);
        v.vx = fr.channels[0].values;
        v.vy = fr.channels[1].values;
        sc.true_v.push_back(std::move(v));
    }
    sc.true_params.D = truth.frames.at(0).channels[2];
    sc.true_params.R = truth.frames.at(0).channels[3];
    return sc;
}

/// Synthetic satellite->radar coupling: r = max(0, 10 * (u0 - 0.5)).
ScalarField couple_radar(const ScalarField& u0) {
    ScalarField r(u0.height, u0.width);
    for (std::size_t k = 0; k < u0.values.size(); ++k)
        r.values[k] = std::max(0.0, 10.0 * (u0.values[k] - 0.5));
    return r;
}

FrameSequence couple_radar_seq(const FrameSequence& sat) {
    FrameSequence out;
    out.channel_labels = {"rain"};
    out.timestamps = sat.timestamps;
    for (const Frame& fr : sat.frames) out.frames.push_back(Frame{{couple_radar(fr.channels[0])}});
    return out;
}

struct LoadedData {
    std::vector<SyntheticScenario> scenarios;
    std::vector<std::string> tags; ///< scenario kind per scenario (from filename metadata)
};

LoadedData load_scenarios(const fs::path& data_dir, const std::string& prefix, int count) {
    LoadedData out;
    for (int i = 0; i < count; ++i) {
        const fs::path f = data_dir / (index_name(prefix, i) + ".gfs1");
        const fs::path t = data_dir / (index_name(prefix, i) + ".truth.gfs1");
        if (!fs::exists(f)) throw IoError("missing scenario file: " + f.string());
        if (!fs::exists(t)) throw IoError("missing truth sidecar: " + t.string());
        out.scenarios.push_back(scenario_from_files(f, t));
        // tag file carries the kind for group reports
        const fs::path tag = data_dir / (index_name(prefix, i) + ".tag");
        std::ifstream is(tag);
        std::string k;
        if (is >> k)
            out.tags.push_back(k);
        else
            out.tags.push_back("untagged");
    }
    return out;
}

ScalarField load_dem(const fs::path& data_dir) {
    const fs::path p = data_dir / "dem.gfs1";
    if (!fs::exists(p)) throw IoError("missing DEM file: " + p.string());
    return read_gfs1(p).frames.at(0).channels.at(0);
}

std::vector<std::vector<std::string>> metrics_rows(const std::vector<MetricsRow>& metrics) {
    std::vector<std::vector<std::string>> rows;
    for (const MetricsRow& m : metrics)
        rows.push_back({std::to_string(m.step), format_double(m.l_data), format_double(m.l_pde),
                        format_double(m.l_total)});
    return rows;
}

void write_metrics_csv(const fs::path& path, const std::vector<MetricsRow>& metrics) {
    write_csv(path, {"step", "L_data", "L_PDE", "L_total"}, metrics_rows(metrics));
}

std::string alpha_tag(double a) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", a);
    return buf;
}

// ---------------------------------------------------------------------------

int cmd_gen(const RunConfig& cfg, const fs::path& out) {
    const OutDirs dirs = prepare_dirs(cfg, out);
    write_resolved_config(cfg, out, "gen");
    const std::vector<ScenarioKind> kinds = kind_cycle(cfg.scenario.kind);

    bool self_check_ok = true;
    auto emit = [&](const std::string& prefix, int i, const std::string& stream) {
        const ScenarioKind kind = kinds[static_cast<std::size_t>(i) % kinds.size()];
        const std::uint64_t sc_seed =
            RngStream::named(cfg.seed, stream + "/" + std::to_string(i)).next_u64();
        const SyntheticScenario sc = make_scenario(kind, cfg.scenario.height, cfg.scenario.width,
                                                   cfg.scenario.n_frames, sc_seed);
        const std::string base = index_name(prefix, i);
        write_gfs1(dirs.data / (base + ".gfs1"), sc.frames);
        write_gfs1(dirs.data / (base + ".truth.gfs1"), truth_sidecar(sc));
        write_gfs1(dirs.data / ("radar_" + base + ".gfs1"), couple_radar_seq(sc.frames));
        std::ofstream(dirs.data / (base + ".tag")) << to_string(kind) << "\n";

        // self-check: re-read and verify the residual-zero identity
        const SyntheticScenario back = scenario_from_files(dirs.data / (base + ".gfs1"),
                                                           dirs.data / (base + ".truth.gfs1"));
        const double rn = residual_sq_norm(back.frames, back.true_v, back.true_params);
        const bool ok = rn < 1e-12;
        self_check_ok = self_check_ok && ok;
        std::cout << base << ": kind=" << to_string(kind) << " residual_sq_norm=" << rn
                  << (ok ? " [ok]" : " [FAILED]") << "\n";
    };

    for (int i = 0; i < cfg.scenario.count; ++i) emit("scenario", i, "gen/train");
    for (int i = 0; i < cfg.scenario.eval_count; ++i) emit("eval", i, "gen/eval");

    FrameSequence dem_seq;
    dem_seq.channel_labels = {"dem"};
    dem_seq.frames.push_back(Frame{{make_dem(cfg.scenario.height, cfg.scenario.width, cfg.seed)}});
    dem_seq.timestamps.push_back(0);
    write_gfs1(dirs.data / "dem.gfs1", dem_seq);

    return self_check_ok ? 0 : kExitDivergence;
}

int cmd_train(const RunConfig& cfg, const fs::path& out, const std::string& stage) {
    const OutDirs dirs = prepare_dirs(cfg, out);
    write_resolved_config(cfg, out, "train_" + stage);

    const LoadedData data = load_scenarios(dirs.data, "scenario", cfg.scenario.count);
    const ScalarField dem = load_dem(dirs.data);
    const WindowSet windows = build_windows(data.scenarios, cfg.tno.s, dem);

    TrainResult result;
    if (stage == "tno") {
        result = pretrain_tno(windows, cfg.tno, cfg.train);
        write_checkpoint(dirs.checkpoints / "tno.ntc1", result.checkpoint);
        write_metrics_csv(dirs.reports / "metrics_tno.csv", result.metrics);
    } else if (stage == "vno") {
        result = pretrain_vno(windows, cfg.vno, cfg.train);
        write_checkpoint(dirs.checkpoints / "vno.ntc1", result.checkpoint);
        write_metrics_csv(dirs.reports / "metrics_vno.csv", result.metrics);
    } else if (stage == "finetune") {
        const fs::path tno_path = dirs.checkpoints / "tno.ntc1";
        const fs::path vno_path = dirs.checkpoints / "vno.ntc1";
        if (!fs::exists(tno_path))
            throw IoError("finetune requires the pretrained T-NO checkpoint: " + tno_path.string());
        if (!fs::exists(vno_path))
            throw IoError("finetune requires the pretrained V-NO checkpoint: " + vno_path.string());
        result = finetune(read_checkpoint(tno_path), read_checkpoint(vno_path), windows, cfg.tno,
                          cfg.vno, cfg.train);
        write_checkpoint(dirs.checkpoints / "finetune.ntc1", result.checkpoint);
        write_metrics_csv(dirs.reports / "metrics_finetune.csv", result.metrics);
    } else {
        throw ConfigError("unknown training stage: " + stage);
    }

    if (result.diverged) {
        std::cerr << "training diverged at step " << result.diverged_at
                  << "; last good checkpoint written\n";
        return kExitDivergence;
    }
    std::cout << "stage " << stage << ": " << result.metrics.size() << " steps, final L_total="
              << (result.metrics.empty() ? 0.0 : result.metrics.back().l_total) << "\n";
    return 0;
}

SampleSet predict_samples(const std::map<std::string, Tensor4>& ckpt, const TNOConfig& cfg,
                          const WindowSet& windows) {
    DiffGraph g;
    const int in = g.input("frames", 1, cfg.s * cfg.channels, windows.height, windows.width);
    const int dm = g.input("dem", 1, 1, windows.height, windows.width);
    const int pred = append_tno(g, cfg, in, dm, norm_stats_from_checkpoint(ckpt, "tno"), 0);
    g.import_params(ckpt);
    g.set_input("dem", windows.dem);
    SampleSet out;
    for (const Tensor4& w : windows.tno_inputs) {
        g.set_input("frames", w);
        g.forward();
        out.push_back(tensor_to_frames(g.value(pred), cfg.channels));
    }
    return out;
}

SampleSet persistence_samples(const WindowSet& windows, int s, int channels) {
    SampleSet out;
    for (const Tensor4& w : windows.tno_inputs) {
        FrameSequence seq;
        Frame last;
        for (int c = 0; c < channels; ++c)
            last.channels.push_back(tensor_to_field(w, 0, (s - 1) * channels + c));
        for (int t = 0; t < s; ++t) {
            seq.frames.push_back(last);
            seq.timestamps.push_back(t);
        }
        out.push_back(std::move(seq));
    }
    return out;
}

SampleSet truth_samples(const WindowSet& windows, int s, int channels) {
    SampleSet out;
    for (const Tensor4& w : windows.tno_targets) out.push_back(tensor_to_frames(w, channels));
    return out;
}

int cmd_eval(const RunConfig& cfg, const fs::path& out, bool persistence, bool dump_diff) {
    const OutDirs dirs = prepare_dirs(cfg, out);
    write_resolved_config(cfg, out, "eval");

    const LoadedData data = load_scenarios(dirs.data, "eval", cfg.scenario.eval_count);
    const ScalarField dem = load_dem(dirs.data);
    const WindowSet windows = build_windows(data.scenarios, cfg.tno.s, dem);

    SampleSet preds;
    if (persistence) {
        preds = persistence_samples(windows, cfg.tno.s, cfg.tno.channels);
    } else {
        fs::path ckpt_path = dirs.checkpoints / "finetune.ntc1";
        if (!fs::exists(ckpt_path)) ckpt_path = dirs.checkpoints / "tno.ntc1";
        if (!fs::exists(ckpt_path))
            throw IoError("eval requires a trained checkpoint under " +
                          dirs.checkpoints.string());
        preds = predict_samples(read_checkpoint(ckpt_path), cfg.tno, windows);
    }
    const SampleSet truths = truth_samples(windows, cfg.tno.s, cfg.tno.channels);

    const LeadTimeTable mse = mse_by_leadtime(preds, truths);
    const LeadTimeTable csi_t = csi_by_leadtime(preds, truths, cfg.eval.thresholds, cfg.eval.s);

    std::vector<std::string> header = {"lead", "mse"};
    for (double thr : cfg.eval.thresholds) header.push_back("csi_" + alpha_tag(thr));
    std::vector<std::vector<std::string>> rows;
    for (int lead = 0; lead < cfg.eval.s; ++lead) {
        std::vector<std::string> row = {std::to_string(lead + 1),
                                        format_double(*mse.values[0][lead])};
        for (std::size_t ti = 0; ti < cfg.eval.thresholds.size(); ++ti)
            row.push_back(csi_t.values[ti][lead] ? format_double(*csi_t.values[ti][lead]) : "");
        rows.push_back(std::move(row));
    }
    write_csv(dirs.reports / "eval.csv", header, rows);

    // group report by scenario kind when more than one kind is present
    std::vector<std::string> window_tags;
    for (int si : windows.scenario_of_window) window_tags.push_back(data.tags[si]);
    if (std::set<std::string>(window_tags.begin(), window_tags.end()).size() > 1) {
        const GroupReport gr =
            group_report(preds, truths, window_tags, cfg.eval.thresholds, cfg.eval.s);
        std::vector<std::string> gheader = {"threshold", "lead"};
        for (const auto& [tag, t] : gr.per_group) gheader.push_back(tag);
        gheader.push_back("spread");
        std::vector<std::vector<std::string>> grows;
        for (std::size_t ti = 0; ti < cfg.eval.thresholds.size(); ++ti)
            for (int lead = 0; lead < cfg.eval.s; ++lead) {
                std::vector<std::string> row = {alpha_tag(cfg.eval.thresholds[ti]),
                                                std::to_string(lead + 1)};
                for (const auto& [tag, t] : gr.per_group)
                    row.push_back(t.values[ti][lead] ? format_double(*t.values[ti][lead]) : "");
                row.push_back(format_double(gr.spread[ti][lead]));
                grows.push_back(std::move(row));
            }
        write_csv(dirs.reports / "group_csi.csv", gheader, grows);
    }

    if (dump_diff && !preds.empty()) {
        for (int lead = 0; lead < cfg.eval.s; ++lead) {
            ScalarField diff(windows.height, windows.width);
            const auto& pv = preds[0].frames[lead].channels[0].values;
            const auto& tv = truths[0].frames[lead].channels[0].values;
            for (std::size_t k = 0; k < diff.values.size(); ++k) diff.values[k] = pv[k] - tv[k];
            write_pgm(dirs.reports / ("diff_lead" + std::to_string(lead + 1) + ".pgm"), diff,
                      -0.5, 0.5);
        }
    }

    std::cout << "eval: " << preds.size() << " windows, 1-step MSE=" << *mse.values[0][0] << "\n";
    return 0;
}

int cmd_sweep(const RunConfig& cfg, const fs::path& out) {
    const OutDirs dirs = prepare_dirs(cfg, out);
    write_resolved_config(cfg, out, "sweep");

    const fs::path tno_path = dirs.checkpoints / "tno.ntc1";
    const fs::path vno_path = dirs.checkpoints / "vno.ntc1";
    if (!fs::exists(tno_path) || !fs::exists(vno_path))
        throw IoError("sweep requires pretrained tno.ntc1 and vno.ntc1 under " +
                      dirs.checkpoints.string());
    const auto tno_ckpt = read_checkpoint(tno_path);
    const auto vno_ckpt = read_checkpoint(vno_path);

    const LoadedData train_data = load_scenarios(dirs.data, "scenario", cfg.scenario.count);
    const LoadedData eval_data = load_scenarios(dirs.data, "eval", cfg.scenario.eval_count);
    const ScalarField dem = load_dem(dirs.data);
    const WindowSet train_windows = build_windows(train_data.scenarios, cfg.tno.s, dem);
    const WindowSet eval_windows = build_windows(eval_data.scenarios, cfg.tno.s, dem);

    std::vector<std::vector<std::string>> rows;
    for (double alpha : cfg.sweep_alphas) {
        const fs::path ckpt_path = dirs.checkpoints / ("finetune_a" + alpha_tag(alpha) + ".ntc1");
        std::map<std::string, Tensor4> ckpt;
        bool diverged = false;
        if (fs::exists(ckpt_path)) {
            ckpt = read_checkpoint(ckpt_path); // resume: keep the existing run
            std::cout << "alpha=" << alpha << ": reusing " << ckpt_path.filename().string() << "\n";
        } else {
            TrainConfig tc = cfg.train;
            tc.alpha = alpha;
            TrainResult res;
            try {
                res = finetune(tno_ckpt, vno_ckpt, train_windows, cfg.tno, cfg.vno, tc);
            } catch (const std::exception& e) {
                std::cerr << "alpha=" << alpha << ": failed (" << e.what() << ")\n";
                diverged = true;
            }
            if (!diverged) {
                diverged = res.diverged;
                ckpt = res.checkpoint;
                write_checkpoint(ckpt_path, ckpt);
                write_metrics_csv(dirs.reports / ("metrics_finetune_a" + alpha_tag(alpha) + ".csv"),
                                  res.metrics);
            }
        }
        std::vector<std::string> row = {alpha_tag(alpha)};
        if (!diverged && !ckpt.empty()) {
            const std::vector<double> mse = eval_tno_mse(ckpt, cfg.tno, eval_windows);
            for (double m : mse) row.push_back(format_double(m));
        } else {
            row.push_back("diverged");
        }
        rows.push_back(std::move(row));
    }

    std::vector<std::string> header = {"alpha"};
    for (int lead = 1; lead <= cfg.tno.s; ++lead) header.push_back("mse_" + std::to_string(lead));
    write_csv(dirs.reports / "sweep_mse.csv", header, rows);
    std::cout << "sweep: " << rows.size() << " alphas evaluated\n";
    return 0;
}

int cmd_translate_train(const RunConfig& cfg, const fs::path& out) {
    const OutDirs dirs = prepare_dirs(cfg, out);
    write_resolved_config(cfg, out, "translate_train");

    std::vector<Tensor4> sats, radars;
    for (int i = 0; i < cfg.scenario.count; ++i) {
        const fs::path sat_path = dirs.data / (index_name("scenario", i) + ".gfs1");
        const fs::path radar_path = dirs.data / ("radar_" + index_name("scenario", i) + ".gfs1");
        if (!fs::exists(sat_path)) throw IoError("missing satellite file: " + sat_path.string());
        if (!fs::exists(radar_path))
            throw IoError("missing radar pair for " + sat_path.filename().string() + ": " +
                          radar_path.string());
        const FrameSequence sat = read_gfs1(sat_path);
        const FrameSequence radar = read_gfs1(radar_path);
        if (sat.length() != radar.length())
            throw IoError("unpaired satellite/radar lengths for " + sat_path.filename().string());
        for (int t = 0; t < sat.length(); ++t) {
            sats.push_back(frames_to_tensor(sat, t, 1));
            radars.push_back(frames_to_tensor(radar, t, 1));
        }
    }

    const TrainResult res = train_translator(sats, radars, cfg.translator, cfg.train);
    write_checkpoint(dirs.checkpoints / "translator.ntc1", res.checkpoint);
    write_metrics_csv(dirs.reports / "metrics_translator.csv", res.metrics);
    if (res.diverged) {
        std::cerr << "translator training diverged at step " << res.diverged_at << "\n";
        return kExitDivergence;
    }
    std::cout << "translator: " << res.metrics.size() << " steps, final MSE="
              << (res.metrics.empty() ? 0.0 : res.metrics.back().l_total) << "\n";
    return 0;
}

int cmd_nowcast(const RunConfig& cfg, const fs::path& out) {
    const OutDirs dirs = prepare_dirs(cfg, out);
    write_resolved_config(cfg, out, "nowcast");

    const fs::path tr_path = dirs.checkpoints / "translator.ntc1";
    if (!fs::exists(tr_path))
        throw IoError("nowcast requires the translator checkpoint: " + tr_path.string());
    const auto tr_ckpt = read_checkpoint(tr_path);
    fs::path ckpt_path = dirs.checkpoints / "finetune.ntc1";
    if (!fs::exists(ckpt_path)) ckpt_path = dirs.checkpoints / "tno.ntc1";
    if (!fs::exists(ckpt_path))
        throw IoError("nowcast requires a trained T-NO checkpoint under " +
                      dirs.checkpoints.string());
    const auto tno_ckpt = read_checkpoint(ckpt_path);

    const LoadedData data = load_scenarios(dirs.data, "eval", cfg.scenario.eval_count);
    std::vector<FrameSequence> radar_truth;
    for (int i = 0; i < cfg.scenario.eval_count; ++i) {
        const fs::path radar_path = dirs.data / ("radar_" + index_name("eval", i) + ".gfs1");
        if (!fs::exists(radar_path))
            throw IoError("missing radar pair for eval scenario " + std::to_string(i) + ": " +
                          radar_path.string());
        radar_truth.push_back(read_gfs1(radar_path));
    }
    const ScalarField dem = load_dem(dirs.data);
    const WindowSet windows = build_windows(data.scenarios, cfg.tno.s, dem);

    const SampleSet sat_preds = predict_samples(tno_ckpt, cfg.tno, windows);
    const SampleSet sat_persist = persistence_samples(windows, cfg.tno.s, cfg.tno.channels);

    auto translate_set = [&](const SampleSet& sats) {
        SampleSet rains;
        for (const FrameSequence& seq : sats) {
            FrameSequence r;
            r.channel_labels = {"rain"};
            for (int t = 0; t < seq.length(); ++t) {
                r.frames.push_back(
                    Frame{{head_translate(seq.frames[t], cfg.translator, tr_ckpt)}});
                r.timestamps.push_back(t);
            }
            rains.push_back(std::move(r));
        }
        return rains;
    };
    const SampleSet rain_preds = translate_set(sat_preds);
    const SampleSet rain_persist = translate_set(sat_persist);

    SampleSet rain_truth;
    for (std::size_t k = 0; k < windows.tno_inputs.size(); ++k) {
        const FrameSequence& radar = radar_truth[windows.scenario_of_window[k]];
        FrameSequence r;
        r.channel_labels = {"rain"};
        const int t0 = windows.t0_of_window[k] + cfg.tno.s; // first predicted frame
        for (int t = 0; t < cfg.tno.s; ++t) {
            r.frames.push_back(radar.frames[t0 + t]);
            r.timestamps.push_back(t);
        }
        rain_truth.push_back(std::move(r));
    }

    const LeadTimeTable csi_model =
        csi_by_leadtime(rain_preds, rain_truth, cfg.eval.thresholds, cfg.eval.s);
    const LeadTimeTable csi_pers =
        csi_by_leadtime(rain_persist, rain_truth, cfg.eval.thresholds, cfg.eval.s);

    std::vector<std::string> header = {"threshold", "lead", "csi_model", "csi_persistence"};
    std::vector<std::vector<std::string>> rows;
    for (std::size_t ti = 0; ti < cfg.eval.thresholds.size(); ++ti)
        for (int lead = 0; lead < cfg.eval.s; ++lead)
            rows.push_back(
                {alpha_tag(cfg.eval.thresholds[ti]), std::to_string(lead + 1),
                 csi_model.values[ti][lead] ? format_double(*csi_model.values[ti][lead]) : "",
                 csi_pers.values[ti][lead] ? format_double(*csi_pers.values[ti][lead]) : ""});
    write_csv(dirs.reports / "nowcast_csi.csv", header, rows);

    if (!rain_preds.empty()) write_gfs1(dirs.reports / "nowcast_000.gfs1", rain_preds[0]);

    std::cout << "nowcast: " << rain_preds.size() << " windows";
    if (csi_model.values[0][0] && csi_pers.values[0][0])
        std::cout << ", CSI@" << cfg.eval.thresholds[0] << " 1-step model="
                  << *csi_model.values[0][0] << " persistence=" << *csi_pers.values[0][0];
    std::cout << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"PIANO: physics-informed dual neural operator nowcasting pipeline"};
    app.require_subcommand(1);

    std::string config_path, out_dir = ".", stage = "tno";
    bool persistence = false, dump_diff = false;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "run configuration JSON")->required();
        cmd->add_option("--out", out_dir, "output directory");
    };

    CLI::App* gen = app.add_subcommand("gen", "generate synthetic scenario files");
    add_common(gen);
    CLI::App* train = app.add_subcommand("train", "run a training stage");
    add_common(train);
    train->add_option("--stage", stage, "tno | vno | finetune")->required();
    CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on held-out data");
    add_common(eval_cmd);
    eval_cmd->add_flag("--persistence", persistence, "evaluate the persistence baseline");
    eval_cmd->add_flag("--dump-diff", dump_diff, "write PGM difference maps");
    CLI::App* sweep = app.add_subcommand("sweep", "alpha sensitivity sweep");
    add_common(sweep);
    CLI::App* tt = app.add_subcommand("translate-train", "train the satellite->radar head");
    add_common(tt);
    CLI::App* nowcast = app.add_subcommand("nowcast", "end-to-end rain-rate prediction");
    add_common(nowcast);

    CLI11_PARSE(app, argc, argv);

    try {
        const RunConfig cfg = load_config(config_path);
        const fs::path out(out_dir);
        if (gen->parsed()) return cmd_gen(cfg, out);
        if (train->parsed()) return cmd_train(cfg, out, stage);
        if (eval_cmd->parsed()) return cmd_eval(cfg, out, persistence, dump_diff);
        if (sweep->parsed()) return cmd_sweep(cfg, out);
        if (tt->parsed()) return cmd_translate_train(cfg, out);
        if (nowcast->parsed()) return cmd_nowcast(cfg, out);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const IoError& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return kExitIo;
    } catch (const InstabilityError& e) {
        std::cerr << "instability: " << e.what() << "\n";
        return kExitDivergence;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDivergence;
    }
    return 0;
}
