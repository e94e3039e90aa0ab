#include "piano/evalmetrics.hpp"

#include <cmath>

namespace piano {

ContingencyCounts contingency(const ScalarField& pred, const ScalarField& truth,
                              double threshold) {
    if (pred.height != truth.height || pred.width != truth.width)
        throw DimensionError("contingency: dimension mismatch");
    if (!(threshold > 0.0)) throw std::invalid_argument("contingency: threshold must be > 0");
    ContingencyCounts c;
    for (std::size_t k = 0; k < pred.values.size(); ++k) {
        const bool p = pred.values[k] >= threshold;
        const bool t = truth.values[k] >= threshold;
        if (p && t)
            ++c.tp;
        else if (p && !t)
            ++c.fp;
        else if (!p && t)
            ++c.fn;
        else
            ++c.tn;
    }
    return c;
}

std::optional<double> csi(const ContingencyCounts& c) {
    const long long denom = c.tp + c.fp + c.fn;
    if (denom == 0) return std::nullopt;
    return static_cast<double>(c.tp) / static_cast<double>(denom);
}

namespace {

void check_aligned(const SampleSet& preds, const SampleSet& truths, int s) {
    if (preds.empty()) throw std::invalid_argument("empty sample set");
    if (preds.size() != truths.size())
        throw DimensionError("prediction/truth sample count mismatch");
    for (std::size_t k = 0; k < preds.size(); ++k)
        if (preds[k].length() < s || truths[k].length() < s)
            throw DimensionError("sample shorter than requested lead-time range");
}

} // namespace

LeadTimeTable csi_by_leadtime(const SampleSet& preds, const SampleSet& truths,
                              const std::vector<double>& thresholds, int s) {
    check_aligned(preds, truths, s);
    LeadTimeTable table;
    table.metric = "CSI";
    table.thresholds = thresholds;
    table.s = s;
    for (double thr : thresholds) {
        std::vector<std::optional<double>> row;
        std::vector<long long> cnt;
        for (int lead = 0; lead < s; ++lead) {
            ContingencyCounts pooled;
            for (std::size_t k = 0; k < preds.size(); ++k)
                pooled += contingency(preds[k].frames[lead].channels[0],
                                      truths[k].frames[lead].channels[0], thr);
            row.push_back(csi(pooled));
            cnt.push_back(pooled.total());
        }
        table.values.push_back(std::move(row));
        table.counts.push_back(std::move(cnt));
    }
    return table;
}

LeadTimeTable mse_by_leadtime(const SampleSet& preds, const SampleSet& truths) {
    if (preds.empty()) throw std::invalid_argument("empty sample set");
    const int s = preds[0].length();
    check_aligned(preds, truths, s);
    LeadTimeTable table;
    table.metric = "MSE";
    table.s = s;
    std::vector<std::optional<double>> row;
    std::vector<long long> cnt;
    for (int lead = 0; lead < s; ++lead) {
        double total = 0.0;
        long long cells = 0;
        for (std::size_t k = 0; k < preds.size(); ++k) {
            const Frame& pf = preds[k].frames[lead];
            const Frame& tf = truths[k].frames[lead];
            for (std::size_t c = 0; c < pf.channels.size(); ++c) {
                const auto& pv = pf.channels[c].values;
                const auto& tv = tf.channels[c].values;
                for (std::size_t i = 0; i < pv.size(); ++i) {
                    const double e = pv[i] - tv[i];
                    total += e * e;
                }
                cells += static_cast<long long>(pv.size());
            }
        }
        row.push_back(total / static_cast<double>(cells));
        cnt.push_back(cells);
    }
    table.values.push_back(std::move(row));
    table.counts.push_back(std::move(cnt));
    return table;
}

GroupReport group_report(const SampleSet& preds, const SampleSet& truths,
                         const std::vector<std::string>& tags,
                         const std::vector<double>& thresholds, int s) {
    if (tags.size() != preds.size())
        throw DimensionError("group_report: one tag per sample required");
    check_aligned(preds, truths, s);

    std::map<std::string, std::pair<SampleSet, SampleSet>> buckets;
    for (std::size_t k = 0; k < preds.size(); ++k) {
        buckets[tags[k]].first.push_back(preds[k]);
        buckets[tags[k]].second.push_back(truths[k]);
    }

    GroupReport report;
    for (const auto& [tag, samples] : buckets)
        report.per_group[tag] = csi_by_leadtime(samples.first, samples.second, thresholds, s);

    report.spread.assign(thresholds.size(), std::vector<double>(static_cast<std::size_t>(s), 0.0));
    for (std::size_t ti = 0; ti < thresholds.size(); ++ti)
        for (int lead = 0; lead < s; ++lead) {
            double lo = 1e300, hi = -1e300;
            bool any = false;
            for (const auto& [tag, table] : report.per_group) {
                const auto& v = table.values[ti][lead];
                if (!v) continue;
                lo = std::min(lo, *v);
                hi = std::max(hi, *v);
                any = true;
            }
            report.spread[ti][lead] = any ? hi - lo : 0.0;
        }
    return report;
}

std::vector<double> eval_tno_mse(const std::map<std::string, Tensor4>& ckpt,
                                 const TNOConfig& cfg, const WindowSet& eval_data) {
    if (eval_data.tno_inputs.empty())
        throw std::invalid_argument("eval_tno_mse: no evaluation windows");

    DiffGraph g;
    const int in = g.input("frames", 1, cfg.s * cfg.channels, eval_data.height, eval_data.width);
    const int dm = g.input("dem", 1, 1, eval_data.height, eval_data.width);
    const int pred = append_tno(g, cfg, in, dm, norm_stats_from_checkpoint(ckpt, "tno"), 0);
    g.import_params(ckpt);
    g.set_input("dem", eval_data.dem);

    std::vector<double> mse(static_cast<std::size_t>(cfg.s), 0.0);
    const std::size_t per_frame =
        static_cast<std::size_t>(cfg.channels) * eval_data.height * eval_data.width;
    for (std::size_t k = 0; k < eval_data.tno_inputs.size(); ++k) {
        g.set_input("frames", eval_data.tno_inputs[k]);
        g.forward();
        const Tensor4& pv = g.value(pred);
        const Tensor4& tv = eval_data.tno_targets[k];
        for (int lead = 0; lead < cfg.s; ++lead) {
            double s = 0.0;
            for (std::size_t i = 0; i < per_frame; ++i) {
                const double e = pv.v[lead * per_frame + i] - tv.v[lead * per_frame + i];
                s += e * e;
            }
            mse[lead] += s / static_cast<double>(per_frame);
        }
    }
    for (double& m : mse) m /= static_cast<double>(eval_data.tno_inputs.size());
    return mse;
}

SweepReport alpha_sweep(const std::vector<double>& alphas,
                        const std::map<std::string, Tensor4>& tno_ckpt,
                        const std::map<std::string, Tensor4>& vno_ckpt,
                        const WindowSet& train_data, const WindowSet& eval_data,
                        const TNOConfig& tno_cfg, const VNOConfig& vno_cfg,
                        const TrainConfig& train) {
    if (alphas.size() < 2 && alphas.size() != 1)
        throw std::invalid_argument("alpha_sweep: need at least one alpha");
    SweepReport report;
    for (double alpha : alphas) {
        TrainConfig cfg = train;
        cfg.alpha = alpha;
        SweepRow row;
        row.alpha = alpha;
        try {
            TrainResult res = finetune(tno_ckpt, vno_ckpt, train_data, tno_cfg, vno_cfg, cfg);
            row.diverged = res.diverged;
            row.mse = eval_tno_mse(res.checkpoint, tno_cfg, eval_data);
        } catch (const std::exception&) {
            row.diverged = true; // a single run's failure is recorded, not fatal
        }
        report.rows.push_back(std::move(row));
    }
    return report;
}

} // namespace piano
