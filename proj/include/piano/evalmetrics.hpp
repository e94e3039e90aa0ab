/// @file evalmetrics.hpp
/// @brief CSI and MSE evaluation by lead time, alpha sensitivity sweep, and
/// tag-grouped reporting.
///
/// Conventions:
///   - an event is value >= threshold;
///   - CSI is pooled: contingency counts are summed across all samples per
///     lead time, then one ratio is taken (not a mean of per-image ratios);
///   - CSI with tp+fp+fn = 0 is missing, excluded from aggregates.

#pragma once

#include "piano/gridcore.hpp"
#include "piano/training.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace piano {

struct ContingencyCounts {
    long long tp = 0, fp = 0, fn = 0, tn = 0;

    ContingencyCounts& operator+=(const ContingencyCounts& o) {
        tp += o.tp;
        fp += o.fp;
        fn += o.fn;
        tn += o.tn;
        return *this;
    }
    long long total() const { return tp + fp + fn + tn; }
};

ContingencyCounts contingency(const ScalarField& pred, const ScalarField& truth,
                              double threshold);

/// TP/(TP+FP+FN); nullopt when the denominator is zero.
std::optional<double> csi(const ContingencyCounts& c);

/// One row per threshold, one column per lead time 1..s.
struct LeadTimeTable {
    std::string metric;
    std::vector<double> thresholds; ///< empty for MSE
    std::vector<std::vector<std::optional<double>>> values; ///< [row][lead-1]
    std::vector<std::vector<long long>> counts;             ///< evaluated cells
    int s = 0;
};

/// Aligned prediction/truth sample sets: sample k is an s-frame sequence.
using SampleSet = std::vector<FrameSequence>;

LeadTimeTable csi_by_leadtime(const SampleSet& preds, const SampleSet& truths,
                              const std::vector<double>& thresholds = {4.0, 8.0}, int s = 8);

LeadTimeTable mse_by_leadtime(const SampleSet& preds, const SampleSet& truths);

/// csi_by_leadtime per tag plus the max-minus-min spread per (threshold, lead).
struct GroupReport {
    std::map<std::string, LeadTimeTable> per_group;
    std::vector<std::vector<double>> spread; ///< [threshold][lead-1]
};

GroupReport group_report(const SampleSet& preds, const SampleSet& truths,
                         const std::vector<std::string>& tags,
                         const std::vector<double>& thresholds = {4.0, 8.0}, int s = 8);

/// One fine-tuned model per alpha (shared pretrained checkpoints and seeds),
/// evaluated as MSE by lead time on held-out windows.
struct SweepRow {
    double alpha = 0.0;
    bool diverged = false;
    std::vector<double> mse; ///< per lead time 1..s
};

struct SweepReport {
    std::vector<SweepRow> rows;
};

/// Evaluate a trained T-NO checkpoint on held-out windows: per-lead-time MSE.
std::vector<double> eval_tno_mse(const std::map<std::string, Tensor4>& ckpt,
                                 const TNOConfig& cfg, const WindowSet& eval_data);

SweepReport alpha_sweep(const std::vector<double>& alphas,
                        const std::map<std::string, Tensor4>& tno_ckpt,
                        const std::map<std::string, Tensor4>& vno_ckpt,
                        const WindowSet& train_data, const WindowSet& eval_data,
                        const TNOConfig& tno_cfg, const VNOConfig& vno_cfg,
                        const TrainConfig& train);

} // namespace piano
