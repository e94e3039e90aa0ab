/// @file training.hpp
/// @brief Loss assembly and the two-stage training protocol: T-NO pretrained
/// on the reconstruction loss, V-NO (plus the D/R maps) on the PDE residual
/// loss, then a joint fine-tune of L_data + alpha * L_PDE where V-NO consumes
/// the T-NO predictions.

#pragma once

#include "piano/operators.hpp"
#include "piano/pdesim.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace piano {

struct TrainConfig {
    double alpha = 1.0; ///< PINN weight; Table-2 style sweeps vary this
    double lr = 1e-3;
    int steps = 200;
    int batch = 2;
    std::uint64_t seed = 0;
    bool seam_pair = false; ///< also constrain (last observation, first prediction)

    void validate() const;
};

struct MetricsRow {
    int step = 0;
    double l_data = 0.0;
    double l_pde = 0.0;
    double l_total = 0.0;
};

struct TrainResult {
    std::map<std::string, Tensor4> checkpoint;
    std::vector<MetricsRow> metrics;
    bool diverged = false;
    int diverged_at = -1;
    double wall_seconds = 0.0;
};

// --- plain (non-graph) loss oracles ---

/// Sum over predicted steps of the mean-square error (mean over cells and
/// channels).
double loss_data(const FrameSequence& pred, const FrameSequence& truth);

/// Delegates to pdesim::residual_sq_norm over consecutive predicted pairs.
double loss_pde(const FrameSequence& pred_frames, const std::vector<VectorField>& v_hat,
                const ParamMaps& params);

/// loss_data + alpha * loss_pde.
double loss_total(const FrameSequence& pred, const FrameSequence& truth,
                  const std::vector<VectorField>& v_hat, const ParamMaps& params,
                  double alpha);

// --- dataset plumbing ---

/// Channel-stacked training windows cut from synthetic scenarios.
struct WindowSet {
    int s = 8, channels = 1, height = 0, width = 0;
    Tensor4 dem; ///< (1,1,H,W), shared across windows
    std::vector<Tensor4> tno_inputs;  ///< (1, s*C, H, W)
    std::vector<Tensor4> tno_targets; ///< (1, s*C, H, W), the next s frames
    std::vector<Tensor4> vno_windows; ///< (1, s*C, H, W), ground-truth runs
    std::vector<int> scenario_of_window; ///< parallel to tno_inputs
    std::vector<int> t0_of_window;       ///< window start frame, parallel to tno_inputs
    NormStats frame_stats; ///< per satellite channel (C entries)
    double dem_mean = 0.0, dem_stdev = 1.0;

    NormStats tno_stats() const; ///< expanded to s*C + 1 conv input channels
    NormStats vno_stats() const; ///< expanded to s*C channels
};

/// Deterministic synthetic DEM (smooth low-frequency surface).
ScalarField make_dem(int height, int width, std::uint64_t seed);

/// Cut every length-2s window into a T-NO sample and every length-s window
/// into a V-NO sample; compute normalization stats over the inputs.
WindowSet build_windows(const std::vector<SyntheticScenario>& scenarios, int s,
                        const ScalarField& dem);

// --- optimizer ---

/// Adaptive-moment gradient descent (beta1 0.9, beta2 0.999, eps 1e-8).
class Adam {
public:
    explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void step(DiffGraph& g);

private:
    double lr_, beta1_, beta2_, eps_;
    int t_ = 0;
    std::map<int, std::pair<std::vector<double>, std::vector<double>>> moments_;
};

// --- training stages ---

/// Supervised reconstruction training of T-NO. Checkpoint carries the tno.*
/// parameters plus normalization stats.
TrainResult pretrain_tno(const WindowSet& data, const TNOConfig& cfg,
                         const TrainConfig& train);

/// PINN-loss-only training of V-NO and the D/R maps on ground-truth windows.
TrainResult pretrain_vno(const WindowSet& data, const VNOConfig& cfg,
                         const TrainConfig& train);

/// Joint fine-tune; V-NO input is the T-NO prediction. Requires the two
/// pretrained checkpoints; rejects alpha < 0.
TrainResult finetune(const std::map<std::string, Tensor4>& tno_ckpt,
                     const std::map<std::string, Tensor4>& vno_ckpt,
                     const WindowSet& data, const TNOConfig& tno_cfg,
                     const VNOConfig& vno_cfg, const TrainConfig& train);

/// Supervised training of the satellite->radar translation head on paired
/// (satellite frame, radar frame) tensors.
TrainResult train_translator(const std::vector<Tensor4>& sat_frames,
                             const std::vector<Tensor4>& radar_frames,
                             const TranslatorConfig& cfg, const TrainConfig& train);

} // namespace piano
