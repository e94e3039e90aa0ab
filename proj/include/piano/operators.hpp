/// @file operators.hpp
/// @brief The two neural operators and their supporting graph builders.
///
/// T-NO: data-driven time stepping. Takes s frames (channel-stacked) plus the
/// DEM and predicts the next s frames through a small 3-level encoder-decoder
/// with skip concats. The prediction head is zero-initialized and added to a
/// tiling of the last input frame, so the untrained network is exactly the
/// persistence forecast.
///
/// V-NO: velocity extraction. Takes s frames and emits s velocity fields
/// (2s channels, layout vx0,vy0,vx1,vy1,...), bounded by v_max through a
/// tanh output stage. Field k serves the transition from frame k-1 to k;
/// field 0 is reserved for the seam transition (last observation -> first
/// prediction) and is only constrained when seam pairing is enabled.
///
/// D and R are global trainable per-pixel maps, D through a squaring
/// reparameterization so it stays non-negative under any optimizer step.

#pragma once

#include "piano/autodiff.hpp"
#include "piano/gridcore.hpp"
#include "piano/pdesim.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace piano {

struct TNOConfig {
    int s = 8;                            ///< window length, frames
    int channels = 1;                     ///< satellite channels per frame
    std::vector<int> hidden = {32, 64, 32};

    int conv_in_channels() const { return s * channels + 1; } // + DEM
    void validate() const;
};

struct VNOConfig {
    int s = 8;
    int channels = 1;
    std::vector<int> hidden = {16, 32};
    double v_max = 0.5; ///< cells per frame; must be CFL-stable

    void validate() const;
};

struct TranslatorConfig {
    int channels = 1;
    int hidden = 16;
};

/// Per-channel normalization statistics, computed on the training split.
struct NormStats {
    std::vector<double> mean;
    std::vector<double> stdev;

    static NormStats identity(int channels) {
        return {std::vector<double>(channels, 0.0), std::vector<double>(channels, 1.0)};
    }
};

struct ParamMaps {
    ScalarField D;
    ScalarField R;
};

/// D = 1, R = 0 everywhere.
ParamMaps init_param_maps(int height, int width);

// --- graph builders (append to an existing graph, return node ids) ---

/// Frozen central-difference kernels shared by the differentiable residual.
struct StencilKernels {
    int grad_x = -1, grad_y = -1, laplace = -1; // constant (1,1,3,3) nodes
};
StencilKernels append_stencil_kernels(DiffGraph& g);

/// Parameter-map nodes: d_raw/r are the trainable leaves, D/R the usable maps.
struct ParamMapNodes {
    int d_raw = -1, r = -1; // params
    int D = -1, R = -1;     // derived value nodes (1,1,H,W)
};
ParamMapNodes append_param_maps(DiffGraph& g, int height, int width,
                                const std::string& prefix = "pmap");

/// frames: (B, s*C, H, W), dem: (B or 1, 1, H, W). Returns (B, s*C, H, W).
int append_tno(DiffGraph& g, const TNOConfig& cfg, int frames, int dem,
               const NormStats& stats, std::uint64_t init_seed,
               const std::string& prefix = "tno");

/// frames: (B, s*C, H, W). Returns (B, 2*s, H, W) bounded velocities.
int append_vno(DiffGraph& g, const VNOConfig& cfg, int frames, const NormStats& stats,
               std::uint64_t init_seed, const std::string& prefix = "vno");

/// sat: (B, C, H, W). Returns (B, 1, H, W) non-negative rain rate.
int append_translator(DiffGraph& g, const TranslatorConfig& cfg, int sat,
                      const NormStats& stats, std::uint64_t init_seed,
                      const std::string& prefix = "translator");

/// Per-cell residual of one transition: u_next - (u + D*lap(u) - v.grad(u)
/// - u*div(v) + R). All nodes single-channel (B,1,H,W).
int append_transition_residual(DiffGraph& g, const StencilKernels& st, int u, int u_next,
                               int vx, int vy, ParamMapNodes pm);

/// Residual loss over the K-frame sequence held in `seq` (B, K*C, H, W):
/// sum over transitions and channels of the mean-square residual. Velocity
/// field used for transition t is field (t + vel_field_offset) of `vel`.
int append_pde_loss(DiffGraph& g, const StencilKernels& st, ParamMapNodes pm, int seq,
                    int frame_count, int channels, int vel, int vel_field_offset);

// --- tensor bridging ---

/// Channel-stack frames [t0, t0+count) into (1, count*C, H, W).
Tensor4 frames_to_tensor(const FrameSequence& seq, int t0, int count);
Tensor4 field_to_tensor(const ScalarField& f);
ScalarField tensor_to_field(const Tensor4& t, int batch, int channel);
/// Unstack (1, count*C, H, W) into a frame sequence of `count` frames.
FrameSequence tensor_to_frames(const Tensor4& t, int channels,
                               const std::vector<std::string>& labels = {});

// --- inference wrappers over checkpoints ---

/// Predict the next s frames from an s-frame history; checkpoint must carry
/// the "<prefix>." parameters plus "<prefix>.norm.mean"/".norm.stdev".
FrameSequence tno_predict(const FrameSequence& history, const ScalarField& dem,
                          const TNOConfig& cfg,
                          const std::map<std::string, Tensor4>& checkpoint);

/// Extract s bounded velocity fields from s consecutive frames.
std::vector<VectorField> vno_extract(const FrameSequence& frames, const VNOConfig& cfg,
                                     const std::map<std::string, Tensor4>& checkpoint);

/// Satellite frame (multi-channel) -> non-negative rain rate. Throws
/// GraphError if the checkpoint lacks the trained marker.
ScalarField head_translate(const Frame& sat, const TranslatorConfig& cfg,
                           const std::map<std::string, Tensor4>& checkpoint);

/// Read NormStats previously stored in a checkpoint under `<prefix>.norm.*`.
NormStats norm_stats_from_checkpoint(const std::map<std::string, Tensor4>& ckpt,
                                     const std::string& prefix);
/// Store NormStats into a checkpoint map.
void norm_stats_to_checkpoint(std::map<std::string, Tensor4>& ckpt,
                              const std::string& prefix, const NormStats& stats);

} // namespace piano
