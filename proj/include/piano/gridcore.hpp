/// @file gridcore.hpp
/// @brief Grid data types and second-order finite-difference stencil
/// operators (gradient, divergence, Laplacian) shared by the PDE solver and
/// the differentiable loss path.
///
/// Conventions:
///   - Fields are row-major, H x W; i is the row (y), j is the column (x).
///   - x-derivatives act along columns, y-derivatives along rows.
///   - Boundary rule is replicate (clamp-to-edge), which realizes a
///     zero-normal-gradient boundary.
///   - Grid spacing defaults to 1 (dimensionless); velocities are in
///     cells per frame interval.

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace piano {

/// Thrown on shape/invariant violations of grid inputs.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class StencilScheme { Central2 };
enum class BoundaryRule { Replicate };

struct StencilSpec {
    StencilScheme scheme = StencilScheme::Central2;
    BoundaryRule boundary = BoundaryRule::Replicate;
    double spacing = 1.0;
};

/// H x W scalar grid (houses u, D, R, the DEM, and radar rain rate).
struct ScalarField {
    int height = 0;
    int width = 0;
    std::vector<double> values;

    ScalarField() = default;
    ScalarField(int h, int w, double fill = 0.0)
        : height(h), width(w), values(static_cast<std::size_t>(h) * w, fill) {
        if (h <= 0 || w <= 0) throw DimensionError("ScalarField: non-positive dimensions");
    }

    double& at(int i, int j) { return values[static_cast<std::size_t>(i) * width + j]; }
    double at(int i, int j) const { return values[static_cast<std::size_t>(i) * width + j]; }

    std::size_t size() const { return values.size(); }

    double sum() const {
        double s = 0.0;
        for (double v : values) s += v;
        return s;
    }

    bool all_finite() const;
};

/// H x W field of 2-component velocity vectors, cells per frame interval.
struct VectorField {
    int height = 0;
    int width = 0;
    std::vector<double> vx;
    std::vector<double> vy;

    VectorField() = default;
    VectorField(int h, int w, double fx = 0.0, double fy = 0.0)
        : height(h), width(w),
          vx(static_cast<std::size_t>(h) * w, fx),
          vy(static_cast<std::size_t>(h) * w, fy) {
        if (h <= 0 || w <= 0) throw DimensionError("VectorField: non-positive dimensions");
    }

    double& x(int i, int j) { return vx[static_cast<std::size_t>(i) * width + j]; }
    double x(int i, int j) const { return vx[static_cast<std::size_t>(i) * width + j]; }
    double& y(int i, int j) { return vy[static_cast<std::size_t>(i) * width + j]; }
    double y(int i, int j) const { return vy[static_cast<std::size_t>(i) * width + j]; }

    /// Max of |vx|, |vy| over all cells.
    double max_abs_component() const;
};

/// One multi-channel frame.
struct Frame {
    std::vector<ScalarField> channels;
};

/// T frames with uniformly spaced, strictly increasing integer timestamps.
struct FrameSequence {
    std::vector<Frame> frames;
    std::vector<std::int64_t> timestamps;
    std::vector<std::string> channel_labels;

    int length() const { return static_cast<int>(frames.size()); }
    int channel_count() const { return frames.empty() ? 0 : static_cast<int>(frames[0].channels.size()); }
    int height() const { return frames.empty() || frames[0].channels.empty() ? 0 : frames[0].channels[0].height; }
    int width() const { return frames.empty() || frames[0].channels.empty() ? 0 : frames[0].channels[0].width; }

    void validate() const;
};

/// Throws unless f is a valid stencil input (>=3x3, finite everywhere).
void require_stencil_input(const ScalarField& f);

/// Central-difference gradient; vx = df/dx, vy = df/dy, replicate boundary.
VectorField gradient(const ScalarField& f, const StencilSpec& spec);

/// dvx/dx + dvy/dy, same scheme and boundary rule.
ScalarField divergence(const VectorField& v, const StencilSpec& spec);

/// 5-point Laplacian, replicate boundary.
ScalarField laplacian(const ScalarField& f, const StencilSpec& spec);

} // namespace piano
