#include "piano/gridcore.hpp"

#include <cmath>

namespace piano {

namespace {

inline int clampi(int i, int n) { return i < 0 ? 0 : (i >= n ? n - 1 : i); }

void check_spec(const StencilSpec& spec) {
    if (!(spec.spacing > 0.0)) throw DimensionError("StencilSpec: spacing must be > 0");
}

} // namespace

bool ScalarField::all_finite() const {
    for (double v : values)
        if (!std::isfinite(v)) return false;
    return true;
}

double VectorField::max_abs_component() const {
    double m = 0.0;
    for (double v : vx) m = std::max(m, std::fabs(v));
    for (double v : vy) m = std::max(m, std::fabs(v));
    return m;
}

void FrameSequence::validate() const {
    if (frames.empty()) return;
    const int c = static_cast<int>(frames[0].channels.size());
    const int h = c > 0 ? frames[0].channels[0].height : 0;
    const int w = c > 0 ? frames[0].channels[0].width : 0;
    for (const Frame& fr : frames) {
        if (static_cast<int>(fr.channels.size()) != c)
            throw DimensionError("FrameSequence: inconsistent channel count");
        for (const ScalarField& ch : fr.channels)
            if (ch.height != h || ch.width != w)
                throw DimensionError("FrameSequence: inconsistent spatial dimensions");
    }
    if (timestamps.size() != frames.size())
        throw DimensionError("FrameSequence: timestamp count mismatch");
    if (timestamps.size() >= 2) {
        const std::int64_t dt = timestamps[1] - timestamps[0];
        if (dt <= 0) throw DimensionError("FrameSequence: timestamps not strictly increasing");
        for (std::size_t k = 1; k < timestamps.size(); ++k)
            if (timestamps[k] - timestamps[k - 1] != dt)
                throw DimensionError("FrameSequence: non-uniform timestamp spacing");
    }
}

void require_stencil_input(const ScalarField& f) {
    if (f.height < 3 || f.width < 3)
        throw DimensionError("stencil input must be at least 3x3, got " +
                             std::to_string(f.height) + "x" + std::to_string(f.width));
    if (static_cast<int>(f.values.size()) != f.height * f.width)
        throw DimensionError("ScalarField: value count does not match dimensions");
}

VectorField gradient(const ScalarField& f, const StencilSpec& spec) {
    require_stencil_input(f);
    check_spec(spec);
    const int h = f.height, w = f.width;
    const double inv2h = 1.0 / (2.0 * spec.spacing);
    VectorField out(h, w);
    for (int i = 0; i < h; ++i) {
        const int im = clampi(i - 1, h), ip = clampi(i + 1, h);
        for (int j = 0; j < w; ++j) {
            const int jm = clampi(j - 1, w), jp = clampi(j + 1, w);
            out.x(i, j) = (f.at(i, jp) - f.at(i, jm)) * inv2h;
            out.y(i, j) = (f.at(ip, j) - f.at(im, j)) * inv2h;
        }
    }
    return out;
}

ScalarField divergence(const VectorField& v, const StencilSpec& spec) {
    if (v.height < 3 || v.width < 3)
        throw DimensionError("divergence: field must be at least 3x3");
    if (v.vx.size() != v.vy.size() ||
        static_cast<int>(v.vx.size()) != v.height * v.width)
        throw DimensionError("divergence: mismatched component dimensions");
    check_spec(spec);
    const int h = v.height, w = v.width;
    const double inv2h = 1.0 / (2.0 * spec.spacing);
    ScalarField out(h, w);
    for (int i = 0; i < h; ++i) {
        const int im = clampi(i - 1, h), ip = clampi(i + 1, h);
        for (int j = 0; j < w; ++j) {
            const int jm = clampi(j - 1, w), jp = clampi(j + 1, w);
            out.at(i, j) = (v.x(i, jp) - v.x(i, jm)) * inv2h +
                           (v.y(ip, j) - v.y(im, j)) * inv2h;
        }
    }
    return out;
}

ScalarField laplacian(const ScalarField& f, const StencilSpec& spec) {
    require_stencil_input(f);
    check_spec(spec);
    const int h = f.height, w = f.width;
    const double invh2 = 1.0 / (spec.spacing * spec.spacing);
    ScalarField out(h, w);
    for (int i = 0; i < h; ++i) {
        const int im = clampi(i - 1, h), ip = clampi(i + 1, h);
        for (int j = 0; j < w; ++j) {
            const int jm = clampi(j - 1, w), jp = clampi(j + 1, w);
            out.at(i, j) = (f.at(i, jm) + f.at(i, jp) + f.at(im, j) + f.at(ip, j) -
                            4.0 * f.at(i, j)) * invh2;
        }
    }
    return out;
}

} // namespace piano
