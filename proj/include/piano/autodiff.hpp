/// @file autodiff.hpp
/// @brief Compact reverse-mode differentiable graph. The primitive set is the
/// closure needed by the operator networks and the PDE residual loss:
/// conv2d (odd kernel, replicate padding, stride 1), leaky-rectifier, tanh,
/// elementwise add/sub/mul (with batch broadcast), scalar scale, channel
/// concat/slice, 2x average downsample, 2x nearest upsample, constant
/// per-channel affine, and mean-square reduction to a scalar.
///
/// Graphs are static: build once, set named inputs, run forward/backward
/// repeatedly. All arithmetic is 64-bit. A graph instance is single-owner
/// during forward/backward; distinct instances may run in parallel.

#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace piano {

class GraphError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// N x C x H x W tensor of doubles, row-major, batch-major.
struct Tensor4 {
    int n = 1, c = 1, h = 1, w = 1;
    std::vector<double> v;

    Tensor4() = default;
    Tensor4(int n_, int c_, int h_, int w_, double fill = 0.0)
        : n(n_), c(c_), h(h_), w(w_),
          v(static_cast<std::size_t>(n_) * c_ * h_ * w_, fill) {}

    static Tensor4 scalar(double x) {
        Tensor4 t(1, 1, 1, 1);
        t.v[0] = x;
        return t;
    }

    std::size_t size() const { return v.size(); }

    double& at(int in, int ic, int iy, int ix) {
        return v[((static_cast<std::size_t>(in) * c + ic) * h + iy) * w + ix];
    }
    const double& at(int in, int ic, int iy, int ix) const {
        return v[((static_cast<std::size_t>(in) * c + ic) * h + iy) * w + ix];
    }

    bool same_shape(const Tensor4& o) const {
        return n == o.n && c == o.c && h == o.h && w == o.w;
    }
    std::string shape_str() const;
    bool all_finite() const;
};

enum class OpKind {
    Input,
    Param,
    Constant,
    Conv2d,
    LeakyRelu,
    Tanh,
    Add,
    Sub,
    Mul,
    Scale,
    Concat,
    SliceChannels,
    AvgPool2,
    Upsample2,
    ChannelAffine,
    MeanSquare,
};

struct Node {
    OpKind kind;
    std::vector<int> parents;
    Tensor4 value;
    Tensor4 grad;
    std::string name;             // inputs and params
    bool trainable = false;       // params only
    double scalar = 0.0;          // LeakyRelu slope / Scale factor
    int slice_from = 0, slice_count = 0;
    std::vector<double> ch_scale, ch_shift; // ChannelAffine
};

class DiffGraph {
public:
    // --- construction (shapes checked and fixed at build time) ---
    int input(const std::string& name, int n, int c, int h, int w);
    int param(const std::string& name, Tensor4 init, bool trainable = true);
    int constant(Tensor4 value);
    /// x: (N,Cin,H,W), weight: (Cout,Cin,kh,kw) with odd kh,kw,
    /// bias: (1,Cout,1,1) or -1 for none. Replicate padding, stride 1.
    int conv2d(int x, int weight, int bias = -1);
    int leaky_relu(int x, double slope = 0.1);
    int tanh_op(int x);
    int add(int a, int b);
    int sub(int a, int b);
    int mul(int a, int b);
    int scale(int x, double factor);
    int concat(const std::vector<int>& xs);
    int slice_channels(int x, int from, int count);
    int avgpool2(int x);
    int upsample2(int x);
    /// y[n,c,i,j] = ch_scale[c] * x[n,c,i,j] + ch_shift[c] (constant stats).
    int channel_affine(int x, std::vector<double> scale, std::vector<double> shift);
    /// Mean of squares over all entries; output shape (1,1,1,1).
    int mean_square(int x);

    // --- execution ---
    void set_input(const std::string& name, const Tensor4& value);
    void forward();             ///< topological order; throws GraphError on NaN
    void backward(int loss);    ///< reverse accumulation from a scalar node

    const Tensor4& value(int id) const { return nodes_[id].value; }
    const Tensor4& grad(int id) const { return nodes_[id].grad; }
    Node& node(int id) { return nodes_[id]; }
    const Node& node(int id) const { return nodes_[id]; }
    int node_count() const { return static_cast<int>(nodes_.size()); }

    std::vector<int> param_ids() const;            ///< all params
    std::vector<int> trainable_param_ids() const;
    int param_id(const std::string& name) const;

    /// Named parameter snapshot (all params, trainable or not).
    std::map<std::string, Tensor4> export_params() const;
    /// Load values by name; throws on missing name or shape mismatch.
    void import_params(const std::map<std::string, Tensor4>& params);

    /// Max relative error between analytic and central finite-difference
    /// gradients over trainable parameter coordinates (random subsample of at
    /// least min_coords when graphs are large). Runs forward/backward itself.
    double gradcheck(int loss, double eps, int min_coords = 200, std::uint64_t seed = 17);

private:
    int add_node(Node nd);
    void forward_node(int id);
    void backward_node(int id);
    bool forward_done_ = false;

    std::vector<Node> nodes_;
    std::map<std::string, int> inputs_;
    std::map<std::string, int> params_;
};

} // namespace piano
