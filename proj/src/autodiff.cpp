#include "piano/autodiff.hpp"

#include "piano/rng.hpp"

#include <algorithm>
#include <cmath>

namespace piano {

namespace {
inline int clampi(int i, int n) { return i < 0 ? 0 : (i >= n ? n - 1 : i); }
} // namespace

std::string Tensor4::shape_str() const {
    return "(" + std::to_string(n) + "," + std::to_string(c) + "," +
           std::to_string(h) + "," + std::to_string(w) + ")";
}

bool Tensor4::all_finite() const {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

int DiffGraph::add_node(Node nd) {
    nd.grad = Tensor4(nd.value.n, nd.value.c, nd.value.h, nd.value.w, 0.0);
    nodes_.push_back(std::move(nd));
    return static_cast<int>(nodes_.size()) - 1;
}

int DiffGraph::input(const std::string& name, int n, int c, int h, int w) {
    if (inputs_.count(name)) throw GraphError("duplicate input name: " + name);
    Node nd;
    nd.kind = OpKind::Input;
    nd.name = name;
    nd.value = Tensor4(n, c, h, w, 0.0);
    int id = add_node(std::move(nd));
    inputs_[name] = id;
    return id;
}

int DiffGraph::param(const std::string& name, Tensor4 init, bool trainable) {
    if (params_.count(name)) throw GraphError("duplicate parameter name: " + name);
    Node nd;
    nd.kind = OpKind::Param;
    nd.name = name;
    nd.trainable = trainable;
    nd.value = std::move(init);
    int id = add_node(std::move(nd));
    params_[name] = id;
    return id;
}

int DiffGraph::constant(Tensor4 value) {
    Node nd;
    nd.kind = OpKind::Constant;
    nd.value = std::move(value);
    return add_node(std::move(nd));
}

int DiffGraph::conv2d(int x, int weight, int bias) {
    const Tensor4& xv = nodes_[x].value;
    const Tensor4& wv = nodes_[weight].value;
    if (wv.c != xv.c)
        throw GraphError("conv2d: kernel expects " + std::to_string(wv.c) +
                         " input channels, got " + xv.shape_str());
    if (wv.h % 2 == 0 || wv.w % 2 == 0) throw GraphError("conv2d: kernel must be odd-sized");
    Node nd;
    nd.kind = OpKind::Conv2d;
    nd.parents = {x, weight};
    if (bias >= 0) {
        const Tensor4& bv = nodes_[bias].value;
        if (bv.n != 1 || bv.c != wv.n || bv.h != 1 || bv.w != 1)
            throw GraphError("conv2d: bias must be (1," + std::to_string(wv.n) + ",1,1)");
        nd.parents.push_back(bias);
    }
    nd.value = Tensor4(xv.n, wv.n, xv.h, xv.w, 0.0);
    return add_node(std::move(nd));
}

int DiffGraph::leaky_relu(int x, double slope) {
    Node nd;
    nd.kind = OpKind::LeakyRelu;
    nd.parents = {x};
    nd.scalar = slope;
    const Tensor4& xv = nodes_[x].value;
    nd.value = Tensor4(xv.n, xv.c, xv.h, xv.w, 0.0);
    return add_node(std::move(nd));
}

int DiffGraph::tanh_op(int x) {
    Node nd;
    nd.kind = OpKind::Tanh;
    nd.parents = {x};
    const Tensor4& xv = nodes_[x].value;
    nd.value = Tensor4(xv.n, xv.c, xv.h, xv.w, 0.0);
    return add_node(std::move(nd));
}

namespace {
// binary elementwise shape rule: batch dim may broadcast from 1
void check_binary(const Tensor4& a, const Tensor4& b, const char* op) {
    if (a.c != b.c || a.h != b.h || a.w != b.w || (a.n != b.n && a.n != 1 && b.n != 1))
        throw GraphError(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " +
                         b.shape_str());
}
} // namespace

int DiffGraph::add(int a, int b) {
    const Tensor4 &av = nodes_[a].value, &bv = nodes_[b].value;
    check_binary(av, bv, "add");
    Node nd;
    nd.kind = OpKind::Add;
    nd.parents = {a, b};
    nd.value = Tensor4(std::max(av.n, bv.n), av.c, av.h, av.w, 0.0);
    return add_node(std::move(nd));
}

int DiffGraph::sub(int a, int b) {
    const Tensor4 &av = nodes_[a].value, &bv = nodes_[b].value;
    check_binary(av, bv, "sub");
    Node nd;
    nd.kind = OpKind::Sub;
    nd.parents = {a, b};
    nd.value = Tensor4(std::max(av.n, bv.n), av.c, av.h, av.w, 0.0);
    return add_node(std::move(nd));
}

int DiffGraph::mul(int a, int b) {
    const Tensor4 &av = nodes_[a].value, &bv = nodes_[b].value;
    check_binary(av, bv, "mul");
    Node nd;
    nd.kind = OpKind::Mul;
    nd.parents = {a, b};
    nd.value = Tensor4(std::max(av.n, bv.n), av.c, av.h, av.w, 0.0);
    return add_node(std::move(nd));
}

int DiffGraph::scale(int x, double factor) {
    Node nd;
    nd.kind = OpKind::Scale;
    nd.parents = {x};
    nd.scalar = factor;
    const Tensor4& xv = nodes_[x].value;
    nd.value = Tensor4(xv.n, xv.c, xv.h, xv.w, 0.0);
    return add_node(std::move(nd));
}

int DiffGraph::concat(const std::vector<int>& xs) {
    if (xs.empty()) throw GraphError("concat: no inputs");
    const Tensor4& first = nodes_[xs[0]].value;
    int total_c = 0;
    for (int id : xs) {
        const Tensor4& t = nodes_[id].value;
        if (t.n != first.n || t.h != first.h || t.w != first.w)
            throw GraphError("concat: shape mismatch " + t.shape_str() + " vs " +
                             first.shape_str());
        total_c += t.c;
    }
    Node nd;
    nd.kind = OpKind::Concat;
    nd.parents = xs;
    nd.value = Tensor4(first.n, total_c, first.h, first.w, 0.0);
    return add_node(std::move(nd));
}

int DiffGraph::slice_channels(int x, int from, int count) {
    const Tensor4& xv = nodes_[x].value;
    if (from < 0 || count <= 0 || from + count > xv.c)
        throw GraphError("slice_channels: range out of bounds");
    Node nd;
    nd.kind = OpKind::SliceChannels;
    nd.parents = {x};
    nd.slice_from = from;
    nd.slice_count = count;
    nd.value = Tensor4(xv.n, count, xv.h, xv.w, 0.0);
    return add_node(std::move(nd));
}

int DiffGraph::avgpool2(int x) {
    const Tensor4& xv = nodes_[x].value;
    if (xv.h % 2 != 0 || xv.w % 2 != 0)
        throw GraphError("avgpool2: spatial dims must be even, got " + xv.shape_str());
    Node nd;
    nd.kind = OpKind::AvgPool2;
    nd.parents = {x};
    nd.value = Tensor4(xv.n, xv.c, xv.h / 2, xv.w / 2, 0.0);
    return add_node(std::move(nd));
}

int DiffGraph::upsample2(int x) {
    const Tensor4& xv = nodes_[x].value;
    Node nd;
    nd.kind = OpKind::Upsample2;
    nd.parents = {x};
    nd.value = Tensor4(xv.n, xv.c, xv.h * 2, xv.w * 2, 0.0);
    return add_node(std::move(nd));
}

int DiffGraph::channel_affine(int x, std::vector<double> scale, std::vector<double> shift) {
    const Tensor4& xv = nodes_[x].value;
    if (static_cast<int>(scale.size()) != xv.c || static_cast<int>(shift.size()) != xv.c)
        throw GraphError("channel_affine: stats size must equal channel count");
    Node nd;
    nd.kind = OpKind::ChannelAffine;
    nd.parents = {x};
    nd.ch_scale = std::move(scale);
    nd.ch_shift = std::move(shift);
    nd.value = Tensor4(xv.n, xv.c, xv.h, xv.w, 0.0);
    return add_node(std::move(nd));
}

int DiffGraph::mean_square(int x) {
    Node nd;
    nd.kind = OpKind::MeanSquare;
    nd.parents = {x};
    nd.value = Tensor4(1, 1, 1, 1, 0.0);
    return add_node(std::move(nd));
}

void DiffGraph::set_input(const std::string& name, const Tensor4& value) {
    auto it = inputs_.find(name);
    if (it == inputs_.end()) throw GraphError("no such input: " + name);
    Node& nd = nodes_[it->second];
    if (!nd.value.same_shape(value))
        throw GraphError("input '" + name + "': expected " + nd.value.shape_str() +
                         ", got " + value.shape_str());
    nd.value = value;
}

void DiffGraph::forward_node(int id) {
    Node& nd = nodes_[id];
    Tensor4& out = nd.value;
    switch (nd.kind) {
        case OpKind::Input:
        case OpKind::Param:
        case OpKind::Constant:
            return;
        case OpKind::Conv2d: {
            const Tensor4& x = nodes_[nd.parents[0]].value;
            const Tensor4& k = nodes_[nd.parents[1]].value;
            const Tensor4* b = nd.parents.size() > 2 ? &nodes_[nd.parents[2]].value : nullptr;
            const int ph = k.h / 2, pw = k.w / 2;
            for (int in = 0; in < x.n; ++in)
                for (int co = 0; co < k.n; ++co) {
                    double* orow0 = &out.at(in, co, 0, 0);
                    const double bias = b ? b->v[co] : 0.0;
                    for (std::size_t q = 0; q < static_cast<std::size_t>(x.h) * x.w; ++q)
                        orow0[q] = bias;
                    for (int ci = 0; ci < x.c; ++ci)
                        for (int ky = 0; ky < k.h; ++ky)
                            for (int kx = 0; kx < k.w; ++kx) {
                                const double wgt = k.at(co, ci, ky, kx);
                                if (wgt == 0.0) continue;
                                const int dy = ky - ph, dx = kx - pw;
                                for (int y = 0; y < x.h; ++y) {
                                    const int iy = clampi(y + dy, x.h);
                                    const double* irow = &x.at(in, ci, iy, 0);
                                    double* orow = &out.at(in, co, y, 0);
                                    int xx = 0;
                                    // clamped left edge
                                    for (; xx < std::min(x.w, std::max(0, -dx)); ++xx)
                                        orow[xx] += wgt * irow[0];
                                    const int hi = std::min(x.w, x.w - dx);
                                    for (; xx < hi; ++xx)
                                        orow[xx] += wgt * irow[xx + dx];
                                    for (; xx < x.w; ++xx)
                                        orow[xx] += wgt * irow[x.w - 1];
                                }
                            }
                }
            return;
        }
        case OpKind::LeakyRelu: {
            const Tensor4& x = nodes_[nd.parents[0]].value;
            const double s = nd.scalar;
            for (std::size_t i = 0; i < x.size(); ++i)
                out.v[i] = x.v[i] > 0.0 ? x.v[i] : s * x.v[i];
            return;
        }
        case OpKind::Tanh: {
            const Tensor4& x = nodes_[nd.parents[0]].value;
            for (std::size_t i = 0; i < x.size(); ++i) out.v[i] = std::tanh(x.v[i]);
            return;
        }
        case OpKind::Add:
        case OpKind::Sub:
        case OpKind::Mul: {
            const Tensor4& a = nodes_[nd.parents[0]].value;
            const Tensor4& bt = nodes_[nd.parents[1]].value;
            const std::size_t per = static_cast<std::size_t>(out.c) * out.h * out.w;
            for (int in = 0; in < out.n; ++in) {
                const double* pa = &a.v[(a.n == 1 ? 0 : in) * per];
                const double* pb = &bt.v[(bt.n == 1 ? 0 : in) * per];
                double* po = &out.v[in * per];
                if (nd.kind == OpKind::Add)
                    for (std::size_t i = 0; i < per; ++i) po[i] = pa[i] + pb[i];
                else if (nd.kind == OpKind::Sub)
                    for (std::size_t i = 0; i < per; ++i) po[i] = pa[i] - pb[i];
                else
                    for (std::size_t i = 0; i < per; ++i) po[i] = pa[i] * pb[i];
            }
            return;
        }
        case OpKind::Scale: {
            const Tensor4& x = nodes_[nd.parents[0]].value;
            for (std::size_t i = 0; i < x.size(); ++i) out.v[i] = nd.scalar * x.v[i];
            return;
        }
        case OpKind::Concat: {
            int off = 0;
            for (int pid : nd.parents) {
                const Tensor4& x = nodes_[pid].value;
                for (int in = 0; in < x.n; ++in)
                    for (int ic = 0; ic < x.c; ++ic)
                        std::copy(&x.at(in, ic, 0, 0),
                                  &x.at(in, ic, 0, 0) + static_cast<std::size_t>(x.h) * x.w,
                                  &out.at(in, off + ic, 0, 0));
                off += x.c;
            }
            return;
        }
        case OpKind::SliceChannels: {
            const Tensor4& x = nodes_[nd.parents[0]].value;
            for (int in = 0; in < x.n; ++in)
                for (int ic = 0; ic < nd.slice_count; ++ic)
                    std::copy(&x.at(in, nd.slice_from + ic, 0, 0),
                              &x.at(in, nd.slice_from + ic, 0, 0) +
                                  static_cast<std::size_t>(x.h) * x.w,
                              &out.at(in, ic, 0, 0));
            return;
        }
        case OpKind::AvgPool2: {
            const Tensor4& x = nodes_[nd.parents[0]].value;
            for (int in = 0; in < x.n; ++in)
                for (int ic = 0; ic < x.c; ++ic)
                    for (int y = 0; y < out.h; ++y)
                        for (int xx = 0; xx < out.w; ++xx)
                            out.at(in, ic, y, xx) =
                                0.25 * (x.at(in, ic, 2 * y, 2 * xx) +
                                        x.at(in, ic, 2 * y, 2 * xx + 1) +
                                        x.at(in, ic, 2 * y + 1, 2 * xx) +
                                        x.at(in, ic, 2 * y + 1, 2 * xx + 1));
            return;
        }
        case OpKind::Upsample2: {
            const Tensor4& x = nodes_[nd.parents[0]].value;
            for (int in = 0; in < x.n; ++in)
                for (int ic = 0; ic < x.c; ++ic)
                    for (int y = 0; y < out.h; ++y)
                        for (int xx = 0; xx < out.w; ++xx)
                            out.at(in, ic, y, xx) = x.at(in, ic, y / 2, xx / 2);
            return;
        }
        case OpKind::ChannelAffine: {
            const Tensor4& x = nodes_[nd.parents[0]].value;
            const std::size_t hw = static_cast<std::size_t>(x.h) * x.w;
            for (int in = 0; in < x.n; ++in)
                for (int ic = 0; ic < x.c; ++ic) {
                    const double sc = nd.ch_scale[ic], sh = nd.ch_shift[ic];
                    const double* px = &x.at(in, ic, 0, 0);
                    double* po = &out.at(in, ic, 0, 0);
                    for (std::size_t i = 0; i < hw; ++i) po[i] = sc * px[i] + sh;
                }
            return;
        }
        case OpKind::MeanSquare: {
            const Tensor4& x = nodes_[nd.parents[0]].value;
            double s = 0.0;
            for (double xv : x.v) s += xv * xv;
            out.v[0] = s / static_cast<double>(x.size());
            return;
        }
    }
}

void DiffGraph::forward() {
    for (int id = 0; id < static_cast<int>(nodes_.size()); ++id) {
        forward_node(id);
        if (!nodes_[id].value.all_finite())
            throw GraphError("forward: non-finite values at node " + std::to_string(id) +
                             (nodes_[id].name.empty() ? "" : " (" + nodes_[id].name + ")"));
    }
    forward_done_ = true;
}

void DiffGraph::backward_node(int id) {
    Node& nd = nodes_[id];
    const Tensor4& g = nd.grad;
    switch (nd.kind) {
        case OpKind::Input:
        case OpKind::Param:
        case OpKind::Constant:
            return;
        case OpKind::Conv2d: {
            const Tensor4& x = nodes_[nd.parents[0]].value;
            const Tensor4& k = nodes_[nd.parents[1]].value;
            Tensor4& gx = nodes_[nd.parents[0]].grad;
            Tensor4& gk = nodes_[nd.parents[1]].grad;
            Tensor4* gb = nd.parents.size() > 2 ? &nodes_[nd.parents[2]].grad : nullptr;
            const int ph = k.h / 2, pw = k.w / 2;
            for (int in = 0; in < x.n; ++in)
                for (int co = 0; co < k.n; ++co) {
                    if (gb) {
                        double s = 0.0;
                        const double* grow = &g.at(in, co, 0, 0);
                        for (std::size_t q = 0; q < static_cast<std::size_t>(x.h) * x.w; ++q)
                            s += grow[q];
                        gb->v[co] += s;
                    }
                    for (int ci = 0; ci < x.c; ++ci)
                        for (int ky = 0; ky < k.h; ++ky)
                            for (int kx = 0; kx < k.w; ++kx) {
                                const double wgt = k.at(co, ci, ky, kx);
                                double dw = 0.0;
                                const int dy = ky - ph, dx = kx - pw;
                                for (int y = 0; y < x.h; ++y) {
                                    const int iy = clampi(y + dy, x.h);
                                    const double* irow = &x.at(in, ci, iy, 0);
                                    double* gxrow = &gx.at(in, ci, iy, 0);
                                    const double* grow = &g.at(in, co, y, 0);
                                    for (int xx = 0; xx < x.w; ++xx) {
                                        const int ix = clampi(xx + dx, x.w);
                                        dw += grow[xx] * irow[ix];
                                        gxrow[ix] += wgt * grow[xx];
                                    }
                                }
                                gk.at(co, ci, ky, kx) += dw;
                            }
                }
            return;
        }
        case OpKind::LeakyRelu: {
            const Tensor4& x = nodes_[nd.parents[0]].value;
            Tensor4& gx = nodes_[nd.parents[0]].grad;
            const double s = nd.scalar;
            for (std::size_t i = 0; i < x.size(); ++i)
                gx.v[i] += g.v[i] * (x.v[i] > 0.0 ? 1.0 : s);
            return;
        }
        case OpKind::Tanh: {
            Tensor4& gx = nodes_[nd.parents[0]].grad;
            for (std::size_t i = 0; i < g.size(); ++i) {
                const double y = nd.value.v[i];
                gx.v[i] += g.v[i] * (1.0 - y * y);
            }
            return;
        }
        case OpKind::Add:
        case OpKind::Sub: {
            Tensor4& ga = nodes_[nd.parents[0]].grad;
            Tensor4& gb = nodes_[nd.parents[1]].grad;
            const double sgn = nd.kind == OpKind::Sub ? -1.0 : 1.0;
            const std::size_t per = static_cast<std::size_t>(g.c) * g.h * g.w;
            for (int in = 0; in < g.n; ++in) {
                double* pga = &ga.v[(ga.n == 1 ? 0 : in) * per];
                double* pgb = &gb.v[(gb.n == 1 ? 0 : in) * per];
                const double* pg = &g.v[in * per];
                for (std::size_t i = 0; i < per; ++i) {
                    pga[i] += pg[i];
                    pgb[i] += sgn * pg[i];
                }
            }
            return;
        }
        case OpKind::Mul: {
            const Tensor4& a = nodes_[nd.parents[0]].value;
            const Tensor4& b = nodes_[nd.parents[1]].value;
            Tensor4& ga = nodes_[nd.parents[0]].grad;
            Tensor4& gb = nodes_[nd.parents[1]].grad;
            const std::size_t per = static_cast<std::size_t>(g.c) * g.h * g.w;
            for (int in = 0; in < g.n; ++in) {
                const double* pa = &a.v[(a.n == 1 ? 0 : in) * per];
                const double* pb = &b.v[(b.n == 1 ? 0 : in) * per];
                double* pga = &ga.v[(ga.n == 1 ? 0 : in) * per];
                double* pgb = &gb.v[(gb.n == 1 ? 0 : in) * per];
                const double* pg = &g.v[in * per];
                for (std::size_t i = 0; i < per; ++i) {
                    pga[i] += pg[i] * pb[i];
                    pgb[i] += pg[i] * pa[i];
                }
            }
            return;
        }
        case OpKind::Scale: {
            Tensor4& gx = nodes_[nd.parents[0]].grad;
            for (std::size_t i = 0; i < g.size(); ++i) gx.v[i] += nd.scalar * g.v[i];
            return;
        }
        case OpKind::Concat: {
            int off = 0;
            for (int pid : nd.parents) {
                Tensor4& gx = nodes_[pid].grad;
                for (int in = 0; in < gx.n; ++in)
                    for (int ic = 0; ic < gx.c; ++ic) {
                        const double* pg = &g.at(in, off + ic, 0, 0);
                        double* pgx = &gx.at(in, ic, 0, 0);
                        for (std::size_t i = 0; i < static_cast<std::size_t>(gx.h) * gx.w; ++i)
                            pgx[i] += pg[i];
                    }
                off += gx.c;
            }
            return;
        }
        case OpKind::SliceChannels: {
            Tensor4& gx = nodes_[nd.parents[0]].grad;
            for (int in = 0; in < gx.n; ++in)
                for (int ic = 0; ic < nd.slice_count; ++ic) {
                    const double* pg = &g.at(in, ic, 0, 0);
                    double* pgx = &gx.at(in, nd.slice_from + ic, 0, 0);
                    for (std::size_t i = 0; i < static_cast<std::size_t>(gx.h) * gx.w; ++i)
                        pgx[i] += pg[i];
                }
            return;
        }
        case OpKind::AvgPool2: {
            Tensor4& gx = nodes_[nd.parents[0]].grad;
            for (int in = 0; in < g.n; ++in)
                for (int ic = 0; ic < g.c; ++ic)
                    for (int y = 0; y < g.h; ++y)
                        for (int xx = 0; xx < g.w; ++xx) {
                            const double gq = 0.25 * g.at(in, ic, y, xx);
                            gx.at(in, ic, 2 * y, 2 * xx) += gq;
                            gx.at(in, ic, 2 * y, 2 * xx + 1) += gq;
                            gx.at(in, ic, 2 * y + 1, 2 * xx) += gq;
                            gx.at(in, ic, 2 * y + 1, 2 * xx + 1) += gq;
                        }
            return;
        }
        case OpKind::Upsample2: {
            Tensor4& gx = nodes_[nd.parents[0]].grad;
            for (int in = 0; in < g.n; ++in)
                for (int ic = 0; ic < g.c; ++ic)
                    for (int y = 0; y < g.h; ++y)
                        for (int xx = 0; xx < g.w; ++xx)
                            gx.at(in, ic, y / 2, xx / 2) += g.at(in, ic, y, xx);
            return;
        }
        case OpKind::ChannelAffine: {
            Tensor4& gx = nodes_[nd.parents[0]].grad;
            const std::size_t hw = static_cast<std::size_t>(g.h) * g.w;
            for (int in = 0; in < g.n; ++in)
                for (int ic = 0; ic < g.c; ++ic) {
                    const double sc = nd.ch_scale[ic];
                    const double* pg = &g.at(in, ic, 0, 0);
                    double* pgx = &gx.at(in, ic, 0, 0);
                    for (std::size_t i = 0; i < hw; ++i) pgx[i] += sc * pg[i];
                }
            return;
        }
        case OpKind::MeanSquare: {
            const Tensor4& x = nodes_[nd.parents[0]].value;
            Tensor4& gx = nodes_[nd.parents[0]].grad;
            const double c = 2.0 * g.v[0] / static_cast<double>(x.size());
            for (std::size_t i = 0; i < x.size(); ++i) gx.v[i] += c * x.v[i];
            return;
        }
    }
}

void DiffGraph::backward(int loss) {
    if (!forward_done_) throw GraphError("backward called before forward");
    if (nodes_[loss].value.size() != 1) throw GraphError("backward: loss node is not scalar");
    for (Node& nd : nodes_) std::fill(nd.grad.v.begin(), nd.grad.v.end(), 0.0);
    nodes_[loss].grad.v[0] = 1.0;
    for (int id = loss; id >= 0; --id) {
        bool any = false;
        for (double gv : nodes_[id].grad.v)
            if (gv != 0.0) {
                any = true;
                break;
            }
        if (any) backward_node(id);
    }
}

std::vector<int> DiffGraph::param_ids() const {
    std::vector<int> out;
    for (const auto& [name, id] : params_) out.push_back(id);
    return out;
}

std::vector<int> DiffGraph::trainable_param_ids() const {
    std::vector<int> out;
    for (const auto& [name, id] : params_)
        if (nodes_[id].trainable) out.push_back(id);
    return out;
}

int DiffGraph::param_id(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw GraphError("no such parameter: " + name);
    return it->second;
}

std::map<std::string, Tensor4> DiffGraph::export_params() const {
    std::map<std::string, Tensor4> out;
    for (const auto& [name, id] : params_) out[name] = nodes_[id].value;
    return out;
}

void DiffGraph::import_params(const std::map<std::string, Tensor4>& params) {
    for (const auto& [name, id] : params_) {
        auto it = params.find(name);
        if (it == params.end()) throw GraphError("checkpoint missing parameter: " + name);
        if (!nodes_[id].value.same_shape(it->second))
            throw GraphError("checkpoint parameter '" + name + "' shape mismatch: expected " +
                             nodes_[id].value.shape_str() + ", got " + it->second.shape_str());
        nodes_[id].value = it->second;
    }
}

double DiffGraph::gradcheck(int loss, double eps, int min_coords, std::uint64_t seed) {
    forward();
    backward(loss);

    struct Coord {
        int id;
        std::size_t k;
        double analytic;
    };
    std::vector<Coord> coords;
    const std::vector<int> pids = trainable_param_ids();
    std::size_t total = 0;
    for (int id : pids) total += nodes_[id].value.size();

    auto coord_at = [&](std::size_t flat) {
        for (int id : pids) {
            const std::size_t sz = nodes_[id].value.size();
            if (flat < sz) return Coord{id, flat, nodes_[id].grad.v[flat]};
            flat -= sz;
        }
        throw GraphError("gradcheck: coordinate index out of range");
    };

    if (total <= static_cast<std::size_t>(min_coords)) {
        for (std::size_t f = 0; f < total; ++f) coords.push_back(coord_at(f));
    } else {
        RngStream rng(seed);
        std::vector<bool> taken(total, false);
        while (coords.size() < static_cast<std::size_t>(min_coords)) {
            const std::size_t f = rng.next_u64() % total;
            if (taken[f]) continue;
            taken[f] = true;
            coords.push_back(coord_at(f));
        }
    }

    double max_rel = 0.0;
    for (const Coord& cd : coords) {
        double& slot = nodes_[cd.id].value.v[cd.k];
        const double orig = slot;
        slot = orig + eps;
        forward();
        const double lp = nodes_[loss].value.v[0];
        slot = orig - eps;
        forward();
        const double lm = nodes_[loss].value.v[0];
        slot = orig;
        const double numeric = (lp - lm) / (2.0 * eps);
        const double denom = std::max({std::fabs(cd.analytic), std::fabs(numeric), 1e-8});
        max_rel = std::max(max_rel, std::fabs(cd.analytic - numeric) / denom);
    }
    forward(); // restore activations to unperturbed state
    return max_rel;
}

} // namespace piano
