#include "amrl/tape.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace amrl {

namespace kernels {

namespace {

// Zero-padded copy of a [C,H,W] tensor into worker-local scratch so the 3x3
// stencils below never branch on edges. Tapes are single-threaded per worker.
const double* padded_planes(const Tensor& t, std::vector<double>& scratch) {
    const int c = t.dim(0), h = t.dim(1), w = t.dim(2);
    const std::size_t pw = static_cast<std::size_t>(w) + 2, ph = static_cast<std::size_t>(h) + 2;
    scratch.assign(static_cast<std::size_t>(c) * ph * pw, 0.0);
    for (int ci = 0; ci < c; ++ci) {
        const double* src = t.data() + static_cast<std::size_t>(ci) * h * w;
        double* dst = scratch.data() + static_cast<std::size_t>(ci) * ph * pw + pw + 1;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) dst[x] = src[x];
            src += w;
            dst += pw;
        }
    }
    return scratch.data();
}

thread_local std::vector<double> conv_scratch;

// out[y][x] += sum_9 w[k] * in_padded[y+ky][x+kx]
void stencil_accumulate(double* __restrict out, const double* __restrict in_padded, const double* __restrict w9,
                        int h, int wd) {
    const std::size_t pw = static_cast<std::size_t>(wd) + 2;
    const double w0 = w9[0], w1 = w9[1], w2 = w9[2];
    const double w3 = w9[3], w4 = w9[4], w5 = w9[5];
    const double w6 = w9[6], w7 = w9[7], w8 = w9[8];
    for (int y = 0; y < h; ++y) {
        const double* __restrict r0 = in_padded + static_cast<std::size_t>(y) * pw;
        const double* __restrict r1 = r0 + pw;
        const double* __restrict r2 = r1 + pw;
        double* __restrict o = out + static_cast<std::size_t>(y) * wd;
        for (int x = 0; x < wd; ++x) {
            o[x] += w0 * r0[x] + w1 * r0[x + 1] + w2 * r0[x + 2] + w3 * r1[x] + w4 * r1[x + 1] + w5 * r1[x + 2] +
                    w6 * r2[x] + w7 * r2[x + 1] + w8 * r2[x + 2];
        }
    }
}

}  // namespace

Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b) {
    if (x.rank() != 3) throw config_error("conv2d: input must be rank 3, got " + x.shape_string());
    if (w.rank() != 4 || w.dim(2) != 3 || w.dim(3) != 3)
        throw config_error("conv2d: weight must be [C_out,C_in,3,3], got " + w.shape_string());
    const int c_in = x.dim(0), h = x.dim(1), wd = x.dim(2);
    const int c_out = w.dim(0);
    if (w.dim(1) != c_in)
        throw config_error("conv2d: input channels " + std::to_string(c_in) + " vs weight C_in " +
                           std::to_string(w.dim(1)));
    if (b.rank() != 1 || b.dim(0) != c_out) throw config_error("conv2d: bias must be [C_out]");

    Tensor y({c_out, h, wd});
    const std::size_t plane = static_cast<std::size_t>(h) * wd;
    const std::size_t padded_plane = static_cast<std::size_t>(h + 2) * (wd + 2);
    const double* padded = padded_planes(x, conv_scratch);
    for (int co = 0; co < c_out; ++co) {
        double* out = y.data() + co * plane;
        std::fill(out, out + plane, b[static_cast<std::size_t>(co)]);
        for (int ci = 0; ci < c_in; ++ci)
            stencil_accumulate(out, padded + ci * padded_plane,
                               w.data() + (static_cast<std::size_t>(co) * c_in + ci) * 9, h, wd);
    }
    return y;
}

// dx += corr(dy, w) transposed; dw += corr(x, dy); db += colsum(dy)
static void conv2d_backward(const Tensor& x, const Tensor& w, const Tensor& dy, Tensor& dx, Tensor& dw, Tensor& db) {
    const int c_in = x.dim(0), h = x.dim(1), wd = x.dim(2);
    const int c_out = w.dim(0);
    const std::size_t plane = static_cast<std::size_t>(h) * wd;
    const std::size_t pw = static_cast<std::size_t>(wd) + 2;
    const std::size_t padded_plane = static_cast<std::size_t>(h + 2) * pw;

    thread_local std::vector<double> dy_scratch;
    const double* dy_padded = padded_planes(dy, dy_scratch);
    const double* x_padded = padded_planes(x, conv_scratch);

    for (int co = 0; co < c_out; ++co) {
        const double* __restrict dyp = dy.data() + co * plane;
        double acc = 0.0;
        for (std::size_t i = 0; i < plane; ++i) acc += dyp[i];
        db[static_cast<std::size_t>(co)] += acc;

        for (int ci = 0; ci < c_in; ++ci) {
            const std::size_t wbase = (static_cast<std::size_t>(co) * c_in + ci) * 9;

            // dx: correlate dy with the flipped kernel
            double wflip[9];
            for (int k = 0; k < 9; ++k) wflip[k] = w[wbase + 8 - static_cast<std::size_t>(k)];
            stencil_accumulate(dx.data() + ci * plane, dy_padded + co * padded_plane, wflip, h, wd);

            // dw: nine plane dot products in a single pass
            const double* __restrict xp = x_padded + ci * padded_plane;
            double a0 = 0, a1 = 0, a2 = 0, a3 = 0, a4 = 0, a5 = 0, a6 = 0, a7 = 0, a8 = 0;
            for (int y = 0; y < h; ++y) {
                const double* __restrict r0 = xp + static_cast<std::size_t>(y) * pw;
                const double* __restrict r1 = r0 + pw;
                const double* __restrict r2 = r1 + pw;
                const double* __restrict d = dyp + static_cast<std::size_t>(y) * wd;
                for (int x2 = 0; x2 < wd; ++x2) {
                    const double g = d[x2];
                    a0 += g * r0[x2];
                    a1 += g * r0[x2 + 1];
                    a2 += g * r0[x2 + 2];
                    a3 += g * r1[x2];
                    a4 += g * r1[x2 + 1];
                    a5 += g * r1[x2 + 2];
                    a6 += g * r2[x2];
                    a7 += g * r2[x2 + 1];
                    a8 += g * r2[x2 + 2];
                }
            }
            dw[wbase + 0] += a0;
            dw[wbase + 1] += a1;
            dw[wbase + 2] += a2;
            dw[wbase + 3] += a3;
            dw[wbase + 4] += a4;
            dw[wbase + 5] += a5;
            dw[wbase + 6] += a6;
            dw[wbase + 7] += a7;
            dw[wbase + 8] += a8;
        }
    }
}

Tensor fc_forward(const Tensor& x, const Tensor& w, const Tensor& b) {
    if (w.rank() != 2) throw config_error("fc: weight must be rank 2, got " + w.shape_string());
    const int n_out = w.dim(0), n_in = w.dim(1);
    if (static_cast<int>(x.numel()) != n_in)
        throw config_error("fc: input length " + std::to_string(x.numel()) + " vs weight columns " +
                           std::to_string(n_in));
    if (b.rank() != 1 || b.dim(0) != n_out) throw config_error("fc: bias must be [N_out]");
    Tensor y({n_out});
    for (int o = 0; o < n_out; ++o) {
        const double* wr = w.data() + static_cast<std::size_t>(o) * n_in;
        const double* xp = x.data();
        double acc = 0.0;
        for (int i = 0; i < n_in; ++i) acc += wr[i] * xp[i];
        y[static_cast<std::size_t>(o)] = acc + b[static_cast<std::size_t>(o)];
    }
    return y;
}

static void fc_backward(const Tensor& x, const Tensor& w, const Tensor& dy, Tensor& dx, Tensor& dw, Tensor& db) {
    const int n_out = w.dim(0), n_in = w.dim(1);
    for (int o = 0; o < n_out; ++o) {
        const double g = dy[static_cast<std::size_t>(o)];
        db[static_cast<std::size_t>(o)] += g;
        const double* wr = w.data() + static_cast<std::size_t>(o) * n_in;
        double* dwr = dw.data() + static_cast<std::size_t>(o) * n_in;
        const double* xp = x.data();
        double* dxp = dx.data();
        for (int i = 0; i < n_in; ++i) {
            dwr[i] += g * xp[i];
            dxp[i] += g * wr[i];
        }
    }
}

Tensor elu_forward(const Tensor& x) {
    Tensor y(x.shape());
    for (std::size_t i = 0; i < x.numel(); ++i) {
        const double v = x[i];
        y[i] = v > 0.0 ? v : std::expm1(v);
    }
    return y;
}

Tensor softmax_forward(const Tensor& x) {
    Tensor y(x.shape());
    double mx = x[0];
    for (std::size_t i = 1; i < x.numel(); ++i) mx = std::max(mx, x[i]);
    double total = 0.0;
    for (std::size_t i = 0; i < x.numel(); ++i) {
        y[i] = std::exp(x[i] - mx);
        total += y[i];
    }
    for (std::size_t i = 0; i < x.numel(); ++i) y[i] /= total;
    return y;
}

}  // namespace kernels

void Tape::check_value(const Tensor& t, const char* tag, const char* phase) const {
    if (!check_finite_) return;
    if (!t.all_finite())
        throw numeric_error(std::string("non-finite value in ") + phase + " of '" + tag + "' (node " +
                            std::to_string(nodes_.size()) + ")");
}

int Tape::push(Op op, Node n, Tensor value) {
    n.op = op;
    check_value(value, n.tag, "forward");
    nodes_.push_back(n);
    values_.push_back(std::move(value));
    return static_cast<int>(nodes_.size()) - 1;
}

int Tape::leaf(const Tensor& t, const char* tag) {
    Node n;
    n.tag = tag;
    return push(Op::Leaf, n, t);
}

int Tape::leaf(Tensor&& t, const char* tag) {
    Node n;
    n.tag = tag;
    return push(Op::Leaf, n, std::move(t));
}

int Tape::conv2d(int input, int weight, int bias, const char* tag) {
    Node n;
    n.in0 = input;
    n.in1 = weight;
    n.in2 = bias;
    n.tag = tag;
    return push(Op::Conv2d, n, kernels::conv2d_forward(value(input), value(weight), value(bias)));
}

int Tape::fully_connected(int input, int weight, int bias, const char* tag) {
    Node n;
    n.in0 = input;
    n.in1 = weight;
    n.in2 = bias;
    n.tag = tag;
    return push(Op::Fc, n, kernels::fc_forward(value(input), value(weight), value(bias)));
}

int Tape::elu(int x, const char* tag) {
    Node n;
    n.in0 = x;
    n.tag = tag;
    return push(Op::Elu, n, kernels::elu_forward(value(x)));
}

int Tape::softmax(int x, const char* tag) {
    Node n;
    n.in0 = x;
    n.tag = tag;
    return push(Op::Softmax, n, kernels::softmax_forward(value(x)));
}

int Tape::mul(int a, int b, const char* tag) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    if (!ta.same_shape(tb)) throw config_error(std::string("mul: shape mismatch at '") + tag + "'");
    Tensor y(ta.shape());
    for (std::size_t i = 0; i < ta.numel(); ++i) y[i] = ta[i] * tb[i];
    Node n;
    n.in0 = a;
    n.in1 = b;
    n.tag = tag;
    return push(Op::Mul, n, std::move(y));
}

int Tape::add(int a, int b, const char* tag) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    if (!ta.same_shape(tb)) throw config_error(std::string("add: shape mismatch at '") + tag + "'");
    Tensor y(ta.shape());
    for (std::size_t i = 0; i < ta.numel(); ++i) y[i] = ta[i] + tb[i];
    Node n;
    n.in0 = a;
    n.in1 = b;
    n.tag = tag;
    return push(Op::Add, n, std::move(y));
}

int Tape::affine(int x, double scale, double shift, const char* tag) {
    const Tensor& tx = value(x);
    Tensor y(tx.shape());
    for (std::size_t i = 0; i < tx.numel(); ++i) y[i] = scale * tx[i] + shift;
    Node n;
    n.in0 = x;
    n.a = scale;
    n.b = shift;
    n.tag = tag;
    return push(Op::Affine, n, std::move(y));
}

int Tape::pick(int x, int index, const char* tag) {
    const Tensor& tx = value(x);
    if (index < 0 || static_cast<std::size_t>(index) >= tx.numel())
        throw contract_error(std::string("pick: index out of range at '") + tag + "'");
    Node n;
    n.in0 = x;
    n.index = index;
    n.tag = tag;
    return push(Op::Pick, n, Tensor::scalar(tx[static_cast<std::size_t>(index)]));
}

int Tape::log_clamped(int x, const char* tag) {
    const Tensor& tx = value(x);
    Tensor y(tx.shape());
    for (std::size_t i = 0; i < tx.numel(); ++i) y[i] = std::log(std::max(tx[i], kLogClamp));
    Node n;
    n.in0 = x;
    n.tag = tag;
    return push(Op::LogClamped, n, std::move(y));
}

int Tape::sum(int x, const char* tag) {
    const Tensor& tx = value(x);
    double acc = 0.0;
    for (std::size_t i = 0; i < tx.numel(); ++i) acc += tx[i];
    Node n;
    n.in0 = x;
    n.tag = tag;
    return push(Op::Sum, n, Tensor::scalar(acc));
}

void Tape::zero_grad() {
    for (auto& g : grads_)
        if (g.numel()) g.fill(0.0);
}

void Tape::clear() {
    nodes_.clear();
    values_.clear();
    grads_.clear();
}

void Tape::backward(int loss_id) {
    if (loss_id < 0 || static_cast<std::size_t>(loss_id) >= nodes_.size())
        throw contract_error("backward: bad loss node id");
    if (values_[static_cast<std::size_t>(loss_id)].numel() != 1)
        throw contract_error("backward: loss must be scalar, got shape " +
                             values_[static_cast<std::size_t>(loss_id)].shape_string());

    grads_.resize(nodes_.size());
    for (std::size_t i = 0; i < grads_.size(); ++i) {
        if (!grads_[i].same_shape(values_[i]))
            grads_[i] = Tensor(values_[i].shape());
    }
    grad_buf(loss_id)[0] += 1.0;

    for (int id = loss_id; id >= 0; --id) {
        const Node& n = nodes_[static_cast<std::size_t>(id)];
        const Tensor& dy = grads_[static_cast<std::size_t>(id)];
        switch (n.op) {
            case Op::Leaf:
                break;
            case Op::Conv2d:
                kernels::conv2d_backward(value(n.in0), value(n.in1), dy, grad_buf(n.in0), grad_buf(n.in1),
                                         grad_buf(n.in2));
                break;
            case Op::Fc:
                kernels::fc_backward(value(n.in0), value(n.in1), dy, grad_buf(n.in0), grad_buf(n.in1),
                                     grad_buf(n.in2));
                break;
            case Op::Elu: {
                const Tensor& x = value(n.in0);
                const Tensor& y = value(id);
                Tensor& dx = grad_buf(n.in0);
                for (std::size_t i = 0; i < x.numel(); ++i) dx[i] += dy[i] * (x[i] > 0.0 ? 1.0 : y[i] + 1.0);
                break;
            }
            case Op::Softmax: {
                const Tensor& y = value(id);
                Tensor& dx = grad_buf(n.in0);
                double dot = 0.0;
                for (std::size_t i = 0; i < y.numel(); ++i) dot += dy[i] * y[i];
                for (std::size_t i = 0; i < y.numel(); ++i) dx[i] += y[i] * (dy[i] - dot);
                break;
            }
            case Op::Mul: {
                const Tensor& a = value(n.in0);
                const Tensor& b = value(n.in1);
                Tensor& da = grad_buf(n.in0);
                Tensor& db = grad_buf(n.in1);
                for (std::size_t i = 0; i < a.numel(); ++i) {
                    da[i] += dy[i] * b[i];
                    db[i] += dy[i] * a[i];
                }
                break;
            }
            case Op::Add: {
                Tensor& da = grad_buf(n.in0);
                Tensor& db = grad_buf(n.in1);
                for (std::size_t i = 0; i < dy.numel(); ++i) {
                    da[i] += dy[i];
                    db[i] += dy[i];
                }
                break;
            }
            case Op::Affine: {
                Tensor& dx = grad_buf(n.in0);
                for (std::size_t i = 0; i < dy.numel(); ++i) dx[i] += n.a * dy[i];
                break;
            }
            case Op::Pick:
                grad_buf(n.in0)[static_cast<std::size_t>(n.index)] += dy[0];
                break;
            case Op::LogClamped: {
                const Tensor& x = value(n.in0);
                Tensor& dx = grad_buf(n.in0);
                for (std::size_t i = 0; i < x.numel(); ++i)
                    if (x[i] > kLogClamp) dx[i] += dy[i] / x[i];
                break;
            }
            case Op::Sum: {
                Tensor& dx = grad_buf(n.in0);
                const double g = dy[0];
                for (std::size_t i = 0; i < dx.numel(); ++i) dx[i] += g;
                break;
            }
        }
    }

    if (check_finite_) {
        for (std::size_t i = 0; i < grads_.size(); ++i) {
            if (!grads_[i].all_finite())
                throw numeric_error(std::string("non-finite gradient at node ") + std::to_string(i) + " ('" +
                                    nodes_[i].tag + "')");
        }
    }
}

}  // namespace amrl
