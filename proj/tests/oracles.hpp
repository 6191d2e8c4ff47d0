#pragma once

// Independent reference implementations the tests check the library against.
// Everything here is deliberately written the dumb way (plain nested loops)
// and must stay decoupled from the kernels in src/.

#include <cmath>
#include <functional>
#include <vector>

#include "amrl/params.hpp"
#include "amrl/rng.hpp"
#include "amrl/tensor.hpp"

namespace oracles {

using amrl::NetworkParams;
using amrl::Rng;
using amrl::Tensor;

// six nested loops, zero padding 1, stride 1, 3x3 kernel
inline Tensor conv2d_reference(const Tensor& x, const Tensor& w, const Tensor& b) {
    const int c_in = x.dim(0), h = x.dim(1), wd = x.dim(2), c_out = w.dim(0);
    Tensor y({c_out, h, wd});
    for (int co = 0; co < c_out; ++co)
        for (int oy = 0; oy < h; ++oy)
            for (int ox = 0; ox < wd; ++ox) {
                double acc = b[static_cast<std::size_t>(co)];
                for (int ci = 0; ci < c_in; ++ci)
                    for (int ky = 0; ky < 3; ++ky)
                        for (int kx = 0; kx < 3; ++kx) {
                            const int iy = oy + ky - 1, ix = ox + kx - 1;
                            if (iy < 0 || ix < 0 || iy >= h || ix >= wd) continue;
                            acc += w[((static_cast<std::size_t>(co) * c_in + ci) * 3 + ky) * 3 + kx] *
                                   x.at3(ci, iy, ix);
                        }
                y.at3(co, oy, ox) = acc;
            }
    return y;
}

inline Tensor fc_reference(const Tensor& x, const Tensor& w, const Tensor& b) {
    const int n_out = w.dim(0), n_in = w.dim(1);
    Tensor y({n_out});
    for (int o = 0; o < n_out; ++o) {
        double acc = b[static_cast<std::size_t>(o)];
        for (int i = 0; i < n_in; ++i) acc += w[static_cast<std::size_t>(o) * n_in + i] * x[static_cast<std::size_t>(i)];
        y[static_cast<std::size_t>(o)] = acc;
    }
    return y;
}

inline Tensor softmax_reference(const Tensor& x) {
    Tensor y(x.shape());
    double total = 0.0;
    for (std::size_t i = 0; i < x.numel(); ++i) total += std::exp(x[i]);
    for (std::size_t i = 0; i < x.numel(); ++i) y[i] = std::exp(x[i]) / total;
    return y;
}

inline Tensor random_tensor(std::vector<int> shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor t(std::move(shape));
    for (std::size_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(lo, hi);
    return t;
}

inline double rel_err(double a, double b) {
    if (std::abs(a) < 1e-7 && std::abs(b) < 1e-7) return 0.0;
    return std::abs(a - b) / std::max(std::abs(a), std::abs(b));
}

struct GradCheck {
    double max_rel_err = 0.0;
    long checked = 0;
};

// Central finite differences (h = 1e-5) of loss_fn against the analytic
// gradient, on a random sample of entries per parameter tensor.
inline GradCheck finite_diff_check(NetworkParams& params, const amrl::GradientSet& analytic,
                                   const std::function<double()>& loss_fn, Rng& rng, int samples_per_tensor = 5,
                                   double h = 1e-5) {
    GradCheck result;
    for (std::size_t p = 0; p < params.size(); ++p) {
        Tensor& theta = params.value(p);
        const long n = static_cast<long>(theta.numel());
        for (int s = 0; s < samples_per_tensor; ++s) {
            const std::size_t k = static_cast<std::size_t>(rng.uniform_int(static_cast<int>(n)));
            const double saved = theta[k];
            theta[k] = saved + h;
            const double up = loss_fn();
            theta[k] = saved - h;
            const double down = loss_fn();
            theta[k] = saved;
            const double fd = (up - down) / (2.0 * h);
            result.max_rel_err = std::max(result.max_rel_err, rel_err(fd, analytic[p][k]));
            result.checked += 1;
        }
    }
    return result;
}

// Textbook Adam with L2 decay folded into the gradient, kept separate from
// the library implementation on purpose.
struct AdamReference {
    double m = 0.0, v = 0.0;
    long t = 0;

    double step(double theta, double grad, double lr, double b1, double b2, double eps, double decay) {
        t += 1;
        const double g = grad + decay * theta;
        m = b1 * m + (1 - b1) * g;
        v = b2 * v + (1 - b2) * g * g;
        const double mhat = m / (1 - std::pow(b1, static_cast<double>(t)));
        const double vhat = v / (1 - std::pow(b2, static_cast<double>(t)));
        return theta - lr * mhat / (std::sqrt(vhat) + eps);
    }
};

}  // namespace oracles
