#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "amrl/tensor.hpp"

namespace amrl {

// Reverse-mode autodiff over a flat record of operations. Node ids are indices
// into the recording order; inputs always precede their consumers, and
// backward() walks the record in exact reverse order, so gradients are
// deterministic for a given op sequence.
//
// The op set is exactly what the actor-critic networks and losses need:
// conv2d (3x3, stride 1, pad 1), fully-connected, ELU, softmax, elementwise
// mul/add, scalar affine, element pick, clamped log, and sum.
class Tape {
public:
    static constexpr double kLogClamp = 1e-10;

    explicit Tape(bool check_finite = true) : check_finite_(check_finite) {}

    // Leaves hold copies of external tensors (parameters, observations).
    int leaf(const Tensor& t, const char* tag = "leaf");
    int leaf(Tensor&& t, const char* tag = "leaf");

    // y[co,h,w] = sum_ci sum_3x3 w[co,ci,ky,kx] * x[ci,h+ky-1,w+kx-1] + b[co]
    int conv2d(int input, int weight, int bias, const char* tag = "conv2d");
    // y = W x + b, with x flattened to a vector of length W.cols
    int fully_connected(int input, int weight, int bias, const char* tag = "fc");
    int elu(int x, const char* tag = "elu");
    int softmax(int x, const char* tag = "softmax");
    int mul(int a, int b, const char* tag = "mul");
    int add(int a, int b, const char* tag = "add");
    // y = scale * x + shift (elementwise)
    int affine(int x, double scale, double shift, const char* tag = "affine");
    // scalar y = x[index]
    int pick(int x, int index, const char* tag = "pick");
    // y = log(max(x, kLogClamp)); derivative is 0 in the clamped region
    int log_clamped(int x, const char* tag = "log");
    // scalar y = sum(x)
    int sum(int x, const char* tag = "sum");

    const Tensor& value(int id) const { return values_[static_cast<std::size_t>(id)]; }
    const Tensor& grad(int id) const { return grads_[static_cast<std::size_t>(id)]; }

    // Seeds d(loss)/d(loss) = 1 and accumulates gradients for every node that
    // precedes the loss in recording order. The loss must be scalar.
    void backward(int loss_id);
    void zero_grad();

    std::size_t size() const { return nodes_.size(); }

    // Drop all nodes but keep buffer capacity; used by workers between rollouts.
    void clear();

private:
    enum class Op : std::uint8_t { Leaf, Conv2d, Fc, Elu, Softmax, Mul, Add, Affine, Pick, LogClamped, Sum };

    struct Node {
        Op op;
        int in0 = -1, in1 = -1, in2 = -1;
        double a = 0.0, b = 0.0;  // affine coefficients
        int index = 0;            // pick index
        const char* tag;
    };

    int push(Op op, Node n, Tensor value);
    void check_value(const Tensor& t, const char* tag, const char* phase) const;
    Tensor& grad_buf(int id) { return grads_[static_cast<std::size_t>(id)]; }

    std::vector<Node> nodes_;
    std::vector<Tensor> values_;
    std::vector<Tensor> grads_;  // parallel to nodes_, allocated by backward()
    bool check_finite_;
};

// Standalone forward kernels, shared with the tape and usable directly.
namespace kernels {
Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b);
Tensor fc_forward(const Tensor& x, const Tensor& w, const Tensor& b);
Tensor elu_forward(const Tensor& x);
Tensor softmax_forward(const Tensor& x);
}  // namespace kernels

}  // namespace amrl
