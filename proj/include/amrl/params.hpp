#pragma once

#include <string>
#include <vector>

#include "amrl/tensor.hpp"

namespace amrl {

// Named, ordered set of learnable tensors. Order is the checkpoint order and
// the gradient-vector order, and never changes after construction.
class NetworkParams {
public:
    int add(std::string name, Tensor t);

    std::size_t size() const { return values_.size(); }
    std::size_t total_elements() const;

    const std::string& name(std::size_t i) const { return names_[i]; }
    Tensor& value(std::size_t i) { return values_[i]; }
    const Tensor& value(std::size_t i) const { return values_[i]; }

    // -1 when absent
    int index_of(const std::string& name) const;
    Tensor& at(const std::string& name);
    const Tensor& at(const std::string& name) const;

private:
    std::vector<std::string> names_;
    std::vector<Tensor> values_;
};

using GradientSet = std::vector<Tensor>;

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 1e-5;
};

// First/second moment estimates, one pair per parameter, plus the shared step
// counter used for bias correction.
struct AdamState {
    long step_count = 0;
    std::vector<Tensor> m;
    std::vector<Tensor> v;

    static AdamState init_like(const NetworkParams& params);
};

// Classic Adam with L2 weight decay folded into the gradient
// (g <- g + decay * theta) before the moment update.
void adam_step(NetworkParams& params, const GradientSet& grads, AdamState& state, const AdamConfig& cfg);

// Scales gradients in place so their global L2 norm is at most max_norm.
// Returns the pre-clip norm.
double clip_by_global_norm(GradientSet& grads, double max_norm);

}  // namespace amrl
