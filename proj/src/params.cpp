#include "amrl/params.hpp"

#include <cmath>

#include "amrl/errors.hpp"

namespace amrl {

int NetworkParams::add(std::string name, Tensor t) {
    if (index_of(name) >= 0) throw config_error("duplicate parameter name: " + name);
    names_.push_back(std::move(name));
    values_.push_back(std::move(t));
    return static_cast<int>(values_.size()) - 1;
}

std::size_t NetworkParams::total_elements() const {
    std::size_t n = 0;
    for (const auto& t : values_) n += t.numel();
    return n;
}

int NetworkParams::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < names_.size(); ++i)
        if (names_[i] == name) return static_cast<int>(i);
    return -1;
}

Tensor& NetworkParams::at(const std::string& name) {
    const int i = index_of(name);
    if (i < 0) throw config_error("no parameter named " + name);
    return values_[static_cast<std::size_t>(i)];
}

const Tensor& NetworkParams::at(const std::string& name) const {
    const int i = index_of(name);
    if (i < 0) throw config_error("no parameter named " + name);
    return values_[static_cast<std::size_t>(i)];
}

AdamState AdamState::init_like(const NetworkParams& params) {
    AdamState s;
    s.m.reserve(params.size());
    s.v.reserve(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        s.m.emplace_back(params.value(i).shape());
        s.v.emplace_back(params.value(i).shape());
    }
    return s;
}

void adam_step(NetworkParams& params, const GradientSet& grads, AdamState& state, const AdamConfig& cfg) {
    if (grads.size() != params.size() || state.m.size() != params.size())
        throw config_error("adam_step: parameter/gradient/state count mismatch");
    for (std::size_t i = 0; i < params.size(); ++i)
        if (!grads[i].same_shape(params.value(i)) || !state.m[i].same_shape(params.value(i)))
            throw config_error("adam_step: shape mismatch for parameter " + params.name(i));

    state.step_count += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step_count));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step_count));

    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor& theta = params.value(i);
        const Tensor& grad = grads[i];
        Tensor& m = state.m[i];
        Tensor& v = state.v[i];
        for (std::size_t k = 0; k < theta.numel(); ++k) {
            const double g = grad[k] + cfg.weight_decay * theta[k];
            m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * g;
            v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * g * g;
            const double mhat = m[k] / bc1;
            const double vhat = v[k] / bc2;
            theta[k] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
        }
    }
}

double clip_by_global_norm(GradientSet& grads, double max_norm) {
    double sq = 0.0;
    for (const auto& g : grads)
        for (std::size_t k = 0; k < g.numel(); ++k) sq += g[k] * g[k];
    const double norm = std::sqrt(sq);
    if (norm > max_norm && norm > 0.0) {
        const double scale = max_norm / norm;
        for (auto& g : grads)
            for (std::size_t k = 0; k < g.numel(); ++k) g[k] *= scale;
    }
    return norm;
}

}  // namespace amrl
