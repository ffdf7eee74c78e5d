#include <cmath>

#include "tensor/tensor.hpp"

namespace hypercqa::tensor {

Tensor& ParamStore::create(const std::string& name, std::vector<std::size_t> shape, double stddev,
                           Rng& rng) {
    if (has(name)) throw Error(ErrorKind::ConfigError, "parameter '" + name + "' already exists");
    order_.push_back(name);
    return params_.emplace(name, Tensor::gaussian(std::move(shape), stddev, rng)).first->second;
}

Tensor& ParamStore::create_zeros(const std::string& name, std::vector<std::size_t> shape) {
    if (has(name)) throw Error(ErrorKind::ConfigError, "parameter '" + name + "' already exists");
    order_.push_back(name);
    return params_.emplace(name, Tensor::zeros(std::move(shape))).first->second;
}

Tensor& ParamStore::create_full(const std::string& name, std::vector<std::size_t> shape,
                                double value) {
    if (has(name)) throw Error(ErrorKind::ConfigError, "parameter '" + name + "' already exists");
    order_.push_back(name);
    return params_.emplace(name, Tensor::full(std::move(shape), value)).first->second;
}

Tensor& ParamStore::get(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) throw Error(ErrorKind::ConfigError, "unknown parameter '" + name + "'");
    return it->second;
}

const Tensor& ParamStore::get(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw Error(ErrorKind::ConfigError, "unknown parameter '" + name + "'");
    return it->second;
}

std::size_t ParamStore::total_parameters() const {
    std::size_t total = 0;
    for (const auto& [name, tensor] : params_) total += tensor.numel();
    return total;
}

void adam_step(ParamStore& params, const GradMap& grads, AdamState& state) {
    state.step += 1;
    const double bias1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bias2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (const auto& [name, grad] : grads) {
        Tensor& param = params.get(name);
        if (!param.same_shape(grad)) {
            throw Error(ErrorKind::ShapeMismatch, "gradient shape for '" + name + "'");
        }
        auto& m = state.first_moment[name];
        auto& v = state.second_moment[name];
        if (m.size() != param.numel()) m.assign(param.numel(), 0.0);
        if (v.size() != param.numel()) v.assign(param.numel(), 0.0);
        for (std::size_t i = 0; i < param.numel(); ++i) {
            const double g = (*grad.data)[i];
            m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g;
            v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g * g;
            const double m_hat = m[i] / bias1;
            const double v_hat = v[i] / bias2;
            (*param.data)[i] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
        }
    }
}

}  // namespace hypercqa::tensor
