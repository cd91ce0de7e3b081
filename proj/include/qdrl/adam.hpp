#pragma once

#include <qdrl/common.hpp>
#include <qdrl/nn.hpp>

#include <cstdint>
#include <string>

namespace qdrl {

struct AdamState {
    Vec first_moment;
    Vec second_moment;
    std::int64_t step = 0;
    Real learning_rate = 3e-4;
    Real beta1 = 0.9;
    Real beta2 = 0.999;
    Real epsilon = 1e-8;
};

inline AdamState make_adam(Index num_params, Real learning_rate) {
    require(learning_rate > 0.0, "make_adam: learning rate must be > 0");
    AdamState state;
    state.first_moment = Vec::Zero(num_params);
    state.second_moment = Vec::Zero(num_params);
    state.learning_rate = learning_rate;
    return state;
}

/// Bias-corrected Adam descent step, in place.
inline void adam_step(Vec& params, const Eigen::Ref<const Vec>& grads, AdamState& state) {
    require(params.size() == grads.size() && params.size() == state.first_moment.size(),
            "adam_step: parameter/gradient/moment sizes differ");
    if (!grads.allFinite()) {
        for (Index i = 0; i < grads.size(); ++i)
            if (!std::isfinite(grads[i]))
                throw std::domain_error("adam_step: non-finite gradient at index " + std::to_string(i));
    }
    state.step += 1;
    state.first_moment = state.beta1 * state.first_moment + (1.0 - state.beta1) * grads;
    state.second_moment = state.beta2 * state.second_moment.array() + (1.0 - state.beta2) * grads.array().square();
    const Real correction1 = 1.0 - std::pow(state.beta1, static_cast<Real>(state.step));
    const Real correction2 = 1.0 - std::pow(state.beta2, static_cast<Real>(state.step));
    params.array() -= state.learning_rate * (state.first_moment.array() / correction1) /
                      ((state.second_moment.array() / correction2).sqrt() + state.epsilon);
}

/// Polyak averaging: target <- (1 - tau) * target + tau * main.
inline void soft_update(Vec& target, const Eigen::Ref<const Vec>& main, Real tau) {
    require(tau >= 0.0 && tau <= 1.0, "soft_update: tau must be in [0, 1]");
    require(target.size() == main.size(), "soft_update: size mismatch");
    target = (1.0 - tau) * target + tau * main;
}

inline void soft_update(MlpParams& target, const MlpParams& main, Real tau) {
    require(tau >= 0.0 && tau <= 1.0, "soft_update: tau must be in [0, 1]");
    require(target.layers.size() == main.layers.size(), "soft_update: layer count mismatch");
    for (std::size_t l = 0; l < target.layers.size(); ++l) {
        target.layers[l].weights = (1.0 - tau) * target.layers[l].weights + tau * main.layers[l].weights;
        target.layers[l].biases = (1.0 - tau) * target.layers[l].biases + tau * main.layers[l].biases;
    }
}

/// Flatten, step, unflatten. Network parameter updates all go through the
/// canonical flat layout so optimizer state lines up with genotypes.
inline void adam_step(MlpParams& params, const Eigen::Ref<const Vec>& grads, AdamState& state) {
    Vec flat = flatten(params);
    adam_step(flat, grads, state);
    params = unflatten(architecture_of(params), flat);
}

}  // namespace qdrl
