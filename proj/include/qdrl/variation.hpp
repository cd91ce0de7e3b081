#pragma once

#include <qdrl/adam.hpp>
#include <qdrl/common.hpp>
#include <qdrl/nn.hpp>
#include <qdrl/replay_buffer.hpp>
#include <qdrl/rng.hpp>
#include <qdrl/td3.hpp>

#include <utility>
#include <vector>

namespace qdrl {

/// Iso+line GA variation:
///   child = p1 + sigma1 * eps_iso + sigma2 * eps_line * (p2 - p1)
/// with eps_iso ~ N(0, I) per component and eps_line ~ N(0, 1) shared.
inline Vec variation_ga(const Eigen::Ref<const Vec>& parent1, const Eigen::Ref<const Vec>& parent2,
                        Real sigma1, Real sigma2, RngEngine& rng) {
    require(parent1.size() == parent2.size(), "variation_ga: genotype length mismatch");
    std::normal_distribution<Real> gauss;
    Vec child(parent1.size());
    for (Index i = 0; i < child.size(); ++i) child[i] = parent1[i] + sigma1 * gauss(rng);
    const Real line = sigma2 * gauss(rng);
    child += line * (parent2 - parent1);
    return child;
}

struct PgResult {
    Vec genotype;
    bool trained = false;  // false: buffer below one batch, offspring equals parent
};

/// Descriptor-conditioned PG variation: m ascent steps of the unconditioned
/// policy pi_psi against the critic conditioned on the parent's stored
/// descriptor, each on a fresh uniform batch of states from the buffer.
/// Quality improves while the critic's conditioning pins the diversity.
inline PgResult variation_pg(const Eigen::Ref<const Vec>& genotype,
                             const Eigen::Ref<const Vec>& parent_descriptor, const MlpParams& critic,
                             bool conditioned_critic, const MlpArchitecture& policy_arch,
                             const ReplayBuffer& buffer, Index steps, Index batch_size, Real learning_rate,
                             RngEngine& rng) {
    if (buffer.size() < batch_size) return {genotype, false};
    MlpParams policy = unflatten(policy_arch, genotype);
    AdamState opt = make_adam(genotype.size(), learning_rate);
    for (Index i = 0; i < steps; ++i) {
        TransitionBatch batch = buffer.sample_uniform(batch_size, rng);
        Mat descriptors = parent_descriptor.replicate(1, batch.size());
        Vec grads = dpg_gradient(policy, critic, batch.states, descriptors, false, conditioned_critic);
        adam_step(policy, Vec(-grads), opt);
    }
    return {flatten(policy), true};
}

/// Folds a fixed descriptor into the conditioned actor's first layer,
/// producing a policy with the archive architecture. With the actor input
/// layout [d; s] (W_d on top of W_s),
///   (d || s)^T W + b = s^T W_s + (d^T W_d + b),
/// so the folded policy keeps W_s and absorbs d^T W_d into the bias. The new
/// bias accumulates descriptor terms in the same order as forward(), which
/// makes folded-policy outputs bit-identical to the conditioned actor's.
inline MlpParams fold_actor(const MlpParams& actor, const Eigen::Ref<const Vec>& descriptor) {
    require(!actor.layers.empty(), "fold_actor: empty actor");
    const Index descriptor_dim = descriptor.size();
    const Index fan_in = actor.layers.front().fan_in();
    if (fan_in <= descriptor_dim)
        throw std::invalid_argument("fold_actor: first layer fan_in (" + std::to_string(fan_in) +
                                    ") must exceed descriptor dim (" + std::to_string(descriptor_dim) + ")");
    MlpParams policy = actor;
    LayerParams& first = policy.layers.front();
    Vec bias = first.biases;
    for (Index j = 0; j < first.fan_out(); ++j) {
        Real acc = bias[j];
        for (Index i = 0; i < descriptor_dim; ++i) acc += first.weights(i, j) * descriptor[i];
        bias[j] = acc;
    }
    first.weights = Mat(first.weights.bottomRows(fan_in - descriptor_dim));
    first.biases = std::move(bias);
    return policy;
}

struct InjectedPolicy {
    Vec genotype;           // folded, archive architecture
    Vec target_descriptor;  // the descriptor the policy was specialized for
};

/// Actor injection: draws descriptors uniformly over the unit descriptor box
/// (filled or not) and folds the actor once per draw. Evaluation transitions
/// of these offspring later carry the sampled descriptor as target.
inline std::vector<InjectedPolicy> actor_injection(const MlpParams& actor, Index count, Index descriptor_dim,
                                                   RngEngine& rng) {
    require(count >= 0, "actor_injection: count must be >= 0");
    std::uniform_real_distribution<Real> unit(0.0, 1.0);
    std::vector<InjectedPolicy> injected;
    injected.reserve(static_cast<std::size_t>(count));
    for (Index k = 0; k < count; ++k) {
        Vec d(descriptor_dim);
        for (Index i = 0; i < descriptor_dim; ++i) d[i] = unit(rng);
        injected.push_back({flatten(fold_actor(actor, d)), std::move(d)});
    }
    return injected;
}

}  // namespace qdrl
