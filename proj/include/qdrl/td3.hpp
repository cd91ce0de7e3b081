#pragma once

#include <qdrl/adam.hpp>
#include <qdrl/common.hpp>
#include <qdrl/nn.hpp>
#include <qdrl/replay_buffer.hpp>
#include <qdrl/rng.hpp>

#include <atomic>
#include <cstdint>
#include <vector>

namespace qdrl {

struct Td3Config {
    Real gamma = 0.99;
    Real tau = 0.005;
    Index actor_delay = 2;
    Real smoothing_sigma = 0.2;
    Real smoothing_clip = 0.5;
    Index batch_size = 100;
    Index critic_steps = 3000;  // n, per generation
    Index pg_steps = 150;       // m, per PG-variation offspring
    Real length_scale = 0.1;    // L, of the similarity kernel
    Real actor_lr = 3e-4;
    Real critic_lr = 3e-4;
    Real policy_lr = 5e-3;  // PG variation per-solution optimizer
};

inline void validate(const Td3Config& cfg) {
    require(cfg.gamma > 0.0 && cfg.gamma < 1.0, "Td3Config: gamma must be in (0,1)");
    require(cfg.length_scale > 0.0, "Td3Config: length scale must be > 0");
    require(cfg.actor_delay >= 1, "Td3Config: actor delay must be >= 1");
    require(cfg.tau >= 0.0 && cfg.tau <= 1.0, "Td3Config: tau must be in [0,1]");
    require(cfg.batch_size >= 1, "Td3Config: batch size must be >= 1");
}

/// Diagnostic counter; lets tests assert that non-conditioned algorithm paths
/// never touch the similarity kernel.
inline std::atomic<std::uint64_t>& similarity_call_count() {
    static std::atomic<std::uint64_t> count{0};
    return count;
}

/// Similarity kernel S(d, d') = exp(-||d - d'|| / L) over normalized
/// descriptors; 1 iff the descriptors coincide, strictly decreasing in the
/// Euclidean distance.
inline Real similarity(const Eigen::Ref<const Vec>& d, const Eigen::Ref<const Vec>& d_target, Real length_scale) {
    require(length_scale > 0.0, "similarity: length scale must be > 0");
    require(d.size() == d_target.size(), "similarity: descriptor dim mismatch");
    similarity_call_count().fetch_add(1, std::memory_order_relaxed);
    return std::exp(-(d - d_target).norm() / length_scale);
}

/// Column-wise similarity of two descriptor batches.
inline Vec similarity_batch(const Eigen::Ref<const Mat>& d, const Eigen::Ref<const Mat>& d_target,
                            Real length_scale) {
    require(length_scale > 0.0, "similarity: length scale must be > 0");
    require(d.rows() == d_target.rows() && d.cols() == d_target.cols(), "similarity: batch shape mismatch");
    similarity_call_count().fetch_add(static_cast<std::uint64_t>(d.cols()), std::memory_order_relaxed);
    return ((d - d_target).colwise().norm() * (-1.0 / length_scale)).array().exp().transpose();
}

/// Conditioned inputs always put the descriptor first: actor input is
/// [d; s], critic input is [d; s; a]. The ordering is part of the genotype
/// and archive-file contract; it makes the actor-injection fold reproduce the
/// conditioned actor exactly (see variation.hpp).
inline Mat actor_input(const Eigen::Ref<const Mat>& states, const Eigen::Ref<const Mat>& descriptors,
                       bool conditioned) {
    if (!conditioned) return states;
    Mat input(descriptors.rows() + states.rows(), states.cols());
    input.topRows(descriptors.rows()) = descriptors;
    input.bottomRows(states.rows()) = states;
    return input;
}

inline Mat critic_input(const Eigen::Ref<const Mat>& states, const Eigen::Ref<const Mat>& actions,
                        const Eigen::Ref<const Mat>& descriptors, bool conditioned) {
    Mat input((conditioned ? descriptors.rows() : 0) + states.rows() + actions.rows(), states.cols());
    Index row = 0;
    if (conditioned) {
        input.topRows(descriptors.rows()) = descriptors;
        row += descriptors.rows();
    }
    input.middleRows(row, states.rows()) = states;
    input.bottomRows(actions.rows()) = actions;
    return input;
}

/// TD3 learner state: actor, twin critics, their target copies, one Adam
/// state per network. Conditioning flags select which networks see the
/// descriptor (both for DCRL/DCG, critic only for the actor ablation,
/// neither for PGA).
struct ActorCriticState {
    MlpParams actor, critic1, critic2;
    MlpParams target_actor, target_critic1, target_critic2;
    AdamState actor_opt, critic1_opt, critic2_opt;
    bool conditioned_actor = true;
    bool conditioned_critic = true;
    std::int64_t steps = 0;
    std::int64_t actor_updates = 0;
};

inline ActorCriticState make_actor_critic(Index state_dim, Index action_dim, Index descriptor_dim,
                                          const std::vector<Index>& actor_hidden,
                                          const std::vector<Index>& critic_hidden, bool conditioned_actor,
                                          bool conditioned_critic, const Td3Config& cfg, RngEngine& rng) {
    ActorCriticState acs;
    acs.conditioned_actor = conditioned_actor;
    acs.conditioned_critic = conditioned_critic;

    MlpArchitecture actor_arch;
    actor_arch.dims.push_back(state_dim + (conditioned_actor ? descriptor_dim : 0));
    actor_arch.dims.insert(actor_arch.dims.end(), actor_hidden.begin(), actor_hidden.end());
    actor_arch.dims.push_back(action_dim);
    actor_arch.output_activation = Activation::tanh;

    MlpArchitecture critic_arch;
    critic_arch.dims.push_back(state_dim + action_dim + (conditioned_critic ? descriptor_dim : 0));
    critic_arch.dims.insert(critic_arch.dims.end(), critic_hidden.begin(), critic_hidden.end());
    critic_arch.dims.push_back(1);
    critic_arch.output_activation = Activation::identity;

    acs.actor = random_mlp(actor_arch, rng);
    acs.critic1 = random_mlp(critic_arch, rng);
    acs.critic2 = random_mlp(critic_arch, rng);
    acs.target_actor = acs.actor;
    acs.target_critic1 = acs.critic1;
    acs.target_critic2 = acs.critic2;
    acs.actor_opt = make_adam(parameter_count(actor_arch), cfg.actor_lr);
    acs.critic1_opt = make_adam(parameter_count(critic_arch), cfg.critic_lr);
    acs.critic2_opt = make_adam(parameter_count(critic_arch), cfg.critic_lr);
    return acs;
}

/// Clipped Gaussian target-policy smoothing noise; every entry lies in
/// [-smoothing_clip, +smoothing_clip].
inline Mat smoothing_noise(Index action_dim, Index n, const Td3Config& cfg, RngEngine& rng) {
    Mat noise = Mat::Zero(action_dim, n);
    if (cfg.smoothing_sigma > 0.0) {
        std::normal_distribution<Real> gauss(0.0, cfg.smoothing_sigma);
        for (Index j = 0; j < n; ++j)
            for (Index i = 0; i < action_dim; ++i)
                noise(i, j) = std::clamp(gauss(rng), -cfg.smoothing_clip, cfg.smoothing_clip);
    }
    return noise;
}

/// Regression target for both critics. With similarity scaling this is the
/// descriptor-conditioned target
///   y = S(d, d') r + gamma min_i Q'_i(s', pi'(s' | d') + eps | d'),
/// without it the plain TD3 target on the same networks. Episodes end by
/// time-out, so the bootstrap term is never masked.
inline Vec critic_target(const TransitionBatch& batch, const ActorCriticState& acs, const Td3Config& cfg,
                         RngEngine& rng, bool similarity_scaled) {
    require(batch.size() > 0, "critic_target: empty batch");
    const Index n = batch.size();
    Mat next_action = forward_batch(acs.target_actor,
                                    actor_input(batch.next_states, batch.target_descriptors, acs.conditioned_actor));
    next_action += smoothing_noise(next_action.rows(), n, cfg, rng);
    Mat input = critic_input(batch.next_states, next_action, batch.target_descriptors, acs.conditioned_critic);
    Vec q1 = forward_batch(acs.target_critic1, input).transpose();
    Vec q2 = forward_batch(acs.target_critic2, input).transpose();
    Vec bootstrap = q1.cwiseMin(q2);
    Vec scaled_reward =
        similarity_scaled
            ? Vec(similarity_batch(batch.observed_descriptors, batch.target_descriptors, cfg.length_scale)
                      .cwiseProduct(batch.rewards))
            : batch.rewards;
    return scaled_reward + cfg.gamma * bootstrap;
}

struct TrainStats {
    Index critic_steps = 0;
    Index actor_updates = 0;
    bool skipped = false;  // buffer below one batch, warm-up
};

/// Deterministic policy gradient of J = mean_j Q(s_j, pi(s_j) [| d_j]) with
/// respect to the policy parameters (ascent direction, canonical flat
/// layout). This is the shared core of the actor update and of the PG
/// variation operator; the critic is conditioned on `descriptors` when
/// `conditioned_critic` is set, the policy on the same when
/// `conditioned_policy` is set.
inline Vec dpg_gradient(const MlpParams& policy, const MlpParams& critic, const Eigen::Ref<const Mat>& states,
                        const Eigen::Ref<const Mat>& descriptors, bool conditioned_policy,
                        bool conditioned_critic) {
    const Index n = states.cols();
    ForwardTrace policy_trace = forward_traced(policy, actor_input(states, descriptors, conditioned_policy));
    const Mat& actions = policy_trace.output();
    ForwardTrace critic_trace =
        forward_traced(critic, critic_input(states, actions, descriptors, conditioned_critic));
    Mat upstream = Mat::Constant(1, n, 1.0 / static_cast<Real>(n));
    Mat critic_input_grads = backward_batch(critic, critic_trace, upstream).input_grads;
    Mat action_grads = critic_input_grads.bottomRows(actions.rows());
    return backward_batch(policy, policy_trace, action_grads).param_grads;
}

namespace detail {

inline void dpg_ascent_step(MlpParams& policy, AdamState& opt, const MlpParams& critic,
                            const Eigen::Ref<const Mat>& states, const Eigen::Ref<const Mat>& descriptors,
                            bool conditioned_policy, bool conditioned_critic) {
    Vec grads = dpg_gradient(policy, critic, states, descriptors, conditioned_policy, conditioned_critic);
    adam_step(policy, Vec(-grads), opt);
}

}  // namespace detail

/// Descriptor-conditioned actor-critic training: n regression steps on both
/// critics toward the shared target, delayed actor updates and target
/// soft-updates every actor_delay-th step. No-ops (with a notice in the
/// stats) until the buffer holds one full batch.
inline TrainStats train_actor_critic(ActorCriticState& acs, const ReplayBuffer& buffer, const Td3Config& cfg,
                                     RngEngine& rng) {
    TrainStats stats;
    if (buffer.size() < cfg.batch_size) {
        stats.skipped = true;
        return stats;
    }
    for (Index t = 1; t <= cfg.critic_steps; ++t) {
        TransitionBatch batch = buffer.sample_uniform(cfg.batch_size, rng);
        Vec y = critic_target(batch, acs, cfg, rng, acs.conditioned_critic);

        Mat input =
            critic_input(batch.states, batch.actions, batch.target_descriptors, acs.conditioned_critic);
        for (auto [critic, opt] : {std::pair{&acs.critic1, &acs.critic1_opt}, {&acs.critic2, &acs.critic2_opt}}) {
            ForwardTrace trace = forward_traced(*critic, input);
            // d/dq of mean squared error to y
            Mat upstream = (trace.output().transpose() - y).transpose() * (2.0 / static_cast<Real>(batch.size()));
            Vec grads = backward_batch(*critic, trace, upstream).param_grads;
            adam_step(*critic, grads, *opt);
        }
        acs.steps += 1;
        stats.critic_steps += 1;

        if (t % cfg.actor_delay == 0) {
            detail::dpg_ascent_step(acs.actor, acs.actor_opt, acs.critic1, batch.states,
                                    batch.target_descriptors, acs.conditioned_actor, acs.conditioned_critic);
            acs.actor_updates += 1;
            stats.actor_updates += 1;
            soft_update(acs.target_actor, acs.actor, cfg.tau);
            soft_update(acs.target_critic1, acs.critic1, cfg.tau);
            soft_update(acs.target_critic2, acs.critic2, cfg.tau);
        }
    }
    return stats;
}

}  // namespace qdrl
