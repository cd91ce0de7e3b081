#pragma once

#include <qdrl/common.hpp>
#include <qdrl/rng.hpp>

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

namespace qdrl {

enum class EnvKind { pointmass_omni, pointtrap_omni, dutycycle_uni };

inline std::string env_id(EnvKind kind) {
    switch (kind) {
        case EnvKind::pointmass_omni: return "pointmass-omni";
        case EnvKind::pointtrap_omni: return "pointtrap-omni";
        case EnvKind::dutycycle_uni: return "dutycycle-uni";
    }
    throw std::invalid_argument("env_id: unknown kind");
}

inline EnvKind env_kind_from_id(std::string_view id) {
    if (id == "pointmass-omni") return EnvKind::pointmass_omni;
    if (id == "pointtrap-omni") return EnvKind::pointtrap_omni;
    if (id == "dutycycle-uni") return EnvKind::dutycycle_uni;
    throw std::invalid_argument("unknown env id: " + std::string(id));
}

/// Immutable environment description. Rollouts are pure functions of
/// (env, policy, seed), so instances can be shared across workers freely.
///
/// Point tasks: state (x, y, vx, vy, t/T), arena [-arena_half, arena_half]^2,
/// dynamics v <- clip(v + a dt), x <- clip(x + v dt), reward 1 - mean(a^2)/2.
/// The trap variant adds an axis-aligned rectangle that stops the agent at
/// its face and zeroes velocity. Descriptor: final position scaled to [0,1]^2.
///
/// Duty-cycle task: state (vx/v_max, phase, t/T); action channels drive vx on
/// alternating steps, reward clip(vx/v_max,0,1)/2 + (1 - mean(a^2))/2.
/// Descriptor: per-channel fraction of steps with action_i > 0.
struct Env {
    EnvKind kind = EnvKind::pointmass_omni;
    Index episode_length = 100;
    Real dt = 0.1;
    Real arena_half = 5.0;
    Real v_max = 1.0;
    // trap rectangle (pointtrap-omni only), in arena coordinates
    Real trap_x_lo = -1.5, trap_x_hi = 1.5;
    Real trap_y_lo = 1.0, trap_y_hi = 1.5;
    // stochasticity knobs, all off by default
    Real reset_noise = 0.0;       // uniform ball radius around the start state
    Real action_noise = 0.0;      // gaussian std added to executed actions
    Real descriptor_noise = 0.0;  // gaussian std added to the observed descriptor

    Index state_dim() const { return kind == EnvKind::dutycycle_uni ? 3 : 5; }
    Index action_dim() const { return 2; }
    Index descriptor_dim() const { return 2; }
};

inline Env make_env(EnvKind kind) {
    Env env;
    env.kind = kind;
    env.episode_length = (kind == EnvKind::dutycycle_uni) ? 200 : 100;
    return env;
}

inline Env make_env(std::string_view id) { return make_env(env_kind_from_id(id)); }

struct StepResult {
    Vec next_state;
    Real reward = 0.0;
    bool done = false;
};

/// Descriptor-augmented experience record. Both descriptors are empty until
/// stamped: the observed one at the end of the episode, the target one by the
/// scheduler according to the offspring's origin.
struct Transition {
    Vec state;
    Vec action;
    Real reward = 0.0;
    Vec next_state;
    bool done = false;
    Vec observed_descriptor;
    Vec target_descriptor;
};

struct EvalResult {
    Real fitness = 0.0;
    Vec descriptor;
    std::vector<Transition> transitions;
};

inline Vec reset(const Env& env, RngEngine& rng) {
    Vec state = Vec::Zero(env.state_dim());
    if (env.reset_noise > 0.0) {
        // uniform in the ball of radius reset_noise around the nominal start
        std::uniform_real_distribution<Real> unit(-1.0, 1.0);
        if (env.kind == EnvKind::dutycycle_uni) {
            state[0] = env.reset_noise * unit(rng);  // initial vx / v_max
        } else {
            Real dx, dy;
            do {
                dx = unit(rng);
                dy = unit(rng);
            } while (dx * dx + dy * dy > 1.0);
            state[0] = env.reset_noise * dx;
            state[1] = env.reset_noise * dy;
        }
    }
    if (env.kind == EnvKind::dutycycle_uni) state[1] = 1.0;  // phase of step 0
    return state;
}

namespace detail {

inline bool inside_trap(const Env& env, Real x, Real y) {
    return x > env.trap_x_lo && x < env.trap_x_hi && y > env.trap_y_lo && y < env.trap_y_hi;
}

/// First intersection of the segment p -> q with the trap boundary (slab
/// method); returns the entry parameter in [0, 1]. q must be inside.
inline Real trap_entry_time(const Env& env, Real px, Real py, Real qx, Real qy) {
    Real t_enter = 0.0;
    const Real dx = qx - px;
    const Real dy = qy - py;
    if (dx != 0.0) {
        const Real t1 = (env.trap_x_lo - px) / dx;
        const Real t2 = (env.trap_x_hi - px) / dx;
        t_enter = std::max(t_enter, std::min(t1, t2));
    }
    if (dy != 0.0) {
        const Real t1 = (env.trap_y_lo - py) / dy;
        const Real t2 = (env.trap_y_hi - py) / dy;
        t_enter = std::max(t_enter, std::min(t1, t2));
    }
    return std::clamp(t_enter, 0.0, 1.0);
}

}  // namespace detail

/// Deterministic dynamics step. Actions are clamped to [-1, 1]; rewards are
/// non-negative by construction. Episodes end by time-out only.
inline StepResult step(const Env& env, const Eigen::Ref<const Vec>& state, const Eigen::Ref<const Vec>& action) {
    require(state.size() == env.state_dim(), "step: state dim mismatch");
    require(action.size() == env.action_dim(), "step: action dim mismatch");
    require_finite(state, "step: state");
    require_finite(action, "step: action");

    const Index T = env.episode_length;
    Vec a = action.cwiseMax(-1.0).cwiseMin(1.0);
    const Real energy = a.array().square().mean();

    StepResult result;
    if (env.kind == EnvKind::dutycycle_uni) {
        const Index t = static_cast<Index>(std::llround(state[2] * static_cast<Real>(T)));
        const Index channel = t % 2;
        Real vx = state[0] * env.v_max;
        vx = std::clamp(vx + env.dt * a[channel], -env.v_max, env.v_max);
        result.reward = 0.5 * std::clamp(vx / env.v_max, 0.0, 1.0) + 0.5 * (1.0 - energy);
        result.next_state = Vec(3);
        result.next_state[0] = vx / env.v_max;
        result.next_state[1] = ((t + 1) % 2 == 0) ? 1.0 : -1.0;
        result.next_state[2] = static_cast<Real>(t + 1) / static_cast<Real>(T);
        result.done = (t + 1 >= T);
        return result;
    }

    const Index t = static_cast<Index>(std::llround(state[4] * static_cast<Real>(T)));
    Vec v = state.segment(2, 2);
    v = (v + env.dt * a).cwiseMax(-env.v_max).cwiseMin(env.v_max);
    Vec p = state.head(2);
    Vec q = p + env.dt * v;
    if (env.kind == EnvKind::pointtrap_omni) {
        if (detail::inside_trap(env, q[0], q[1])) {
            const Real t_hit = detail::trap_entry_time(env, p[0], p[1], q[0], q[1]);
            q = p + t_hit * (q - p);
            v.setZero();
        } else if (detail::inside_trap(env, p[0], p[1])) {
            q = p;  // should not happen; stay put rather than tunnel out
            v.setZero();
        }
    }
    q = q.cwiseMax(-env.arena_half).cwiseMin(env.arena_half);

    result.reward = 1.0 - 0.5 * energy;
    result.next_state = Vec(5);
    result.next_state.head(2) = q;
    result.next_state.segment(2, 2) = v;
    result.next_state[4] = static_cast<Real>(t + 1) / static_cast<Real>(T);
    result.done = (t + 1 >= T);
    return result;
}

/// Runs exactly T steps and computes the trajectory-level descriptor:
/// final position scaled to [0,1]^2 for the omnidirectional tasks, the
/// per-channel positive-action duty cycle for the unidirectional one.
/// Transitions record executed (noisy, clamped) actions and are stamped with
/// the observed descriptor; target descriptors are left for the caller.
template <typename Policy>
EvalResult evaluate(const Env& env, Policy&& policy, std::uint64_t seed) {
    RngEngine rng(seed);
    std::normal_distribution<Real> gauss;
    const Index T = env.episode_length;

    EvalResult result;
    result.transitions.reserve(T);
    Vec state = reset(env, rng);
    Vec positive_counts = Vec::Zero(env.action_dim());

    for (Index t = 0; t < T; ++t) {
        Vec a = policy(state);
        require(a.size() == env.action_dim(), "evaluate: policy action dim mismatch");
        require_finite(a, "evaluate: action");
        if (env.action_noise > 0.0)
            for (Index i = 0; i < a.size(); ++i) a[i] += env.action_noise * gauss(rng);
        a = a.cwiseMax(-1.0).cwiseMin(1.0);
        for (Index i = 0; i < a.size(); ++i)
            if (a[i] > 0.0) positive_counts[i] += 1.0;

        StepResult sr = step(env, state, a);
        result.fitness += sr.reward;
        result.transitions.push_back({state, a, sr.reward, sr.next_state, sr.done, Vec(), Vec()});
        state = std::move(sr.next_state);
    }

    if (env.kind == EnvKind::dutycycle_uni) {
        result.descriptor = positive_counts / static_cast<Real>(T);
    } else {
        result.descriptor = (state.head(2).array() + env.arena_half) / (2.0 * env.arena_half);
    }
    if (env.descriptor_noise > 0.0) {
        for (Index i = 0; i < result.descriptor.size(); ++i)
            result.descriptor[i] += env.descriptor_noise * gauss(rng);
        result.descriptor = result.descriptor.cwiseMax(0.0).cwiseMin(1.0);
    }
    for (auto& tr : result.transitions) tr.observed_descriptor = result.descriptor;
    return result;
}

}  // namespace qdrl
