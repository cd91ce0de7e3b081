#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <qdrl/env.hpp>

#include "test_util.hpp"

using namespace qdrl;

namespace {

auto constant_policy(Vec action) {
    return [action = std::move(action)](const Vec&) { return action; };
}

auto zero_policy(Index action_dim) { return constant_policy(Vec::Zero(action_dim)); }

}  // namespace

TEST_CASE("reset: pointmass starts at arena center with zero velocity") {
    Env env = make_env(EnvKind::pointmass_omni);
    RngEngine rng(1);
    Vec s = reset(env, rng);
    CHECK(s.size() == 5);
    CHECK(s.isZero(0.0));
}

TEST_CASE("reset: equal seeds give identical states") {
    Env env = make_env(EnvKind::pointmass_omni);
    env.reset_noise = 0.05;
    RngEngine a(7), b(7);
    Vec sa = reset(env, a);
    Vec sb = reset(env, b);
    CHECK(sa == sb);
}

TEST_CASE("reset: noise scale 0.05 stays within the 0.05-ball of center") {
    Env env = make_env(EnvKind::pointmass_omni);
    env.reset_noise = 0.05;
    RngEngine rng(3);
    for (int i = 0; i < 1000; ++i) {
        Vec s = reset(env, rng);
        CHECK(s.head(2).norm() <= 0.05);
        CHECK(s.tail(3).isZero(0.0));
    }
}

TEST_CASE("step: pointmass zero action gives reward 1 and no motion") {
    Env env = make_env(EnvKind::pointmass_omni);
    RngEngine rng(1);
    Vec s = reset(env, rng);
    StepResult r = step(env, s, Vec::Zero(2));
    CHECK(r.reward == 1.0);
    CHECK(r.next_state.head(4).isZero(0.0));
    CHECK(!r.done);
}

TEST_CASE("step: pointmass action (1,1) gives reward 0.5") {
    Env env = make_env(EnvKind::pointmass_omni);
    RngEngine rng(1);
    Vec s = reset(env, rng);
    StepResult r = step(env, s, Vec::Ones(2));
    CHECK(r.reward == doctest::Approx(0.5));
}

TEST_CASE("step: actions outside [-1,1] are clamped") {
    Env env = make_env(EnvKind::pointmass_omni);
    RngEngine rng(1);
    Vec s = reset(env, rng);
    Vec big(2);
    big << 10.0, -10.0;
    StepResult r = step(env, s, big);
    CHECK(r.reward == doctest::Approx(0.5));
    CHECK(r.next_state[2] == doctest::Approx(env.dt));
    CHECK(r.next_state[3] == doctest::Approx(-env.dt));
}

TEST_CASE("step: non-finite input is an error") {
    Env env = make_env(EnvKind::pointmass_omni);
    Vec s = Vec::Zero(5);
    Vec bad = Vec::Zero(2);
    bad[0] = std::numeric_limits<Real>::infinity();
    CHECK_THROWS_AS(step(env, s, bad), std::domain_error);
    s[1] = std::numeric_limits<Real>::quiet_NaN();
    CHECK_THROWS_AS(step(env, s, Vec::Zero(2)), std::domain_error);
}

TEST_CASE("step: trajectory aimed through the trap halts at the trap face") {
    Env env = make_env(EnvKind::pointtrap_omni);
    // drive straight up (+y) from the center toward the trap
    Vec up(2);
    up << 0.0, 1.0;
    Vec s = Vec::Zero(5);
    for (int t = 0; t < 60; ++t) {
        StepResult r = step(env, s, up);
        s = r.next_state;
    }
    CHECK(s[0] == 0.0);
    CHECK(s[1] == doctest::Approx(env.trap_y_lo));  // stopped at the south face
    CHECK(s[2] == 0.0);                             // velocity zeroed on contact
    CHECK(s[3] == 0.0);
    // independent straight-line simulation of the same rollout
    Real y = 0.0, vy = 0.0;
    for (int t = 0; t < 60; ++t) {
        vy = std::min(vy + env.dt * 1.0, env.v_max);
        Real ny = y + env.dt * vy;
        if (ny > env.trap_y_lo && ny < env.trap_y_hi) {
            ny = env.trap_y_lo;
            vy = 0.0;
        }
        y = ny;
        if (vy == 0.0 && y == env.trap_y_lo) break;
    }
    CHECK(s[1] == doctest::Approx(y));
}

TEST_CASE("evaluate: pointmass zero policy gives fitness 100 at descriptor center") {
    Env env = make_env(EnvKind::pointmass_omni);
    EvalResult r = evaluate(env, zero_policy(2), 5);
    CHECK(r.fitness == doctest::Approx(100.0));
    CHECK(r.descriptor[0] == doctest::Approx(0.5));
    CHECK(r.descriptor[1] == doctest::Approx(0.5));
    CHECK(static_cast<Index>(r.transitions.size()) == env.episode_length);
    CHECK(r.transitions.back().done);
    CHECK(!r.transitions.front().done);
}

TEST_CASE("evaluate: duty-cycle policy (+1,-1) gives descriptor (1,0)") {
    Env env = make_env(EnvKind::dutycycle_uni);
    Vec a(2);
    a << 1.0, -1.0;
    EvalResult r = evaluate(env, constant_policy(a), 5);
    CHECK(r.descriptor[0] == doctest::Approx(1.0));
    CHECK(r.descriptor[1] == doctest::Approx(0.0));
}

TEST_CASE("evaluate: constant action (1,0) matches closed-form integration") {
    Env env = make_env(EnvKind::pointmass_omni);
    Vec a(2);
    a << 1.0, 0.0;
    EvalResult r = evaluate(env, constant_policy(a), 5);

    // independent closed-form rollout of the clipped dynamics
    Real x = 0.0, vx = 0.0, fitness = 0.0;
    for (Index t = 0; t < env.episode_length; ++t) {
        vx = std::min(vx + env.dt, env.v_max);
        x = std::min(x + env.dt * vx, env.arena_half);
        fitness += 1.0 - 0.5 * (1.0 * 1.0 + 0.0) / 2.0;
    }
    CHECK(r.fitness == doctest::Approx(fitness));
    CHECK(r.descriptor[0] == doctest::Approx((x + env.arena_half) / (2.0 * env.arena_half)));
    CHECK(r.descriptor[1] == doctest::Approx(0.5));
}

TEST_CASE("evaluate: reward positivity fuzz across envs") {
    RngEngine rng(99);
    std::uniform_real_distribution<Real> unit(-1.5, 1.5);
    for (EnvKind kind : {EnvKind::pointmass_omni, EnvKind::pointtrap_omni, EnvKind::dutycycle_uni}) {
        Env env = make_env(kind);
        for (int i = 0; i < 30000; ++i) {
            Vec s(env.state_dim());
            if (kind == EnvKind::dutycycle_uni) {
                s << unit(rng), (i % 2 == 0 ? 1.0 : -1.0), 0.25;
            } else {
                s << unit(rng) * 3.0, unit(rng) * 3.0, unit(rng), unit(rng), 0.25;
            }
            Vec a(2);
            a << unit(rng), unit(rng);
            StepResult r = step(env, s, a);
            CHECK(r.reward >= 0.0);
        }
    }
}

TEST_CASE("evaluate: descriptor containment and fitness/transition consistency") {
    RngEngine seeds(123);
    for (EnvKind kind : {EnvKind::pointmass_omni, EnvKind::pointtrap_omni, EnvKind::dutycycle_uni}) {
        Env env = make_env(kind);
        env.action_noise = 0.1;
        env.reset_noise = 0.05;
        for (int i = 0; i < 20; ++i) {
            Vec w(env.state_dim());
            for (Index j = 0; j < w.size(); ++j) w[j] = std::uniform_real_distribution<Real>(-1, 1)(seeds);
            auto policy = [&w](const Vec& s) { return Vec((Vec(2) << std::tanh(w.dot(s)), std::tanh(-w.dot(s))).finished()); };
            EvalResult r = evaluate(env, policy, seeds());
            CHECK((r.descriptor.array() >= 0.0).all());
            CHECK((r.descriptor.array() <= 1.0).all());
            Real sum = 0.0;
            for (const auto& tr : r.transitions) sum += tr.reward;
            CHECK(r.fitness == sum);
            for (const auto& tr : r.transitions) CHECK(tr.observed_descriptor == r.descriptor);
        }
    }
}

TEST_CASE("evaluate: determinism, equal (policy, seed) gives bitwise-equal results") {
    Env env = make_env(EnvKind::pointtrap_omni);
    env.action_noise = 0.2;
    env.reset_noise = 0.05;
    env.descriptor_noise = 0.01;
    auto policy = [](const Vec& s) { return Vec((Vec(2) << std::tanh(s[0] + s[2]), std::tanh(s[1] - s[3])).finished()); };
    EvalResult a = evaluate(env, policy, 42);
    EvalResult b = evaluate(env, policy, 42);
    CHECK(a.fitness == b.fitness);
    CHECK(a.descriptor == b.descriptor);
    REQUIRE(a.transitions.size() == b.transitions.size());
    for (std::size_t i = 0; i < a.transitions.size(); ++i) {
        CHECK(a.transitions[i].state == b.transitions[i].state);
        CHECK(a.transitions[i].action == b.transitions[i].action);
        CHECK(a.transitions[i].reward == b.transitions[i].reward);
    }
}

TEST_CASE("evaluate: descriptor depends on the whole trajectory, not a single step") {
    Env env = make_env(EnvKind::pointmass_omni);
    // two policies identical for the first half of the episode, then diverging
    auto make_policy = [&](Real late_ax) {
        return [late_ax, &env](const Vec& s) {
            Vec a = Vec::Zero(2);
            if (s[4] >= 0.5) a[0] = late_ax;
            return a;
        };
    };
    EvalResult r1 = evaluate(env, make_policy(1.0), 9);
    EvalResult r2 = evaluate(env, make_policy(-1.0), 9);
    const Index half = env.episode_length / 2;
    for (Index t = 0; t < half; ++t) CHECK(r1.transitions[t].state == r2.transitions[t].state);
    CHECK(r1.descriptor != r2.descriptor);
}
