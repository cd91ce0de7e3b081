#pragma once

#include <qdrl/archive.hpp>
#include <qdrl/common.hpp>
#include <qdrl/env.hpp>
#include <qdrl/nn.hpp>
#include <qdrl/parallel.hpp>
#include <qdrl/replay_buffer.hpp>
#include <qdrl/rng.hpp>
#include <qdrl/td3.hpp>
#include <qdrl/variation.hpp>

#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qdrl {

enum class Algorithm { map_elites, pga_me, dcg_me, dcrl_me, ablation_ai, ablation_actor };

inline std::string algorithm_id(Algorithm a) {
    switch (a) {
        case Algorithm::map_elites: return "map-elites";
        case Algorithm::pga_me: return "pga-me";
        case Algorithm::dcg_me: return "dcg-me";
        case Algorithm::dcrl_me: return "dcrl-me";
        case Algorithm::ablation_ai: return "ablation-ai";
        case Algorithm::ablation_actor: return "ablation-actor";
    }
    throw std::invalid_argument("algorithm_id: unknown algorithm");
}

inline Algorithm algorithm_from_id(std::string_view id) {
    if (id == "map-elites") return Algorithm::map_elites;
    if (id == "pga-me") return Algorithm::pga_me;
    if (id == "dcg-me") return Algorithm::dcg_me;
    if (id == "dcrl-me") return Algorithm::dcrl_me;
    if (id == "ablation-ai") return Algorithm::ablation_ai;
    if (id == "ablation-actor") return Algorithm::ablation_actor;
    throw std::invalid_argument("unknown algorithm id: " + std::string(id));
}

inline bool has_learner(Algorithm a) { return a != Algorithm::map_elites; }

inline bool conditioned_critic(Algorithm a) {
    return a == Algorithm::dcg_me || a == Algorithm::dcrl_me || a == Algorithm::ablation_ai ||
           a == Algorithm::ablation_actor;
}

inline bool conditioned_actor(Algorithm a) {
    return a == Algorithm::dcg_me || a == Algorithm::dcrl_me || a == Algorithm::ablation_ai;
}

struct GaConfig {
    Real sigma1 = 0.005;
    Real sigma2 = 0.05;
};

struct ArchiveConfig {
    Index num_centroids = 256;
    Index cvt_samples = 0;  // 0 -> 50 * num_centroids
    Index cvt_iterations = 100;
    std::uint64_t cvt_seed = 1;
};

struct NetworkConfig {
    std::vector<Index> policy_hidden{64, 64};  // actor shares this, plus the descriptor input
    std::vector<Index> critic_hidden{64, 64};
};

struct RunConfig {
    Algorithm algorithm = Algorithm::dcrl_me;
    Env env;
    std::uint64_t seed = 0;
    Index budget = 0;  // evaluation budget I
    // batch sizes; -1 picks the per-algorithm defaults
    Index batch_ga = -1;
    Index batch_pg = -1;
    Index batch_ai = -1;
    Index batch_ae = -1;
    Td3Config td3;
    GaConfig ga;
    ArchiveConfig archive;
    NetworkConfig networks;
    Index replay_capacity = 1000000;
    Index workers = 1;
};

inline void apply_batch_defaults(RunConfig& config) {
    Index ga = 128, pg = 0, ai = 0, ae = 0;
    switch (config.algorithm) {
        case Algorithm::map_elites: ga = 256; break;
        case Algorithm::pga_me: pg = 127; ai = 1; break;
        case Algorithm::dcg_me: pg = 128; ae = 64; break;
        case Algorithm::dcrl_me: pg = 64; ai = 64; break;
        case Algorithm::ablation_ai:
        case Algorithm::ablation_actor: pg = 128; break;
    }
    if (config.batch_ga < 0) config.batch_ga = ga;
    if (config.batch_pg < 0) config.batch_pg = pg;
    if (config.batch_ai < 0) config.batch_ai = ai;
    if (config.batch_ae < 0) config.batch_ae = ae;
}

inline void validate(const RunConfig& config) {
    validate(config.td3);
    require(config.batch_ga >= 0 && config.batch_pg >= 0 && config.batch_ai >= 0 && config.batch_ae >= 0,
            "RunConfig: batch sizes must be set and non-negative");
    const Index b = config.batch_ga + config.batch_pg + config.batch_ai;
    require(b >= 1, "RunConfig: total batch size must be >= 1");
    require(config.budget >= b, "RunConfig: budget I must be at least one generation (b)");
    require(config.archive.num_centroids >= 1, "RunConfig: need at least one centroid");
    require(config.ga.sigma1 >= 0.0 && config.ga.sigma2 >= 0.0, "RunConfig: GA sigmas must be >= 0");
    require(config.replay_capacity >= config.td3.batch_size,
            "RunConfig: replay capacity below one training batch");
    require(config.workers >= 1, "RunConfig: workers must be >= 1");
    switch (config.algorithm) {
        case Algorithm::map_elites:
            require(config.batch_pg == 0 && config.batch_ai == 0 && config.batch_ae == 0,
                    "RunConfig: map-elites uses GA-only batches");
            break;
        case Algorithm::pga_me:
        case Algorithm::dcrl_me:
            require(config.batch_ae == 0, "RunConfig: actor evaluation is a dcg-me mechanism");
            break;
        case Algorithm::dcg_me:
            require(config.batch_ai == 0, "RunConfig: dcg-me does not inject the actor");
            break;
        case Algorithm::ablation_ai:
        case Algorithm::ablation_actor:
            require(config.batch_ai == 0 && config.batch_ae == 0,
                    "RunConfig: ablations run without injection and actor evaluation");
            break;
    }
}

enum class Origin { ga, pg, ai };

struct OriginTally {
    Index inserted = 0;
    Index replaced = 0;
    Index rejected = 0;
    Real improvement_sum = 0.0;

    void record(const AddOutcome& outcome) {
        switch (outcome.kind) {
            case AddOutcome::Kind::inserted: ++inserted; break;
            case AddOutcome::Kind::replaced: ++replaced; break;
            case AddOutcome::Kind::rejected: ++rejected; break;
        }
        improvement_sum += outcome.improvement;
    }
};

struct GenerationReport {
    Index generation = 0;
    Index evaluations = 0;  // cumulative budget counter after this generation
    OriginTally ga, pg, ai;
    ArchiveMetrics metrics;
    // mean S(d, d') over this generation's inserted episodes; NaN when the
    // algorithm has no descriptor-conditioned critic
    Real mean_similarity = std::numeric_limits<Real>::quiet_NaN();
    Index pg_noops = 0;
};

struct RunResult {
    Archive archive;
    std::optional<ActorCriticState> learner;
    std::optional<ReplayBuffer> buffer;
    std::vector<GenerationReport> reports;
    MlpArchitecture policy_arch;
};

namespace detail {

struct OffspringOutcome {
    Vec genotype;
    Origin origin = Origin::ga;
    EvalResult eval;
    bool pg_noop = false;
};

inline void stamp_targets(std::vector<Transition>& transitions, const Vec& target) {
    for (Transition& t : transitions) t.target_descriptor = target;
}

}  // namespace detail

/// One engine drives all six schedulers; the algorithm selects batch
/// composition, network conditioning and the actor-evaluation loop. The
/// archive is initialized with b randomly initialized genotypes (not counted
/// against the budget; their addition telemetry folds into generation 0's GA
/// tally), then generations run until the budget counter reaches I.
inline RunResult run(RunConfig config) {
    apply_batch_defaults(config);
    validate(config);

    const Env& env = config.env;
    const Index state_dim = env.state_dim();
    const Index action_dim = env.action_dim();
    const Index descriptor_dim = env.descriptor_dim();
    const std::uint64_t seed = config.seed;
    const Algorithm algo = config.algorithm;
    const bool learner = has_learner(algo);
    const bool cond_critic = conditioned_critic(algo);
    const bool cond_actor = conditioned_actor(algo);
    const Index b_ga = config.batch_ga, b_pg = config.batch_pg, b_ai = config.batch_ai, b_ae = config.batch_ae;
    const Index b = b_ga + b_pg + b_ai;

    MlpArchitecture policy_arch;
    policy_arch.dims.push_back(state_dim);
    policy_arch.dims.insert(policy_arch.dims.end(), config.networks.policy_hidden.begin(),
                            config.networks.policy_hidden.end());
    policy_arch.dims.push_back(action_dim);
    policy_arch.output_activation = Activation::tanh;

    const Index cvt_samples =
        config.archive.cvt_samples > 0 ? config.archive.cvt_samples : 50 * config.archive.num_centroids;
    Archive archive(cvt_centroids(config.archive.num_centroids, descriptor_dim, cvt_samples,
                                  config.archive.cvt_iterations, config.archive.cvt_seed),
                    policy_arch);

    std::optional<ActorCriticState> acs;
    std::optional<ReplayBuffer> buffer;
    if (learner) {
        RngEngine learner_rng = make_engine(seed, 0, 0, Stream::learner_init);
        acs = make_actor_critic(state_dim, action_dim, descriptor_dim, config.networks.policy_hidden,
                                config.networks.critic_hidden, cond_actor, cond_critic, config.td3,
                                learner_rng);
        buffer.emplace(state_dim, action_dim, descriptor_dim, config.replay_capacity);
    }

    RunResult result{std::move(archive), std::nullopt, std::nullopt, {}, policy_arch};

    // --- initialization: b random genotypes, evaluated and added ---
    OriginTally init_tally;
    {
        std::vector<detail::OffspringOutcome> outcomes(static_cast<std::size_t>(b));
        parallel_for(config.workers, b, [&](Index i) {
            RngEngine geno_rng = make_engine(seed, 0, static_cast<std::uint64_t>(i) + 1, Stream::init_genotype);
            Vec genotype = flatten(random_mlp(policy_arch, geno_rng));
            MlpParams net = unflatten(policy_arch, genotype);
            EvalResult eval = evaluate(
                env, [&net](const Vec& s) { return forward(net, s); },
                derive_seed(seed, 0, static_cast<std::uint64_t>(i) + 1, Stream::init_eval));
            detail::stamp_targets(eval.transitions, eval.descriptor);
            outcomes[static_cast<std::size_t>(i)] = {std::move(genotype), Origin::ga, std::move(eval), false};
        });
        for (auto& o : outcomes) {
            if (buffer) buffer->insert(o.eval.transitions);
            init_tally.record(result.archive.add(std::move(o.genotype), o.eval.fitness, o.eval.descriptor));
        }
    }

    // --- generations ---
    Index evaluations = 0;
    Index generation = 0;
    while (evaluations < config.budget) {
        const std::uint64_t gen_tag = static_cast<std::uint64_t>(generation) + 1;
        GenerationReport report;
        report.generation = generation;

        if (learner) {
            RngEngine train_rng = make_engine(seed, gen_tag, 0, Stream::training);
            train_actor_critic(*acs, *buffer, config.td3, train_rng);
        }

        RngEngine select_rng = make_engine(seed, gen_tag, 0, Stream::selection);
        std::vector<Parent> ga_parents = select_uniform(result.archive, 2 * b_ga, select_rng);
        std::vector<Parent> pg_parents = select_uniform(result.archive, b_pg, select_rng);

        std::vector<InjectedPolicy> injected;
        if (b_ai > 0) {
            if (algo == Algorithm::dcrl_me) {
                RngEngine ai_rng = make_engine(seed, gen_tag, 0, Stream::actor_injection);
                injected = actor_injection(acs->actor, b_ai, descriptor_dim, ai_rng);
            } else {
                // PGA-style greedy injection: the unconditioned actor already
                // has the archive architecture; its target descriptor is the
                // observed one, stamped after evaluation
                for (Index k = 0; k < b_ai; ++k) injected.push_back({flatten(acs->actor), Vec()});
            }
        }

        std::vector<Vec> ae_descriptors;
        if (b_ae > 0) {
            RngEngine ae_rng = make_engine(seed, gen_tag, 0, Stream::actor_evaluation);
            for (Parent& p : select_uniform(result.archive, b_ae, ae_rng))
                ae_descriptors.push_back(std::move(p.descriptor));
        }

        std::vector<detail::OffspringOutcome> outcomes(static_cast<std::size_t>(b));
        std::vector<EvalResult> ae_evals(static_cast<std::size_t>(b_ae));
        parallel_for(config.workers, b + b_ae, [&](Index i) {
            if (i < b) {
                RngEngine var_rng = make_engine(seed, gen_tag, static_cast<std::uint64_t>(i) + 1, Stream::variation);
                detail::OffspringOutcome out;
                Vec target;  // empty -> observed descriptor
                if (i < b_ga) {
                    out.origin = Origin::ga;
                    out.genotype = variation_ga(ga_parents[static_cast<std::size_t>(2 * i)].genotype,
                                                ga_parents[static_cast<std::size_t>(2 * i + 1)].genotype,
                                                config.ga.sigma1, config.ga.sigma2, var_rng);
                } else if (i < b_ga + b_pg) {
                    const auto& parent = pg_parents[static_cast<std::size_t>(i - b_ga)];
                    out.origin = Origin::pg;
                    PgResult pg = variation_pg(parent.genotype, parent.descriptor, acs->critic1, cond_critic,
                                               result.policy_arch, *buffer, config.td3.pg_steps,
                                               config.td3.batch_size, config.td3.policy_lr, var_rng);
                    out.genotype = std::move(pg.genotype);
                    out.pg_noop = !pg.trained;
                    target = parent.descriptor;
                } else {
                    const auto& inj = injected[static_cast<std::size_t>(i - b_ga - b_pg)];
                    out.origin = Origin::ai;
                    out.genotype = inj.genotype;
                    target = inj.target_descriptor;
                }
                MlpParams net = unflatten(result.policy_arch, out.genotype);
                out.eval = evaluate(
                    env, [&net](const Vec& s) { return forward(net, s); },
                    derive_seed(seed, gen_tag, static_cast<std::uint64_t>(i) + 1, Stream::evaluation));
                detail::stamp_targets(out.eval.transitions, target.size() > 0 ? target : out.eval.descriptor);
                outcomes[static_cast<std::size_t>(i)] = std::move(out);
            } else {
                const Index j = i - b;
                MlpParams net = fold_actor(acs->actor, ae_descriptors[static_cast<std::size_t>(j)]);
                EvalResult eval = evaluate(
                    env, [&net](const Vec& s) { return forward(net, s); },
                    derive_seed(seed, gen_tag, static_cast<std::uint64_t>(j) + 1, Stream::actor_evaluation));
                detail::stamp_targets(eval.transitions, ae_descriptors[static_cast<std::size_t>(j)]);
                ae_evals[static_cast<std::size_t>(j)] = std::move(eval);
            }
        });

        // actor-evaluation rollouts feed the buffer only, never the archive
        for (const EvalResult& eval : ae_evals) buffer->insert(eval.transitions);
        for (auto& o : outcomes) {
            if (buffer) buffer->insert(o.eval.transitions);
            const AddOutcome outcome = result.archive.add(std::move(o.genotype), o.eval.fitness, o.eval.descriptor);
            switch (o.origin) {
                case Origin::ga: report.ga.record(outcome); break;
                case Origin::pg: report.pg.record(outcome); break;
                case Origin::ai: report.ai.record(outcome); break;
            }
            if (o.pg_noop) ++report.pg_noops;
        }

        if (cond_critic) {
            Real total = 0.0;
            for (const auto& o : outcomes)
                total += similarity(o.eval.descriptor, o.eval.transitions.front().target_descriptor,
                                    config.td3.length_scale);
            for (std::size_t j = 0; j < ae_evals.size(); ++j)
                total += similarity(ae_evals[j].descriptor, ae_descriptors[j], config.td3.length_scale);
            report.mean_similarity = total / static_cast<Real>(b + b_ae);
        }

        if (generation == 0) {
            report.ga.inserted += init_tally.inserted;
            report.ga.replaced += init_tally.replaced;
            report.ga.rejected += init_tally.rejected;
            report.ga.improvement_sum += init_tally.improvement_sum;
        }
        evaluations += b + b_ae;
        report.evaluations = evaluations;
        report.metrics = result.archive.metrics();
        result.reports.push_back(std::move(report));
        ++generation;
    }

    result.learner = std::move(acs);
    result.buffer = std::move(buffer);
    return result;
}

inline RunResult run_dcrl_me(RunConfig config) {
    config.algorithm = Algorithm::dcrl_me;
    return run(std::move(config));
}

inline RunResult run_dcg_me(RunConfig config) {
    config.algorithm = Algorithm::dcg_me;
    return run(std::move(config));
}

inline RunResult run_pga_me(RunConfig config) {
    config.algorithm = Algorithm::pga_me;
    return run(std::move(config));
}

inline RunResult run_map_elites(RunConfig config) {
    config.algorithm = Algorithm::map_elites;
    return run(std::move(config));
}

inline RunResult run_ablation(RunConfig config, Algorithm kind) {
    require(kind == Algorithm::ablation_ai || kind == Algorithm::ablation_actor,
            "run_ablation: kind must be one of the two ablations");
    config.algorithm = kind;
    return run(std::move(config));
}

}  // namespace qdrl
