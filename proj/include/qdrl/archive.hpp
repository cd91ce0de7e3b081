#pragma once

#include <qdrl/common.hpp>
#include <qdrl/nn.hpp>
#include <qdrl/rng.hpp>

#include <limits>
#include <optional>
#include <vector>

namespace qdrl {

/// Centroidal Voronoi tessellation of the unit box [0,1]^dim: Lloyd's
/// k-means over uniform samples. Deterministic for a fixed seed. Returns one
/// centroid per row.
inline Mat cvt_centroids(Index num_centroids, Index dim, Index num_samples, Index iterations,
                         std::uint64_t seed) {
    require(num_centroids >= 1, "cvt_centroids: need at least one centroid");
    require(dim >= 1, "cvt_centroids: dim must be >= 1");
    if (num_samples < num_centroids)
        throw std::invalid_argument("cvt_centroids: num_samples (" + std::to_string(num_samples) +
                                    ") must be >= num_centroids (" + std::to_string(num_centroids) + ")");

    RngEngine rng(splitmix64(seed));
    std::uniform_real_distribution<Real> unit(0.0, 1.0);
    Mat samples(num_samples, dim);
    for (Index i = 0; i < num_samples; ++i)
        for (Index j = 0; j < dim; ++j) samples(i, j) = unit(rng);

    // init with a random subset of the samples
    std::vector<Index> order(num_samples);
    for (Index i = 0; i < num_samples; ++i) order[i] = i;
    for (Index i = 0; i < num_centroids; ++i) {
        std::uniform_int_distribution<Index> pick(i, num_samples - 1);
        std::swap(order[i], order[pick(rng)]);
    }
    Mat centroids(num_centroids, dim);
    for (Index k = 0; k < num_centroids; ++k) centroids.row(k) = samples.row(order[k]);

    // Lloyd iterations; assignment uses ||x - c||^2 = ||x||^2 - 2 x.c + ||c||^2
    // so it reduces to a matrix product.
    std::vector<Index> assignment(num_samples);
    Vec sample_sq = samples.rowwise().squaredNorm();
    for (Index it = 0; it < iterations; ++it) {
        Mat scores = (-2.0 * samples * centroids.transpose()).rowwise() +
                     centroids.rowwise().squaredNorm().transpose();
        for (Index i = 0; i < num_samples; ++i) scores.row(i).minCoeff(&assignment[i]);

        Mat sums = Mat::Zero(num_centroids, dim);
        std::vector<Index> counts(num_centroids, 0);
        for (Index i = 0; i < num_samples; ++i) {
            sums.row(assignment[i]) += samples.row(i);
            counts[assignment[i]] += 1;
        }
        for (Index k = 0; k < num_centroids; ++k) {
            if (counts[k] > 0) {
                centroids.row(k) = sums.row(k) / static_cast<Real>(counts[k]);
            } else {
                std::uniform_int_distribution<Index> pick(0, num_samples - 1);
                centroids.row(k) = samples.row(pick(rng));
            }
        }
    }

    // exact duplicates would break the distinctness invariant; re-seed them
    for (Index k = 1; k < num_centroids; ++k) {
        bool duplicate = false;
        do {
            duplicate = false;
            for (Index j = 0; j < k; ++j)
                if (centroids.row(k) == centroids.row(j)) duplicate = true;
            if (duplicate) {
                std::uniform_int_distribution<Index> pick(0, num_samples - 1);
                centroids.row(k) = samples.row(pick(rng));
            }
        } while (duplicate);
    }
    return centroids;
}

/// Index of the closest centroid by Euclidean distance; ties break to the
/// lowest index.
inline Index nearest_centroid(const Eigen::Ref<const Mat>& centroids, const Eigen::Ref<const Vec>& descriptor) {
    Index best = 0;
    Real best_dist = (centroids.row(0).transpose() - descriptor).squaredNorm();
    for (Index k = 1; k < centroids.rows(); ++k) {
        const Real dist = (centroids.row(k).transpose() - descriptor).squaredNorm();
        if (dist < best_dist) {
            best_dist = dist;
            best = k;
        }
    }
    return best;
}

struct Occupant {
    Vec genotype;
    Real fitness = 0.0;
    Vec descriptor;
};

struct AddOutcome {
    enum class Kind { inserted, replaced, rejected };
    Kind kind = Kind::rejected;
    Real improvement = 0.0;
    Index cell = -1;
    bool non_finite_fitness = false;
};

struct ArchiveMetrics {
    Real qd_score = 0.0;
    Real coverage = 0.0;
    std::optional<Real> max_fitness;
};

/// CVT MAP-Elites archive: at most one elite per centroid cell, replacement
/// on strictly better fitness only.
class Archive {
  public:
    Archive(Mat centroids, MlpArchitecture policy_arch)
        : centroids_(std::move(centroids)),
          cells_(static_cast<std::size_t>(centroids_.rows())),
          policy_arch_(std::move(policy_arch)) {
        require(centroids_.rows() >= 1, "Archive: need at least one centroid");
    }

    Index num_cells() const { return centroids_.rows(); }
    Index descriptor_dim() const { return centroids_.cols(); }
    const Mat& centroids() const { return centroids_; }
    const MlpArchitecture& policy_arch() const { return policy_arch_; }
    const std::optional<Occupant>& cell(Index i) const { return cells_[static_cast<std::size_t>(i)]; }

    Index occupied_count() const {
        Index n = 0;
        for (const auto& c : cells_)
            if (c.has_value()) ++n;
        return n;
    }

    std::vector<Index> occupied_cells() const {
        std::vector<Index> out;
        for (Index i = 0; i < num_cells(); ++i)
            if (cells_[static_cast<std::size_t>(i)].has_value()) out.push_back(i);
        return out;
    }

    /// Elitist addition: insert when the cell is empty, replace on strictly
    /// better fitness, reject otherwise (equal fitness is rejected).
    AddOutcome add(Vec genotype, Real fitness, Vec descriptor) {
        AddOutcome outcome;
        if (!std::isfinite(fitness)) {
            outcome.non_finite_fitness = true;
            return outcome;
        }
        require(descriptor.size() == descriptor_dim(), "Archive::add: descriptor dim mismatch");
        require((descriptor.array() >= 0.0).all() && (descriptor.array() <= 1.0).all(),
                "Archive::add: descriptor must be normalized into [0,1]^d");
        const Index cell_index = nearest_centroid(centroids_, descriptor);
        outcome.cell = cell_index;
        auto& cell = cells_[static_cast<std::size_t>(cell_index)];
        if (!cell.has_value()) {
            outcome.kind = AddOutcome::Kind::inserted;
            outcome.improvement = fitness;
            cell = Occupant{std::move(genotype), fitness, std::move(descriptor)};
        } else if (fitness > cell->fitness) {
            outcome.kind = AddOutcome::Kind::replaced;
            outcome.improvement = fitness - cell->fitness;
            cell = Occupant{std::move(genotype), fitness, std::move(descriptor)};
        }
        return outcome;
    }

    /// QD score folds occupied cells in index order — the canonical reduction
    /// order for every fitness sum derived from the archive.
    ArchiveMetrics metrics() const {
        ArchiveMetrics m;
        for (const auto& c : cells_) {
            if (!c.has_value()) continue;
            m.qd_score += c->fitness;
            if (!m.max_fitness || c->fitness > *m.max_fitness) m.max_fitness = c->fitness;
        }
        m.coverage = static_cast<Real>(occupied_count()) / static_cast<Real>(num_cells());
        return m;
    }

  private:
    Mat centroids_;
    std::vector<std::optional<Occupant>> cells_;
    MlpArchitecture policy_arch_;
};

struct Parent {
    Vec genotype;
    Vec descriptor;
};

/// Uniform i.i.d. selection (with replacement) over occupied cells; parents
/// carry the stored cell descriptor.
inline std::vector<Parent> select_uniform(const Archive& archive, Index count, RngEngine& rng) {
    const std::vector<Index> occupied = archive.occupied_cells();
    if (occupied.empty()) throw std::runtime_error("select_uniform: archive is empty");
    std::uniform_int_distribution<std::size_t> pick(0, occupied.size() - 1);
    std::vector<Parent> parents;
    parents.reserve(static_cast<std::size_t>(count));
    for (Index i = 0; i < count; ++i) {
        const auto& occ = *archive.cell(occupied[pick(rng)]);
        parents.push_back({occ.genotype, occ.descriptor});
    }
    return parents;
}

}  // namespace qdrl
