#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <qdrl/archive.hpp>

#include <map>

#include "test_util.hpp"

using namespace qdrl;

namespace {

const MlpArchitecture kArch{{2, 3, 2}, Activation::tanh};

Archive small_archive(Index num_centroids, std::uint64_t seed = 1) {
    return Archive(cvt_centroids(num_centroids, 2, 50 * num_centroids, 100, seed), kArch);
}

Vec geno(Real tag) { return Vec::Constant(parameter_count(kArch), tag); }

}  // namespace

TEST_CASE("cvt: K=1 converges to the box center within 0.05") {
    Mat c = cvt_centroids(1, 2, 50000, 100, 7);
    CHECK(std::abs(c(0, 0) - 0.5) < 0.05);
    CHECK(std::abs(c(0, 1) - 0.5) < 0.05);
}

TEST_CASE("cvt: K=4 in 1-D approaches the analytic fixed point") {
    Mat c = cvt_centroids(4, 1, 200000, 100, 11);
    std::vector<Real> got(c.data(), c.data() + 4);
    std::sort(got.begin(), got.end());
    const Real want[] = {0.125, 0.375, 0.625, 0.875};
    for (int i = 0; i < 4; ++i) CHECK(std::abs(got[i] - want[i]) < 0.03);
}

TEST_CASE("cvt: deterministic for a fixed seed, distinct centroids inside the box") {
    Mat a = cvt_centroids(64, 2, 3200, 50, 42);
    Mat b = cvt_centroids(64, 2, 3200, 50, 42);
    CHECK(a == b);
    CHECK((a.array() >= 0.0).all());
    CHECK((a.array() <= 1.0).all());
    for (Index i = 0; i < a.rows(); ++i)
        for (Index j = 0; j < i; ++j) CHECK(a.row(i) != a.row(j));
}

TEST_CASE("cvt: K > num_samples is an error") {
    CHECK_THROWS_AS(cvt_centroids(10, 2, 5, 10, 1), std::invalid_argument);
}

TEST_CASE("nearest_centroid: exact hit, tie rule, brute-force agreement") {
    RngEngine rng(5);
    std::uniform_real_distribution<Real> unit(0.0, 1.0);
    Mat centroids = cvt_centroids(32, 2, 1600, 50, 3);

    for (Index j = 0; j < centroids.rows(); ++j)
        CHECK(nearest_centroid(centroids, centroids.row(j).transpose()) == j);

    // equidistant query breaks ties to the lowest index
    Mat two(2, 2);
    two << 0.25, 0.5,
           0.75, 0.5;
    Vec mid(2);
    mid << 0.5, 0.5;
    CHECK(nearest_centroid(two, mid) == 0);

    for (int q = 0; q < 1000; ++q) {
        Vec d(2);
        d << unit(rng), unit(rng);
        Index best = 0;
        Real best_dist = std::numeric_limits<Real>::infinity();
        for (Index k = 0; k < centroids.rows(); ++k) {
            Real dist = (centroids.row(k).transpose() - d).norm();
            if (dist < best_dist) {
                best_dist = dist;
                best = k;
            }
        }
        CHECK(nearest_centroid(centroids, d) == best);
    }
}

TEST_CASE("add: empty cell inserts with improvement equal to fitness") {
    Archive archive = small_archive(16);
    Vec d(2);
    d << 0.3, 0.7;
    AddOutcome out = archive.add(geno(1), 2.5, d);
    CHECK(out.kind == AddOutcome::Kind::inserted);
    CHECK(out.improvement == 2.5);
    CHECK(archive.cell(out.cell)->fitness == 2.5);
}

TEST_CASE("add: equal fitness is rejected, better fitness replaces") {
    Archive archive = small_archive(16);
    Vec d(2);
    d << 0.3, 0.7;
    archive.add(geno(1), 3.0, d);
    AddOutcome tie = archive.add(geno(2), 3.0, d);
    CHECK(tie.kind == AddOutcome::Kind::rejected);
    CHECK(tie.improvement == 0.0);

    AddOutcome better = archive.add(geno(3), 4.5, d);
    CHECK(better.kind == AddOutcome::Kind::replaced);
    CHECK(better.improvement == doctest::Approx(1.5));
    CHECK(archive.cell(better.cell)->genotype == geno(3));
}

TEST_CASE("add: non-finite fitness is rejected with the error flag") {
    Archive archive = small_archive(16);
    Vec d(2);
    d << 0.5, 0.5;
    AddOutcome out = archive.add(geno(1), std::numeric_limits<Real>::quiet_NaN(), d);
    CHECK(out.kind == AddOutcome::Kind::rejected);
    CHECK(out.non_finite_fitness);
    CHECK(archive.occupied_count() == 0);
}

TEST_CASE("metrics: empty archive and simple occupancy") {
    Archive archive = small_archive(1024);
    ArchiveMetrics empty = archive.metrics();
    CHECK(empty.qd_score == 0.0);
    CHECK(empty.coverage == 0.0);
    CHECK(!empty.max_fitness.has_value());

    Vec d1(2), d2(2);
    d1 << 0.1, 0.1;
    d2 << 0.9, 0.9;
    archive.add(geno(1), 1.0, d1);
    archive.add(geno(2), 2.5, d2);
    ArchiveMetrics m = archive.metrics();
    CHECK(m.qd_score == doctest::Approx(3.5));
    CHECK(m.coverage == doctest::Approx(2.0 / 1024.0));
    CHECK(*m.max_fitness == 2.5);
}

TEST_CASE("metrics: agrees bitwise with an independent fold over cells") {
    Archive archive = small_archive(64);
    RngEngine rng(9);
    std::uniform_real_distribution<Real> unit(0.0, 1.0);
    for (int i = 0; i < 500; ++i) {
        Vec d(2);
        d << unit(rng), unit(rng);
        archive.add(geno(unit(rng)), 1.0 + unit(rng), d);
    }
    ArchiveMetrics m = archive.metrics();
    Real qd = 0.0;
    Real best = -std::numeric_limits<Real>::infinity();
    Index occupied = 0;
    for (Index i = 0; i < archive.num_cells(); ++i) {
        if (!archive.cell(i).has_value()) continue;
        qd += archive.cell(i)->fitness;
        best = std::max(best, archive.cell(i)->fitness);
        ++occupied;
    }
    CHECK(m.qd_score == qd);
    CHECK(*m.max_fitness == best);
    CHECK(m.coverage == static_cast<Real>(occupied) / 64.0);
}

TEST_CASE("archive oracle: additions match brute-force best-per-cell; conservation is exact") {
    Archive archive = small_archive(64, 13);
    RngEngine rng(17);
    std::uniform_real_distribution<Real> unit(0.0, 1.0);

    struct LogEntry {
        Vec descriptor;
        Real fitness;
    };
    std::vector<LogEntry> log;
    std::map<Index, Real> improvement_by_cell;

    Real prev_qd = 0.0, prev_cov = 0.0;
    for (int i = 0; i < 1000; ++i) {
        Vec d(2);
        d << unit(rng), unit(rng);
        const Real f = 1.0 + unit(rng);  // fitness in [1,2): per-cell telescoping stays exact
        log.push_back({d, f});
        AddOutcome out = archive.add(geno(f), f, d);
        improvement_by_cell[out.cell] += out.improvement;

        ArchiveMetrics m = archive.metrics();
        CHECK(m.qd_score >= prev_qd);
        CHECK(m.coverage >= prev_cov);
        prev_qd = m.qd_score;
        prev_cov = m.coverage;
    }

    // brute-force reconstruction from the insertion log
    std::map<Index, Real> best_by_cell;
    for (const auto& entry : log) {
        Index cell = nearest_centroid(archive.centroids(), entry.descriptor);
        auto it = best_by_cell.find(cell);
        if (it == best_by_cell.end() || entry.fitness > it->second) best_by_cell[cell] = entry.fitness;
    }
    for (Index i = 0; i < archive.num_cells(); ++i) {
        auto it = best_by_cell.find(i);
        if (it == best_by_cell.end()) {
            CHECK(!archive.cell(i).has_value());
        } else {
            REQUIRE(archive.cell(i).has_value());
            CHECK(archive.cell(i)->fitness == it->second);
        }
    }

    // telemetry conservation, exact: per-cell improvements telescope to the
    // occupant's fitness, folded in the same cell order as metrics()
    Real total = 0.0;
    for (Index i = 0; i < archive.num_cells(); ++i) {
        auto it = improvement_by_cell.find(i);
        if (it != improvement_by_cell.end()) total += it->second;
    }
    CHECK(total == archive.metrics().qd_score);
}

TEST_CASE("descriptor-cell consistency holds after every mutation") {
    Archive archive = small_archive(32);
    RngEngine rng(23);
    std::uniform_real_distribution<Real> unit(0.0, 1.0);
    for (int i = 0; i < 300; ++i) {
        Vec d(2);
        d << unit(rng), unit(rng);
        archive.add(geno(1), unit(rng) + 1.0, d);
        for (Index c : archive.occupied_cells())
            CHECK(nearest_centroid(archive.centroids(), archive.cell(c)->descriptor) == c);
    }
}

TEST_CASE("select_uniform: single occupant repeats; bookkeeping returns stored descriptors") {
    Archive archive = small_archive(16);
    Vec d(2);
    d << 0.2, 0.8;
    archive.add(geno(7), 1.5, d);
    RngEngine rng(31);
    auto parents = select_uniform(archive, 5, rng);
    CHECK(parents.size() == 5);
    for (const auto& p : parents) {
        CHECK(p.genotype == geno(7));
        CHECK(p.descriptor == archive.cell(archive.occupied_cells()[0])->descriptor);
    }

    Archive empty = small_archive(16);
    CHECK_THROWS_AS(select_uniform(empty, 1, rng), std::runtime_error);
}

TEST_CASE("select_uniform: chi-square uniformity over 10 occupants") {
    Archive archive = small_archive(256, 3);
    RngEngine rng(37);
    std::uniform_real_distribution<Real> unit(0.0, 1.0);
    while (archive.occupied_count() < 10) {
        Vec d(2);
        d << unit(rng), unit(rng);
        archive.add(geno(unit(rng)), unit(rng), d);
    }
    REQUIRE(archive.occupied_count() == 10);

    std::map<std::string, int> counts;
    const int n = 100000;
    auto parents = select_uniform(archive, n, rng);
    std::map<Real, int> by_first;
    for (const auto& p : parents) by_first[p.descriptor[0]] += 1;
    REQUIRE(by_first.size() == 10);
    Real chi2 = 0.0;
    const Real expected = n / 10.0;
    for (const auto& [key, count] : by_first) chi2 += (count - expected) * (count - expected) / expected;
    // chi-square critical value, 9 dof, alpha = 0.01
    CHECK(chi2 < 21.666);
}
