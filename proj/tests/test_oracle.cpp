#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "ccvt/cvt_search.hpp"
#include "ccvt/oracle.hpp"
#include "reference_fixtures.hpp"

using namespace ccvt;
using R = rational;

namespace {
R q(long num, long den) { return scalar_ops<R>::from_fraction(num, den); }
}

TEST_CASE("discretize places atoms at conditional means") {
    auto model = validate_params<double>(1.0 / 3, 1.0 / 3, 0.5);
    auto atoms = discretize(model, 1);
    REQUIRE(atoms.size() == 2);
    CHECK(atoms.positions[0] == doctest::Approx(1.0 / 6));
    CHECK(atoms.positions[1] == doctest::Approx(5.0 / 6));
    CHECK(atoms.weights[0] == doctest::Approx(0.5));
    // sum of p s^2 times V: (1/9)(1/8)
    CHECK(atoms.within_cell_offset == doctest::Approx(1.0 / 72).epsilon(1e-14));

    auto asym = validate_params<double>(0.25, 0.5, 0.25);
    auto a2 = discretize(asym, 2);
    REQUIRE(a2.size() == 4);
    CHECK(a2.weights == std::vector<double>{1.0 / 16, 3.0 / 16, 3.0 / 16, 9.0 / 16});
    for (int depth : {3, 9}) {
        auto deep = discretize(asym, depth);
        CHECK(deep.acc_w.back() == doctest::Approx(1.0).epsilon(1e-13));
        for (int64_t i = 1; i < deep.size(); ++i)
            CHECK(deep.positions[i] > deep.positions[i - 1]);
    }
}

TEST_CASE("lloyd with one centroid lands on the mean") {
    auto model = validate_params<double>(0.3, 0.45, 0.7);
    auto atoms = discretize(model, 8);
    auto run = lloyd(atoms, {0.9});
    CHECK(run.centroids[0] == doctest::Approx(model.mean).epsilon(1e-12));
    CHECK(run.cost == doctest::Approx(model.variance).epsilon(1e-12));
}

TEST_CASE("lloyd converges to the optimal three-means of the Cantor measure") {
    auto model = validate_params<double>(1.0 / 3, 1.0 / 3, 0.5);
    auto atoms = discretize(model, 10);
    auto run = lloyd(atoms, {0.1, 0.3, 0.8}, 1e-12, 1000);
    CHECK(run.centroids[0] == doctest::Approx(1.0 / 18).epsilon(1e-9));
    CHECK(run.centroids[1] == doctest::Approx(5.0 / 18).epsilon(1e-9));
    CHECK(run.centroids[2] == doctest::Approx(5.0 / 6).epsilon(1e-9));
}

TEST_CASE("the known r=0.4375 CVT is a Lloyd fixed point") {
    auto model = validate_params<double>(0.4375, 0.4375, 0.5);
    auto atoms = discretize(model, 12);
    std::vector<double> init = {0.15979, 0.5, 0.84021};
    auto run = lloyd(atoms, init, 1e-12, 1000);
    for (int k = 0; k < 3; ++k) CHECK(std::fabs(run.centroids[k] - init[k]) < 1e-5);
    CHECK(std::fabs(run.cost - 0.011019) < 1e-6);
}

TEST_CASE("lloyd reports an empty cell") {
    auto model = validate_params<double>(1.0 / 3, 1.0 / 3, 0.5);
    auto atoms = discretize(model, 3);
    // the middle third holds no atoms, so the middle cell starves
    CHECK_THROWS_AS(lloyd(atoms, {0.40, 0.45, 0.50}), EmptyCell);
}

TEST_CASE("lloyd_best_of is deterministic and at least as good as one run") {
    auto model = validate_params<double>(0.4375, 0.4375, 0.5);
    auto atoms = discretize(model, 10);
    auto a = lloyd_best_of(atoms, 3, 8);
    auto b = lloyd_best_of(atoms, 3, 8);
    CHECK(a.cost == b.cost);
    CHECK(a.centroids == b.centroids);
    auto single = lloyd(atoms, quantile_init(atoms, 3));
    CHECK(a.cost <= single.cost + 1e-15);

    // with restarts the classical measure's best three-means is found
    auto m13 = validate_params<double>(1.0 / 3, 1.0 / 3, 0.5);
    auto best = lloyd_best_of(discretize(m13, 10), 3, 8);
    CHECK(std::fabs(best.cost - 5.0 / 648) < 1e-9);
}

TEST_CASE("every enumerated CVT is a Lloyd fixed point at its own level") {
    SearchConfig cfg;
    for (auto [r1, r2, p1] : {std::tuple{4.0 / 9, 4.0 / 9, 0.5}, std::tuple{0.25, 0.5, 0.25}}) {
        auto model = validate_params<double>(r1, r2, p1);
        for (int m = 4; m <= 6; ++m) {
            auto table = build_table(model, m);
            auto atoms = discretize(model, m);
            for (const auto& res : enumerate_cvts(table, 3, cfg)) {
                auto run = lloyd(atoms, res.centroids, 1e-14, 2);
                // assignment reproduces the blocks
                const auto& bs = res.partition.boundaries();
                REQUIRE(run.cell_splits.size() == bs.size());
                for (size_t l = 0; l < bs.size(); ++l) CHECK(run.cell_splits[l] == bs[l]);
                for (size_t k = 0; k < res.centroids.size(); ++k)
                    CHECK(std::fabs(run.centroids[k] - res.centroids[k]) < 1e-10);
                CHECK(std::fabs(run.cost - res.distortion) < 1e-12);
            }
        }
    }
}

TEST_CASE("DP optimum meets the best CVT on the reference cases") {
    SearchConfig cfg;
    auto m13 = validate_params<double>(1.0 / 3, 1.0 / 3, 0.5);
    auto t5 = build_table(m13, 5);
    auto [p5, c5] = dp_optimal_blocks(t5, 3);
    CHECK(c5 == doctest::Approx(best_cvt(enumerate_cvts(t5, 3, cfg)).distortion)
                    .epsilon(1e-12));

    auto asym = validate_params<double>(0.25, 0.5, 0.25);
    auto t6 = build_table(asym, 6);
    auto [p6, c6] = dp_optimal_blocks(t6, 4);
    CHECK(std::fabs(c6 - 0.00268714) < 1e-6);
    auto best = best_cvt(enumerate_cvts(t6, 4, cfg));
    CHECK(std::fabs(c6 - best.distortion) < 1e-10);

    // rational mode: exact equality
    auto mq = validate_params<R>(q(7, 16), q(7, 16), q(1, 2));
    auto tq = build_table(mq, 5);
    auto [pq, cq] = dp_optimal_blocks(tq, 3);
    CHECK(cq == best_cvt(enumerate_cvts(tq, 3, cfg)).distortion);
    CHECK(pq.boundaries() == std::vector<int64_t>{11, 20});
}

TEST_CASE("DP lower-bounds every CVT and degenerates to singletons") {
    SearchConfig cfg;
    for (double r : {0.3, 0.4375, 4.0 / 9}) {
        auto model = validate_params<double>(r, r, 0.5);
        for (int m = 3; m <= 6; ++m) {
            auto table = build_table(model, m);
            for (int n = 2; n <= 4; ++n) {
                auto [part, cost] = dp_optimal_blocks(table, n);
                auto results = enumerate_cvts(table, n, cfg);
                if (!results.empty())
                    CHECK(cost <= best_cvt(results).distortion + 1e-14);
            }
        }
        auto t3 = build_table(model, 3);
        auto [all_singletons, cost] = dp_optimal_blocks(t3, 8);
        // every block a singleton: only the within-cell terms remain
        CHECK(cost == doctest::Approx(model.variance * std::pow(r * r, 3)).epsilon(1e-10));
        CHECK(all_singletons.boundaries() == std::vector<int64_t>{1, 2, 3, 4, 5, 6, 7});
    }
    auto table = build_table(validate_params<double>(0.3, 0.3, 0.5), 13);
    CHECK_THROWS_AS(dp_optimal_blocks(table, 3), LevelTooLarge);
}

TEST_CASE("DP parallel equals serial") {
    auto table = build_table(validate_params<double>(0.45, 0.45, 0.5), 10);
    auto [ps, cs] = dp_optimal_blocks(table, 4, false);
    auto [pp, cp] = dp_optimal_blocks(table, 4, true);
    CHECK(ps == pp);
    CHECK(cs == cp);
}

TEST_CASE("truncated moments converge at the geometric rate") {
    auto m13 = validate_params<double>(1.0 / 3, 1.0 / 3, 0.5);
    auto est = moments_by_truncation(m13, 20);
    CHECK(std::fabs(est.e_est - 0.5) < 1e-9);
    CHECK(std::fabs(est.v_est - 0.125) < 1e-9);
    CHECK(moments_by_truncation(m13, 1).e_est == doctest::Approx(0.5));  // symmetry

    auto asym = validate_params<double>(0.25, 0.5, 0.25);
    auto deep = moments_by_truncation(asym, 25);
    CHECK(std::fabs(deep.e_est - 2.0 / 3) < 2 * std::pow(0.5, 25));
    CHECK(std::fabs(deep.v_est - 16.0 / 153) < 2 * std::pow(0.5, 25));

    // the bound itself, not just convergence
    for (auto [r1, r2, p1] : {std::tuple{1.0 / 3, 1.0 / 3, 0.5}, std::tuple{0.25, 0.5, 0.25},
                              std::tuple{0.45, 0.45, 0.5}}) {
        auto model = validate_params<double>(r1, r2, p1);
        const double max_r = std::max(r1, r2);
        for (int depth : {5, 10, 15, 20}) {
            auto e = moments_by_truncation(model, depth);
            const double bound = 2 * std::pow(max_r, depth);
            CHECK(std::fabs(e.e_est - model.mean) <= bound);
            CHECK(std::fabs(e.m2_est - model.second_moment) <= bound);
            CHECK(std::fabs(e.v_est - model.variance) <= bound);
        }
    }

    // parallel equals serial bit for bit (fixed partial grouping)
    auto serial = moments_by_truncation(asym, 18, false);
    auto parallel = moments_by_truncation(asym, 18, true);
    CHECK(serial.e_est == parallel.e_est);
    CHECK(serial.m2_est == parallel.m2_est);
}

TEST_CASE("atom k-means cost plus offset equals the table distortion") {
    std::mt19937_64 rng(23);
    for (auto [r1, r2, p1] : {std::tuple{1.0 / 3, 1.0 / 3, 0.5}, std::tuple{0.25, 0.5, 0.25}}) {
        auto model = validate_params<double>(r1, r2, p1);
        const int m = 12;
        auto table = build_table(model, m);
        auto atoms = discretize(model, m);
        std::uniform_int_distribution<int64_t> pick(1, table.size() - 1);
        for (int trial = 0; trial < 50; ++trial) {
            std::set<int64_t> bset;
            const int n = 2 + static_cast<int>(rng() % 4);
            while (static_cast<int>(bset.size()) < n - 1) bset.insert(pick(rng));
            std::vector<int64_t> bs(bset.begin(), bset.end());
            BlockPartition partition(m, table.size(), bs);
            double atom_cost = atoms.within_cell_offset;
            for (int l = 0; l < partition.block_count(); ++l) {
                auto [lo, hi] = partition.block(l);
                atom_cost += atoms.range_sqcost(lo, hi, atoms.range_mean(lo, hi));
            }
            CHECK(std::fabs(atom_cost - partition_distortion(table, partition)) < 1e-12);
        }
    }
}
