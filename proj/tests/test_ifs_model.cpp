#include <doctest.h>

#include <random>

#include "ccvt/cylinder_table.hpp"
#include "ccvt/ifs_model.hpp"
#include "reference_fixtures.hpp"

using namespace ccvt;
using R = rational;

namespace {
R q(long num, long den) { return scalar_ops<R>::from_fraction(num, den); }

IfsModel<double> classical() { return validate_params<double>(1.0 / 3, 1.0 / 3, 0.5); }
IfsModel<R> classical_q() { return validate_params<R>(q(1, 3), q(1, 3), q(1, 2)); }
IfsModel<R> asym_q() { return validate_params<R>(q(1, 4), q(1, 2), q(1, 4)); }
}  // namespace

TEST_CASE("validate_params accepts and rejects per the constraints") {
    CHECK(classical().mean == doctest::Approx(0.5));
    CHECK_THROWS_AS(validate_params<double>(0.5, 0.5, 0.5), OverlappingCylinders);
    CHECK_THROWS_AS(validate_params<double>(0.6, 0.5, 0.5), OverlappingCylinders);
    CHECK_THROWS_AS(validate_params<double>(0.0, 0.3, 0.5), ParamOutOfRange);
    CHECK_THROWS_AS(validate_params<double>(0.3, 0.3, 1.0), ParamOutOfRange);
    // touching cylinders only behind the flag
    CHECK_NOTHROW(validate_params<double>(0.5, 0.5, 0.5, true));
}

TEST_CASE("closed-form moments") {
    auto sym = classical_q();
    CHECK(sym.mean == q(1, 2));
    CHECK(sym.second_moment == q(3, 8));
    CHECK(sym.variance == q(1, 8));

    auto asym = asym_q();
    CHECK(asym.mean == q(2, 3));
    CHECK(asym.second_moment == q(28, 51));
    CHECK(asym.variance == q(16, 153));

    auto wide = validate_params<R>(q(4, 9), q(4, 9), q(1, 2));
    CHECK(wide.mean == q(1, 2));
}

TEST_CASE("variance is nonnegative across random models") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.05, 0.95);
    for (int trial = 0; trial < 200; ++trial) {
        double r1 = u(rng), r2 = u(rng), p1 = u(rng);
        if (r1 + r2 >= 1) continue;
        auto model = validate_params<double>(r1, r2, p1);
        CHECK(model.variance >= -1e-15);
        CHECK(model.second_moment >= model.mean * model.mean - 1e-15);
        CHECK(model.mean > 0);
        CHECK(model.mean < 1);
    }
}

TEST_CASE("word indexing is the spatial order") {
    CHECK(word_from_index(3, 1).digits == std::vector<uint8_t>{1, 1, 1});
    CHECK(word_from_index(3, 8).digits == std::vector<uint8_t>{2, 2, 2});
    CHECK(word_from_index(2, 3).digits == std::vector<uint8_t>{2, 1});
    CHECK_THROWS_AS(word_from_index(3, 0), IndexOutOfRange);
    CHECK_THROWS_AS(word_from_index(3, 9), IndexOutOfRange);

    auto model = classical();
    for (int m = 1; m <= 10; ++m) {
        double prev_left = -1;
        for (uint64_t i = 1; i <= (uint64_t(1) << m); ++i) {
            Word w = word_from_index(m, i);
            CHECK(index_from_word(w) == i);
            double left = cylinder(model, w).left;
            CHECK(left > prev_left);  // spatial order matches index order
            prev_left = left;
        }
    }
}

TEST_CASE("cylinder geometry from the affine fold") {
    auto model = classical_q();
    Word w12{{1, 2}};
    auto info = cylinder(model, w12);
    CHECK(info.left == q(2, 9));
    CHECK(info.right == q(1, 3));
    CHECK(info.scale == q(1, 9));
    CHECK(info.weight == q(1, 4));
    CHECK(info.centroid == q(5, 18));

    auto empty = cylinder(model, Word{});
    CHECK(empty.left == R(0));
    CHECK(empty.right == R(1));
    CHECK(empty.scale == R(1));
    CHECK(empty.weight == R(1));
    CHECK(empty.centroid == model.mean);

    Word w222{{2, 2, 2}};
    CHECK(cylinder(model, w222).centroid == q(53, 54));
}

TEST_CASE("build_table totals and geometry") {
    auto model = classical_q();
    auto t1 = build_table(model, 1);
    CHECK(t1.acc_weight.back() == R(1));
    CHECK(t1.acc_moment.back() == q(1, 2));
    CHECK(t1.acc_quad.back() == q(3, 8));  // equals E(X^2) by total variance

    CHECK_THROWS_AS(build_table(model, 0), LevelTooLarge);
    CHECK_THROWS_AS(build_table(model, 27), LevelTooLarge);

    auto t2 = build_table(model, 2);
    CHECK(t2.right[1] == q(1, 3));  // right end of J_12
    CHECK(t2.left[2] == q(2, 3));   // left end of J_21
}

TEST_CASE("fast builder matches the naive reference bit for bit") {
    auto model = validate_params<double>(0.25, 0.5, 0.25);
    for (int m : {1, 3, 7, 11}) {
        auto reference = build_table_reference(model, m);
        auto serial = build_table(model, m, false);
        auto parallel = build_table(model, m, true);
        CHECK(serial.left == reference.left);
        CHECK(serial.right == reference.right);
        CHECK(serial.acc_weight == reference.acc_weight);
        CHECK(serial.acc_moment == reference.acc_moment);
        CHECK(serial.acc_quad == reference.acc_quad);
        CHECK(parallel.acc_quad == serial.acc_quad);
        CHECK(parallel.acc_moment == serial.acc_moment);
    }
}

TEST_CASE("block centroids reproduce the reference three-means") {
    auto table = build_table(classical_q(), 2);
    CHECK(block_centroid(table, int64_t(1), int64_t(1)) == q(1, 18));
    CHECK(block_centroid(table, int64_t(3), int64_t(4)) == q(5, 6));
    CHECK(block_centroid(table, int64_t(1), int64_t(4)) == q(1, 2));
    CHECK_THROWS_AS(block_centroid(table, int64_t(3), int64_t(2)), IndexOutOfRange);
}

TEST_CASE("block distortion identities") {
    auto model = classical_q();
    auto table = build_table(model, 2);
    // one-mean distortion at the mean is the variance
    CHECK(block_distortion(table, int64_t(1), int64_t(4), model.mean) == model.variance);

    // the two reference partitions have exactly equal total distortion
    BlockPartition a(2, 4, {1, 2});
    BlockPartition b(2, 4, {2, 3});
    CHECK(partition_distortion(table, a) == partition_distortion(table, b));
    CHECK(partition_distortion(table, a) == q(5, 648));
    CHECK(partition_distortion(table, BlockPartition(2, 4, {})) == q(1, 8));

    auto m4375 = validate_params<double>(0.4375, 0.4375, 0.5);
    auto t3 = build_table(m4375, 3);
    double d = partition_distortion(t3, BlockPartition(3, 8, {3, 5}));
    CHECK(fixtures::matches_printed(d, "0.011019"));
    auto t2 = build_table(m4375, 2);
    CHECK(fixtures::matches_printed(partition_distortion(t2, BlockPartition(2, 4, {1, 2})),
                                    "0.0111543"));

    auto asym = validate_params<double>(0.25, 0.5, 0.25);
    auto ta = build_table(asym, 3);
    CHECK(fixtures::matches_printed(partition_distortion(ta, BlockPartition(3, 8, {4, 6})),
                                    "0.00561683"));

    CHECK_THROWS_AS(partition_distortion(ta, BlockPartition(2, 4, {2})), PartitionMismatch);
}

TEST_CASE("centroid stays inside the block hull") {
    auto table = build_table(validate_params<double>(0.3, 0.45, 0.7), 8);
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int64_t> pick(1, table.size());
    for (int trial = 0; trial < 500; ++trial) {
        int64_t i = pick(rng), j = pick(rng);
        if (i > j) std::swap(i, j);
        double c = table.centroid(i, j);
        CHECK(c >= table.left[i - 1]);
        CHECK(c <= table.right[j - 1]);
    }
}

TEST_CASE("law of total variance holds at deep levels") {
    for (auto [r1, r2, p1] :
         {std::tuple{1.0 / 3, 1.0 / 3, 0.5}, std::tuple{0.25, 0.5, 0.25}}) {
        auto model = validate_params<double>(r1, r2, p1);
        auto table = build_table(model, 20);
        // distortion of the full support at the mean collapses to V
        double v = table.distortion(1, table.size(), model.mean);
        CHECK(v == doctest::Approx(model.variance).epsilon(1e-12));
        CHECK(table.acc_weight.back() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(table.acc_moment.back() == doctest::Approx(model.mean).epsilon(1e-12));
        CHECK(table.acc_quad.back() == doctest::Approx(model.second_moment).epsilon(1e-12));
    }
}

TEST_CASE("refinement consistency between adjacent levels") {
    auto model = asym_q();
    auto coarse = build_table(model, 4);
    auto fine = build_table(model, 5);
    for (int64_t i = 1; i <= coarse.size(); ++i)
        for (int64_t j = i; j <= coarse.size(); ++j) {
            CHECK(coarse.centroid(i, j) == fine.centroid(2 * i - 1, 2 * j));
            R x0 = q(1, 3);
            CHECK(coarse.distortion(i, j, x0) == fine.distortion(2 * i - 1, 2 * j, x0));
        }
}

TEST_CASE("reflection identity for symmetric models") {
    auto table = build_table(classical_q(), 6);
    const int64_t size = table.size();
    for (int64_t i = 1; i <= size; ++i)
        for (int64_t j = i; j <= size; ++j)
            CHECK(table.centroid(i, j) + table.centroid(size + 1 - j, size + 1 - i) == R(1));
}
