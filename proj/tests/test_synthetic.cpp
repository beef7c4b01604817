#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "ecpd/energy.hpp"
#include "ecpd/synthetic.hpp"
#include "test_support.hpp"

using namespace ecpd;

TEST_CASE("generate concatenates segments and reports the truth", "[synthetic]") {
    const std::vector<SegmentSpec> one = {{50, {0.0}, 1.0}};
    const auto single = generate(one, 3);
    REQUIRE(single.series.rows() == 50);
    REQUIRE(single.series.dim == 1);
    REQUIRE(single.change_points.empty());

    const std::vector<SegmentSpec> two = {{50, {0.0}, 1.0}, {50, {5.0}, 1.0}};
    const auto pair = generate(two, 3);
    REQUIRE(pair.series.rows() == 100);
    REQUIRE(pair.change_points == std::vector<std::size_t>{50});
}

TEST_CASE("generate is deterministic in the seed", "[synthetic]") {
    const std::vector<SegmentSpec> specs = {{30, {1.0, -1.0}, 2.0}};
    const auto a = generate(specs, 77);
    const auto b = generate(specs, 77);
    REQUIRE(a.series.values == b.series.values);
    const auto c = generate(specs, 78);
    REQUIRE(a.series.values != c.series.values);
}

TEST_CASE("generate rejects inconsistent specs", "[synthetic]") {
    const std::vector<SegmentSpec> bad_dim = {{10, {0.0}, 1.0}, {10, {0.0, 1.0}, 1.0}};
    REQUIRE_THROWS_AS(generate(bad_dim, 1), InvalidInputError);
    const std::vector<SegmentSpec> bad_scale = {{10, {0.0}, 0.0}};
    REQUIRE_THROWS_AS(generate(bad_scale, 1), InvalidInputError);
    REQUIRE_THROWS_AS(generate({}, 1), InvalidInputError);
    std::vector<SegmentSpec> bad_dof = {{10, {0.0}, 1.0, SegmentSpec::Dist::heavy_tailed, 2}};
    REQUIRE_THROWS_AS(generate(bad_dof, 1), InvalidInputError);
}

TEST_CASE("heavy tailed segments generate finite draws", "[synthetic]") {
    const std::vector<SegmentSpec> specs = {
        {200, {0.0}, 1.0, SegmentSpec::Dist::heavy_tailed, 3}};
    const auto truth = generate(specs, 5);
    for (const double v : truth.series.values) {
        REQUIRE(std::isfinite(v));
    }
}

TEST_CASE("brute force oracle reproduces the hand-computed split", "[synthetic]") {
    const auto series = test::make_univariate({0, 0, 0, 10, 10, 10});
    const auto best = brute_force_best_split(series, 1.0, 2);
    REQUIRE(best.has_value());
    REQUIRE(best->split == 3);
    REQUIRE(best->q_value == Catch::Approx(30.0).margin(1e-12));
}

TEST_CASE("brute force oracle on constants and short input", "[synthetic]") {
    const auto constant = test::make_series(std::vector<double>(12, 4.0), 1);
    const auto best = brute_force_best_split(constant, 1.0, 2);
    REQUIRE(best.has_value());
    REQUIRE(best->split == 2);
    REQUIRE(best->q_value == 0.0);
    REQUIRE_FALSE(brute_force_best_split(test::make_univariate({1, 2, 3}), 1.0, 2).has_value());
}

TEST_CASE("oracle agrees with the fast scan on random instances", "[synthetic][property]") {
    Rng rng(160901);
    const double alphas[] = {0.5, 1.0, 2.0};
    for (int rep = 0; rep < 100; ++rep) {
        const std::size_t t_count = 4 + rng.bounded(47);
        const std::size_t d = 1 + rng.bounded(3);
        const double alpha = alphas[rng.bounded(3)];
        const auto series = test::random_series(rng, t_count, d);
        const auto oracle = brute_force_best_split(series, alpha, 2);
        const auto dist = alpha_distance_matrix(series, alpha);
        const auto fast = best_split(dist, {0, t_count}, {alpha, 2});
        REQUIRE(oracle.has_value() == fast.has_value());
        if (oracle) {
            REQUIRE(oracle->split == fast->split);
            REQUIRE(fast->q_value == Catch::Approx(oracle->q_value).margin(1e-9));
        }
    }
}
