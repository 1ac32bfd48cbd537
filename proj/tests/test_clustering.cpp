#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "csattn/clustering.hpp"
#include "csattn/core.hpp"
#include "csattn/util.hpp"

using namespace csattn;

namespace {

std::vector<float> cap_points(std::size_t n, std::size_t dim, float axis_sign,
                              double spread, std::uint64_t seed) {
    // Tight cap of unit-ish vectors around +/- e0.
    Rng rng(seed);
    std::vector<float> pts(n * dim, 0.0f);
    for (std::size_t i = 0; i < n; ++i) {
        pts[i * dim] = axis_sign;
        for (std::size_t t = 1; t < dim; ++t)
            pts[i * dim + t] = static_cast<float>(rng.next_normal() * spread);
    }
    return pts;
}

ClusterConfig full_batch(std::size_t k, std::uint64_t seed) {
    ClusterConfig cfg;
    cfg.centroids = k;
    cfg.seed = seed;
    cfg.batch_size = 1u << 20;  // >= n switches to full-batch Lloyd
    return cfg;
}

}  // namespace

TEST_CASE("a single cluster converges to the normalized mean direction") {
    // Two unit points at e0 and e1; the spherical mean is (e0+e1)/sqrt(2).
    std::vector<float> pts = {1, 0, 0, 1};
    const auto cs = cosine_kmeans(pts, 2, full_batch(1, 0));
    REQUIRE(cs.count == 1);
    const double r = 0.70710678118654752440;
    CHECK(cs.centroids[0] == doctest::Approx(r).epsilon(1e-6));
    CHECK(cs.centroids[1] == doctest::Approx(r).epsilon(1e-6));
}

TEST_CASE("identical points give a zero objective and the point itself") {
    std::vector<float> pts;
    for (int i = 0; i < 16; ++i) {
        pts.push_back(3.0f);
        pts.push_back(4.0f);
    }
    const auto cs = cosine_kmeans(pts, 2, full_batch(1, 9));
    CHECK(cs.centroids[0] == doctest::Approx(0.6).epsilon(1e-6));
    CHECK(cs.centroids[1] == doctest::Approx(0.8).epsilon(1e-6));
    REQUIRE(!cs.stats.objective.empty());
    // Zero up to f32 rounding of 2 - 2*cos (can land a hair below zero).
    CHECK(std::fabs(cs.stats.objective.back()) <= 1e-6);
}

TEST_CASE("two separated caps are recovered as two clusters") {
    const std::size_t per = 40, dim = 8;
    auto pts = cap_points(per, dim, 1.0f, 0.02, 1);
    const auto neg = cap_points(per, dim, -1.0f, 0.02, 2);
    pts.insert(pts.end(), neg.begin(), neg.end());

    const auto cs = cosine_kmeans(pts, dim, full_batch(2, 3));
    REQUIRE(cs.count == 2);
    // One centroid near +e0, the other near -e0.
    const float c0 = cs.centroids[0];
    const float c1 = cs.centroids[dim];
    CHECK(c0 * c1 < 0.0f);
    CHECK(std::fabs(c0) > 0.99f);
    CHECK(std::fabs(c1) > 0.99f);

    // Every point lands on the centroid whose sign matches its cap.
    for (std::size_t i = 0; i < 2 * per; ++i) {
        std::span<const float> row(pts.data() + i * dim, dim);
        const std::size_t j = assign_nearest(row, cs);
        const bool positive_cap = row[0] > 0.0f;
        const bool positive_centroid = cs.centroids[j * dim] > 0.0f;
        CHECK(positive_cap == positive_centroid);
    }
}

TEST_CASE("centroid rows come out unit length") {
    Rng rng(31);
    std::vector<float> pts(200 * 6);
    for (float& x : pts) x = static_cast<float>(rng.next_normal());
    const auto cs = cosine_kmeans(pts, 6, full_batch(8, 17));
    for (std::size_t j = 0; j < cs.count; ++j) {
        double n2 = 0.0;
        for (float x : cs.centroid(j)) n2 += static_cast<double>(x) * x;
        CHECK(std::sqrt(n2) == doctest::Approx(1.0).epsilon(1e-5));
    }
}

TEST_CASE("full-batch objective never increases across iterations") {
    Rng rng(101);
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<float> pts(300 * 5);
        for (float& x : pts) x = static_cast<float>(rng.next_normal());
        ClusterConfig cfg = full_batch(10, mix_seed(101, trial));
        cfg.iterations = 12;
        const auto cs = cosine_kmeans(pts, 5, cfg);
        for (std::size_t t = 1; t < cs.stats.objective.size(); ++t)
            CHECK(cs.stats.objective[t] <=
                  cs.stats.objective[t - 1] + cfg.tolerance);
    }
}

TEST_CASE("mini-batch runs keep the objective from diverging") {
    Rng rng(55);
    std::vector<float> pts(2048 * 4);
    for (float& x : pts) x = static_cast<float>(rng.next_normal());
    ClusterConfig cfg;
    cfg.centroids = 16;
    cfg.iterations = 10;
    cfg.batch_size = 256;  // strictly smaller than n: streaming updates
    cfg.seed = 77;
    const auto cs = cosine_kmeans(pts, 4, cfg);  // throws on divergence
    CHECK(cs.stats.objective.size() == 10);
    CHECK(cs.count == 16);
}

TEST_CASE("assignment is the argmax of the dot-product scores") {
    Rng rng(13);
    std::vector<float> pts(128 * 7);
    for (float& x : pts) x = static_cast<float>(rng.next_normal());
    const auto cs = cosine_kmeans(pts, 7, full_batch(6, 5));
    for (int trial = 0; trial < 64; ++trial) {
        std::vector<float> v(7);
        for (float& x : v) x = static_cast<float>(rng.next_normal());
        const auto scores = centroid_scores(v, cs);
        REQUIRE(scores.size() == cs.count);
        std::size_t best = 0;
        for (std::size_t j = 1; j < scores.size(); ++j)
            if (scores[j] > scores[best]) best = j;
        CHECK(assign_nearest(v, cs) == best);
        for (std::size_t j = 0; j < scores.size(); ++j)
            CHECK(scores[j] == doctest::Approx(dot(v, cs.centroid(j))));
    }
}

TEST_CASE("a zero vector scores zero everywhere and lands on centroid 0") {
    std::vector<float> pts = {1, 0, 0, 1, -1, 0, 0, -1};
    const auto cs = cosine_kmeans(pts, 2, full_batch(2, 21));
    std::vector<float> zero = {0, 0};
    CHECK(assign_nearest(zero, cs) == 0);
    for (double s : centroid_scores(zero, cs)) CHECK(s == 0.0);
}

TEST_CASE("same seed reproduces the fit exactly; different seeds may differ") {
    Rng rng(91);
    std::vector<float> pts(256 * 5);
    for (float& x : pts) x = static_cast<float>(rng.next_normal());
    const auto a = cosine_kmeans(pts, 5, full_batch(9, 1234));
    const auto b = cosine_kmeans(pts, 5, full_batch(9, 1234));
    CHECK(a.centroids == b.centroids);
    CHECK(a.stats.objective == b.stats.objective);
    CHECK(a.stats.dot_ops == b.stats.dot_ops);
}

TEST_CASE("seeding splits antipodal caps almost always") {
    // 1000 seeded draws over two tight antipodal caps; squared-distance
    // weighting should put the two seeds in different caps nearly every time.
    const std::size_t per = 20, dim = 6;
    auto pts = cap_points(per, dim, 1.0f, 0.01, 40);
    const auto neg = cap_points(per, dim, -1.0f, 0.01, 41);
    pts.insert(pts.end(), neg.begin(), neg.end());
    // Normalize rows: the seeder contract is unit input rows.
    for (std::size_t i = 0; i < 2 * per; ++i)
        l2_normalize(std::span<float>(pts.data() + i * dim, dim));

    int split = 0;
    for (int run = 0; run < 1000; ++run) {
        Rng rng(mix_seed(4242, run));
        const auto seeds = kmeanspp_seed(pts, 2 * per, dim, 2, rng);
        if (seeds[0] * seeds[dim] < 0.0f) ++split;
    }
    CHECK(split >= 990);
}

TEST_CASE("collapsed inputs duplicate seeds and report it") {
    std::vector<float> pts;
    for (int i = 0; i < 4; ++i) {
        pts.push_back(0.0f);
        pts.push_back(1.0f);
    }
    std::size_t duplicated = 0;
    Rng rng(3);
    const auto seeds = kmeanspp_seed(pts, 4, 2, 3, rng, &duplicated);
    REQUIRE(seeds.size() == 6);
    CHECK(duplicated == 2);
    for (std::size_t j = 0; j < 3; ++j) {
        CHECK(seeds[j * 2 + 0] == 0.0f);
        CHECK(seeds[j * 2 + 1] == 1.0f);
    }
}

TEST_CASE("asking for more centroids than rows falls back to duplication") {
    std::vector<float> pts = {1, 0, 0, 1};
    const auto cs = cosine_kmeans(pts, 2, full_batch(5, 8));
    CHECK(cs.count == 5);
    CHECK(cs.stats.duplicated_seeds >= 3);
    for (std::size_t j = 0; j < cs.count; ++j) {
        double n2 = 0.0;
        for (float x : cs.centroid(j)) n2 += static_cast<double>(x) * x;
        CHECK(std::sqrt(n2) == doctest::Approx(1.0).epsilon(1e-5));
    }
}

TEST_CASE("zero rows are dropped, counted, and an all-zero input is fatal") {
    std::vector<float> pts = {1, 0, 0, 0, 0, 1, 0, 0};
    const auto cs = cosine_kmeans(pts, 2, full_batch(1, 2));
    CHECK(cs.stats.degenerate_points == 2);

    std::vector<float> zeros(8, 0.0f);
    CHECK_THROWS_AS(cosine_kmeans(zeros, 2, full_batch(1, 2)), DataError);
}

TEST_CASE("invalid clustering inputs are rejected up front") {
    std::vector<float> pts = {1, 0, 0, 1};
    ClusterConfig cfg = full_batch(0, 1);
    CHECK_THROWS_AS(cosine_kmeans(pts, 2, cfg), ParameterError);
    CHECK_THROWS_AS(cosine_kmeans(pts, 0, full_batch(1, 1)), ParameterError);
    std::vector<float> ragged = {1, 0, 0};
    CHECK_THROWS_AS(cosine_kmeans(ragged, 2, full_batch(1, 1)),
                    DimensionError);
    std::vector<float> none;
    CHECK_THROWS_AS(cosine_kmeans(none, 2, full_batch(1, 1)), ParameterError);
}
