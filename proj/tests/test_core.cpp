#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "csattn/core.hpp"
#include "csattn/util.hpp"

using namespace csattn;

namespace {

std::vector<float> random_rows(std::size_t n, std::size_t d, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<float> v(n * d);
    for (float& x : v) x = static_cast<float>(rng.next_normal());
    return v;
}

KvStore random_store(std::size_t n, std::size_t d, std::uint64_t seed) {
    const auto keys = random_rows(n, d, mix_seed(seed, 1));
    const auto values = random_rows(n, d, mix_seed(seed, 2));
    return KvStore(d, keys, values);
}

}  // namespace

TEST_CASE("uniform layout splits d with the remainder up front") {
    const auto even = SubspaceLayout::uniform(64, 8);
    REQUIRE(even.count() == 8);
    for (std::size_t b = 0; b < 8; ++b) CHECK(even.sizes[b] == 8);
    CHECK(even.dim() == 64);

    const auto ragged = SubspaceLayout::uniform(10, 4);
    CHECK(ragged.sizes == std::vector<std::size_t>{3, 3, 2, 2});
    CHECK(ragged.offsets == std::vector<std::size_t>{0, 3, 6, 8});

    CHECK_THROWS_AS(SubspaceLayout::uniform(4, 0), ParameterError);
    CHECK_THROWS_AS(SubspaceLayout::uniform(4, 5), ParameterError);
    CHECK_THROWS_AS(SubspaceLayout({2, 0, 2}), ParameterError);
}

TEST_CASE("split_subspaces covers the vector exactly once") {
    const SubspaceLayout layout({3, 1, 4});
    std::vector<float> v(8);
    std::iota(v.begin(), v.end(), 0.0f);
    const auto slices = split_subspaces(v, layout);
    REQUIRE(slices.size() == 3);
    CHECK(slices[0].size() == 3);
    CHECK(slices[1].size() == 1);
    CHECK(slices[2].size() == 4);
    CHECK(slices[0][0] == 0.0f);
    CHECK(slices[1][0] == 3.0f);
    CHECK(slices[2][3] == 7.0f);

    std::vector<float> bad(7);
    CHECK_THROWS_AS(split_subspaces(bad, layout), DimensionError);
}

TEST_CASE("kv store tracks the prefill boundary and rejects bad rows") {
    std::vector<float> keys = {1, 0, 0, 1};
    std::vector<float> values = {2, 2, 3, 3};
    KvStore kv(2, keys, values);
    CHECK(kv.size() == 2);
    CHECK(kv.prefill_len() == 2);
    CHECK(kv.key(1)[1] == 1.0f);

    std::vector<float> k2 = {5, 5}, v2 = {6, 6};
    kv.append(k2, v2);
    CHECK(kv.size() == 3);
    CHECK(kv.prefill_len() == 2);
    CHECK(kv.value(2)[0] == 6.0f);

    std::vector<float> short_row = {1.0f};
    CHECK_THROWS_AS(kv.append(short_row, v2), DimensionError);
    std::vector<float> nan_row = {std::nanf(""), 0.0f};
    CHECK_THROWS_AS(kv.append(nan_row, v2), DataError);
    std::vector<float> odd(3, 0.0f);
    CHECK_THROWS_AS(KvStore(2, odd, odd), DimensionError);
    CHECK_THROWS_AS(KvStore(0), ParameterError);
}

TEST_CASE("l2_normalize produces unit vectors and flags zero input") {
    std::vector<float> v = {3.0f, 4.0f};
    CHECK_FALSE(l2_normalize(v));
    CHECK(v[0] == doctest::Approx(0.6f));
    CHECK(v[1] == doctest::Approx(0.8f));

    std::vector<float> z = {0.0f, 0.0f, 0.0f};
    CHECK(l2_normalize(z));
    for (float x : z) CHECK(x == 0.0f);
}

TEST_CASE("two-key attention matches the frozen closed form") {
    // d=2, q=[1,0], keys [1,0] and [0,1]: logits 1/sqrt(2) and 0, so
    // w0 = e^(1/sqrt 2) / (e^(1/sqrt 2) + 1).
    std::vector<float> keys = {1, 0, 0, 1};
    std::vector<float> values = {1, 0, 0, 1};
    KvStore kv(2, keys, values);
    std::vector<float> q = {1, 0};
    const auto out = dense_attention(q, kv);
    REQUIRE(out.weights.size() == 2);
    CHECK(out.weights[0] ==
          doctest::Approx(0.669761549326656925616794945834).epsilon(1e-6));
    CHECK(out.weights[1] ==
          doctest::Approx(0.330238450673343074383205054166).epsilon(1e-6));
    CHECK(out.output[0] == doctest::Approx(out.weights[0]));
    CHECK(out.output[1] == doctest::Approx(out.weights[1]));
    CHECK(out.weights[0] + out.weights[1] == doctest::Approx(1.0));
}

TEST_CASE("subspace dot products sum to the full dot product") {
    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t d = 1 + rng.next_index(96);
        const std::size_t m = 1 + rng.next_index(d);
        const auto layout = SubspaceLayout::uniform(d, m);
        std::vector<float> a(d), b(d);
        for (auto& x : a) x = static_cast<float>(rng.next_normal());
        for (auto& x : b) x = static_cast<float>(rng.next_normal());
        double partial = 0.0;
        for (std::size_t s = 0; s < m; ++s)
            partial += dot(layout.slice(a, s), layout.slice(b, s));
        CHECK(partial == doctest::Approx(dot(a, b)).epsilon(1e-12));
    }
}

TEST_CASE("attention weights are a shift-invariant softmax") {
    const std::size_t n = 24, d = 8;
    KvStore kv = random_store(n, d, 11);
    const auto q = random_rows(1, d, 13);
    const auto out = dense_attention(q, kv);

    // Recompute from raw logits without max subtraction (safe at this scale).
    const double inv = 1.0 / std::sqrt(static_cast<double>(d));
    std::vector<double> e(n);
    double denom = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        e[i] = std::exp(dot(q, kv.key(i)) * inv);
        denom += e[i];
    }
    double wsum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        CHECK(out.weights[i] == doctest::Approx(e[i] / denom).epsilon(1e-6));
        wsum += out.weights[i];
    }
    CHECK(wsum == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("a full mask reproduces unmasked attention") {
    const std::size_t n = 17, d = 6;
    KvStore kv = random_store(n, d, 29);
    const auto q = random_rows(1, d, 31);

    std::vector<std::uint32_t> all(n);
    std::iota(all.begin(), all.end(), 0u);
    const auto plain = dense_attention(q, kv);
    const auto masked = dense_attention(q, kv, std::span<const std::uint32_t>(all));
    for (std::size_t i = 0; i < n; ++i)
        CHECK(masked.weights[i] == doctest::Approx(plain.weights[i]));
    for (std::size_t j = 0; j < d; ++j)
        CHECK(masked.output[j] == doctest::Approx(plain.output[j]));
}

TEST_CASE("masked attention equals dense attention over the kept rows only") {
    const std::size_t n = 20, d = 5;
    KvStore kv = random_store(n, d, 41);
    const auto q = random_rows(1, d, 43);
    const std::vector<std::uint32_t> mask = {1, 4, 9, 16};

    // Build a store holding just the masked rows; weights must agree.
    std::vector<float> sub_keys, sub_values;
    for (std::uint32_t i : mask) {
        sub_keys.insert(sub_keys.end(), kv.key(i).begin(), kv.key(i).end());
        sub_values.insert(sub_values.end(), kv.value(i).begin(),
                          kv.value(i).end());
    }
    KvStore sub(d, sub_keys, sub_values);

    const auto a = dense_attention(q, kv, std::span<const std::uint32_t>(mask));
    const auto b = dense_attention(q, sub);
    REQUIRE(a.weights.size() == mask.size());
    for (std::size_t r = 0; r < mask.size(); ++r)
        CHECK(a.weights[r] == doctest::Approx(b.weights[r]));
    for (std::size_t j = 0; j < d; ++j)
        CHECK(a.output[j] == doctest::Approx(b.output[j]));
}

TEST_CASE("attention rejects empty stores, empty masks, and bad indices") {
    KvStore empty(4);
    std::vector<float> q = {1, 0, 0, 0};
    CHECK_THROWS_AS(dense_attention(q, empty), ParameterError);

    KvStore kv = random_store(3, 4, 51);
    std::vector<std::uint32_t> none;
    CHECK_THROWS_AS(
        dense_attention(q, kv, std::span<const std::uint32_t>(none)),
        ParameterError);
    std::vector<std::uint32_t> oob = {3};
    CHECK_THROWS_AS(dense_attention(q, kv, std::span<const std::uint32_t>(oob)),
                    ParameterError);
    std::vector<float> wide(5, 0.0f);
    CHECK_THROWS_AS(dense_attention(wide, kv), DimensionError);
}

TEST_CASE("dense_topk matches a brute-force sort with ties to lower index") {
    Rng rng(77);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = 2 + rng.next_index(60);
        const std::size_t d = 1 + rng.next_index(12);
        KvStore kv = random_store(n, d, mix_seed(77, trial));
        const auto q = random_rows(1, d, mix_seed(78, trial));
        const std::size_t k = 1 + rng.next_index(n);

        std::vector<double> scores(n);
        for (std::size_t i = 0; i < n; ++i) scores[i] = dot(q, kv.key(i));
        std::vector<std::uint32_t> order(n);
        std::iota(order.begin(), order.end(), 0u);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::uint32_t a, std::uint32_t b) {
                             return scores[a] > scores[b];
                         });
        order.resize(k);
        std::sort(order.begin(), order.end());

        CHECK(dense_topk(q, kv, k) == order);
    }
}

TEST_CASE("dense_topk breaks exact ties toward the lower index") {
    // Duplicate keys tie exactly; the earlier row must win.
    std::vector<float> keys = {1, 0, 1, 0, 1, 0};
    std::vector<float> values(6, 0.0f);
    KvStore kv(2, keys, values);
    std::vector<float> q = {2, 0};
    CHECK(dense_topk(q, kv, 1) == std::vector<std::uint32_t>{0});
    CHECK(dense_topk(q, kv, 2) == std::vector<std::uint32_t>{0, 1});
    CHECK_THROWS_AS(dense_topk(q, kv, 0), ParameterError);
    CHECK_THROWS_AS(dense_topk(q, kv, 4), ParameterError);
}

TEST_CASE("f16 round trip is exact for representable values") {
    CHECK(f16_to_f32(f32_to_f16(0.0f)) == 0.0f);
    CHECK(f16_to_f32(f32_to_f16(1.0f)) == 1.0f);
    CHECK(f16_to_f32(f32_to_f16(-2.5f)) == -2.5f);
    CHECK(f16_to_f32(f32_to_f16(0.09375f)) == 0.09375f);
    CHECK(f16_to_f32(f32_to_f16(65504.0f)) == 65504.0f);
    // Overflow saturates to infinity, relative error stays within 2^-11.
    CHECK(std::isinf(f16_to_f32(f32_to_f16(70000.0f))));
    Rng rng(3);
    for (int i = 0; i < 2000; ++i) {
        const float x = static_cast<float>(rng.next_normal() * 8.0);
        const float y = f16_to_f32(f32_to_f16(x));
        CHECK(std::fabs(y - x) <= std::fabs(x) * (1.0f / 2048.0f) + 1e-7f);
    }
}

TEST_CASE("ceil_ratio lands on exact products and never undershoots") {
    CHECK(ceil_ratio(0.05, 7936) == 397);   // 396.8 rounds up
    CHECK(ceil_ratio(0.05, 8000) == 400);   // exact product stays put
    CHECK(ceil_ratio(0.2, 1000) == 200);
    CHECK(ceil_ratio(0.15, 8192) == 1229);  // 1228.8
    CHECK(ceil_ratio(1.0, 123) == 123);
    CHECK(ceil_ratio(0.5, 3) == 2);
    Rng rng(9);
    for (int i = 0; i < 500; ++i) {
        const std::size_t n = 1 + rng.next_index(10000);
        const double r = rng.next_unit();
        const std::size_t c = ceil_ratio(r, n);
        CHECK(static_cast<double>(c) + 1e-6 >= r * static_cast<double>(n));
        CHECK(static_cast<double>(c) < r * static_cast<double>(n) + 1.0 + 1e-6);
    }
}

TEST_CASE("rng streams are reproducible and mix_seed decorrelates") {
    Rng a(123), b(123);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    CHECK(mix_seed(1, 0) != mix_seed(1, 1));
    CHECK(mix_seed(1, 0) != mix_seed(2, 0));
    // next_index stays in range and hits both ends eventually.
    Rng c(5);
    bool low = false, high = false;
    for (int i = 0; i < 1000; ++i) {
        const auto v = c.next_index(10);
        CHECK(v < 10);
        low = low || v == 0;
        high = high || v == 9;
    }
    CHECK(low);
    CHECK(high);
}
