#include "csattn/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace csattn {

namespace {

void require_finite(std::span<const float> v, const char* what) {
    for (float x : v)
        if (!std::isfinite(x))
            throw DataError(std::string(what) + " contains a non-finite value");
}

}  // namespace

SubspaceLayout::SubspaceLayout(std::vector<std::size_t> subspace_sizes)
    : sizes(std::move(subspace_sizes)) {
    if (sizes.empty()) throw ParameterError("subspace layout needs m >= 1");
    offsets.resize(sizes.size());
    std::size_t off = 0;
    for (std::size_t b = 0; b < sizes.size(); ++b) {
        if (sizes[b] == 0)
            throw ParameterError("subspace width must be >= 1 (subspace " +
                                 std::to_string(b) + ")");
        offsets[b] = off;
        off += sizes[b];
    }
}

SubspaceLayout SubspaceLayout::uniform(std::size_t dim, std::size_t subspaces) {
    if (subspaces == 0 || subspaces > dim)
        throw ParameterError("uniform layout requires 1 <= m <= d");
    std::vector<std::size_t> sizes(subspaces, dim / subspaces);
    for (std::size_t b = 0; b < dim % subspaces; ++b) sizes[b] += 1;
    return SubspaceLayout(std::move(sizes));
}

std::size_t SubspaceLayout::dim() const {
    return std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
}

std::span<const float> SubspaceLayout::slice(std::span<const float> v,
                                             std::size_t b) const {
    return v.subspan(offsets[b], sizes[b]);
}

KvStore::KvStore(std::size_t dim) : dim_(dim) {
    if (dim == 0) throw ParameterError("head dimension must be >= 1");
}

KvStore::KvStore(std::size_t dim, std::span<const float> prefill_keys,
                 std::span<const float> prefill_values)
    : KvStore(dim) {
    if (prefill_keys.size() % dim != 0 || prefill_values.size() % dim != 0)
        throw DimensionError("prefill rows are not a multiple of d");
    if (prefill_keys.size() != prefill_values.size())
        throw DimensionError("prefill key/value counts differ");
    require_finite(prefill_keys, "prefill keys");
    require_finite(prefill_values, "prefill values");
    keys_.assign(prefill_keys.begin(), prefill_keys.end());
    values_.assign(prefill_values.begin(), prefill_values.end());
    prefill_len_ = prefill_keys.size() / dim;
    total_len_ = prefill_len_;
}

void KvStore::append(std::span<const float> key, std::span<const float> value) {
    if (key.size() != dim_ || value.size() != dim_)
        throw DimensionError("appended key/value width does not match d");
    require_finite(key, "appended key");
    require_finite(value, "appended value");
    keys_.insert(keys_.end(), key.begin(), key.end());
    values_.insert(values_.end(), value.begin(), value.end());
    total_len_ += 1;
}

std::span<const float> KvStore::key(std::size_t i) const {
    return {keys_.data() + i * dim_, dim_};
}

std::span<const float> KvStore::value(std::size_t i) const {
    return {values_.data() + i * dim_, dim_};
}

double dot(std::span<const float> a, std::span<const float> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    return acc;
}

std::vector<std::span<const float>> split_subspaces(
    std::span<const float> v, const SubspaceLayout& layout) {
    if (v.size() != layout.dim())
        throw DimensionError("vector length " + std::to_string(v.size()) +
                             " does not match layout dimension " +
                             std::to_string(layout.dim()));
    std::vector<std::span<const float>> slices;
    slices.reserve(layout.count());
    for (std::size_t b = 0; b < layout.count(); ++b)
        slices.push_back(layout.slice(v, b));
    return slices;
}

bool l2_normalize(std::span<float> v) {
    double norm2 = 0.0;
    for (float x : v) norm2 += static_cast<double>(x) * static_cast<double>(x);
    if (norm2 == 0.0) return true;
    const double inv = 1.0 / std::sqrt(norm2);
    for (float& x : v) x = static_cast<float>(x * inv);
    return false;
}

AttentionOutput dense_attention(
    std::span<const float> q, const KvStore& kv,
    std::optional<std::span<const std::uint32_t>> mask) {
    if (kv.size() == 0) throw ParameterError("attention over an empty KV store");
    if (q.size() != kv.dim())
        throw DimensionError("query width does not match KV dimension");

    std::vector<std::uint32_t> all;
    std::span<const std::uint32_t> idx;
    if (mask.has_value()) {
        idx = *mask;
        if (idx.empty())
            throw ParameterError("attention over an empty index set");
        for (std::uint32_t i : idx)
            if (i >= kv.size())
                throw ParameterError("mask index " + std::to_string(i) +
                                     " out of range");
    } else {
        all.resize(kv.size());
        std::iota(all.begin(), all.end(), 0u);
        idx = all;
    }

    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(kv.dim()));
    std::vector<double> logits(idx.size());
    double max_logit = -std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < idx.size(); ++r) {
        logits[r] = dot(q, kv.key(idx[r])) * inv_sqrt_d;
        max_logit = std::max(max_logit, logits[r]);
    }

    double denom = 0.0;
    for (double& l : logits) {
        l = std::exp(l - max_logit);
        denom += l;
    }

    AttentionOutput out;
    out.weights.resize(idx.size());
    out.output.assign(kv.dim(), 0.0f);
    std::vector<double> acc(kv.dim(), 0.0);
    for (std::size_t r = 0; r < idx.size(); ++r) {
        const double w = logits[r] / denom;
        out.weights[r] = static_cast<float>(w);
        const auto v = kv.value(idx[r]);
        for (std::size_t j = 0; j < kv.dim(); ++j)
            acc[j] += w * static_cast<double>(v[j]);
    }
    for (std::size_t j = 0; j < kv.dim(); ++j)
        out.output[j] = static_cast<float>(acc[j]);
    return out;
}

std::vector<std::uint32_t> dense_topk(std::span<const float> q,
                                      const KvStore& kv, std::size_t k) {
    if (k < 1 || k > kv.size())
        throw ParameterError("top-k count out of range: " + std::to_string(k));
    if (q.size() != kv.dim())
        throw DimensionError("query width does not match KV dimension");

    std::vector<double> scores(kv.size());
    for (std::size_t i = 0; i < kv.size(); ++i) scores[i] = dot(q, kv.key(i));

    std::vector<std::uint32_t> order(kv.size());
    std::iota(order.begin(), order.end(), 0u);
    std::partial_sort(order.begin(), order.begin() + k, order.end(),
                      [&](std::uint32_t a, std::uint32_t b) {
                          if (scores[a] != scores[b])
                              return scores[a] > scores[b];
                          return a < b;
                      });
    order.resize(k);
    std::sort(order.begin(), order.end());
    return order;
}

}  // namespace csattn
