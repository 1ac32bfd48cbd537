#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "csattn/errors.hpp"

namespace csattn {

// One head-dimensional activation row (a query, key, or value).
using HeadVector = std::vector<float>;

/*****************************************************
 * SubspaceLayout
 *
 * How the d head dimensions split into m contiguous subspaces.
 * sizes[b] >= 1 for all b and sum(sizes) == d; offsets are the
 * prefix sums of sizes.
 *****************************************************/
struct SubspaceLayout {
    std::vector<std::size_t> sizes;
    std::vector<std::size_t> offsets;

    SubspaceLayout() = default;
    explicit SubspaceLayout(std::vector<std::size_t> subspace_sizes);

    // Uniform split; when m does not divide d the first d % m subspaces
    // take one extra dimension.
    static SubspaceLayout uniform(std::size_t dim, std::size_t subspaces);

    std::size_t dim() const;                    // d
    std::size_t count() const { return sizes.size(); }  // m

    std::span<const float> slice(std::span<const float> v,
                                 std::size_t b) const;
};

/*****************************************************
 * KvStore
 *
 * Append-only key/value rows for one head, with an immutable
 * prefill/decode boundary.
 *****************************************************/
class KvStore {
   public:
    explicit KvStore(std::size_t dim);
    KvStore(std::size_t dim, std::span<const float> prefill_keys,
            std::span<const float> prefill_values);

    void append(std::span<const float> key, std::span<const float> value);

    std::span<const float> key(std::size_t i) const;
    std::span<const float> value(std::size_t i) const;

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return total_len_; }         // N
    std::size_t prefill_len() const { return prefill_len_; }  // P

   private:
    std::size_t dim_;
    std::size_t prefill_len_ = 0;
    std::size_t total_len_ = 0;
    std::vector<float> keys_;
    std::vector<float> values_;
};

/*****************************************************
 * Attention
 *****************************************************/

struct AttentionOutput {
    // Softmax weights over the attended set, in the order the indices
    // were given (ascending when no mask).
    std::vector<float> weights;
    HeadVector output;
};

// Inner product with 64-bit accumulation.
double dot(std::span<const float> a, std::span<const float> b);

// Slices v according to the layout; views into v, no copies.
std::vector<std::span<const float>> split_subspaces(
    std::span<const float> v, const SubspaceLayout& layout);

// In-place l2 normalization. Returns true if the vector was degenerate
// (zero norm), in which case it is left as all zeros.
bool l2_normalize(std::span<float> v);

// Exact scaled dot-product attention over the masked subset (all keys
// when mask is nullopt). Logits are q.k_i / sqrt(d), softmax with
// max-subtraction, accumulation in 64-bit. This is the dense oracle the
// sparse path is validated against.
AttentionOutput dense_attention(
    std::span<const float> q, const KvStore& kv,
    std::optional<std::span<const std::uint32_t>> mask = std::nullopt);

// Indices of the k largest q.k_i, ties to the lower index. Returned in
// ascending index order (a set).
std::vector<std::uint32_t> dense_topk(std::span<const float> q,
                                      const KvStore& kv, std::size_t k);

}  // namespace csattn
