#ifndef CSATTN_INDEX_HPP
#define CSATTN_INDEX_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "csattn/clustering.hpp"
#include "csattn/core.hpp"
#include "csattn/errors.hpp"

namespace csattn {

// Fixed-capacity list of the best (index, score) pairs for one
// (subspace, centroid) pair, sorted by score descending, index ascending on
// ties. Capacity is set once and never grows.
struct TopList {
    std::uint32_t capacity = 0;
    std::vector<std::uint32_t> indices;
    std::vector<float> scores;

    bool full() const { return indices.size() >= capacity; }
    // Lowest retained score (last element); -inf when empty so that any
    // score clears the bar while the list is filling.
    float min_score() const;
    // Inserts in sorted position. A full list admits the entry only when its
    // score strictly beats min_score, evicting the current minimum. Callers
    // must not pass an index already present.
    bool try_insert(std::uint32_t index, float score);
    static TopList from_scores(std::span<const float> scores,
                               std::uint32_t capacity);
};

struct IndexConfig {
    double alpha = 0.2;             // list capacity L = ceil(alpha * prefill)
    std::size_t list_capacity = 0;  // absolute override for L; 0 = derive
    bool normalize_keys = false;    // score against normalized key slices
    int score_bits = 16;            // serialized score width: 16 or 32
    ClusterConfig cluster;          // C, iterations, batch_size, seed
};

// The prefill artifact: per-subspace centroid sets plus an m x C grid of
// top lists over the prefill keys.
struct CsIndex {
    SubspaceLayout layout;
    std::vector<CentroidSet> centroid_sets;  // one per subspace
    std::vector<TopList> tables;             // m x C, subspace-major
    double alpha = 0.0;
    std::uint32_t list_capacity = 0;  // L
    std::uint64_t prefill_len = 0;
    bool normalize_keys = false;
    int score_bits = 16;

    explicit CsIndex(SubspaceLayout l) : layout(std::move(l)) {}

    std::size_t subspaces() const { return layout.count(); }
    std::size_t centroids_per_subspace() const {
        return centroid_sets.empty() ? 0 : centroid_sets[0].count;
    }
    TopList& table(std::size_t b, std::size_t j) {
        return tables[b * centroids_per_subspace() + j];
    }
    const TopList& table(std::size_t b, std::size_t j) const {
        return tables[b * centroids_per_subspace() + j];
    }
};

// Dot-product accounting for the offline build.
struct BuildStats {
    std::size_t cluster_dot_ops = 0;  // seeding + assignment multiplies
    std::size_t score_dot_ops = 0;    // centroid-vs-key scoring multiplies
};

// Scores of one centroid against key slices 0..n_keys-1 in subspace b. Keys
// are used raw by default; normalize_keys divides by each slice norm (zero
// slices score 0).
std::vector<float> score_keys(std::span<const float> centroid,
                              const KvStore& kv, const SubspaceLayout& layout,
                              std::size_t b, bool normalize_keys,
                              std::size_t n_keys);

// Offline pipeline: per subspace, cluster the query slices, then score every
// prefill key against every centroid and keep the top L per centroid.
CsIndex build_index(std::span<const float> queries, std::size_t query_count,
                    const KvStore& kv, const SubspaceLayout& layout,
                    const IndexConfig& config, BuildStats* stats = nullptr);

// Same list construction with caller-supplied centroid sets (unit rows, one
// set per subspace, equal counts); skips clustering entirely.
CsIndex build_index_from_centroids(std::vector<CentroidSet> centroid_sets,
                                   const KvStore& kv,
                                   const SubspaceLayout& layout,
                                   const IndexConfig& config,
                                   BuildStats* stats = nullptr);

// Little-endian image:
//   magic "CSAT" | version u16 | flags u16 | m u32 | C u32 | L u32 | d u32 |
//   prefill u64 | subspace widths u32 x m | per subspace: centroid rows |
//   per (subspace, centroid): length u32, indices u32 x len, scores x len.
// Flag bit 0 selects 16-bit storage (scores AND centroid elements become
// IEEE half); bit 1 records that keys were normalized during scoring. Scores
// and centroids stay 32-bit in memory; quantization happens here only.
std::vector<std::uint8_t> serialize_index(const CsIndex& index);
CsIndex deserialize_index(std::span<const std::uint8_t> bytes);

void save_index(const CsIndex& index, const std::string& path);
CsIndex load_index(const std::string& path);

// Byte accounting for the serialized image. "payload" is what the storage
// model prices: centroid rows plus list entries; the fixed header, the width
// table, and the per-list length prefixes count as header_bytes.
struct IndexFootprint {
    std::size_t header_bytes = 0;
    std::size_t centroid_bytes = 0;
    std::size_t entry_bytes = 0;
    std::size_t payload() const { return centroid_bytes + entry_bytes; }
    std::size_t total() const { return header_bytes + payload(); }
};
IndexFootprint index_footprint(const CsIndex& index);

}  // namespace csattn

#endif  // CSATTN_INDEX_HPP
