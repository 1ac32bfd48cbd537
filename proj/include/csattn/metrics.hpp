#ifndef CSATTN_METRICS_HPP
#define CSATTN_METRICS_HPP

#include <cstddef>
#include <cstdint>
#include <span>

#include "csattn/errors.hpp"

namespace csattn {

// Modeled per-step work. Search-side fields (centroid_dot_ops,
// gathered_entries, reduce_ops, searches) are zero on steps that reuse a
// cached candidate set.
struct CostCounters {
    std::size_t centroid_dot_ops = 0;   // C*d multiplies per actual search
    std::size_t gathered_entries = 0;   // sum of gathered list lengths
    std::size_t reduce_ops = 0;         // accumulate ops in reduce_by_key
    std::size_t attention_key_ops = 0;  // K*d, every step
    double h2d_bytes_model = 0.0;       // 2*rho*N*d*B / P, every step
    std::size_t searches = 0;
    std::size_t inserts_attempted = 0;  // m*C table offers per append
    std::size_t inserts_applied = 0;
    std::size_t insert_dot_ops = 0;     // C*d scoring multiplies per append

    void add(const CostCounters& o) {
        centroid_dot_ops += o.centroid_dot_ops;
        gathered_entries += o.gathered_entries;
        reduce_ops += o.reduce_ops;
        attention_key_ops += o.attention_key_ops;
        h2d_bytes_model += o.h2d_bytes_model;
        searches += o.searches;
        inserts_attempted += o.inserts_attempted;
        inserts_applied += o.inserts_applied;
        insert_dot_ops += o.insert_dot_ops;
    }
};

// |selected ∩ truth| / |truth|. Inputs need not be sorted.
double recall_at_k(std::span<const std::uint32_t> selected,
                   std::span<const std::uint32_t> truth);

// Modeled host-to-device traffic per decode step: 2*rho*n*d*B, amortized
// over the search period. B is the byte width of one KV element.
double h2d_bytes(double rho, std::size_t n, std::size_t d,
                 std::size_t bytes_per_elem, std::size_t period);

// Modeled index size: m*C*L entries at (4 index + score) bytes each, plus
// C*d centroid elements at score width. Matches the serialized payload
// exactly when every list is full.
std::size_t table_bytes(std::size_t m, std::size_t c, std::size_t l,
                        std::size_t d, std::size_t bytes_per_score);

// Nearest-rank percentile; p in [0, 100]. Copies and sorts internally.
double percentile(std::span<const double> values, double p);

}  // namespace csattn

#endif  // CSATTN_METRICS_HPP
