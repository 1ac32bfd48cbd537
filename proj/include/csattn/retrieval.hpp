#ifndef CSATTN_RETRIEVAL_HPP
#define CSATTN_RETRIEVAL_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "csattn/index.hpp"

namespace csattn {

struct RetrievalConfig {
    double keep_ratio = 0.05;        // rho: fraction of context attended
    std::size_t search_period = 1;   // P: steps between table searches
    std::size_t recent_window = 32;  // R: newest positions always considered
    std::vector<double> weights;     // w_b per subspace; empty = all ones
    std::size_t backoff_tau = 1;     // centroids taken per subspace on backoff
    double backoff_threshold =
        -std::numeric_limits<double>::infinity();  // backoff off by default
    // true: the recent window is guaranteed-kept and only the remaining
    // K - R slots compete on score. false: window positions merely join the
    // candidate pool at their accumulated score (0 when absent).
    bool recent_passthrough = true;
    // Optional adaptive bump of K, fed the derived K and the weakest
    // per-subspace best-cosine of the last search. Ships disabled (null).
    std::function<std::size_t(std::size_t, double)> k_bump;
};

// Parses "<rho>-step-<P>", e.g. "0.05-step-1" or "0.20-step-8".
std::pair<double, std::size_t> parse_schedule(const std::string& name);

// K for a context of n positions: max(1, ceil(rho * n)).
std::size_t keep_count(double rho, std::size_t n);

// Accumulated per-key scores, kept sorted by key index for determinism.
struct CandidateSet {
    std::vector<std::uint32_t> indices;        // ascending
    std::vector<double> scores;                // aligned weighted sums
    std::vector<std::uint32_t> source_counts;  // contributing subspaces
    std::size_t size() const { return indices.size(); }
};

struct CentroidSelection {
    std::vector<std::vector<std::uint32_t>> per_subspace;  // 1..tau ids each
    std::vector<double> best_cosine;                       // per subspace
    std::size_t dot_ops = 0;
};

// Per subspace: normalize the query slice and take the best centroid by
// cosine; below the threshold, take the top tau instead (backoff). A zero
// slice matches centroid 0 by convention.
CentroidSelection select_centroids(std::span<const float> q,
                                   const CsIndex& index, std::size_t tau,
                                   double threshold);

struct GatheredLists {
    std::vector<const TopList*> lists;
    std::vector<std::size_t> subspace;  // aligned source subspace ids
    std::size_t total_entries() const;
};

GatheredLists gather_lists(const CsIndex& index,
                           const CentroidSelection& selection);

// score(i) = sum over gathered lists containing i of w_b * list score;
// lists not containing i contribute nothing. Realized as sort + segmented
// sum so the result order is deterministic.
CandidateSet reduce_by_key(const GatheredLists& gathered,
                           std::span<const double> weights);

// Final per-step selection: always exactly K indices (ascending). Candidates
// compete by (score desc, index asc); the recent window is handled per
// cfg.recent_passthrough; any unfilled slots fall back to the newest
// positions so decode never stalls. k_override > 0 replaces the derived K.
std::vector<std::uint32_t> select_topk(const CandidateSet& candidates,
                                       const KvStore& kv,
                                       const RetrievalConfig& cfg,
                                       std::size_t k_override = 0);

// Rolling state for the search schedule: searches happen on steps
// 0, P, 2P, ...; between them the cached candidate scores are reused and
// only the window/K are recomputed against the grown context.
struct SearchState {
    std::size_t step = 0;
    CandidateSet cached;
    bool has_cache = false;
    CentroidSelection last_selection;
};

struct SearchResult {
    std::vector<std::uint32_t> selected;  // ascending, size K
    std::size_t k = 0;
    bool searched = false;
    std::size_t centroid_dot_ops = 0;  // this step only
    std::size_t gathered_entries = 0;
    std::size_t reduce_ops = 0;
};

SearchResult decode_search(std::span<const float> q, const CsIndex& index,
                           const KvStore& kv, const RetrievalConfig& cfg,
                           SearchState& state);

// Scores the appended key against every centroid and offers it to every
// table; full tables admit it only when it strictly beats their minimum.
struct InsertReport {
    std::size_t attempted = 0;
    std::size_t applied = 0;
    std::size_t dot_ops = 0;
    std::vector<std::uint8_t> applied_mask;  // per table, subspace-major
};

InsertReport streaming_insert(std::span<const float> new_key,
                              std::uint32_t key_index, CsIndex& index);

}  // namespace csattn

#endif  // CSATTN_RETRIEVAL_HPP
