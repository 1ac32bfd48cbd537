#ifndef CSATTN_SESSION_HPP
#define CSATTN_SESSION_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "csattn/core.hpp"
#include "csattn/index.hpp"
#include "csattn/metrics.hpp"
#include "csattn/retrieval.hpp"

namespace csattn {

// One head's prefill -> decode lifecycle: the KV store, the prefill index,
// the retrieval settings, and the rolling search cache.
struct Session {
    KvStore kv;
    CsIndex index;
    RetrievalConfig cfg;
    std::size_t step = 0;  // decode steps taken, so kv.size() = prefill + step
    std::uint64_t seed = 0;
    std::size_t h2d_elem_bytes = 2;  // B in the transfer model
    SearchState search_state;
    CostCounters totals;

    Session(KvStore kv_, CsIndex index_, RetrievalConfig cfg_)
        : kv(std::move(kv_)), index(std::move(index_)), cfg(std::move(cfg_)) {}
};

struct DecodeStepReport {
    std::vector<std::uint32_t> selected;  // ascending, size K
    std::size_t k = 0;
    bool searched = false;
    AttentionOutput attention;  // over the selected set only
    std::optional<AttentionOutput> dense_reference;
    std::optional<double> recall;     // vs dense top-K, when compared
    std::optional<double> l2_error;   // output distance, when compared
    CostCounters counters;            // this step only
};

// Builds the store and index over the prefill rows (counts must agree) and
// validates the retrieval settings.
Session prefill(std::span<const float> queries, std::span<const float> keys,
                std::span<const float> values, const SubspaceLayout& layout,
                const IndexConfig& index_cfg, const RetrievalConfig& cfg,
                BuildStats* stats = nullptr);

// One decode step: search (or reuse), sparse attention over the selected
// keys, optional dense comparison against the same pre-append context, then
// append the new KV pair and offer its key to every table.
DecodeStepReport decode_step(Session& session, std::span<const float> q,
                             std::span<const float> new_key,
                             std::span<const float> new_value,
                             bool compare_dense);

// Runs decode_step over row-major streams; throws if a stream runs out
// before `steps` rows are consumed.
std::vector<DecodeStepReport> run_decode(Session& session,
                                         std::span<const float> queries,
                                         std::span<const float> keys,
                                         std::span<const float> values,
                                         std::size_t steps,
                                         bool compare_dense);

}  // namespace csattn

#endif  // CSATTN_SESSION_HPP
