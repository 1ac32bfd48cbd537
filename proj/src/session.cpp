#include "csattn/session.hpp"

#include <cmath>
#include <string>

namespace csattn {

namespace {

void validate_retrieval_config(const RetrievalConfig& cfg, std::size_t m) {
    if (!(cfg.keep_ratio > 0.0 && cfg.keep_ratio <= 1.0))
        throw ParameterError("keep ratio must lie in (0, 1]");
    if (cfg.search_period == 0)
        throw ParameterError("search period must be >= 1");
    if (cfg.backoff_tau == 0) throw ParameterError("backoff tau must be >= 1");
    if (!cfg.weights.empty() && cfg.weights.size() != m)
        throw DimensionError("need one weight per subspace");
    for (double w : cfg.weights)
        if (!(w > 0.0))
            throw ParameterError("subspace weights must be positive");
}

}  // namespace

Session prefill(std::span<const float> queries, std::span<const float> keys,
                std::span<const float> values, const SubspaceLayout& layout,
                const IndexConfig& index_cfg, const RetrievalConfig& cfg,
                BuildStats* stats) {
    const std::size_t d = layout.dim();
    if (queries.size() % d != 0 || keys.size() % d != 0 ||
        values.size() % d != 0)
        throw DimensionError("prefill rows are not a multiple of d");
    const std::size_t count = queries.size() / d;
    if (count == 0) throw ParameterError("prefill must be non-empty");
    if (keys.size() != queries.size() || values.size() != queries.size())
        throw ParameterError("prefill query/key/value counts must be equal");
    validate_retrieval_config(cfg, layout.count());

    KvStore kv(d, keys, values);
    CsIndex index = build_index(queries, count, kv, layout, index_cfg, stats);
    Session session(std::move(kv), std::move(index), cfg);
    session.seed = index_cfg.cluster.seed;
    return session;
}

DecodeStepReport decode_step(Session& session, std::span<const float> q,
                             std::span<const float> new_key,
                             std::span<const float> new_value,
                             bool compare_dense) {
    const std::size_t d = session.kv.dim();
    if (q.size() != d || new_key.size() != d || new_value.size() != d)
        throw DimensionError("decode step inputs must have width d");

    DecodeStepReport report;
    const std::size_t n = session.kv.size();  // context this step attends to

    SearchResult sr = decode_search(q, session.index, session.kv, session.cfg,
                                    session.search_state);
    report.selected = std::move(sr.selected);
    report.k = sr.k;
    report.searched = sr.searched;
    report.attention = dense_attention(q, session.kv, report.selected);

    // The dense reference sees the same pre-append context the sparse path
    // saw, so the two outputs are directly comparable.
    if (compare_dense) {
        report.dense_reference = dense_attention(q, session.kv);
        const auto truth = dense_topk(q, session.kv, report.k);
        report.recall = recall_at_k(report.selected, truth);
        double err2 = 0.0;
        for (std::size_t t = 0; t < d; ++t) {
            const double diff =
                static_cast<double>(report.attention.output[t]) -
                static_cast<double>(report.dense_reference->output[t]);
            err2 += diff * diff;
        }
        report.l2_error = std::sqrt(err2);
    }

    session.kv.append(new_key, new_value);
    const InsertReport ir = streaming_insert(
        new_key, static_cast<std::uint32_t>(n), session.index);

    report.counters.centroid_dot_ops = sr.centroid_dot_ops;
    report.counters.gathered_entries = sr.gathered_entries;
    report.counters.reduce_ops = sr.reduce_ops;
    report.counters.attention_key_ops = report.k * d;
    report.counters.h2d_bytes_model =
        h2d_bytes(session.cfg.keep_ratio, n, d, session.h2d_elem_bytes,
                  session.cfg.search_period);
    report.counters.searches = sr.searched ? 1 : 0;
    report.counters.inserts_attempted = ir.attempted;
    report.counters.inserts_applied = ir.applied;
    report.counters.insert_dot_ops = ir.dot_ops;

    session.step += 1;
    session.totals.add(report.counters);
    return report;
}

std::vector<DecodeStepReport> run_decode(Session& session,
                                         std::span<const float> queries,
                                         std::span<const float> keys,
                                         std::span<const float> values,
                                         std::size_t steps,
                                         bool compare_dense) {
    const std::size_t d = session.kv.dim();
    if (queries.size() % d != 0 || keys.size() % d != 0 ||
        values.size() % d != 0)
        throw DimensionError("decode rows are not a multiple of d");
    const std::size_t available =
        std::min({queries.size() / d, keys.size() / d, values.size() / d});
    if (available < steps)
        throw StreamExhaustedError("decode streams run out at step " +
                                   std::to_string(available) + " of " +
                                   std::to_string(steps));

    std::vector<DecodeStepReport> reports;
    reports.reserve(steps);
    for (std::size_t t = 0; t < steps; ++t) {
        reports.push_back(decode_step(
            session, queries.subspan(t * d, d), keys.subspan(t * d, d),
            values.subspan(t * d, d), compare_dense));
    }
    return reports;
}

}  // namespace csattn
