#include "csattn/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

namespace csattn {

std::pair<double, std::size_t> parse_schedule(const std::string& name) {
    const std::string sep = "-step-";
    const auto at = name.find(sep);
    if (at == std::string::npos || at == 0 || at + sep.size() >= name.size())
        throw ParameterError("schedule must look like \"<rho>-step-<P>\": " +
                             name);
    double rho = 0.0;
    std::size_t period = 0;
    try {
        std::size_t used = 0;
        rho = std::stod(name.substr(0, at), &used);
        if (used != at) throw ParameterError("");
        const std::string tail = name.substr(at + sep.size());
        period = std::stoul(tail, &used);
        if (used != tail.size()) throw ParameterError("");
    } catch (const std::exception&) {
        throw ParameterError("cannot parse schedule \"" + name + "\"");
    }
    if (!(rho > 0.0 && rho <= 1.0))
        throw ParameterError("schedule keep ratio must lie in (0, 1]");
    if (period == 0) throw ParameterError("schedule period must be >= 1");
    return {rho, period};
}

std::size_t keep_count(double rho, std::size_t n) {
    if (!(rho > 0.0 && rho <= 1.0))
        throw ParameterError("keep ratio must lie in (0, 1]");
    return std::max<std::size_t>(1, ceil_ratio(rho, n));
}

CentroidSelection select_centroids(std::span<const float> q,
                                   const CsIndex& index, std::size_t tau,
                                   double threshold) {
    if (q.size() != index.layout.dim())
        throw DimensionError("query width does not match index dimension");
    if (tau == 0) throw ParameterError("backoff tau must be >= 1");

    const std::size_t m = index.subspaces();
    CentroidSelection sel;
    sel.per_subspace.resize(m);
    sel.best_cosine.resize(m);

    std::vector<float> slice;
    for (std::size_t b = 0; b < m; ++b) {
        const CentroidSet& cs = index.centroid_sets[b];
        const auto raw = index.layout.slice(q, b);
        slice.assign(raw.begin(), raw.end());
        if (l2_normalize(slice)) {
            // Degenerate slice: treated as matching centroid 0, no backoff.
            sel.per_subspace[b] = {0};
            sel.best_cosine[b] = 1.0;
            continue;
        }
        const auto scores = centroid_scores(slice, cs);
        sel.dot_ops += cs.count * cs.dim;
        std::size_t best = 0;
        for (std::size_t j = 1; j < cs.count; ++j)
            if (scores[j] > scores[best]) best = j;
        sel.best_cosine[b] = scores[best];
        if (scores[best] >= threshold) {
            sel.per_subspace[b] = {static_cast<std::uint32_t>(best)};
            continue;
        }
        // Weak match: fall back to the top tau centroids.
        const std::size_t take = std::min(tau, cs.count);
        std::vector<std::uint32_t> order(cs.count);
        std::iota(order.begin(), order.end(), 0u);
        std::partial_sort(order.begin(), order.begin() + take, order.end(),
                          [&](std::uint32_t a, std::uint32_t b2) {
                              if (scores[a] != scores[b2])
                                  return scores[a] > scores[b2];
                              return a < b2;
                          });
        order.resize(take);
        sel.per_subspace[b] = std::move(order);
    }
    return sel;
}

std::size_t GatheredLists::total_entries() const {
    std::size_t n = 0;
    for (const TopList* list : lists) n += list->indices.size();
    return n;
}

GatheredLists gather_lists(const CsIndex& index,
                           const CentroidSelection& selection) {
    if (selection.per_subspace.size() != index.subspaces())
        throw DimensionError("selection does not cover every subspace");
    GatheredLists out;
    for (std::size_t b = 0; b < selection.per_subspace.size(); ++b) {
        for (std::uint32_t j : selection.per_subspace[b]) {
            if (j >= index.centroids_per_subspace())
                throw ParameterError("centroid id out of range");
            out.lists.push_back(&index.table(b, j));
            out.subspace.push_back(b);
        }
    }
    return out;
}

CandidateSet reduce_by_key(const GatheredLists& gathered,
                           std::span<const double> weights) {
    struct Entry {
        std::uint32_t index;
        double score;
    };
    std::vector<Entry> entries;
    entries.reserve(gathered.total_entries());
    for (std::size_t l = 0; l < gathered.lists.size(); ++l) {
        const std::size_t b = gathered.subspace[l];
        if (b >= weights.size())
            throw DimensionError("need one weight per subspace");
        const double w = weights[b];
        const TopList& list = *gathered.lists[l];
        for (std::size_t r = 0; r < list.indices.size(); ++r)
            entries.push_back(
                {list.indices[r], w * static_cast<double>(list.scores[r])});
    }
    std::sort(entries.begin(), entries.end(),
              [](const Entry& a, const Entry& b) { return a.index < b.index; });

    CandidateSet out;
    std::size_t r = 0;
    while (r < entries.size()) {
        const std::uint32_t key = entries[r].index;
        double sum = 0.0;
        std::uint32_t sources = 0;
        while (r < entries.size() && entries[r].index == key) {
            sum += entries[r].score;
            sources += 1;
            ++r;
        }
        out.indices.push_back(key);
        out.scores.push_back(sum);
        out.source_counts.push_back(sources);
    }
    return out;
}

std::vector<std::uint32_t> select_topk(const CandidateSet& candidates,
                                       const KvStore& kv,
                                       const RetrievalConfig& cfg,
                                       std::size_t k_override) {
    const std::size_t n = kv.size();
    if (n == 0) throw ParameterError("cannot select from an empty context");
    const std::size_t k =
        k_override ? std::min(k_override, n) : keep_count(cfg.keep_ratio, n);
    const std::size_t r_eff = std::min(cfg.recent_window, n);
    const std::size_t window_lo = n - r_eff;  // window = [window_lo, n)

    std::vector<std::uint32_t> selected;
    selected.reserve(k);

    struct Scored {
        std::uint32_t index;
        double score;
    };
    const auto by_rank = [](const Scored& a, const Scored& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.index < b.index;
    };

    if (cfg.recent_passthrough) {
        if (k <= r_eff) {
            // Window alone covers the budget; keep its newest k positions.
            for (std::size_t i = n - k; i < n; ++i)
                selected.push_back(static_cast<std::uint32_t>(i));
            return selected;
        }
        for (std::size_t i = window_lo; i < n; ++i)
            selected.push_back(static_cast<std::uint32_t>(i));
        // Remaining slots: best-scored candidates outside the window.
        std::vector<Scored> pool;
        pool.reserve(candidates.size());
        for (std::size_t c = 0; c < candidates.size(); ++c)
            if (candidates.indices[c] < window_lo)
                pool.push_back({candidates.indices[c], candidates.scores[c]});
        const std::size_t need = k - r_eff;
        const std::size_t take = std::min(need, pool.size());
        std::partial_sort(pool.begin(), pool.begin() + take, pool.end(),
                          by_rank);
        for (std::size_t c = 0; c < take; ++c)
            selected.push_back(pool[c].index);
    } else {
        // Window positions compete like everyone else, at their accumulated
        // score or 0 when the tables never produced them.
        std::vector<Scored> pool;
        pool.reserve(candidates.size() + r_eff);
        std::size_t c = 0;
        for (; c < candidates.size() && candidates.indices[c] < window_lo; ++c)
            pool.push_back({candidates.indices[c], candidates.scores[c]});
        for (std::size_t i = window_lo; i < n; ++i) {
            const std::uint32_t idx = static_cast<std::uint32_t>(i);
            if (c < candidates.size() && candidates.indices[c] == idx) {
                pool.push_back({idx, candidates.scores[c]});
                ++c;
            } else {
                pool.push_back({idx, 0.0});
            }
        }
        const std::size_t take = std::min(k, pool.size());
        std::partial_sort(pool.begin(), pool.begin() + take, pool.end(),
                          by_rank);
        for (std::size_t p = 0; p < take; ++p)
            selected.push_back(pool[p].index);
    }

    if (selected.size() < k) {
        // Not enough scored candidates: pad with the newest positions that
        // are still free so the step always attends over exactly K keys.
        std::vector<bool> taken(n, false);
        for (std::uint32_t i : selected) taken[i] = true;
        for (std::size_t i = n; i-- > 0 && selected.size() < k;)
            if (!taken[i]) selected.push_back(static_cast<std::uint32_t>(i));
    }
    std::sort(selected.begin(), selected.end());
    return selected;
}

SearchResult decode_search(std::span<const float> q, const CsIndex& index,
                           const KvStore& kv, const RetrievalConfig& cfg,
                           SearchState& state) {
    if (cfg.search_period == 0)
        throw ParameterError("search period must be >= 1");

    SearchResult result;
    result.searched =
        !state.has_cache || state.step % cfg.search_period == 0;
    if (result.searched) {
        CentroidSelection sel = select_centroids(
            q, index, cfg.backoff_tau, cfg.backoff_threshold);
        const GatheredLists gathered = gather_lists(index, sel);
        std::vector<double> ones;
        std::span<const double> w = cfg.weights;
        if (w.empty()) {
            ones.assign(index.subspaces(), 1.0);
            w = ones;
        } else if (w.size() != index.subspaces()) {
            throw DimensionError("need one weight per subspace");
        }
        result.centroid_dot_ops = sel.dot_ops;
        result.gathered_entries = gathered.total_entries();
        result.reduce_ops = result.gathered_entries;
        state.cached = reduce_by_key(gathered, w);
        state.last_selection = std::move(sel);
        state.has_cache = true;
    }

    std::size_t k_override = 0;
    if (cfg.k_bump) {
        double worst = 1.0;
        for (double c : state.last_selection.best_cosine)
            worst = std::min(worst, c);
        k_override = cfg.k_bump(keep_count(cfg.keep_ratio, kv.size()), worst);
    }
    result.selected = select_topk(state.cached, kv, cfg, k_override);
    result.k = result.selected.size();
    state.step += 1;
    return result;
}

InsertReport streaming_insert(std::span<const float> new_key,
                              std::uint32_t key_index, CsIndex& index) {
    if (new_key.size() != index.layout.dim())
        throw DimensionError("key width does not match index dimension");

    const std::size_t m = index.subspaces();
    const std::size_t c = index.centroids_per_subspace();
    InsertReport report;
    report.applied_mask.assign(m * c, 0);

    std::vector<float> slice;
    for (std::size_t b = 0; b < m; ++b) {
        const auto raw = index.layout.slice(new_key, b);
        slice.assign(raw.begin(), raw.end());
        bool zero = false;
        if (index.normalize_keys) zero = l2_normalize(slice);
        const CentroidSet& cs = index.centroid_sets[b];
        for (std::size_t j = 0; j < c; ++j) {
            const double s = zero ? 0.0 : dot(cs.centroid(j), slice);
            report.dot_ops += cs.dim;
            report.attempted += 1;
            if (index.table(b, j).try_insert(key_index,
                                             static_cast<float>(s))) {
                report.applied += 1;
                report.applied_mask[b * c + j] = 1;
            }
        }
    }
    return report;
}

}  // namespace csattn
