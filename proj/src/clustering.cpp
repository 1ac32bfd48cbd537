#include "csattn/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <string>

#include "csattn/core.hpp"

namespace csattn {

std::vector<float> kmeanspp_seed(std::span<const float> points, std::size_t n,
                                 std::size_t dim, std::size_t k, Rng& rng,
                                 std::size_t* duplicated) {
    if (n == 0 || k == 0) throw ParameterError("k-means++ needs n >= 1, k >= 1");
    if (points.size() != n * dim)
        throw DimensionError("seed points buffer does not match n x dim");

    std::vector<float> seeds(k * dim);
    std::size_t dup = 0;

    // First seed uniform; the rest weighted by squared cosine distance to the
    // closest seed so far. best[i] tracks that closest cosine incrementally.
    const std::size_t first = rng.next_index(n);
    std::memcpy(seeds.data(), points.data() + first * dim, dim * sizeof(float));

    std::vector<double> best(n);
    std::vector<double> weight(n);
    for (std::size_t i = 0; i < n; ++i)
        best[i] = dot({points.data() + i * dim, dim}, {seeds.data(), dim});
    best[first] = 2.0;  // forces weight 0 below

    for (std::size_t j = 1; j < k; ++j) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = std::max(0.0, 1.0 - best[i]);
            weight[i] = d * d;
            total += weight[i];
        }
        if (total > 0.0) {
            // Inverse-CDF draw over the cumulative weights.
            double target = rng.next_unit() * total;
            std::size_t pick = n - 1;
            double run = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                run += weight[i];
                if (target < run) {
                    pick = i;
                    break;
                }
            }
            std::memcpy(seeds.data() + j * dim, points.data() + pick * dim,
                        dim * sizeof(float));
            for (std::size_t i = 0; i < n; ++i) {
                const double c = dot({points.data() + i * dim, dim},
                                     {seeds.data() + j * dim, dim});
                best[i] = std::max(best[i], c);
            }
            best[pick] = 2.0;
        } else {
            // Every row already coincides with a seed: copy earlier seeds
            // round-robin so the set stays full.
            std::memcpy(seeds.data() + j * dim, seeds.data() + (dup % j) * dim,
                        dim * sizeof(float));
            dup += 1;
        }
    }
    if (duplicated) *duplicated = dup;
    return seeds;
}

CentroidSet cosine_kmeans(std::span<const float> points, std::size_t dim,
                          const ClusterConfig& config) {
    if (dim == 0) throw ParameterError("subspace width must be >= 1");
    if (points.size() % dim != 0)
        throw DimensionError("training rows are not a multiple of dim");
    const std::size_t n_total = points.size() / dim;
    if (n_total == 0) throw ParameterError("k-means needs at least one row");
    if (config.centroids == 0) throw ParameterError("centroid count must be >= 1");

    CentroidSet cs;
    cs.dim = dim;
    cs.count = config.centroids;

    // Normalize a private copy; drop zero rows (they carry no direction).
    std::vector<float> train;
    train.reserve(points.size());
    std::vector<float> row(dim);
    for (std::size_t i = 0; i < n_total; ++i) {
        std::memcpy(row.data(), points.data() + i * dim, dim * sizeof(float));
        if (l2_normalize(row)) {
            cs.stats.degenerate_points += 1;
            continue;
        }
        train.insert(train.end(), row.begin(), row.end());
    }
    const std::size_t n = train.size() / dim;
    if (n == 0) throw DataError("every training row is zero");
    if (cs.stats.degenerate_points * 2 > n_total)
        log_warn("over half of the clustering rows are zero vectors");

    Rng rng(config.seed);
    const std::size_t k = config.centroids;

    if (k > n) {
        // Fewer usable rows than centroids: take each row once, then cycle.
        cs.centroids.resize(k * dim);
        for (std::size_t j = 0; j < k; ++j) {
            std::memcpy(cs.centroids.data() + j * dim,
                        train.data() + (j % n) * dim, dim * sizeof(float));
            if (j >= n) cs.stats.duplicated_seeds += 1;
        }
        log_warn("centroid count exceeds usable rows; duplicating seeds");
        return cs;
    }

    cs.centroids =
        kmeanspp_seed(train, n, dim, k, rng, &cs.stats.duplicated_seeds);
    cs.stats.dot_ops += k * n * dim;  // seeding distance passes

    std::size_t batch = config.batch_size == 0 ? std::min<std::size_t>(4096, n)
                                               : std::min(config.batch_size, n);

    if (batch >= n) {
        // ---- full-batch Lloyd ----
        std::vector<std::size_t> assign(n);
        std::vector<double> best(n);
        std::vector<double> sums(k * dim);
        std::vector<std::size_t> counts(k);
        for (std::size_t it = 0; it < config.iterations; ++it) {
            double objective = 0.0;
            cs.stats.dot_ops += n * k * dim;
            for (std::size_t i = 0; i < n; ++i) {
                const float* x = train.data() + i * dim;
                double bc = -std::numeric_limits<double>::infinity();
                std::size_t bj = 0;
                for (std::size_t j = 0; j < k; ++j) {
                    const double c =
                        dot({x, dim}, {cs.centroids.data() + j * dim, dim});
                    if (c > bc) {
                        bc = c;
                        bj = j;
                    }
                }
                assign[i] = bj;
                best[i] = bc;
                objective += 2.0 - 2.0 * bc;  // squared unit-sphere distance
            }
            objective /= static_cast<double>(n);
            // Both the assignment and the normalized-mean update can only
            // shrink the objective; anything else is a bug worth halting on.
            if (!cs.stats.objective.empty() &&
                objective > cs.stats.objective.back() + config.tolerance)
                throw PropertyError("clustering objective increased in a "
                                    "full-batch iteration");
            const bool converged = !cs.stats.objective.empty() &&
                                   cs.stats.objective.back() - objective <
                                       config.tolerance;
            cs.stats.objective.push_back(objective);
            if (converged) break;

            std::fill(sums.begin(), sums.end(), 0.0);
            std::fill(counts.begin(), counts.end(), 0);
            for (std::size_t i = 0; i < n; ++i) {
                const float* x = train.data() + i * dim;
                double* s = sums.data() + assign[i] * dim;
                for (std::size_t t = 0; t < dim; ++t) s[t] += x[t];
                counts[assign[i]] += 1;
            }
            for (std::size_t j = 0; j < k; ++j) {
                if (counts[j] == 0) {
                    // Re-seed an empty cluster at the worst-covered row.
                    std::size_t far = 0;
                    for (std::size_t i = 1; i < n; ++i)
                        if (best[i] < best[far]) far = i;
                    std::memcpy(cs.centroids.data() + j * dim,
                                train.data() + far * dim, dim * sizeof(float));
                    best[far] = 2.0;
                    cs.stats.reseeded += 1;
                    continue;
                }
                double norm2 = 0.0;
                const double* s = sums.data() + j * dim;
                for (std::size_t t = 0; t < dim; ++t) norm2 += s[t] * s[t];
                if (norm2 == 0.0) continue;  // mean cancelled out; keep old
                const double inv = 1.0 / std::sqrt(norm2);
                float* c = cs.centroids.data() + j * dim;
                for (std::size_t t = 0; t < dim; ++t)
                    c[t] = static_cast<float>(s[t] * inv);
            }
        }
    } else {
        // ---- mini-batch, streaming per-centroid means ----
        // Seeds enter the running sums with weight one so early batches do
        // not erase them.
        std::vector<double> sums(k * dim);
        std::vector<std::size_t> counts(k, 1);
        for (std::size_t t = 0; t < k * dim; ++t)
            sums[t] = static_cast<double>(cs.centroids[t]);

        for (std::size_t it = 0; it < config.iterations; ++it) {
            double objective = 0.0;
            cs.stats.dot_ops += batch * k * dim;
            for (std::size_t s = 0; s < batch; ++s) {
                const float* x = train.data() + rng.next_index(n) * dim;
                double bc = -std::numeric_limits<double>::infinity();
                std::size_t bj = 0;
                for (std::size_t j = 0; j < k; ++j) {
                    const double c =
                        dot({x, dim}, {cs.centroids.data() + j * dim, dim});
                    if (c > bc) {
                        bc = c;
                        bj = j;
                    }
                }
                objective += 2.0 - 2.0 * bc;
                double* acc = sums.data() + bj * dim;
                for (std::size_t t = 0; t < dim; ++t) acc[t] += x[t];
                counts[bj] += 1;
            }
            cs.stats.objective.push_back(objective / static_cast<double>(batch));
            for (std::size_t j = 0; j < k; ++j) {
                double norm2 = 0.0;
                const double* s = sums.data() + j * dim;
                for (std::size_t t = 0; t < dim; ++t) norm2 += s[t] * s[t];
                if (norm2 == 0.0) continue;
                const double inv = 1.0 / std::sqrt(norm2);
                float* c = cs.centroids.data() + j * dim;
                for (std::size_t t = 0; t < dim; ++t)
                    c[t] = static_cast<float>(s[t] * inv);
            }
        }
        // Batch estimates are noisy, so only outright divergence is an error.
        if (cs.stats.objective.size() >= 2 &&
            cs.stats.objective.back() > cs.stats.objective.front() + 1e-3)
            throw PropertyError("mini-batch clustering objective diverged");
    }
    return cs;
}

std::vector<double> centroid_scores(std::span<const float> v,
                                    const CentroidSet& cs) {
    if (v.size() != cs.dim)
        throw DimensionError("vector width does not match centroid width");
    std::vector<double> scores(cs.count);
    for (std::size_t j = 0; j < cs.count; ++j)
        scores[j] = dot(v, cs.centroid(j));
    return scores;
}

std::size_t assign_nearest(std::span<const float> v, const CentroidSet& cs) {
    const auto scores = centroid_scores(v, cs);
    std::size_t best = 0;
    for (std::size_t j = 1; j < cs.count; ++j)
        if (scores[j] > scores[best]) best = j;
    return best;
}

}  // namespace csattn
