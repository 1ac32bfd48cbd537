#ifndef CSATTN_CLUSTERING_HPP
#define CSATTN_CLUSTERING_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "csattn/errors.hpp"
#include "csattn/util.hpp"

namespace csattn {

// Spherical k-means over one subspace. Points are normalized internally, so
// callers hand in raw rows; similarity afterwards is plain dot product.

struct ClusterConfig {
    std::size_t centroids = 64;  // C per subspace
    std::size_t iterations = 10;
    // Rows sampled per round. 0 picks min(4096, n); batch_size >= n switches
    // to full-batch Lloyd updates instead of the streaming mean.
    std::size_t batch_size = 0;
    std::uint64_t seed = 0;
    // Full-batch mode stops early once the objective improves by less than
    // this between iterations; it is also the slack allowed before a
    // monotonicity violation is treated as a bug.
    double tolerance = 1e-7;
};

struct FitStats {
    // Mean squared distance between each point and its centroid on the unit
    // sphere (2 - 2cos), one value per iteration. Full-batch covers the whole
    // training set and never increases; mini-batch covers the sampled batch
    // and is noisy.
    std::vector<double> objective;
    std::size_t reseeded = 0;           // empty clusters re-seeded (full-batch)
    std::size_t degenerate_points = 0;  // zero rows dropped before training
    std::size_t duplicated_seeds = 0;   // seeding fallback copies
    std::size_t dot_ops = 0;            // multiplies spent seeding + fitting
};

struct CentroidSet {
    std::size_t subspace_id = 0;
    std::vector<float> centroids;  // count x dim row-major, unit rows
    std::size_t count = 0;
    std::size_t dim = 0;
    FitStats stats;

    std::span<const float> centroid(std::size_t j) const {
        return {centroids.data() + j * dim, dim};
    }
};

// k-means++ over unit rows with cosine distance (1 - cos), squared weighting.
// Already-chosen rows get weight zero; if every residual weight vanishes the
// remaining seeds duplicate earlier ones (reported via *duplicated).
std::vector<float> kmeanspp_seed(std::span<const float> points, std::size_t n,
                                 std::size_t dim, std::size_t k, Rng& rng,
                                 std::size_t* duplicated = nullptr);

// Full pipeline: normalize rows, seed, run `iterations` rounds. Full-batch
// mode self-checks that the objective never increases (beyond tolerance);
// mini-batch mode self-checks that it does not diverge (end <= start + 1e-3).
CentroidSet cosine_kmeans(std::span<const float> points, std::size_t dim,
                          const ClusterConfig& config);

// All centroid dot products against v (v is used as-is, not normalized).
std::vector<double> centroid_scores(std::span<const float> v,
                                    const CentroidSet& cs);

// Argmax centroid by dot product; ties resolve to the lower index. A zero
// vector scores 0 everywhere and therefore lands on centroid 0.
std::size_t assign_nearest(std::span<const float> v, const CentroidSet& cs);

}  // namespace csattn

#endif  // CSATTN_CLUSTERING_HPP
