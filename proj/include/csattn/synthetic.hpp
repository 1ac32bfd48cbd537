#ifndef CSATTN_SYNTHETIC_HPP
#define CSATTN_SYNTHETIC_HPP

#include <cstddef>
#include <cstdint>
#include <vector>

#include "csattn/errors.hpp"

namespace csattn {

// Measurable-recall workload without model weights: queries hover around a
// rotating cluster direction, and a fraction of keys is planted along a
// cluster direction at high magnitude so each query has unambiguous
// high-inner-product targets among Gaussian background keys.
struct SyntheticSpec {
    std::size_t rows = 0;      // total positions (prefill + decode)
    std::size_t dim = 64;
    std::size_t clusters = 8;  // query cluster directions
    std::uint64_t seed = 0;
    double plant_fraction = 0.08;  // keys aligned with some cluster
    double plant_scale = 6.0;      // magnitude along the cluster direction
    // Per-coordinate query spread. Keep the noise norm (query_noise * sqrt(d))
    // well under 1 so consecutive queries stay correlated, like real decode
    // steps; 0.05 at d=64 gives norm 0.4 against the unit cluster direction.
    double query_noise = 0.05;
    std::size_t dwell = 32;        // consecutive rows sharing one cluster
};

struct SyntheticWorkload {
    std::size_t rows = 0;
    std::size_t dim = 0;
    std::vector<float> queries;  // rows x dim, row-major
    std::vector<float> keys;
    std::vector<float> values;
};

// Rows are generated strictly in order, so the first p rows are identical
// for any spec differing only in `rows` — a prefix can be prefilled and the
// remainder replayed as decode steps.
SyntheticWorkload make_synthetic(const SyntheticSpec& spec);

}  // namespace csattn

#endif  // CSATTN_SYNTHETIC_HPP
