#include "csattn/synthetic.hpp"

#include <cmath>

#include "csattn/core.hpp"
#include "csattn/util.hpp"

namespace csattn {

namespace {

constexpr std::uint64_t kDirectionSalt = 0x64697273;  // cluster directions
constexpr std::uint64_t kRowSalt = 0x726f7773;        // sequential row draws
constexpr std::uint64_t kBlockSalt = 0x626c6b73;      // block -> cluster map

}  // namespace

SyntheticWorkload make_synthetic(const SyntheticSpec& spec) {
    if (spec.rows == 0 || spec.dim == 0 || spec.clusters == 0)
        throw ParameterError("synthetic workload needs rows, dim, clusters >= 1");
    if (spec.dwell == 0) throw ParameterError("dwell must be >= 1");
    if (!(spec.plant_fraction >= 0.0 && spec.plant_fraction <= 1.0))
        throw ParameterError("plant fraction must lie in [0, 1]");

    const std::size_t d = spec.dim;

    // Unit cluster directions, drawn independently of the row stream.
    Rng dir_rng(mix_seed(spec.seed, kDirectionSalt));
    std::vector<float> dirs(spec.clusters * d);
    for (std::size_t c = 0; c < spec.clusters; ++c) {
        std::span<float> row{dirs.data() + c * d, d};
        do {
            for (float& x : row)
                x = static_cast<float>(dir_rng.next_normal());
        } while (l2_normalize(row));
    }

    SyntheticWorkload out;
    out.rows = spec.rows;
    out.dim = d;
    out.queries.resize(spec.rows * d);
    out.keys.resize(spec.rows * d);
    out.values.resize(spec.rows * d);

    Rng rng(mix_seed(spec.seed, kRowSalt));
    for (std::size_t i = 0; i < spec.rows; ++i) {
        const std::size_t block = i / spec.dwell;
        const std::size_t qc =
            mix_seed(spec.seed, kBlockSalt + block) % spec.clusters;
        const float* qdir = dirs.data() + qc * d;

        float* q = out.queries.data() + i * d;
        for (std::size_t t = 0; t < d; ++t)
            q[t] = qdir[t] + static_cast<float>(spec.query_noise *
                                                rng.next_normal());

        float* k = out.keys.data() + i * d;
        if (rng.next_unit() < spec.plant_fraction) {
            const float* kdir =
                dirs.data() + rng.next_index(spec.clusters) * d;
            for (std::size_t t = 0; t < d; ++t)
                k[t] = static_cast<float>(spec.plant_scale) * kdir[t] +
                       static_cast<float>(rng.next_normal());
        } else {
            for (std::size_t t = 0; t < d; ++t)
                k[t] = static_cast<float>(rng.next_normal());
        }

        float* v = out.values.data() + i * d;
        for (std::size_t t = 0; t < d; ++t)
            v[t] = static_cast<float>(rng.next_normal());
    }
    return out;
}

}  // namespace csattn
