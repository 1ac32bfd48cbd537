#include "csattn/index.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <string>

namespace csattn {

// --------------------------------------------------------------------------
// TopList
// --------------------------------------------------------------------------

float TopList::min_score() const {
    if (scores.empty()) return -std::numeric_limits<float>::infinity();
    return scores.back();
}

bool TopList::try_insert(std::uint32_t index, float score) {
    if (capacity == 0) return false;
    if (full()) {
        if (!(score > scores.back())) return false;
        scores.pop_back();
        indices.pop_back();
    }
    // Binary search for the first slot that does not precede (score, index)
    // under (score desc, index asc).
    std::size_t lo = 0, hi = scores.size();
    while (lo < hi) {
        const std::size_t mid = (lo + hi) / 2;
        const bool precedes = scores[mid] != score ? scores[mid] > score
                                                   : indices[mid] < index;
        if (precedes)
            lo = mid + 1;
        else
            hi = mid;
    }
    scores.insert(scores.begin() + lo, score);
    indices.insert(indices.begin() + lo, index);
    return true;
}

TopList TopList::from_scores(std::span<const float> all,
                             std::uint32_t capacity) {
    TopList list;
    list.capacity = capacity;
    const std::size_t keep = std::min<std::size_t>(capacity, all.size());
    std::vector<std::uint32_t> order(all.size());
    std::iota(order.begin(), order.end(), 0u);
    std::partial_sort(order.begin(), order.begin() + keep, order.end(),
                      [&](std::uint32_t a, std::uint32_t b) {
                          if (all[a] != all[b]) return all[a] > all[b];
                          return a < b;
                      });
    list.indices.assign(order.begin(), order.begin() + keep);
    list.scores.resize(keep);
    for (std::size_t r = 0; r < keep; ++r) list.scores[r] = all[order[r]];
    return list;
}

// --------------------------------------------------------------------------
// build
// --------------------------------------------------------------------------

std::vector<float> score_keys(std::span<const float> centroid,
                              const KvStore& kv, const SubspaceLayout& layout,
                              std::size_t b, bool normalize_keys,
                              std::size_t n_keys) {
    if (b >= layout.count()) throw ParameterError("subspace id out of range");
    if (centroid.size() != layout.sizes[b])
        throw DimensionError("centroid width does not match subspace width");
    if (n_keys > kv.size())
        throw ParameterError("asked to score more keys than the store holds");

    std::vector<float> out(n_keys);
    for (std::size_t i = 0; i < n_keys; ++i) {
        const auto slice = layout.slice(kv.key(i), b);
        double s = dot(centroid, slice);
        if (normalize_keys) {
            double norm2 = 0.0;
            for (float x : slice)
                norm2 += static_cast<double>(x) * static_cast<double>(x);
            s = norm2 == 0.0 ? 0.0 : s / std::sqrt(norm2);
        }
        out[i] = static_cast<float>(s);
    }
    return out;
}

namespace {

void validate_index_config(const IndexConfig& config) {
    if (config.list_capacity == 0 &&
        !(config.alpha > 0.0 && config.alpha <= 1.0))
        throw ParameterError("alpha must lie in (0, 1]");
    if (config.score_bits != 16 && config.score_bits != 32)
        throw ParameterError("score width must be 16 or 32 bits");
    if (config.cluster.centroids == 0)
        throw ParameterError("centroid count must be >= 1");
}

// Shared tail of both build paths: size the lists and score every prefill
// key against every centroid, one (C x prefill) pass per subspace.
CsIndex assemble_index(std::vector<CentroidSet> sets, const KvStore& kv,
                       const SubspaceLayout& layout, const IndexConfig& config,
                       BuildStats* stats) {
    const std::size_t prefill = kv.prefill_len();
    CsIndex index(layout);
    index.prefill_len = prefill;
    index.normalize_keys = config.normalize_keys;
    index.score_bits = config.score_bits;
    index.list_capacity =
        config.list_capacity
            ? static_cast<std::uint32_t>(config.list_capacity)
            : static_cast<std::uint32_t>(ceil_ratio(config.alpha, prefill));
    if (index.list_capacity == 0)
        throw ParameterError("list capacity came out as zero");
    index.alpha = config.list_capacity
                      ? static_cast<double>(index.list_capacity) /
                            static_cast<double>(prefill)
                      : config.alpha;
    index.centroid_sets = std::move(sets);

    const std::size_t m = layout.count();
    const std::size_t c = index.centroid_sets[0].count;
    index.tables.reserve(m * c);
    for (std::size_t b = 0; b < m; ++b) {
        const CentroidSet& cs = index.centroid_sets[b];
        for (std::size_t j = 0; j < c; ++j) {
            const auto scores = score_keys(cs.centroid(j), kv, layout, b,
                                           config.normalize_keys, prefill);
            index.tables.push_back(
                TopList::from_scores(scores, index.list_capacity));
            if (stats) stats->score_dot_ops += prefill * layout.sizes[b];
        }
    }
    return index;
}

}  // namespace

CsIndex build_index(std::span<const float> queries, std::size_t query_count,
                    const KvStore& kv, const SubspaceLayout& layout,
                    const IndexConfig& config, BuildStats* stats) {
    validate_index_config(config);
    if (query_count == 0) throw ParameterError("need at least one query row");
    if (queries.size() != query_count * layout.dim())
        throw DimensionError("query buffer does not match count x d");
    if (layout.dim() != kv.dim())
        throw DimensionError("layout dimension does not match KV dimension");
    if (kv.prefill_len() == 0)
        throw ParameterError("cannot build over an empty prefill");

    const std::size_t m = layout.count();
    std::vector<CentroidSet> sets;
    sets.reserve(m);
    std::vector<float> sub;
    for (std::size_t b = 0; b < m; ++b) {
        const std::size_t width = layout.sizes[b];
        sub.resize(query_count * width);
        for (std::size_t i = 0; i < query_count; ++i) {
            const float* src = queries.data() + i * layout.dim() +
                               layout.offsets[b];
            std::memcpy(sub.data() + i * width, src, width * sizeof(float));
        }
        ClusterConfig cc = config.cluster;
        cc.seed = mix_seed(config.cluster.seed, b);
        CentroidSet cs = cosine_kmeans(sub, width, cc);
        cs.subspace_id = b;
        if (stats) stats->cluster_dot_ops += cs.stats.dot_ops;
        sets.push_back(std::move(cs));
    }
    return assemble_index(std::move(sets), kv, layout, config, stats);
}

CsIndex build_index_from_centroids(std::vector<CentroidSet> centroid_sets,
                                   const KvStore& kv,
                                   const SubspaceLayout& layout,
                                   const IndexConfig& config,
                                   BuildStats* stats) {
    validate_index_config(config);
    if (layout.dim() != kv.dim())
        throw DimensionError("layout dimension does not match KV dimension");
    if (kv.prefill_len() == 0)
        throw ParameterError("cannot build over an empty prefill");
    if (centroid_sets.size() != layout.count())
        throw DimensionError("need one centroid set per subspace");
    const std::size_t c = centroid_sets[0].count;
    if (c == 0) throw ParameterError("centroid sets are empty");
    for (std::size_t b = 0; b < centroid_sets.size(); ++b) {
        if (centroid_sets[b].count != c)
            throw DimensionError("centroid counts differ across subspaces");
        if (centroid_sets[b].dim != layout.sizes[b])
            throw DimensionError("centroid width does not match subspace " +
                                 std::to_string(b));
        centroid_sets[b].subspace_id = b;
    }
    return assemble_index(std::move(centroid_sets), kv, layout, config, stats);
}

// --------------------------------------------------------------------------
// serialization
// --------------------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'C', 'S', 'A', 'T'};
constexpr std::uint16_t kVersion = 1;
constexpr std::uint16_t kFlagHalfScores = 1u << 0;
constexpr std::uint16_t kFlagNormalizedKeys = 1u << 1;
constexpr std::uint16_t kKnownFlags = kFlagHalfScores | kFlagNormalizedKeys;

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i)
        out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i)
        out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

void put_f32(std::vector<std::uint8_t>& out, float f) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, sizeof bits);
    put_u32(out, bits);
}

void put_score(std::vector<std::uint8_t>& out, float f, bool half) {
    if (half)
        put_u16(out, f32_to_f16(f));
    else
        put_f32(out, f);
}

struct ByteReader {
    std::span<const std::uint8_t> bytes;
    std::size_t pos = 0;

    void need(std::size_t n, const char* what) {
        if (bytes.size() - pos < n)
            throw TruncatedError("file ends at byte " + std::to_string(pos) +
                                 " while reading " + what);
    }
    std::uint16_t u16(const char* what) {
        need(2, what);
        std::uint16_t v = static_cast<std::uint16_t>(bytes[pos]) |
                          static_cast<std::uint16_t>(bytes[pos + 1]) << 8;
        pos += 2;
        return v;
    }
    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(bytes[pos + i]) << (8 * i);
        pos += 4;
        return v;
    }
    std::uint64_t u64(const char* what) {
        need(8, what);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(bytes[pos + i]) << (8 * i);
        pos += 8;
        return v;
    }
    float f32(const char* what) {
        const std::uint32_t bits = u32(what);
        float f;
        std::memcpy(&f, &bits, sizeof f);
        return f;
    }
    float score(bool half, const char* what) {
        return half ? f16_to_f32(u16(what)) : f32(what);
    }
};

}  // namespace

std::vector<std::uint8_t> serialize_index(const CsIndex& index) {
    const bool half = index.score_bits == 16;
    const std::size_t m = index.subspaces();
    const std::size_t c = index.centroids_per_subspace();

    std::vector<std::uint8_t> out;
    out.reserve(index_footprint(index).total());
    out.insert(out.end(), kMagic, kMagic + 4);
    put_u16(out, kVersion);
    std::uint16_t flags = 0;
    if (half) flags |= kFlagHalfScores;
    if (index.normalize_keys) flags |= kFlagNormalizedKeys;
    put_u16(out, flags);
    put_u32(out, static_cast<std::uint32_t>(m));
    put_u32(out, static_cast<std::uint32_t>(c));
    put_u32(out, index.list_capacity);
    put_u32(out, static_cast<std::uint32_t>(index.layout.dim()));
    put_u64(out, index.prefill_len);
    for (std::size_t b = 0; b < m; ++b)
        put_u32(out, static_cast<std::uint32_t>(index.layout.sizes[b]));
    for (std::size_t b = 0; b < m; ++b)
        for (float x : index.centroid_sets[b].centroids)
            put_score(out, x, half);
    for (const TopList& list : index.tables) {
        put_u32(out, static_cast<std::uint32_t>(list.indices.size()));
        for (std::uint32_t i : list.indices) put_u32(out, i);
        for (float s : list.scores) put_score(out, s, half);
    }
    return out;
}

CsIndex deserialize_index(std::span<const std::uint8_t> bytes) {
    ByteReader in{bytes};
    in.need(4, "magic");
    if (std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw BadMagicError("not an index file (bad magic at byte 0)");
    in.pos = 4;
    const std::uint16_t version = in.u16("version");
    if (version != kVersion)
        throw VersionError("unsupported index version " +
                           std::to_string(version));
    const std::uint16_t flags = in.u16("flags");
    if (flags & ~kKnownFlags)
        throw CorruptError("unknown flag bits set: 0x" +
                           std::to_string(flags));
    const bool half = flags & kFlagHalfScores;

    const std::uint32_t m = in.u32("subspace count");
    const std::uint32_t c = in.u32("centroid count");
    const std::uint32_t cap = in.u32("list capacity");
    const std::uint32_t d = in.u32("dimension");
    const std::uint64_t prefill = in.u64("prefill length");
    if (m == 0 || c == 0 || cap == 0 || d == 0 || prefill == 0)
        throw CorruptError("zero field in header (m, C, L, d, prefill)");

    std::vector<std::size_t> sizes(m);
    std::size_t width_sum = 0;
    for (std::uint32_t b = 0; b < m; ++b) {
        sizes[b] = in.u32("subspace width");
        width_sum += sizes[b];
    }
    if (width_sum != d)
        throw CorruptError("subspace widths sum to " +
                           std::to_string(width_sum) + ", expected " +
                           std::to_string(d));

    CsIndex index{SubspaceLayout(std::move(sizes))};
    index.alpha = static_cast<double>(cap) / static_cast<double>(prefill);
    index.list_capacity = cap;
    index.prefill_len = prefill;
    index.normalize_keys = flags & kFlagNormalizedKeys;
    index.score_bits = half ? 16 : 32;

    index.centroid_sets.resize(m);
    for (std::uint32_t b = 0; b < m; ++b) {
        CentroidSet& cs = index.centroid_sets[b];
        cs.subspace_id = b;
        cs.count = c;
        cs.dim = index.layout.sizes[b];
        cs.centroids.resize(static_cast<std::size_t>(c) * cs.dim);
        for (float& x : cs.centroids) x = in.score(half, "centroid row");
    }

    index.tables.reserve(static_cast<std::size_t>(m) * c);
    std::vector<std::uint32_t> seen;
    for (std::size_t t = 0; t < static_cast<std::size_t>(m) * c; ++t) {
        TopList list;
        list.capacity = cap;
        const std::uint32_t len = in.u32("list length");
        if (len > cap)
            throw CorruptError("table " + std::to_string(t) + " holds " +
                               std::to_string(len) + " entries, capacity " +
                               std::to_string(cap));
        list.indices.resize(len);
        for (std::uint32_t& i : list.indices) i = in.u32("list index");
        list.scores.resize(len);
        for (float& s : list.scores) s = in.score(half, "list score");
        for (std::size_t r = 1; r < len; ++r)
            if (list.scores[r] > list.scores[r - 1])
                throw CorruptError("table " + std::to_string(t) +
                                   " scores are not sorted descending");
        seen.assign(list.indices.begin(), list.indices.end());
        std::sort(seen.begin(), seen.end());
        if (std::adjacent_find(seen.begin(), seen.end()) != seen.end())
            throw CorruptError("table " + std::to_string(t) +
                               " repeats a key index");
        index.tables.push_back(std::move(list));
    }
    if (in.pos != bytes.size())
        throw CorruptError("unexpected trailing bytes at offset " +
                           std::to_string(in.pos));
    return index;
}

void save_index(const CsIndex& index, const std::string& path) {
    const auto bytes = serialize_index(index);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("short write to " + path);
}

CsIndex load_index(const std::string& path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw DataError("cannot open: " + path);
    const std::streamsize size = in.tellg();
    in.seekg(0);
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(size));
    in.read(reinterpret_cast<char*>(bytes.data()), size);
    if (!in) throw DataError("short read from " + path);
    return deserialize_index(bytes);
}

IndexFootprint index_footprint(const CsIndex& index) {
    const std::size_t sbytes = index.score_bits == 16 ? 2 : 4;
    IndexFootprint fp;
    fp.header_bytes = 4 + 2 + 2 + 4 + 4 + 4 + 4 + 8 +
                      4 * index.subspaces() + 4 * index.tables.size();
    fp.centroid_bytes =
        sbytes * index.centroids_per_subspace() * index.layout.dim();
    for (const TopList& list : index.tables)
        fp.entry_bytes += list.indices.size() * (4 + sbytes);
    return fp;
}

}  // namespace csattn
