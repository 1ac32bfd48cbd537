// csattn command-line tool: build/inspect indexes, run decode sessions, sweep configs.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "csattn/dumps.hpp"
#include "csattn/errors.hpp"
#include "csattn/index.hpp"
#include "csattn/metrics.hpp"
#include "csattn/retrieval.hpp"
#include "csattn/session.hpp"
#include "csattn/sweep.hpp"
#include "csattn/synthetic.hpp"
#include "csattn/util.hpp"

namespace {

struct SynthArgs {
    std::vector<std::size_t> vals;  // rows, dim, clusters
    bool engaged() const { return !vals.empty(); }
    std::size_t rows() const { return vals[0]; }
    std::size_t dim() const { return vals[1]; }
    std::size_t clusters() const { return vals[2]; }
};

struct StreamData {
    std::size_t dim = 0;
    std::size_t rows = 0;
    std::vector<float> queries;
    std::vector<float> keys;
    std::vector<float> values;
};

csattn::EmbeddingDump load_role(const std::string& path, csattn::DumpRole role) {
    csattn::EmbeddingDump d = csattn::load_dump(path);
    if (d.role != role) {
        throw csattn::DataError("dump " + path + " has role " +
                                std::to_string(static_cast<int>(d.role)) +
                                ", expected " + std::to_string(static_cast<int>(role)));
    }
    return d;
}

StreamData load_streams(const SynthArgs& synth, const std::string& qpath,
                        const std::string& kpath, const std::string& vpath,
                        std::uint64_t seed) {
    StreamData out;
    if (synth.engaged()) {
        if (!qpath.empty() || !kpath.empty() || !vpath.empty()) {
            throw csattn::ParameterError("--synthetic excludes dump inputs");
        }
        csattn::SyntheticSpec spec;
        spec.rows = synth.rows();
        spec.dim = synth.dim();
        spec.clusters = synth.clusters();
        spec.seed = seed;
        csattn::SyntheticWorkload w = csattn::make_synthetic(spec);
        out.dim = w.dim;
        out.rows = w.rows;
        out.queries = std::move(w.queries);
        out.keys = std::move(w.keys);
        out.values = std::move(w.values);
        return out;
    }
    if (qpath.empty() || kpath.empty()) {
        throw csattn::ParameterError("provide --synthetic or both --queries and --keys");
    }
    csattn::EmbeddingDump q = load_role(qpath, csattn::DumpRole::kQuery);
    csattn::EmbeddingDump k = load_role(kpath, csattn::DumpRole::kKey);
    if (q.dim != k.dim) {
        throw csattn::DimensionError("query dump dim " + std::to_string(q.dim) +
                                     " != key dump dim " + std::to_string(k.dim));
    }
    if (q.count != k.count) {
        throw csattn::DataError("query dump has " + std::to_string(q.count) +
                                " rows, key dump has " + std::to_string(k.count));
    }
    out.dim = q.dim;
    out.rows = q.count;
    out.queries = std::move(q.data);
    out.keys = std::move(k.data);
    if (!vpath.empty()) {
        csattn::EmbeddingDump v = load_role(vpath, csattn::DumpRole::kValue);
        if (v.dim != out.dim || v.count != out.rows) {
            throw csattn::DimensionError("value dump shape does not match key dump");
        }
        out.values = std::move(v.data);
    } else {
        out.values.assign(out.rows * out.dim, 0.0f);
    }
    return out;
}

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

// ---- build ----------------------------------------------------------------

struct BuildArgs {
    SynthArgs synth;
    std::string queries, keys, values, out;
    std::size_t m = 8;
    std::size_t centroids = 64;
    double alpha = 0.2;
    std::uint64_t seed = 0;
    int score_bits = 16;
    bool normalize_keys = false;
};

int cmd_build(const BuildArgs& a) {
    StreamData data = load_streams(a.synth, a.queries, a.keys, a.values, a.seed);
    csattn::SubspaceLayout layout = csattn::SubspaceLayout::uniform(data.dim, a.m);
    csattn::KvStore kv(data.dim, data.keys, data.values);

    csattn::IndexConfig cfg;
    cfg.alpha = a.alpha;
    cfg.normalize_keys = a.normalize_keys;
    cfg.score_bits = a.score_bits;
    cfg.cluster.centroids = a.centroids;
    cfg.cluster.seed = a.seed;

    csattn::BuildStats stats;
    csattn::CsIndex index =
        csattn::build_index(data.queries, data.rows, kv, layout, cfg, &stats);
    csattn::save_index(index, a.out);

    csattn::IndexFootprint fp = csattn::index_footprint(index);
    const std::size_t sbytes = static_cast<std::size_t>(index.score_bits) / 8;
    const std::size_t model = csattn::table_bytes(index.subspaces(), a.centroids,
                                                  index.list_capacity, data.dim, sbytes);
    std::printf("prefill %zu\n", data.rows);
    std::printf("d %zu\n", data.dim);
    std::printf("m %zu\n", index.subspaces());
    std::printf("C %zu\n", a.centroids);
    std::printf("L %u\n", index.list_capacity);
    std::printf("alpha %s\n", fmt_double(index.alpha).c_str());
    std::printf("score_bits %d\n", index.score_bits);
    std::printf("cluster_dot_ops %zu\n", stats.cluster_dot_ops);
    std::printf("score_dot_ops %zu\n", stats.score_dot_ops);
    std::printf("payload_bytes %zu\n", fp.payload());
    std::printf("model_bytes %zu\n", model);
    std::printf("header_bytes %zu\n", fp.header_bytes);
    std::printf("total_bytes %zu\n", fp.total());
    std::printf("wrote %s\n", a.out.c_str());
    return 0;
}

// ---- decode ---------------------------------------------------------------

struct DecodeArgs {
    SynthArgs synth;
    std::string queries, keys, values, index_path, out, schedule;
    std::size_t steps = 64;
    double rho = 0.05;
    std::size_t period = 1;
    std::size_t window = 32;
    std::size_t tau = 1;
    double backoff_threshold = -std::numeric_limits<double>::infinity();
    std::uint64_t seed = 0;
    bool oracle = false;
};

int cmd_decode(const DecodeArgs& a) {
    csattn::CsIndex index = csattn::load_index(a.index_path);
    const std::size_t prefill = static_cast<std::size_t>(index.prefill_len);
    const std::size_t dim = index.layout.dim();

    StreamData data = load_streams(a.synth, a.queries, a.keys, a.values, a.seed);
    if (data.dim != dim) {
        throw csattn::DimensionError("index dim " + std::to_string(dim) +
                                     " != stream dim " + std::to_string(data.dim));
    }
    if (data.rows < prefill + a.steps) {
        throw csattn::DataError("stream has " + std::to_string(data.rows) +
                                " rows, need prefill " + std::to_string(prefill) +
                                " + steps " + std::to_string(a.steps));
    }

    csattn::RetrievalConfig cfg;
    cfg.keep_ratio = a.rho;
    cfg.search_period = a.period;
    if (!a.schedule.empty()) {
        auto [srho, speriod] = csattn::parse_schedule(a.schedule);
        cfg.keep_ratio = srho;
        cfg.search_period = speriod;
    }
    cfg.recent_window = a.window;
    cfg.backoff_tau = a.tau;
    cfg.backoff_threshold = a.backoff_threshold;

    csattn::Session sess(
        csattn::KvStore(dim, std::span<const float>(data.keys.data(), prefill * dim),
                        std::span<const float>(data.values.data(), prefill * dim)),
        std::move(index), cfg);

    const std::size_t tail = a.steps * dim;
    std::vector<csattn::DecodeStepReport> reports = csattn::run_decode(
        sess, std::span<const float>(data.queries.data() + prefill * dim, tail),
        std::span<const float>(data.keys.data() + prefill * dim, tail),
        std::span<const float>(data.values.data() + prefill * dim, tail), a.steps,
        a.oracle);

    std::FILE* f = std::fopen(a.out.c_str(), "wb");
    if (!f) throw csattn::DataError("cannot open " + a.out + " for writing");
    std::fprintf(f, "# rho %s\n", fmt_double(cfg.keep_ratio).c_str());
    std::fprintf(f, "# period %zu\n", cfg.search_period);
    std::fprintf(f, "# window %zu\n", cfg.recent_window);
    std::fprintf(f, "# tau %zu\n", cfg.backoff_tau);
    std::fprintf(f, "# prefill %zu\n", prefill);
    std::fprintf(f, "# steps %zu\n", a.steps);
    std::fprintf(f, "# d %zu\n", dim);
    std::fprintf(f, "step\tn\tk\tsearched\tcentroid_dot_ops\tgathered_entries\treduce_ops\t"
                    "attention_key_ops\th2d_bytes\tinserts_applied%s\n",
                 a.oracle ? "\trecall\tl2_error" : "");
    for (std::size_t t = 0; t < reports.size(); ++t) {
        const csattn::DecodeStepReport& r = reports[t];
        std::fprintf(f, "%zu\t%zu\t%zu\t%d\t%zu\t%zu\t%zu\t%zu\t%s\t%zu", t, prefill + t,
                     r.k, r.searched ? 1 : 0, r.counters.centroid_dot_ops,
                     r.counters.gathered_entries, r.counters.reduce_ops,
                     r.counters.attention_key_ops,
                     fmt_double(r.counters.h2d_bytes_model).c_str(),
                     r.counters.inserts_applied);
        if (a.oracle) {
            std::fprintf(f, "\t%s\t%s", fmt_double(r.recall.value()).c_str(),
                         fmt_double(r.l2_error.value()).c_str());
        }
        std::fputc('\n', f);
    }
    std::fclose(f);

    const csattn::CostCounters& tot = sess.totals;
    std::printf("steps %zu\n", reports.size());
    std::printf("searches %zu\n", tot.searches);
    std::printf("centroid_dot_ops %zu\n", tot.centroid_dot_ops);
    std::printf("gathered_entries %zu\n", tot.gathered_entries);
    std::printf("reduce_ops %zu\n", tot.reduce_ops);
    std::printf("attention_key_ops %zu\n", tot.attention_key_ops);
    std::printf("insert_dot_ops %zu\n", tot.insert_dot_ops);
    std::printf("h2d_bytes %s\n", fmt_double(tot.h2d_bytes_model).c_str());
    if (a.oracle) {
        double rsum = 0.0, esum = 0.0;
        for (const auto& r : reports) {
            rsum += r.recall.value();
            esum += r.l2_error.value();
        }
        std::printf("mean_recall %s\n", fmt_double(rsum / reports.size()).c_str());
        std::printf("mean_l2_error %s\n", fmt_double(esum / reports.size()).c_str());
    }
    std::printf("wrote %s\n", a.out.c_str());
    return 0;
}

// ---- inspect --------------------------------------------------------------

int cmd_inspect(const std::string& path, bool tables) {
    csattn::CsIndex index = csattn::load_index(path);
    csattn::IndexFootprint fp = csattn::index_footprint(index);
    const std::size_t m = index.subspaces();
    const std::size_t c = index.centroids_per_subspace();

    std::size_t fill_min = std::numeric_limits<std::size_t>::max();
    std::size_t fill_max = 0;
    float smin = std::numeric_limits<float>::infinity();
    float smax = -std::numeric_limits<float>::infinity();
    for (std::size_t b = 0; b < m; ++b) {
        for (std::size_t j = 0; j < c; ++j) {
            const csattn::TopList& tl = index.table(b, j);
            fill_min = std::min(fill_min, tl.indices.size());
            fill_max = std::max(fill_max, tl.indices.size());
            for (float s : tl.scores) {
                smin = std::min(smin, s);
                smax = std::max(smax, s);
            }
        }
    }

    std::printf("m %zu\n", m);
    std::printf("C %zu\n", c);
    std::printf("L %u\n", index.list_capacity);
    std::printf("alpha %s\n", fmt_double(index.alpha).c_str());
    std::printf("prefill %zu\n", static_cast<std::size_t>(index.prefill_len));
    std::printf("d %zu\n", index.layout.dim());
    std::printf("score_bits %d\n", index.score_bits);
    std::printf("normalize_keys %d\n", index.normalize_keys ? 1 : 0);
    std::printf("fill_min %zu\n", fill_min);
    std::printf("fill_max %zu\n", fill_max);
    std::printf("score_min %s\n", fmt_double(smin).c_str());
    std::printf("score_max %s\n", fmt_double(smax).c_str());
    const std::size_t sbytes = static_cast<std::size_t>(index.score_bits) / 8;
    std::printf("payload_bytes %zu\n", fp.payload());
    std::printf("model_bytes %zu\n", csattn::table_bytes(m, c, index.list_capacity,
                                                         index.layout.dim(), sbytes));
    std::printf("header_bytes %zu\n", fp.header_bytes);
    std::printf("centroid_bytes %zu\n", fp.centroid_bytes);
    std::printf("entry_bytes %zu\n", fp.entry_bytes);
    std::printf("total_bytes %zu\n", fp.total());
    if (tables) {
        for (std::size_t b = 0; b < m; ++b) {
            for (std::size_t j = 0; j < c; ++j) {
                const csattn::TopList& tl = index.table(b, j);
                std::printf("table %zu %zu len %zu", b, j, tl.indices.size());
                if (!tl.scores.empty()) {
                    std::printf(" max %s min %s", fmt_double(tl.scores.front()).c_str(),
                                fmt_double(tl.scores.back()).c_str());
                }
                std::printf("\n");
            }
        }
    }
    return 0;
}

// ---- sweep ----------------------------------------------------------------

template <typename T>
std::vector<T> grid_axis(const nlohmann::json& j, const char* key, std::vector<T> fallback) {
    if (!j.contains(key)) return fallback;
    const nlohmann::json& v = j.at(key);
    if (!v.is_array() || v.empty()) {
        throw csattn::DataError(std::string("grid key '") + key + "' must be a non-empty array");
    }
    std::vector<T> out;
    for (const auto& e : v) out.push_back(e.get<T>());
    return out;
}

struct SweepArgs {
    SynthArgs synth;
    std::string queries, keys, values, grid_path, out_dir;
    std::size_t prefill = 0;
    std::size_t steps = 64;
    std::size_t jobs = 1;
    std::uint64_t seed = 0;
};

int cmd_sweep(const SweepArgs& a) {
    std::ifstream gf(a.grid_path);
    if (!gf) throw csattn::DataError("cannot open grid file " + a.grid_path);
    nlohmann::json j;
    try {
        gf >> j;
    } catch (const nlohmann::json::exception& e) {
        throw csattn::DataError("grid file " + a.grid_path + ": " + e.what());
    }
    if (!j.is_object()) throw csattn::DataError("grid file must hold a JSON object");

    csattn::SweepGrid grid;
    grid.m = grid_axis<std::size_t>(j, "m", grid.m);
    grid.centroids = grid_axis<std::size_t>(j, "centroids", grid.centroids);
    grid.alpha = grid_axis<double>(j, "alpha", grid.alpha);
    grid.rho = grid_axis<double>(j, "rho", grid.rho);
    grid.period = grid_axis<std::size_t>(j, "period", grid.period);
    grid.tau = grid_axis<std::size_t>(j, "tau", grid.tau);
    grid.seeds = grid_axis<std::uint64_t>(j, "seeds", grid.seeds);
    for (const auto& [key, value] : j.items()) {
        (void)value;
        static const char* known[] = {"m", "centroids", "alpha", "rho", "period", "tau", "seeds"};
        bool ok = false;
        for (const char* k : known) ok = ok || key == k;
        if (!ok) throw csattn::DataError("unknown grid key '" + key + "'");
    }

    std::vector<csattn::SweepResult> results;
    if (!j.empty()) {
        // An empty grid object runs nothing and leaves a header-only file.
        StreamData data =
            load_streams(a.synth, a.queries, a.keys, a.values, a.seed);
        if (a.prefill == 0)
            throw csattn::ParameterError("--prefill must be positive");
        csattn::SyntheticWorkload w;
        w.rows = data.rows;
        w.dim = data.dim;
        w.queries = std::move(data.queries);
        w.keys = std::move(data.keys);
        w.values = std::move(data.values);
        results = csattn::sweep(grid, w, a.prefill, a.steps, a.jobs);
    }

    std::filesystem::create_directories(a.out_dir);
    const std::string results_path =
        (std::filesystem::path(a.out_dir) / "results.tsv").string();
    csattn::write_results(results, results_path);
    csattn::write_series(results, (std::filesystem::path(a.out_dir) / "series").string());

    std::size_t ran = 0, skipped = 0;
    for (const auto& r : results) (r.skipped ? skipped : ran)++;
    std::printf("configs %zu\n", results.size());
    std::printf("ran %zu\n", ran);
    std::printf("skipped %zu\n", skipped);
    std::printf("wrote %s\n", results_path.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"centroid-scoring attention index tool"};
    app.require_subcommand(1);

    BuildArgs ba;
    CLI::App* build = app.add_subcommand("build", "cluster prefill queries and score keys");
    build->add_option("--synthetic", ba.synth.vals, "rows dim clusters")->expected(3);
    build->add_option("--queries", ba.queries, "query dump path");
    build->add_option("--keys", ba.keys, "key dump path");
    build->add_option("--values", ba.values, "value dump path (optional)");
    build->add_option("--out", ba.out, "output index path")->required();
    build->add_option("--m", ba.m, "subspace count")->check(CLI::PositiveNumber);
    build->add_option("--centroids", ba.centroids, "centroids per subspace")
        ->check(CLI::PositiveNumber);
    build->add_option("--alpha", ba.alpha, "list capacity ratio");
    build->add_option("--seed", ba.seed, "rng seed");
    build->add_option("--score-bits", ba.score_bits, "serialized score width")
        ->check(CLI::IsMember({16, 32}));
    build->add_flag("--normalize-keys", ba.normalize_keys, "score against normalized keys");

    DecodeArgs da;
    CLI::App* decode = app.add_subcommand("decode", "run a decode session against an index");
    decode->add_option("--index", da.index_path, "index path")->required();
    decode->add_option("--synthetic", da.synth.vals, "rows dim clusters")->expected(3);
    decode->add_option("--queries", da.queries, "query dump path");
    decode->add_option("--keys", da.keys, "key dump path");
    decode->add_option("--values", da.values, "value dump path");
    decode->add_option("--out", da.out, "per-step results path")->required();
    decode->add_option("--steps", da.steps, "decode steps")->check(CLI::PositiveNumber);
    decode->add_option("--rho", da.rho, "keep ratio");
    decode->add_option("--period", da.period, "search period")->check(CLI::PositiveNumber);
    decode->add_option("--schedule", da.schedule, "named schedule, e.g. 0.05-step-1");
    decode->add_option("--window", da.window, "recent window size");
    decode->add_option("--tau", da.tau, "backoff centroid count")->check(CLI::PositiveNumber);
    decode->add_option("--backoff-threshold", da.backoff_threshold, "cosine backoff threshold");
    decode->add_option("--seed", da.seed, "rng seed (synthetic stream)");
    decode->add_flag("--oracle", da.oracle, "compare against dense attention");

    std::string inspect_path;
    bool inspect_tables = false;
    CLI::App* inspect = app.add_subcommand("inspect", "print index structure and sizes");
    inspect->add_option("--index", inspect_path, "index path")->required();
    inspect->add_flag("--tables", inspect_tables, "also list every score table");

    SweepArgs sa;
    CLI::App* sweep_cmd = app.add_subcommand("sweep", "run a config grid and write reports");
    sweep_cmd->add_option("--grid", sa.grid_path, "JSON grid file")->required();
    sweep_cmd->add_option("--synthetic", sa.synth.vals, "rows dim clusters")->expected(3);
    sweep_cmd->add_option("--queries", sa.queries, "query dump path");
    sweep_cmd->add_option("--keys", sa.keys, "key dump path");
    sweep_cmd->add_option("--values", sa.values, "value dump path");
    sweep_cmd->add_option("--prefill", sa.prefill, "prefill rows")->required();
    sweep_cmd->add_option("--steps", sa.steps, "decode steps")->check(CLI::PositiveNumber);
    sweep_cmd->add_option("--jobs", sa.jobs, "worker threads")->check(CLI::PositiveNumber);
    sweep_cmd->add_option("--seed", sa.seed, "rng seed (synthetic stream)");
    sweep_cmd->add_option("--out", sa.out_dir, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (build->parsed()) return cmd_build(ba);
        if (decode->parsed()) return cmd_decode(da);
        if (inspect->parsed()) return cmd_inspect(inspect_path, inspect_tables);
        if (sweep_cmd->parsed()) return cmd_sweep(sa);
    } catch (const csattn::PropertyError& e) {
        std::fprintf(stderr, "property failure: %s\n", e.what());
        return 3;
    } catch (const csattn::ParameterError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const csattn::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
