#include "csattn/sweep.hpp"

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <thread>

#include "csattn/metrics.hpp"
#include "csattn/session.hpp"

namespace csattn {

namespace {

struct Cell {
    std::size_t m, centroids;
    double alpha, rho;
    std::size_t period, tau;
    std::uint64_t seed;
};

std::string fmt_g(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

std::string fmt_precise(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

std::string cell_id(const Cell& c) {
    return "m" + std::to_string(c.m) + "-C" + std::to_string(c.centroids) +
           "-a" + fmt_g(c.alpha) + "-r" + fmt_g(c.rho) + "-P" +
           std::to_string(c.period) + "-t" + std::to_string(c.tau) + "-s" +
           std::to_string(c.seed);
}

SweepResult run_cell(const Cell& cell, const SyntheticWorkload& data,
                     std::size_t prefill_rows, std::size_t steps) {
    SweepResult res;
    res.config_id = cell_id(cell);

    const auto skip = [&](const std::string& why) {
        res.skipped = true;
        res.skip_reason = why;
        log_warn("sweep cell " + res.config_id + " skipped: " + why);
        return res;
    };
    if (!(cell.rho > 0.0 && cell.rho <= 1.0))
        return skip("keep ratio outside (0, 1]");
    if (!(cell.alpha > 0.0 && cell.alpha <= 1.0))
        return skip("alpha outside (0, 1]");
    if (cell.m == 0 || cell.m > data.dim)
        return skip("subspace count must lie in [1, d]");
    if (cell.centroids == 0) return skip("centroid count must be >= 1");
    if (cell.period == 0) return skip("search period must be >= 1");
    if (cell.tau == 0) return skip("tau must be >= 1");

    try {
        const std::size_t d = data.dim;
        const SubspaceLayout layout = SubspaceLayout::uniform(d, cell.m);
        IndexConfig icfg;
        icfg.alpha = cell.alpha;
        icfg.cluster.centroids = cell.centroids;
        icfg.cluster.seed = cell.seed;
        RetrievalConfig rcfg;
        rcfg.keep_ratio = cell.rho;
        rcfg.search_period = cell.period;
        rcfg.backoff_tau = cell.tau;
        if (cell.tau > 1)  // force the backoff path, else tau is inert
            rcfg.backoff_threshold = 2.0;

        Session session = prefill(
            {data.queries.data(), prefill_rows * d}, {data.keys.data(), prefill_rows * d},
            {data.values.data(), prefill_rows * d}, layout, icfg, rcfg);
        const auto reports = run_decode(
            session, {data.queries.data() + prefill_rows * d, steps * d},
            {data.keys.data() + prefill_rows * d, steps * d},
            {data.values.data() + prefill_rows * d, steps * d}, steps, true);

        std::vector<double> cost(reports.size());
        double recall_sum = 0.0, err_sum = 0.0;
        for (std::size_t t = 0; t < reports.size(); ++t) {
            const CostCounters& cc = reports[t].counters;
            cost[t] = static_cast<double>(cc.centroid_dot_ops + cc.reduce_ops +
                                          cc.insert_dot_ops);
            recall_sum += reports[t].recall.value();
            err_sum += reports[t].l2_error.value();
        }
        res.mean_recall = recall_sum / static_cast<double>(reports.size());
        res.mean_l2_error = err_sum / static_cast<double>(reports.size());

        double mean = 0.0;
        for (double v : cost) mean += v;
        mean /= static_cast<double>(cost.size());
        res.cost_mean = mean;
        std::vector<double> normalized(cost.size());
        for (std::size_t t = 0; t < cost.size(); ++t)
            normalized[t] = mean > 0.0 ? cost[t] / mean : 0.0;
        res.cost_p50 = percentile(normalized, 50.0);
        res.cost_p90 = percentile(normalized, 90.0);
        res.cost_p99 = percentile(normalized, 99.0);
        res.index_bytes = index_footprint(session.index).total();
    } catch (const std::exception& e) {
        return skip(e.what());
    }
    return res;
}

}  // namespace

std::vector<SweepResult> sweep(const SweepGrid& grid,
                               const SyntheticWorkload& data,
                               std::size_t prefill_rows, std::size_t steps,
                               std::size_t jobs) {
    if (prefill_rows == 0 || steps == 0)
        throw ParameterError("sweep needs prefill >= 1 and steps >= 1");
    if (prefill_rows + steps > data.rows)
        throw ParameterError("workload holds " + std::to_string(data.rows) +
                             " rows, need " + std::to_string(prefill_rows + steps));

    std::vector<Cell> cells;
    for (std::size_t m : grid.m)
        for (std::size_t c : grid.centroids)
            for (double a : grid.alpha)
                for (double r : grid.rho)
                    for (std::size_t p : grid.period)
                        for (std::size_t t : grid.tau)
                            for (std::uint64_t s : grid.seeds)
                                cells.push_back({m, c, a, r, p, t, s});

    std::vector<SweepResult> results(cells.size());
    const std::size_t workers =
        std::max<std::size_t>(1, std::min(jobs ? jobs : 1, cells.size()));
    if (workers <= 1) {
        for (std::size_t i = 0; i < cells.size(); ++i)
            results[i] = run_cell(cells[i], data, prefill_rows, steps);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (;;) {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= cells.size()) return;
                    results[i] = run_cell(cells[i], data, prefill_rows, steps);
                }
            });
        }
        for (auto& t : pool) t.join();
    }
    return results;
}

void write_results(std::span<const SweepResult> results,
                   const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + path);
    out << "config_id\tstatus\tmean_recall\tmean_l2_error\tcost_mean_ops\t"
           "cost_p50\tcost_p90\tcost_p99\tindex_bytes\tnote\n";
    for (const SweepResult& r : results) {
        out << r.config_id << '\t' << (r.skipped ? "skipped" : "ok") << '\t'
            << fmt_precise(r.mean_recall) << '\t'
            << fmt_precise(r.mean_l2_error) << '\t'
            << fmt_precise(r.cost_mean) << '\t' << fmt_precise(r.cost_p50)
            << '\t' << fmt_precise(r.cost_p90) << '\t'
            << fmt_precise(r.cost_p99) << '\t' << r.index_bytes << '\t'
            << r.skip_reason << '\n';
    }
    if (!out) throw DataError("short write to " + path);
}

void write_series(std::span<const SweepResult> results,
                  const std::string& dir) {
    std::filesystem::create_directories(dir);
    const auto emit = [&](const std::string& name, auto&& pick) {
        const std::string path = dir + "/" + name + ".tsv";
        std::ofstream out(path, std::ios::trunc);
        if (!out) throw DataError("cannot open for writing: " + path);
        for (std::size_t i = 0; i < results.size(); ++i) {
            if (results[i].skipped) continue;
            out << i << '\t' << pick(results[i]) << '\n';
        }
        if (!out) throw DataError("short write to " + path);
    };
    emit("recall", [](const SweepResult& r) { return fmt_precise(r.mean_recall); });
    emit("l2_error",
         [](const SweepResult& r) { return fmt_precise(r.mean_l2_error); });
    emit("cost_mean",
         [](const SweepResult& r) { return fmt_precise(r.cost_mean); });
    emit("cost_p50",
         [](const SweepResult& r) { return fmt_precise(r.cost_p50); });
    emit("cost_p90",
         [](const SweepResult& r) { return fmt_precise(r.cost_p90); });
    emit("cost_p99",
         [](const SweepResult& r) { return fmt_precise(r.cost_p99); });
    emit("index_bytes",
         [](const SweepResult& r) { return std::to_string(r.index_bytes); });
}

}  // namespace csattn
