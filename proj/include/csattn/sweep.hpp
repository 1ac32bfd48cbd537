#ifndef CSATTN_SWEEP_HPP
#define CSATTN_SWEEP_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "csattn/synthetic.hpp"

namespace csattn {

// Cross-product grid over the tunable knobs. Every combination times every
// seed becomes one sweep cell.
struct SweepGrid {
    std::vector<std::size_t> m{8};
    std::vector<std::size_t> centroids{64};
    std::vector<double> alpha{0.2};
    std::vector<double> rho{0.05};
    std::vector<std::size_t> period{1};
    std::vector<std::size_t> tau{1};
    std::vector<std::uint64_t> seeds{0};
};

struct SweepResult {
    std::string config_id;
    bool skipped = false;
    std::string skip_reason;
    double mean_recall = 0.0;
    double mean_l2_error = 0.0;
    // Per-step modeled overhead (search + reduce + table maintenance), in
    // multiply/accumulate ops: raw mean, then tail percentiles of the
    // per-step values normalized so their mean is 1.0.
    double cost_mean = 0.0;
    double cost_p50 = 0.0;
    double cost_p90 = 0.0;
    double cost_p99 = 0.0;
    std::size_t index_bytes = 0;
};

// Runs every cell (prefill over the first `prefill` rows, then `steps`
// decode steps with the dense comparison on). Infeasible or failing cells
// are reported as skipped with a reason; the run continues. `jobs` bounds
// the worker threads (0 means one).
std::vector<SweepResult> sweep(const SweepGrid& grid,
                               const SyntheticWorkload& data,
                               std::size_t prefill_rows, std::size_t steps,
                               std::size_t jobs);

// One header line, then one tab-separated record per cell, in grid order.
void write_results(std::span<const SweepResult> results,
                   const std::string& path);

// One <metric>.tsv per metric with (results-row, value) pairs; skipped
// cells are omitted. Creates the directory if needed.
void write_series(std::span<const SweepResult> results,
                  const std::string& dir);

}  // namespace csattn

#endif  // CSATTN_SWEEP_HPP
