#include "csattn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace csattn {

double recall_at_k(std::span<const std::uint32_t> selected,
                   std::span<const std::uint32_t> truth) {
    if (truth.empty())
        throw ParameterError("recall is undefined against an empty truth set");
    std::vector<std::uint32_t> a(selected.begin(), selected.end());
    std::vector<std::uint32_t> b(truth.begin(), truth.end());
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::size_t hits = 0, i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] < b[j])
            ++i;
        else if (b[j] < a[i])
            ++j;
        else {
            ++hits;
            ++i;
            ++j;
        }
    }
    return static_cast<double>(hits) / static_cast<double>(b.size());
}

double h2d_bytes(double rho, std::size_t n, std::size_t d,
                 std::size_t bytes_per_elem, std::size_t period) {
    if (!(rho > 0.0) || n == 0 || d == 0 || bytes_per_elem == 0 || period == 0)
        throw ParameterError("transfer model needs positive parameters");
    return 2.0 * rho * static_cast<double>(n) * static_cast<double>(d) *
           static_cast<double>(bytes_per_elem) / static_cast<double>(period);
}

std::size_t table_bytes(std::size_t m, std::size_t c, std::size_t l,
                        std::size_t d, std::size_t bytes_per_score) {
    if (m == 0 || c == 0 || d == 0 || bytes_per_score == 0)
        throw ParameterError("size model needs positive parameters");
    return m * c * l * (4 + bytes_per_score) + bytes_per_score * c * d;
}

double percentile(std::span<const double> values, double p) {
    if (values.empty()) throw ParameterError("percentile of an empty sample");
    if (!(p >= 0.0 && p <= 100.0))
        throw ParameterError("percentile must lie in [0, 100]");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    std::size_t rank = static_cast<std::size_t>(
        std::ceil(p / 100.0 * static_cast<double>(n)));
    if (rank == 0) rank = 1;
    if (rank > n) rank = n;
    return sorted[rank - 1];
}

}  // namespace csattn
