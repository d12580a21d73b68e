#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "audit/errors.hpp"
#include "audit/rng.hpp"
#include "audit/stats.hpp"

namespace audit {

struct BootstrapInterval {
    double lo = 0.0;
    double hi = 0.0;
    std::size_t resamples = 0;
    // Resamples on which the statistic was undefined and had to be redrawn.
    std::size_t redraws = 0;
};

// Percentile bootstrap (1 - zeta) interval for a statistic of a resampled
// table. The statistic returns nullopt when undefined on a resample (e.g. an
// empty category), in which case the resample is redrawn from the same
// stream. Fully determined by (rows, B, zeta, seed).
template <typename Row>
BootstrapInterval bootstrap_ci(const std::vector<Row>& rows,
                               const std::function<std::optional<double>(
                                   const std::vector<Row>&)>& statistic,
                               std::size_t B, double zeta, std::uint64_t seed) {
    if (B < 1000) throw ConfigError("bootstrap needs B >= 1000 resamples");
    if (!(zeta > 0.0 && zeta < 1.0)) throw ConfigError("bootstrap zeta must lie in (0, 1)");
    if (rows.empty()) throw EstimationError("bootstrap: empty table");

    Rng rng(derive_seed(seed, 0xB0075ULL));
    std::vector<double> values;
    values.reserve(B);
    std::vector<Row> resample(rows.size());
    std::size_t redraws = 0;
    const std::size_t max_redraws = 100 * B;
    while (values.size() < B) {
        for (std::size_t i = 0; i < rows.size(); ++i) {
            resample[i] = rows[rng.next_index(rows.size())];
        }
        const auto v = statistic(resample);
        if (v) {
            values.push_back(*v);
        } else if (++redraws > max_redraws) {
            throw EstimationError("bootstrap statistic undefined on " +
                                  std::to_string(redraws) + " resamples; giving up");
        }
    }
    std::sort(values.begin(), values.end());
    BootstrapInterval ci;
    ci.lo = stats::quantile_sorted(values, zeta / 2.0);
    ci.hi = stats::quantile_sorted(values, 1.0 - zeta / 2.0);
    ci.resamples = B;
    ci.redraws = redraws;
    return ci;
}

}  // namespace audit
