#include "audit/multiplicity.hpp"

#include <algorithm>
#include <numeric>

#include "audit/errors.hpp"

namespace audit {

std::string multiplicity_method_name(MultiplicityMethod m) {
    return m == MultiplicityMethod::Bonferroni ? "bonferroni" : "benjamini_hochberg";
}

MultiplicityResult adjust_multiplicity(const std::vector<double>& p_values,
                                       MultiplicityMethod method, double level) {
    if (p_values.empty()) throw ConfigError("multiplicity adjustment needs at least one p-value");
    if (!(level > 0.0 && level < 1.0)) throw ConfigError("multiplicity level must lie in (0, 1)");
    for (double p : p_values) {
        if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("p-values must lie in [0, 1]");
    }
    const std::size_t m = p_values.size();
    MultiplicityResult result;
    result.adjusted_p.resize(m);
    result.reject.resize(m);

    if (method == MultiplicityMethod::Bonferroni) {
        for (std::size_t i = 0; i < m; ++i) {
            result.adjusted_p[i] = std::min(1.0, static_cast<double>(m) * p_values[i]);
            result.reject[i] = result.adjusted_p[i] <= level;
        }
        return result;
    }

    // Benjamini-Hochberg step-up with the standard monotone adjusted p-values.
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return p_values[a] < p_values[b]; });

    std::vector<double> adjusted_sorted(m);
    double running = 1.0;
    for (std::size_t r = m; r-- > 0;) {
        const double candidate =
            p_values[order[r]] * static_cast<double>(m) / static_cast<double>(r + 1);
        running = std::min(running, std::min(1.0, candidate));
        adjusted_sorted[r] = running;
    }
    std::size_t cutoff = 0;  // reject ranks [0, cutoff)
    for (std::size_t r = m; r-- > 0;) {
        if (p_values[order[r]] <=
            static_cast<double>(r + 1) * level / static_cast<double>(m)) {
            cutoff = r + 1;
            break;
        }
    }
    for (std::size_t r = 0; r < m; ++r) {
        result.adjusted_p[order[r]] = adjusted_sorted[r];
        result.reject[order[r]] = r < cutoff;
    }
    return result;
}

}  // namespace audit
