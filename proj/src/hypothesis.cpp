#include "audit/hypothesis.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>
#include <vector>

#include "audit/errors.hpp"
#include "audit/stats.hpp"

namespace audit {

std::string presumption_name(Presumption p) {
    return p == Presumption::Compliance ? "compliance" : "non_compliance";
}

namespace {

void check_counts(long k1, long n1, long k2, long n2, double eta, double zeta) {
    if (n1 <= 0 || n2 <= 0) throw EstimationError("both groups need at least one observation");
    if (k1 < 0 || k1 > n1 || k2 < 0 || k2 > n2) {
        throw EstimationError("counts must satisfy 0 <= k <= n");
    }
    if (eta < 0.0 || eta >= 1.0) throw ConfigError("eta must lie in [0, 1)");
    if (!(zeta > 0.0 && zeta <= 0.5)) throw ConfigError("zeta must lie in (0, 0.5]");
}

}  // namespace

double boundary_z_p_value(long k1, long n1, long k2, long n2, double eta,
                          Presumption presumption) {
    const double p1 = static_cast<double>(k1) / n1;
    const double p2 = static_cast<double>(k2) / n2;
    const double diff = p1 - p2;
    const double t = std::abs(diff);

    const double se_plus = stats::score_se(p1, n1, p2, n2, +eta);
    const double se_minus = stats::score_se(p1, n1, p2, n2, -eta);

    if (presumption == Presumption::Compliance) {
        // P(|d| >= t) at each signed boundary; least favorable = the larger.
        const double p_at_plus = (1.0 - stats::normal_cdf((t - eta) / se_plus)) +
                                 stats::normal_cdf((-t - eta) / se_plus);
        const double p_at_minus = (1.0 - stats::normal_cdf((t + eta) / se_minus)) +
                                  stats::normal_cdf((eta - t) / se_minus);
        return std::clamp(std::max(p_at_plus, p_at_minus), 0.0, 1.0);
    }
    // TOST: reject "non-compliant" only if the gap is convincingly inside
    // (-eta, eta) from both sides.
    const double p_upper = stats::normal_cdf((diff - eta) / se_plus);
    const double p_lower = 1.0 - stats::normal_cdf((diff + eta) / se_minus);
    return std::clamp(std::max(p_upper, p_lower), 0.0, 1.0);
}

TestResult boundary_z_test(long k1, long n1, long k2, long n2, double eta, double zeta,
                           Presumption presumption) {
    check_counts(k1, n1, k2, n2, eta, zeta);
    if (n1 < kZTestMinPerGroup || n2 < kZTestMinPerGroup) {
        throw EstimationError("normal approximation needs n >= " +
                              std::to_string(kZTestMinPerGroup) +
                              " per group; use the exact binomial boundary test");
    }
    TestResult result;
    result.gap = std::abs(static_cast<double>(k1) / n1 - static_cast<double>(k2) / n2);
    result.p_value = boundary_z_p_value(k1, n1, k2, n2, eta, presumption);
    result.reject = result.p_value <= zeta;
    return result;
}

// --- Exact enumeration test ---------------------------------------------------

namespace {

// Precomputed p-value lookup for a given (n1, n2, eta, presumption): the
// p-value depends on the data only through (k1, k2), and Monte Carlo loops
// hit the same configuration thousands of times. Keys are the integer
// statistic k1*n2 - k2*n1 (absolute for the gap test, signed for TOST), so
// lookups never face floating-point equality.
struct ExactTable {
    long n1 = 0, n2 = 0;
    std::vector<long> keys;  // sorted distinct statistic values
    // Compliance: sup over boundaries of P(T >= t) per |key|.
    std::vector<double> tail_at_gap;
    // NonCompliance: sup_c P_{+eta}(D <= d) and sup_c P_{-eta}(D >= d).
    std::vector<double> upper_tost;
    std::vector<double> lower_tost;

    std::size_t rank_of(long key) const {
        const auto it = std::lower_bound(keys.begin(), keys.end(), key);
        if (it == keys.end() || *it != key) {
            throw AuditError("internal: exact table missing observed statistic");
        }
        return static_cast<std::size_t>(it - keys.begin());
    }
};

// For each nuisance grid point on the boundary p1 = c + delta, p2 = c,
// accumulates cell mass into per-rank buckets and folds the running tail
// into `sup` (elementwise max over grid points).
void sup_boundary_tails(long n1, long n2, double delta,
                        const std::vector<std::size_t>& cell_rank, std::size_t rank_count,
                        bool suffix_tail, std::vector<double>& sup) {
    const double lo = std::max(0.0, -delta);
    const double hi = std::min(1.0, 1.0 - delta);
    std::vector<double> pmf1, pmf2, bucket(rank_count);
    if (sup.size() != rank_count) sup.assign(rank_count, 0.0);
    for (int gi = 0; gi < kNuisanceGridPoints; ++gi) {
        const double c = lo + (hi - lo) * gi / (kNuisanceGridPoints - 1);
        stats::binomial_pmf_table(n1, c + delta, pmf1);
        stats::binomial_pmf_table(n2, c, pmf2);
        std::fill(bucket.begin(), bucket.end(), 0.0);
        std::size_t cell = 0;
        for (long j1 = 0; j1 <= n1; ++j1) {
            const double p1 = pmf1[static_cast<std::size_t>(j1)];
            for (long j2 = 0; j2 <= n2; ++j2, ++cell) {
                bucket[cell_rank[cell]] += p1 * pmf2[static_cast<std::size_t>(j2)];
            }
        }
        double running = 0.0;
        if (suffix_tail) {
            for (std::size_t r = rank_count; r-- > 0;) {
                running += bucket[r];
                sup[r] = std::max(sup[r], running);
            }
        } else {
            for (std::size_t r = 0; r < rank_count; ++r) {
                running += bucket[r];
                sup[r] = std::max(sup[r], running);
            }
        }
    }
}

std::shared_ptr<const ExactTable> build_table(long n1, long n2, double eta,
                                              Presumption presumption) {
    auto table = std::make_shared<ExactTable>();
    table->n1 = n1;
    table->n2 = n2;

    const bool absolute = presumption == Presumption::Compliance;
    const std::size_t cells = static_cast<std::size_t>((n1 + 1) * (n2 + 1));
    std::vector<long> cell_key(cells);
    std::size_t cell = 0;
    for (long j1 = 0; j1 <= n1; ++j1) {
        for (long j2 = 0; j2 <= n2; ++j2, ++cell) {
            const long key = j1 * n2 - j2 * n1;
            cell_key[cell] = absolute ? std::labs(key) : key;
        }
    }
    table->keys = cell_key;
    std::sort(table->keys.begin(), table->keys.end());
    table->keys.erase(std::unique(table->keys.begin(), table->keys.end()),
                      table->keys.end());
    std::vector<std::size_t> cell_rank(cells);
    for (std::size_t i = 0; i < cells; ++i) cell_rank[i] = table->rank_of(cell_key[i]);
    const std::size_t ranks = table->keys.size();

    if (absolute) {
        sup_boundary_tails(n1, n2, +eta, cell_rank, ranks, /*suffix_tail=*/true,
                           table->tail_at_gap);
        if (eta != 0.0) {  // at eta == 0 the two signed boundaries coincide
            sup_boundary_tails(n1, n2, -eta, cell_rank, ranks, /*suffix_tail=*/true,
                               table->tail_at_gap);
        }
    } else {
        sup_boundary_tails(n1, n2, +eta, cell_rank, ranks, /*suffix_tail=*/false,
                           table->upper_tost);
        sup_boundary_tails(n1, n2, -eta, cell_rank, ranks, /*suffix_tail=*/true,
                           table->lower_tost);
    }
    return table;
}

struct TableKey {
    long n1, n2;
    std::uint64_t eta_bits;
    Presumption presumption;
    bool operator<(const TableKey& o) const {
        return std::tie(n1, n2, eta_bits, presumption) <
               std::tie(o.n1, o.n2, o.eta_bits, o.presumption);
    }
};

std::shared_ptr<const ExactTable> cached_table(long n1, long n2, double eta,
                                               Presumption presumption) {
    static std::mutex mutex;
    static std::map<TableKey, std::shared_ptr<const ExactTable>> cache;
    std::uint64_t eta_bits;
    static_assert(sizeof(eta_bits) == sizeof(eta));
    std::memcpy(&eta_bits, &eta, sizeof(eta_bits));
    const TableKey key{n1, n2, eta_bits, presumption};
    {
        std::lock_guard<std::mutex> lock(mutex);
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
    }
    auto table = build_table(n1, n2, eta, presumption);
    std::lock_guard<std::mutex> lock(mutex);
    return cache.emplace(key, std::move(table)).first->second;
}

}  // namespace

TestResult exact_binomial_boundary_test(long k1, long n1, long k2, long n2, double eta,
                                        double zeta, Presumption presumption) {
    check_counts(k1, n1, k2, n2, eta, zeta);
    if (static_cast<std::uint64_t>(n1) * static_cast<std::uint64_t>(n2) >
        kExactEnumerationLimit) {
        throw EstimationError("exact enumeration bound exceeded (n1*n2 > " +
                              std::to_string(kExactEnumerationLimit) +
                              "); use the boundary z-test");
    }
    const auto table = cached_table(n1, n2, eta, presumption);
    TestResult result;
    const long signed_gap = k1 * n2 - k2 * n1;
    result.gap = std::abs(static_cast<double>(k1) / n1 - static_cast<double>(k2) / n2);
    if (presumption == Presumption::Compliance) {
        result.p_value =
            std::min(1.0, table->tail_at_gap[table->rank_of(std::labs(signed_gap))]);
    } else {
        const std::size_t rank = table->rank_of(signed_gap);
        result.p_value =
            std::min(1.0, std::max(table->upper_tost[rank], table->lower_tost[rank]));
    }
    result.reject = result.p_value <= zeta;
    return result;
}

}  // namespace audit
