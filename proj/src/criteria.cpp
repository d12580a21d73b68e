#include "audit/criteria.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "audit/json_io.hpp"
#include "audit/rng.hpp"
#include "audit/stats.hpp"

namespace audit {

std::string criterion_name(const ComplianceCriterion& criterion) {
    if (std::holds_alternative<MaxLossCriterion>(criterion)) return "max_loss";
    if (std::holds_alternative<StatisticalParityCriterion>(criterion)) return "statistical_parity";
    if (std::holds_alternative<IndividualFairnessCriterion>(criterion)) {
        return "individual_fairness";
    }
    return "impact_metrics";
}

double criterion_threshold(const ComplianceCriterion& criterion) {
    if (const auto* ml = std::get_if<MaxLossCriterion>(&criterion)) return ml->eta;
    if (const auto* sp = std::get_if<StatisticalParityCriterion>(&criterion)) return sp->eta;
    if (const auto* ifc = std::get_if<IndividualFairnessCriterion>(&criterion)) {
        return ifc->lipschitz;
    }
    return std::get<ImpactMetricsCriterion>(criterion).eta.value_or(0.0);
}

namespace {

double loss_value(const MaxLossCriterion& criterion, const ModelOutput& out,
                  const ModelInput& in) {
    switch (criterion.loss) {
        case LossKind::Zero:
            return 0.0;
        case LossKind::OutputValue:
            if (!out.is_number()) {
                throw EstimationError("max_loss with OutputValue needs numeric outputs");
            }
            return out.number();
        case LossKind::AbsDiffFeature: {
            if (!out.is_number()) {
                throw EstimationError("max_loss with AbsDiffFeature needs numeric outputs");
            }
            auto it = in.features.find(criterion.feature);
            if (it == in.features.end() || !std::holds_alternative<double>(it->second)) {
                throw EstimationError("max_loss loss feature '" + criterion.feature +
                                      "' missing or non-numeric");
            }
            return std::abs(out.number() - std::get<double>(it->second));
        }
    }
    return 0.0;
}

}  // namespace

CriterionEstimate eval_max_loss(const BlackBoxModel& model, const MaxLossCriterion& criterion,
                                QueryBudget& budget, std::uint64_t seed) {
    if (!(criterion.eta > 0.0)) throw ConfigError("max_loss threshold eta must be positive");
    if (criterion.query_set.empty()) throw EstimationError("max_loss query set S is empty");
    if (budget.remaining() < criterion.query_set.size()) {
        throw BudgetError("max_loss needs " + std::to_string(criterion.query_set.size()) +
                          " queries to enumerate S exhaustively but only " +
                          std::to_string(budget.remaining()) + " remain");
    }
    budget.charge(criterion.query_set.size());
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < criterion.query_set.size(); ++i) {
        const auto& input = criterion.query_set[i];
        const ModelOutput out = model.query(input, derive_seed(seed, i));
        worst = std::max(worst, loss_value(criterion, out, input));
    }
    CriterionEstimate est;
    est.g_hat = worst - criterion.eta;
    est.lower_bound = false;  // S fully enumerated
    return est;
}

CriterionEstimate estimate_statistical_parity(const Evidence& evidence,
                                              const StatisticalParityCriterion& criterion) {
    if (criterion.group1 == criterion.group2) {
        throw ConfigError("statistical parity needs two distinct groups");
    }
    long k1 = 0, n1 = 0, k2 = 0, n2 = 0;
    for (const auto& rec : evidence.records) {
        if (!rec.input.group) continue;
        if (!rec.output.is_number() ||
            (rec.output.number() != 0.0 && rec.output.number() != 1.0)) {
            throw EstimationError("statistical parity needs binary outputs; record " +
                                  std::to_string(rec.index) + " has " +
                                  describe(rec.output));
        }
        const bool selected = rec.output.number() == 1.0;
        if (*rec.input.group == criterion.group1) {
            ++n1;
            k1 += selected;
        } else if (*rec.input.group == criterion.group2) {
            ++n2;
            k2 += selected;
        }
    }
    if (n1 == 0) {
        throw EstimationError("no evidence for group '" + criterion.group1 +
                              "'; cannot estimate its selection rate (no imputation)");
    }
    if (n2 == 0) {
        throw EstimationError("no evidence for group '" + criterion.group2 +
                              "'; cannot estimate its selection rate (no imputation)");
    }
    CriterionEstimate est;
    const double r1 = static_cast<double>(k1) / static_cast<double>(n1);
    const double r2 = static_cast<double>(k2) / static_cast<double>(n2);
    est.g_hat = std::abs(r1 - r2) - criterion.eta;
    est.std_error = stats::two_proportion_se(r1, n1, r2, n2);
    est.k1 = k1;
    est.n1 = n1;
    est.k2 = k2;
    est.n2 = n2;
    est.rate1 = r1;
    est.rate2 = r2;
    return est;
}

CriterionEstimate lipschitz_lower_bound(const Evidence& evidence,
                                        const IndividualFairnessCriterion& criterion) {
    if (!(criterion.lipschitz > 0.0)) throw ConfigError("Lipschitz constant L must be positive");
    if (evidence.n() < 2) {
        throw EstimationError("individual fairness needs at least 2 records, have " +
                              std::to_string(evidence.n()));
    }
    CriterionEstimate est;
    est.lower_bound = true;
    double best_q = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < evidence.records.size(); ++i) {
        for (std::size_t j = i + 1; j < evidence.records.size(); ++j) {
            const auto& a = evidence.records[i];
            const auto& b = evidence.records[j];
            const auto d = input_distance(a.input, b.input);
            if (!d) {
                ++est.degenerate_pairs;
                continue;
            }
            const double dd = output_distance(a.output, b.output);
            if (*d == 0.0) {
                ++est.degenerate_pairs;
                if (dd > 0.0 && !est.zero_distance_violation) {
                    // d = 0 with D > 0 violates the criterion outright.
                    est.zero_distance_violation = true;
                    est.witness = std::make_pair(a.input, b.input);
                }
                continue;
            }
            const double q = dd / *d;
            if (q > best_q) {
                best_q = q;
                if (!est.zero_distance_violation) {
                    est.witness = std::make_pair(a.input, b.input);
                }
            }
        }
    }
    if (!std::isfinite(best_q)) {
        if (est.zero_distance_violation) {
            est.g_hat = 0.0;  // witness carries the violation; no quotient defined
            return est;
        }
        throw EstimationError("all " + std::to_string(est.degenerate_pairs) +
                              " logged pairs are degenerate (d = 0 or incomparable); "
                              "cannot bound the Lipschitz quotient");
    }
    est.g_hat = best_q - criterion.lipschitz;
    return est;
}

// --- Impact metrics -----------------------------------------------------------

namespace {

std::string cell_key(const OutcomeRow& row, const std::vector<std::string>& axes) {
    std::string key;
    for (std::size_t i = 0; i < axes.size(); ++i) {
        auto it = row.categories.find(axes[i]);
        if (it == row.categories.end()) {
            throw EstimationError("row is missing category axis '" + axes[i] + "'");
        }
        if (i) key += "|";
        key += it->second;
    }
    return key;
}

ImpactTable build_table(std::span<const OutcomeRow> rows, const std::vector<std::string>& axes,
                        const std::string& table_name) {
    ImpactTable table;
    table.axis = table_name;

    // Pooled median over every scored row in the table.
    std::vector<double> all_scores;
    for (const auto& row : rows) {
        if (row.score) all_scores.push_back(*row.score);
    }
    if (!all_scores.empty()) table.pooled_median_score = stats::median(all_scores);

    std::map<std::string, std::vector<const OutcomeRow*>> cells;
    for (const auto& row : rows) cells[cell_key(row, axes)].push_back(&row);

    for (const auto& [key, members] : cells) {
        ImpactCell cell;
        cell.key = key;
        cell.total = static_cast<long>(members.size());
        long selected = 0, with_selected = 0;
        std::vector<double> scores;
        long above_median = 0, with_score = 0;
        for (const auto* row : members) {
            if (row->selected) {
                ++with_selected;
                selected += *row->selected ? 1 : 0;
            }
            if (row->score) {
                ++with_score;
                scores.push_back(*row->score);
                if (table.pooled_median_score && *row->score > *table.pooled_median_score) {
                    ++above_median;
                }
            }
        }
        if (with_selected > 0) {
            cell.selected_count = selected;
            cell.selection_rate = static_cast<double>(selected) / with_selected;
        }
        if (with_score > 0) {
            cell.median_score = stats::median(scores);
            cell.scoring_rate = static_cast<double>(above_median) / with_score;
        }
        table.cells.push_back(std::move(cell));
    }

    auto fill_ratios = [&](auto rate_member, auto ratio_member) {
        double max_rate = 0.0;
        bool any = false;
        for (const auto& cell : table.cells) {
            if (cell.*rate_member) {
                max_rate = std::max(max_rate, *(cell.*rate_member));
                any = true;
            }
        }
        if (!any || max_rate <= 0.0) return;
        for (auto& cell : table.cells) {
            if (cell.*rate_member) {
                cell.*ratio_member = *(cell.*rate_member) / max_rate;
            }
        }
    };
    // Impact ratio convention: each category's rate divided by the highest
    // category rate, so the best-treated category sits at 1.0.
    fill_ratios(&ImpactCell::selection_rate, &ImpactCell::selection_impact_ratio);
    fill_ratios(&ImpactCell::scoring_rate, &ImpactCell::scoring_impact_ratio);
    return table;
}

}  // namespace

std::vector<ImpactTable> impact_metrics(std::span<const OutcomeRow> rows,
                                        const ImpactMetricsCriterion& criterion) {
    if (rows.empty()) throw EstimationError("impact metrics: no rows");
    if (criterion.axes.empty()) throw ConfigError("impact metrics: no category axes declared");
    for (const auto& axis : criterion.axes) {
        for (const auto& row : rows) {
            if (row.categories.find(axis) == row.categories.end()) {
                throw EstimationError("category axis '" + axis + "' absent from a row");
            }
        }
    }
    std::vector<ImpactTable> tables;
    for (const auto& axis : criterion.axes) {
        tables.push_back(build_table(rows, {axis}, axis));
    }
    if (criterion.axes.size() > 1) {
        std::string name;
        for (std::size_t i = 0; i < criterion.axes.size(); ++i) {
            if (i) name += "|";
            name += criterion.axes[i];
        }
        tables.push_back(build_table(rows, criterion.axes, name));
    }
    return tables;
}

std::vector<OutcomeRow> rows_from_evidence(const Evidence& evidence, const std::string& axis) {
    std::vector<OutcomeRow> rows;
    rows.reserve(evidence.n());
    for (const auto& rec : evidence.records) {
        if (!rec.input.group) continue;
        OutcomeRow row;
        row.categories[axis] = *rec.input.group;
        if (rec.output.is_number()) {
            const double v = rec.output.number();
            if (v == 0.0 || v == 1.0) {
                row.selected = v == 1.0;
            } else {
                row.score = v;
            }
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

namespace {

std::string csv_opt(const std::optional<double>& v) {
    return v ? format_double(*v) : std::string();
}

}  // namespace

std::string impact_tables_to_csv(const std::vector<ImpactTable>& tables) {
    std::string out =
        "table,cell,total,selected,selection_rate,scoring_rate,median_score,"
        "selection_impact_ratio,scoring_impact_ratio\n";
    for (const auto& table : tables) {
        for (const auto& cell : table.cells) {
            out += table.axis + "," + cell.key + "," + std::to_string(cell.total) + ",";
            out += cell.selected_count ? std::to_string(*cell.selected_count) : std::string();
            out += "," + csv_opt(cell.selection_rate) + "," + csv_opt(cell.scoring_rate);
            out += "," + csv_opt(cell.median_score) + "," + csv_opt(cell.selection_impact_ratio);
            out += "," + csv_opt(cell.scoring_impact_ratio) + "\n";
        }
    }
    return out;
}

std::string impact_tables_to_json(const std::vector<ImpactTable>& tables) {
    Json out = Json::array();
    for (const auto& table : tables) {
        Json t;
        t["axis"] = table.axis;
        if (table.pooled_median_score) {
            t["pooled_median_score"] = *table.pooled_median_score;
        } else {
            t["pooled_median_score"] = nullptr;
        }
        Json cells = Json::array();
        for (const auto& cell : table.cells) {
            Json c;
            c["cell"] = cell.key;
            c["total"] = cell.total;
            auto put = [&c](const char* name, const auto& opt) {
                if (opt) {
                    c[name] = *opt;
                } else {
                    c[name] = nullptr;  // empty, never zero
                }
            };
            put("selected", cell.selected_count);
            put("selection_rate", cell.selection_rate);
            put("scoring_rate", cell.scoring_rate);
            put("median_score", cell.median_score);
            put("selection_impact_ratio", cell.selection_impact_ratio);
            put("scoring_impact_ratio", cell.scoring_impact_ratio);
            cells.push_back(std::move(c));
        }
        t["cells"] = std::move(cells);
        out.push_back(std::move(t));
    }
    return out.dump(2) + "\n";
}

}  // namespace audit
