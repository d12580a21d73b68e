#pragma once

#include <string>
#include <vector>

namespace audit {

enum class MultiplicityMethod { Bonferroni, BenjaminiHochberg };

std::string multiplicity_method_name(MultiplicityMethod m);

struct MultiplicityResult {
    std::vector<double> adjusted_p;  // same order as the input
    std::vector<bool> reject;
};

// Bonferroni: adjusted p = min(1, m * p); controls the family-wise error rate.
// Benjamini-Hochberg: step-up rule rejecting the largest i with
// p_(i) <= i * level / m and everything smaller; controls the FDR.
MultiplicityResult adjust_multiplicity(const std::vector<double>& p_values,
                                       MultiplicityMethod method, double level);

}  // namespace audit
