#include "toprank/theory.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "toprank/boundary.hpp"
#include "toprank/error.hpp"

namespace toprank {

namespace {

// Iterated logs need n > e^e so that log log log n >= 0.
const double kIteratedLogFloor = std::exp(std::numbers::e);

void check_common(std::int64_t n, double delta, const BoundVariant& variant) {
    variant.validate();
    if (n < 1) throw DomainError("horizon n must be at least 1");
    if (!(delta > 0.0 && delta < 1.0)) throw DomainError("delta must lie in (0,1)");
    if (variant.tag != BoundTag::Original && !(static_cast<double>(n) > kIteratedLogFloor)) {
        throw DomainError("refined bounds require n > e^e (about 15.15); got n=" + std::to_string(n));
    }
}

// The logarithmic confidence term that multiplies the per-pair and gap-free
// bounds: log(c sqrt(n)/delta) or its iterated-log replacement.
double confidence_log(std::int64_t n, double delta, const BoundVariant& variant) {
    const double x = static_cast<double>(n);
    switch (variant.tag) {
        case BoundTag::Original: return std::log(click_constant() * std::sqrt(x) / delta);
        case BoundTag::RefinedC1: {
            const double ll = std::log(std::log(x));
            return ll + 2.5 * std::log(ll) + *variant.constant;
        }
        case BoundTag::RefinedC2: return std::log(std::log(x));
    }
    return 0.0;
}

// Coefficient in front of (alpha(i)+alpha(j)) log-term / Delta_ij.
double pair_coefficient(const BoundVariant& variant) {
    if (variant.tag == BoundTag::RefinedC2) return 1.0 + 2.0 * std::sqrt(2.0 + *variant.constant);
    return 6.0;
}

double pair_term(double ai, double aj, double log_term, const BoundVariant& variant) {
    const double gap = ai - aj;
    if (!(gap > 0.0)) throw DomainError("pair bound requires alpha(i) > alpha(j)");
    return 1.0 + pair_coefficient(variant) * (ai + aj) * log_term / gap;
}

}  // namespace

std::string to_string(BoundTag tag) {
    switch (tag) {
        case BoundTag::Original: return "original";
        case BoundTag::RefinedC1: return "refined_c1";
        case BoundTag::RefinedC2: return "refined_c2";
    }
    return "unknown";
}

void BoundVariant::validate() const {
    const bool needs_constant = tag != BoundTag::Original;
    if (needs_constant != constant.has_value()) {
        throw DomainError("bound variant " + to_string(tag) +
                          (needs_constant ? " requires a constant" : " takes no constant"));
    }
    if (constant && !std::isfinite(*constant)) throw DomainError("bound constant must be finite");
    if (tag == BoundTag::RefinedC2 && !(2.0 + *constant > 0.0)) throw DomainError("refined_c2 requires 2 + C2 > 0");
}

double delta_one_over_n(std::int64_t n) {
    if (n < 2) throw DomainError("delta = 1/n needs n >= 2 so that delta < 1");
    return 1.0 / static_cast<double>(n);
}

double regret_bound_gapped(const ItemCatalog& catalog, std::int64_t n, double delta, const BoundVariant& variant) {
    check_common(n, delta, variant);
    catalog.validate();
    if (!catalog.strictly_decreasing()) {
        throw DomainError("gap-dependent bound requires strictly decreasing attractiveness");
    }
    const double L = static_cast<double>(catalog.size());
    const double K = static_cast<double>(catalog.K);
    const double log_term = confidence_log(n, delta, variant);
    double total = delta * static_cast<double>(n) * K * L * L;
    for (std::size_t j = 0; j < catalog.size(); ++j) {
        const std::size_t upper = std::min(catalog.K, j);  // i < j and i < K, zero-based
        for (std::size_t i = 0; i < upper; ++i) {
            total += pair_term(catalog.alpha(i), catalog.alpha(j), log_term, variant);
        }
    }
    return total;
}

double regret_bound_gapfree(std::size_t K, std::size_t L, std::int64_t n, double delta, const BoundVariant& variant) {
    check_common(n, delta, variant);
    if (K == 0 || K > L) throw DomainError("gap-free bound requires 1 <= K <= L");
    const double k = static_cast<double>(K);
    const double l = static_cast<double>(L);
    const double x = static_cast<double>(n);
    const double log_term = confidence_log(n, delta, variant);
    const double scale = variant.tag == BoundTag::RefinedC2 ? 2.0 * (2.0 + *variant.constant) : 4.0;
    return delta * x * k * l * l + k * l + std::sqrt(scale * k * k * k * l * x * log_term);
}

double lemma5_bound(Item i, Item j, const ItemCatalog& catalog, std::int64_t n, double delta,
                    const BoundVariant& variant) {
    check_common(n, delta, variant);
    if (i >= catalog.size() || j >= catalog.size()) throw DomainError("item index out of range");
    return pair_term(catalog.alpha(i), catalog.alpha(j), confidence_log(n, delta, variant), variant);
}

std::optional<std::int64_t> refinement_crossover(std::span<const std::int64_t> n_grid,
                                                 const std::function<double(std::int64_t)>& refined,
                                                 const std::function<double(std::int64_t)>& original) {
    std::vector<std::int64_t> sorted(n_grid.begin(), n_grid.end());
    std::sort(sorted.begin(), sorted.end());
    std::optional<std::int64_t> start;
    for (auto it = sorted.rbegin(); it != sorted.rend(); ++it) {
        if (!(refined(*it) < original(*it))) break;
        start = *it;
    }
    return start;
}

}  // namespace toprank
