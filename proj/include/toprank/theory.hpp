#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>

#include "toprank/env.hpp"

namespace toprank {

enum class BoundTag { Original, RefinedC1, RefinedC2 };

std::string to_string(BoundTag tag);

// Which family of regret / per-pair bounds to evaluate. RefinedC1 carries
// C1(delta), RefinedC2 carries C2(delta); Original carries nothing.
struct BoundVariant {
    BoundTag tag = BoundTag::Original;
    std::optional<double> constant;

    static BoundVariant original() { return {BoundTag::Original, std::nullopt}; }
    static BoundVariant refined_c1(double c1) { return {BoundTag::RefinedC1, c1}; }
    static BoundVariant refined_c2(double c2) { return {BoundTag::RefinedC2, c2}; }

    void validate() const;
};

// The delta = 1/n preset.
double delta_one_over_n(std::int64_t n);

// Gap-dependent regret bound: delta n K L^2 plus one term per pair
// (i, j) with i < j <= L and i <= K. Requires strictly decreasing alphas.
double regret_bound_gapped(const ItemCatalog& catalog, std::int64_t n, double delta, const BoundVariant& variant);

// Gap-free regret bound.
double regret_bound_gapfree(std::size_t K, std::size_t L, std::int64_t n, double delta, const BoundVariant& variant);

// Upper bound on S_nij for i < j (alpha(i) > alpha(j)) outside the failure event.
double lemma5_bound(Item i, Item j, const ItemCatalog& catalog, std::int64_t n, double delta,
                    const BoundVariant& variant);

// Smallest grid horizon n* such that refined(n) < original(n) for every grid n >= n*.
std::optional<std::int64_t> refinement_crossover(std::span<const std::int64_t> n_grid,
                                                 const std::function<double(std::int64_t)>& refined,
                                                 const std::function<double(std::int64_t)>& original);

}  // namespace toprank
