#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "toprank/rng.hpp"

namespace toprank {

using Item = std::size_t;
using Slot = std::size_t;

// Items are indexed 0..L-1 and slots 0..L-1 internally. Slots 0..K-1 are
// displayed to the user.
struct ItemCatalog {
    std::vector<double> alphas;
    std::size_t K = 1;

    std::size_t size() const { return alphas.size(); }
    double alpha(Item i) const { return alphas[i]; }

    // Throws DomainError on alphas outside [0,1], K == 0 or K > L.
    void validate() const;
    bool strictly_decreasing() const;
};

// Bijection slot -> item with its inverse.
class Permutation {
public:
    Permutation() = default;
    explicit Permutation(std::vector<Item> order);
    static Permutation identity(std::size_t n);

    std::size_t size() const { return order_.size(); }
    Item at(Slot k) const { return order_[k]; }
    Slot slot_of(Item i) const { return inverse_[i]; }
    const std::vector<Item>& order() const { return order_; }

    Permutation swapped(Item i, Item j) const;

    bool operator==(const Permutation& other) const { return order_ == other.order_; }

private:
    std::vector<Item> order_;
    std::vector<Slot> inverse_;
};

struct ClickVector {
    std::vector<std::uint8_t> clicks;

    bool clicked(Item i) const { return clicks[i] != 0; }
    std::size_t total() const;
};

enum class ClickKind { Cascade, PositionBased, Factored };

std::string to_string(ClickKind kind);
ClickKind click_kind_from_string(const std::string& name);

// Joint click distribution of an ordered item pair under one permutation.
struct PairOutcome {
    double first_only = 0.0;   // P(C_i = 1, C_j = 0)
    double second_only = 0.0;  // P(C_i = 0, C_j = 1)
};

class ClickModel {
public:
    static ClickModel cascade(ItemCatalog catalog);
    // Requires chi of length K, entries in [0,1], nonincreasing.
    static ClickModel position_based(ItemCatalog catalog, std::vector<double> chi);
    // v = alpha * chi with arbitrary chi in [0,1]; Assumptions 2-4 may fail.
    static ClickModel factored(ItemCatalog catalog, std::vector<double> chi);

    ClickKind kind() const { return kind_; }
    const ItemCatalog& catalog() const { return catalog_; }
    std::size_t num_items() const { return catalog_.size(); }
    std::size_t display_length() const { return catalog_.K; }
    const std::vector<double>& chi() const { return chi_; }

    // v(a, k). Zero for k >= K.
    double click_prob(const Permutation& a, Slot k) const;
    // Sum over displayed slots of v(a, k).
    double expected_clicks(const Permutation& a) const;
    // Sum over displayed slots of v(a*, k), a* sorting alpha nonincreasing.
    double optimal_value() const;
    // Permutation sorting items by nonincreasing attractiveness (stable).
    Permutation optimal_permutation() const;

    ClickVector sample_clicks(const Permutation& a, Rng& rng) const;

    PairOutcome pair_outcome(const Permutation& a, Item i, Item j) const;

private:
    ClickModel(ClickKind kind, ItemCatalog catalog, std::vector<double> chi);

    ClickKind kind_;
    ItemCatalog catalog_;
    std::vector<double> chi_;
};

struct AssumptionCheck {
    std::string name;
    bool passed = true;
    std::string counterexample;
};

struct AssumptionReport {
    bool passed = true;
    bool exhaustive = true;
    std::size_t permutations_checked = 0;
    std::vector<AssumptionCheck> checks;  // Assumptions 1..4 in order

    // First failing check's counterexample, empty when passed.
    std::string first_counterexample() const;
};

inline constexpr std::size_t kDefaultEnumerationLimit = 7;

// Verifies Assumptions 1-4 over every permutation of the catalog. Throws
// EnumerationTooLarge when L exceeds max_items.
AssumptionReport check_assumptions(const ClickModel& model,
                                   std::size_t max_items = kDefaultEnumerationLimit);

// Randomized spot check of the same properties over `samples` uniform
// permutations, for catalogs too large to enumerate.
AssumptionReport spot_check_assumptions(const ClickModel& model, std::size_t samples, Rng& rng);

}  // namespace toprank
