#include "toprank/env.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "toprank/error.hpp"

namespace toprank {

void ItemCatalog::validate() const {
    if (alphas.empty()) throw DomainError("catalog has no items");
    if (K == 0 || K > alphas.size()) {
        throw DomainError("display length K must satisfy 1 <= K <= L (K=" + std::to_string(K) +
                          ", L=" + std::to_string(alphas.size()) + ")");
    }
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        if (!(alphas[i] >= 0.0 && alphas[i] <= 1.0)) {
            throw DomainError("attractiveness of item " + std::to_string(i + 1) +
                              " outside [0,1]");
        }
    }
}

bool ItemCatalog::strictly_decreasing() const {
    for (std::size_t i = 1; i < alphas.size(); ++i) {
        if (!(alphas[i - 1] > alphas[i])) return false;
    }
    return true;
}

Permutation::Permutation(std::vector<Item> order) : order_(std::move(order)), inverse_(order_.size()) {
    std::vector<bool> seen(order_.size(), false);
    for (Slot k = 0; k < order_.size(); ++k) {
        const Item i = order_[k];
        if (i >= order_.size() || seen[i]) throw DomainError("permutation is not a bijection");
        seen[i] = true;
        inverse_[i] = k;
    }
}

Permutation Permutation::identity(std::size_t n) {
    std::vector<Item> order(n);
    std::iota(order.begin(), order.end(), Item{0});
    return Permutation(std::move(order));
}

Permutation Permutation::swapped(Item i, Item j) const {
    std::vector<Item> order = order_;
    std::swap(order[inverse_[i]], order[inverse_[j]]);
    return Permutation(std::move(order));
}

std::size_t ClickVector::total() const {
    return static_cast<std::size_t>(std::count(clicks.begin(), clicks.end(), std::uint8_t{1}));
}

std::string to_string(ClickKind kind) {
    switch (kind) {
        case ClickKind::Cascade: return "cascade";
        case ClickKind::PositionBased: return "position_based";
        case ClickKind::Factored: return "factored";
    }
    return "unknown";
}

ClickKind click_kind_from_string(const std::string& name) {
    if (name == "cascade") return ClickKind::Cascade;
    if (name == "position_based" || name == "position-based" || name == "pbm") {
        return ClickKind::PositionBased;
    }
    if (name == "factored") return ClickKind::Factored;
    throw DomainError("unknown click model kind '" + name + "'");
}

ClickModel::ClickModel(ClickKind kind, ItemCatalog catalog, std::vector<double> chi)
    : kind_(kind), catalog_(std::move(catalog)), chi_(std::move(chi)) {
    catalog_.validate();
    if (kind_ == ClickKind::Cascade) return;
    if (chi_.size() != catalog_.K) {
        throw DomainError("examination weights chi must have length K=" + std::to_string(catalog_.K));
    }
    for (double x : chi_) {
        if (!(x >= 0.0 && x <= 1.0)) throw DomainError("examination weight outside [0,1]");
    }
    if (kind_ == ClickKind::PositionBased) {
        for (std::size_t k = 1; k < chi_.size(); ++k) {
            if (chi_[k] > chi_[k - 1]) {
                throw DomainError("position-based model requires nonincreasing chi");
            }
        }
    }
}

ClickModel ClickModel::cascade(ItemCatalog catalog) {
    return ClickModel(ClickKind::Cascade, std::move(catalog), {});
}

ClickModel ClickModel::position_based(ItemCatalog catalog, std::vector<double> chi) {
    return ClickModel(ClickKind::PositionBased, std::move(catalog), std::move(chi));
}

ClickModel ClickModel::factored(ItemCatalog catalog, std::vector<double> chi) {
    return ClickModel(ClickKind::Factored, std::move(catalog), std::move(chi));
}

double ClickModel::click_prob(const Permutation& a, Slot k) const {
    if (k >= catalog_.K) return 0.0;
    const double attraction = catalog_.alpha(a.at(k));
    if (kind_ != ClickKind::Cascade) return attraction * chi_[k];
    double examined = 1.0;
    for (Slot l = 0; l < k; ++l) examined *= 1.0 - catalog_.alpha(a.at(l));
    return attraction * examined;
}

double ClickModel::expected_clicks(const Permutation& a) const {
    double total = 0.0;
    if (kind_ == ClickKind::Cascade) {
        double examined = 1.0;
        for (Slot k = 0; k < catalog_.K; ++k) {
            const double attraction = catalog_.alpha(a.at(k));
            total += attraction * examined;
            examined *= 1.0 - attraction;
        }
        return total;
    }
    for (Slot k = 0; k < catalog_.K; ++k) total += catalog_.alpha(a.at(k)) * chi_[k];
    return total;
}

Permutation ClickModel::optimal_permutation() const {
    std::vector<Item> order(num_items());
    std::iota(order.begin(), order.end(), Item{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Item x, Item y) { return catalog_.alpha(x) > catalog_.alpha(y); });
    return Permutation(std::move(order));
}

double ClickModel::optimal_value() const { return expected_clicks(optimal_permutation()); }

ClickVector ClickModel::sample_clicks(const Permutation& a, Rng& rng) const {
    ClickVector out{std::vector<std::uint8_t>(num_items(), 0)};
    for (Slot k = 0; k < catalog_.K; ++k) {
        const Item i = a.at(k);
        if (kind_ == ClickKind::Cascade) {
            // Sequential examination; the user leaves after the first click.
            if (rng.bernoulli(catalog_.alpha(i))) {
                out.clicks[i] = 1;
                break;
            }
        } else if (rng.bernoulli(catalog_.alpha(i) * chi_[k])) {
            out.clicks[i] = 1;
        }
    }
    return out;
}

PairOutcome ClickModel::pair_outcome(const Permutation& a, Item i, Item j) const {
    const double vi = click_prob(a, a.slot_of(i));
    const double vj = click_prob(a, a.slot_of(j));
    if (kind_ == ClickKind::Cascade) {
        // At most one click per round, so the events are disjoint.
        return {vi, vj};
    }
    return {vi * (1.0 - vj), (1.0 - vi) * vj};
}

std::string AssumptionReport::first_counterexample() const {
    for (const auto& c : checks) {
        if (!c.passed) return c.name + ": " + c.counterexample;
    }
    return {};
}

namespace {

constexpr double kSlack = 1e-12;

std::string describe(const Permutation& a) {
    std::ostringstream out;
    out << '(';
    for (Slot k = 0; k < a.size(); ++k) out << (k ? "," : "") << a.at(k) + 1;
    out << ')';
    return out.str();
}

class AssumptionChecker {
public:
    explicit AssumptionChecker(const ClickModel& model)
        : model_(model), optimal_(model.optimal_permutation()), best_(model.optimal_value()) {
        report_.checks = {{"Assumption 1", true, {}},
                          {"Assumption 2", true, {}},
                          {"Assumption 3", true, {}},
                          {"Assumption 4", true, {}}};
    }

    void visit(const Permutation& a) {
        ++report_.permutations_checked;
        const std::size_t L = model_.num_items();
        const std::size_t K = model_.display_length();
        const auto& alpha = model_.catalog().alphas;

        for (Slot k = K; k < L; ++k) {
            if (model_.click_prob(a, k) != 0.0) {
                fail(0, "a=" + describe(a) + " slot " + std::to_string(k + 1) + " has v > 0");
                break;
            }
        }

        const double value = model_.expected_clicks(a);
        if (value > best_ + kSlack) {
            std::ostringstream msg;
            msg << "a=" << describe(a) << " has total click value " << value
                << " > optimal " << best_;
            fail(1, msg.str());
        }

        // Multiplied through by alpha(j) so alpha(j) = 0 needs no special case.
        for (Item i = 0; i < L; ++i) {
            for (Item j = 0; j < L; ++j) {
                if (i == j || alpha[i] < alpha[j]) continue;
                const Permutation swapped = a.swapped(i, j);
                const Slot pos = a.slot_of(i);
                const double lhs = alpha[j] * model_.click_prob(a, pos);
                const double rhs = alpha[i] * model_.click_prob(swapped, pos);
                if (lhs + kSlack < rhs) {
                    std::ostringstream msg;
                    msg << "a=" << describe(a) << " i=" << i + 1 << " j=" << j + 1
                        << ": alpha(j) v(a, a^-1(i)) = " << lhs
                        << " < alpha(i) v(a', a^-1(i)) = " << rhs;
                    fail(2, msg.str());
                }
            }
        }

        for (Slot k = 0; k < L; ++k) {
            if (alpha[a.at(k)] != alpha[optimal_.at(k)]) continue;
            const double va = model_.click_prob(a, k);
            const double vs = model_.click_prob(optimal_, k);
            if (va + kSlack < vs) {
                std::ostringstream msg;
                msg << "a=" << describe(a) << " slot " << k + 1 << ": v(a,k)=" << va
                    << " < v(a*,k)=" << vs;
                fail(3, msg.str());
            }
        }
    }

    AssumptionReport finish(bool exhaustive) {
        report_.exhaustive = exhaustive;
        report_.passed = std::all_of(report_.checks.begin(), report_.checks.end(),
                                     [](const AssumptionCheck& c) { return c.passed; });
        return report_;
    }

private:
    void fail(std::size_t index, std::string what) {
        auto& check = report_.checks[index];
        if (!check.passed) return;
        check.passed = false;
        check.counterexample = std::move(what);
    }

    const ClickModel& model_;
    Permutation optimal_;
    double best_;
    AssumptionReport report_;
};

}  // namespace

AssumptionReport check_assumptions(const ClickModel& model, std::size_t max_items) {
    const std::size_t L = model.num_items();
    if (L > max_items) {
        throw EnumerationTooLarge("exhaustive assumption check limited to L <= " +
                                  std::to_string(max_items) + " (L=" + std::to_string(L) + ")");
    }
    AssumptionChecker checker(model);
    std::vector<Item> order(L);
    std::iota(order.begin(), order.end(), Item{0});
    do {
        checker.visit(Permutation(order));
    } while (std::next_permutation(order.begin(), order.end()));
    return checker.finish(true);
}

AssumptionReport spot_check_assumptions(const ClickModel& model, std::size_t samples, Rng& rng) {
    const std::size_t L = model.num_items();
    AssumptionChecker checker(model);
    std::vector<Item> order(L);
    for (std::size_t s = 0; s < samples; ++s) {
        std::iota(order.begin(), order.end(), Item{0});
        for (std::size_t k = L; k > 1; --k) std::swap(order[k - 1], order[rng.below(k)]);
        checker.visit(Permutation(order));
    }
    return checker.finish(false);
}

}  // namespace toprank
