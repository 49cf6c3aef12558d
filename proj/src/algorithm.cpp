#include "toprank/algorithm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "toprank/error.hpp"

namespace toprank {

RelationGraph::RelationGraph(std::size_t items) : items_(items), adjacency_(items * items, 0) {}

bool RelationGraph::reaches(Item from, Item to) const {
    if (from == to) return true;
    std::vector<std::uint8_t> seen(items_, 0);
    std::vector<Item> stack{from};
    seen[from] = 1;
    while (!stack.empty()) {
        const Item x = stack.back();
        stack.pop_back();
        for (Item y = 0; y < items_; ++y) {
            if (!has_edge(x, y) || seen[y]) continue;
            if (y == to) return true;
            seen[y] = 1;
            stack.push_back(y);
        }
    }
    return false;
}

void RelationGraph::add_edge(Item from, Item to) {
    if (from >= items_ || to >= items_) throw DomainError("edge endpoint out of range");
    if (from == to) throw DomainError("self-loop rejected");
    if (connected(from, to)) throw DomainError("pair already connected");
    if (reaches(to, from)) {
        std::ostringstream msg;
        msg << "edge (" << from + 1 << "," << to + 1 << ") closes a cycle: item " << to + 1
            << " already reaches item " << from + 1;
        throw CycleDetected(msg.str());
    }
    adjacency_[from * items_ + to] = 1;
    ++edges_;
}

std::vector<std::pair<Item, Item>> RelationGraph::edges() const {
    std::vector<std::pair<Item, Item>> out;
    out.reserve(edges_);
    for (Item a = 0; a < items_; ++a) {
        for (Item b = 0; b < items_; ++b) {
            if (has_edge(a, b)) out.emplace_back(a, b);
        }
    }
    return out;
}

std::size_t BlockPartition::offset(std::size_t d) const {
    std::size_t total = 0;
    for (std::size_t c = 0; c < d; ++c) total += blocks[c].size();
    return total;
}

std::vector<std::size_t> BlockPartition::block_index(std::size_t items) const {
    std::vector<std::size_t> out(items, 0);
    for (std::size_t d = 0; d < blocks.size(); ++d) {
        for (Item i : blocks[d]) out[i] = d;
    }
    return out;
}

BlockPartition partition_blocks(const RelationGraph& graph) {
    const std::size_t L = graph.size();
    std::vector<std::uint8_t> remaining(L, 1);
    std::size_t left = L;
    BlockPartition out;
    while (left > 0) {
        std::vector<Item> block;
        for (Item i = 0; i < L; ++i) {
            if (!remaining[i]) continue;
            bool minimal = true;
            for (Item k = 0; k < L && minimal; ++k) {
                if (remaining[k] && graph.has_edge(i, k)) minimal = false;
            }
            if (minimal) block.push_back(i);
        }
        if (block.empty()) {
            throw CycleDetected("relation graph has a cycle among the " + std::to_string(left) +
                                " unpartitioned items");
        }
        for (Item i : block) remaining[i] = 0;
        left -= block.size();
        out.blocks.push_back(std::move(block));
    }
    return out;
}

Permutation propose_permutation(const BlockPartition& blocks, Rng& rng) {
    std::vector<Item> order;
    for (const auto& block : blocks.blocks) {
        const std::size_t start = order.size();
        order.insert(order.end(), block.begin(), block.end());
        for (std::size_t k = block.size(); k > 1; --k) {
            std::swap(order[start + k - 1], order[start + rng.below(k)]);
        }
    }
    return Permutation(std::move(order));
}

PairStats::PairStats(std::size_t items)
    : items_(items), sums_(items * items, 0), counts_(items * items, 0) {}

void PairStats::update(const ClickVector& clicks, const BlockPartition& blocks) {
    for (const auto& block : blocks.blocks) {
        for (std::size_t x = 0; x < block.size(); ++x) {
            for (std::size_t y = x + 1; y < block.size(); ++y) {
                const Item i = block[x];
                const Item j = block[y];
                const int u = static_cast<int>(clicks.clicks[i]) - static_cast<int>(clicks.clicks[j]);
                if (u == 0) continue;
                sums_[i * items_ + j] += u;
                sums_[j * items_ + i] -= u;
                counts_[i * items_ + j] += 1;
                counts_[j * items_ + i] += 1;
            }
        }
    }
    ++rounds_;
}

bool PairStats::consistent() const {
    for (Item i = 0; i < items_; ++i) {
        if (S(i, i) != 0 || N(i, i) != 0) return false;
        for (Item j = 0; j < items_; ++j) {
            if (S(i, j) != -S(j, i) || N(i, j) != N(j, i)) return false;
            if (std::abs(S(i, j)) > N(i, j)) return false;
        }
    }
    return true;
}

std::size_t update_graph(const PairStats& stats, const ConfidenceBoundary& boundary, RelationGraph& graph) {
    const std::size_t L = stats.size();
    std::vector<std::pair<Item, Item>> accepted;
    for (Item i = 0; i < L; ++i) {
        for (Item j = 0; j < L; ++j) {
            if (i == j) continue;
            const std::int64_t n = stats.N(i, j);
            if (n <= 0 || graph.connected(i, j)) continue;
            if (static_cast<double>(stats.S(i, j)) >= boundary(n)) accepted.emplace_back(j, i);
        }
    }
    for (const auto& [from, to] : accepted) {
        try {
            graph.add_edge(from, to);
        } catch (const CycleDetected& e) {
            std::ostringstream msg;
            msg << e.what() << " (round " << stats.rounds() << ", S=" << stats.S(to, from)
                << ", N=" << stats.N(to, from) << ")";
            throw CycleDetected(msg.str());
        }
    }
    return accepted.size();
}

namespace {

// Ordered-pair probabilities accumulated over block orderings.
struct PairMass {
    std::vector<double> first_only;
    std::vector<double> second_only;
};

void factored_block_means(const ClickModel& model, const std::vector<Item>& block, std::size_t offset,
                          std::vector<double>& means) {
    const std::size_t L = model.num_items();
    const std::size_t K = model.display_length();
    const std::size_t b = block.size();
    const auto& chi = model.chi();
    const auto v = [&](Item i, std::size_t slot) {
        return slot < K ? model.catalog().alpha(i) * chi[slot] : 0.0;
    };
    for (std::size_t x = 0; x < b; ++x) {
        for (std::size_t y = 0; y < b; ++y) {
            if (x == y) continue;
            const Item i = block[x];
            const Item j = block[y];
            // (slot of i, slot of j) is uniform over distinct slot pairs.
            double plus = 0.0;
            double minus = 0.0;
            for (std::size_t k = 0; k < b; ++k) {
                for (std::size_t l = 0; l < b; ++l) {
                    if (k == l) continue;
                    const double vi = v(i, offset + k);
                    const double vj = v(j, offset + l);
                    plus += vi * (1.0 - vj);
                    minus += (1.0 - vi) * vj;
                }
            }
            means[i * L + j] = plus + minus > 0.0 ? (plus - minus) / (plus + minus) : 0.0;
        }
    }
}

void enumerated_block_means(const ClickModel& model, const BlockPartition& blocks, std::size_t d,
                            std::size_t max_block, std::vector<double>& means) {
    const std::size_t L = model.num_items();
    const auto& block = blocks.blocks[d];
    const std::size_t b = block.size();
    const std::size_t offset = blocks.offset(d);
    if (offset >= model.display_length()) return;  // never displayed, never clicked
    if (b > max_block) {
        throw EnumerationTooLarge("exact conditional means need " + std::to_string(b) +
                                  "! orderings; limit is blocks of " + std::to_string(max_block));
    }
    std::vector<Item> order;
    for (const auto& blk : blocks.blocks) order.insert(order.end(), blk.begin(), blk.end());
    std::vector<Item> inner = block;
    std::sort(inner.begin(), inner.end());
    PairMass mass{std::vector<double>(b * b, 0.0), std::vector<double>(b * b, 0.0)};
    do {
        std::copy(inner.begin(), inner.end(), order.begin() + static_cast<std::ptrdiff_t>(offset));
        const Permutation a(order);
        for (std::size_t x = 0; x < b; ++x) {
            for (std::size_t y = 0; y < b; ++y) {
                if (x == y) continue;
                const PairOutcome o = model.pair_outcome(a, block[x], block[y]);
                mass.first_only[x * b + y] += o.first_only;
                mass.second_only[x * b + y] += o.second_only;
            }
        }
    } while (std::next_permutation(inner.begin(), inner.end()));
    for (std::size_t x = 0; x < b; ++x) {
        for (std::size_t y = 0; y < b; ++y) {
            if (x == y) continue;
            const double plus = mass.first_only[x * b + y];
            const double minus = mass.second_only[x * b + y];
            means[block[x] * L + block[y]] = plus + minus > 0.0 ? (plus - minus) / (plus + minus) : 0.0;
        }
    }
}

}  // namespace

std::vector<double> exact_pair_means(const ClickModel& model, const BlockPartition& blocks, std::size_t max_block) {
    const std::size_t L = model.num_items();
    std::vector<double> means(L * L, 0.0);
    for (std::size_t d = 0; d < blocks.count(); ++d) {
        if (blocks.blocks[d].size() < 2) continue;
        if (model.kind() == ClickKind::Cascade) {
            enumerated_block_means(model, blocks, d, max_block, means);
        } else {
            factored_block_means(model, blocks.blocks[d], blocks.offset(d), means);
        }
    }
    return means;
}

std::optional<BoundVariant> matching_bound_variant(const BoundarySpec& spec) {
    switch (spec.variant) {
        case BoundaryVariant::Baseline: return BoundVariant::original();
        case BoundaryVariant::AsymptoticC1: return BoundVariant::refined_c1(spec.c1);
        case BoundaryVariant::SimpleLIL: return BoundVariant::refined_c2(spec.c2);
        case BoundaryVariant::MixtureExact: return std::nullopt;
    }
    return std::nullopt;
}

RegretTrace run_episode(const ClickModel& model, const ConfidenceBoundary& boundary, std::int64_t n, Rng& rng,
                        const EpisodeOptions& options) {
    if (n < 1) throw DomainError("episode horizon must be at least 1");
    const std::size_t L = model.num_items();
    const auto& alpha = model.catalog().alphas;

    RegretTrace trace;
    trace.horizon = n;
    trace.optimal_value = model.optimal_value();
    trace.failure_tracked = options.track_failure;
    if (options.record_rounds) {
        const auto rows = static_cast<std::size_t>(n);
        trace.expected_increment.reserve(rows);
        trace.realized_increment.reserve(rows);
        trace.cumulative.reserve(rows);
        trace.edges_added.reserve(rows);
        trace.wrong_edge.reserve(rows);
    }

    const Permutation best = model.optimal_permutation();
    RelationGraph graph(L);
    PairStats stats(L);
    BlockPartition blocks = partition_blocks(graph);
    bool stale = false;

    std::vector<double> means;
    std::vector<double> centered;
    if (options.track_failure) {
        means = exact_pair_means(model, blocks, options.max_enumeration_block);
        centered.assign(L * L, 0.0);
    }

    for (std::int64_t t = 1; t <= n; ++t) {
        if (stale) {
            blocks = partition_blocks(graph);
            if (options.track_failure) means = exact_pair_means(model, blocks, options.max_enumeration_block);
            stale = false;
        }

        // The most attractive item of block d ranks no lower than its first slot.
        std::size_t offset = 0;
        for (const auto& block : blocks.blocks) {
            std::size_t top = L;
            for (Item i : block) top = std::min(top, best.slot_of(i));
            if (top > offset) ++trace.lemma4_violations;
            ++trace.lemma4_checks;
            offset += block.size();
        }

        const Permutation a = propose_permutation(blocks, rng);
        const ClickVector clicks = model.sample_clicks(a, rng);
        const double expected = trace.optimal_value - model.expected_clicks(a);
        const double realized = trace.optimal_value - static_cast<double>(clicks.total());
        trace.cumulative_regret += expected;
        trace.cumulative_realized += realized;

        stats.update(clicks, blocks);

        if (options.track_failure) {
            for (const auto& block : blocks.blocks) {
                for (std::size_t x = 0; x < block.size(); ++x) {
                    for (std::size_t y = x + 1; y < block.size(); ++y) {
                        const Item i = block[x];
                        const Item j = block[y];
                        const int u = static_cast<int>(clicks.clicks[i]) - static_cast<int>(clicks.clicks[j]);
                        if (u == 0) continue;
                        double& d = centered[i * L + j];
                        d += u - means[i * L + j];
                        centered[j * L + i] = -d;
                        if (!trace.failure_round && std::abs(d) >= boundary(stats.N(i, j))) {
                            trace.failure_round = t;
                        }
                    }
                }
            }
        }

        const std::size_t added = update_graph(stats, boundary, graph);
        if (added > 0) {
            stale = true;
            trace.total_edges_added += static_cast<std::int64_t>(added);
            std::int64_t wrong = 0;
            for (const auto& [from, to] : graph.edges()) {
                if (alpha[from] > alpha[to]) ++wrong;
            }
            trace.wrong_edges = wrong;
            if (wrong > 0 && !trace.first_wrong_edge_round) trace.first_wrong_edge_round = t;
        }

        if (options.record_rounds) {
            trace.expected_increment.push_back(expected);
            trace.realized_increment.push_back(realized);
            trace.cumulative.push_back(trace.cumulative_regret);
            trace.edges_added.push_back(static_cast<std::uint32_t>(added));
            trace.wrong_edge.push_back(trace.wrong_edges > 0 ? 1 : 0);
        }
    }

    const std::optional<BoundVariant> variant =
        options.lemma5_variant ? options.lemma5_variant : matching_bound_variant(boundary.spec());
    if (variant && !boundary.is_constant()) {
        try {
            for (Item i = 0; i < L; ++i) {
                for (Item j = 0; j < L; ++j) {
                    if (!(alpha[i] > alpha[j])) continue;
                    PairRecord rec;
                    rec.better = i;
                    rec.worse = j;
                    rec.S = stats.S(i, j);
                    rec.N = stats.N(i, j);
                    rec.bound = lemma5_bound(i, j, model.catalog(), n, boundary.delta(), *variant);
                    rec.violated = static_cast<double>(rec.S) > rec.bound;
                    if (rec.violated) ++trace.lemma5_violations;
                    trace.pairs.push_back(rec);
                }
            }
            trace.lemma5_checked = true;
        } catch (const DomainError&) {
            // Refined bounds are undefined for n <= e^e.
            trace.pairs.clear();
            trace.lemma5_violations = 0;
        }
    }

    trace.final_edges = graph.edges();
    trace.final_S.resize(L * L);
    trace.final_N.resize(L * L);
    for (Item i = 0; i < L; ++i) {
        for (Item j = 0; j < L; ++j) {
            trace.final_S[i * L + j] = stats.S(i, j);
            trace.final_N[i * L + j] = stats.N(i, j);
        }
    }
    return trace;
}

}  // namespace toprank
