#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "toprank/boundary.hpp"
#include "toprank/env.hpp"
#include "toprank/rng.hpp"
#include "toprank/theory.hpp"

namespace toprank {

// Directed acyclic graph of accepted comparisons. Edge (from, to) records the
// conclusion that item `to` is more attractive than item `from`.
class RelationGraph {
public:
    explicit RelationGraph(std::size_t items = 0);

    std::size_t size() const { return items_; }
    std::size_t edge_count() const { return edges_; }

    bool has_edge(Item from, Item to) const { return adjacency_[from * items_ + to] != 0; }
    // True when an edge joins the pair in either orientation.
    bool connected(Item a, Item b) const { return has_edge(a, b) || has_edge(b, a); }
    bool reaches(Item from, Item to) const;

    // Throws CycleDetected (graph unchanged) if the edge closes a cycle, and
    // DomainError on self-loops or a pair that is already connected.
    void add_edge(Item from, Item to);

    std::vector<std::pair<Item, Item>> edges() const;

private:
    std::size_t items_;
    std::size_t edges_ = 0;
    std::vector<std::uint8_t> adjacency_;
};

// Ordered blocks of mutually incomparable items. Block d occupies the slot
// range [offset(d), offset(d) + blocks[d].size()).
struct BlockPartition {
    std::vector<std::vector<Item>> blocks;

    std::size_t count() const { return blocks.size(); }
    std::size_t offset(std::size_t d) const;
    // Block index of every item.
    std::vector<std::size_t> block_index(std::size_t items) const;

    bool operator==(const BlockPartition&) const = default;
};

// Iterated minimal elements: P_1 holds items with no outgoing edge, P_{d+1}
// the items with no outgoing edge once P_1..P_d are removed. Items within a
// block are listed in increasing index order.
BlockPartition partition_blocks(const RelationGraph& graph);

// Blocks in order, each shuffled uniformly.
Permutation propose_permutation(const BlockPartition& blocks, Rng& rng);

// Pairwise click-difference evidence. S is antisymmetric, N symmetric.
class PairStats {
public:
    explicit PairStats(std::size_t items = 0);

    std::size_t size() const { return items_; }
    std::int64_t S(Item i, Item j) const { return sums_[i * items_ + j]; }
    std::int64_t N(Item i, Item j) const { return counts_[i * items_ + j]; }
    std::int64_t rounds() const { return rounds_; }

    // Adds U_ij = C_i - C_j for every pair sharing a block; other pairs are
    // left alone. Advances the round counter.
    void update(const ClickVector& clicks, const BlockPartition& blocks);

    // Checks antisymmetry of S, symmetry of N, zero diagonals and |S| <= N.
    bool consistent() const;

private:
    std::size_t items_;
    std::int64_t rounds_ = 0;
    std::vector<std::int64_t> sums_;
    std::vector<std::int64_t> counts_;
};

// Adds edge (j, i) for every unconnected pair with N_ij > 0 and
// S_ij >= boundary(N_ij). Returns the number of edges added. Throws
// CycleDetected if the accepted edges contradict the graph.
std::size_t update_graph(const PairStats& stats, const ConfidenceBoundary& boundary, RelationGraph& graph);

// Exact E[U_ij | U_ij != 0] for every pair sharing a block, marginalizing the
// uniform within-block order and the click model. Zero for pairs in
// different blocks or that can never produce a click difference. Cascade
// blocks are enumerated and must have at most `max_block` items.
std::vector<double> exact_pair_means(const ClickModel& model, const BlockPartition& blocks,
                                     std::size_t max_block = 8);

struct EpisodeOptions {
    // Tracks the centered statistic S - sum E[U|U!=0]|U| per pair against the
    // boundary (the failure event). Requires exact_pair_means every time the
    // partition changes.
    bool track_failure = false;
    std::size_t max_enumeration_block = 8;
    // Per-pair bound checked against the final S_nij. Left empty, it is
    // derived from the boundary variant (none for MixtureExact).
    std::optional<BoundVariant> lemma5_variant;
    bool record_rounds = true;
};

struct PairRecord {
    Item better = 0;  // alpha(better) > alpha(worse)
    Item worse = 0;
    std::int64_t S = 0;
    std::int64_t N = 0;
    double bound = 0.0;
    bool violated = false;
};

struct RegretTrace {
    std::int64_t horizon = 0;
    double optimal_value = 0.0;

    // Per-round series (empty when record_rounds is off).
    std::vector<double> expected_increment;
    std::vector<double> realized_increment;
    std::vector<double> cumulative;
    std::vector<std::uint32_t> edges_added;
    std::vector<std::uint8_t> wrong_edge;

    double cumulative_regret = 0.0;
    double cumulative_realized = 0.0;

    std::optional<std::int64_t> first_wrong_edge_round;
    std::int64_t wrong_edges = 0;  // in the final graph
    std::int64_t lemma4_violations = 0;
    std::int64_t lemma4_checks = 0;

    bool failure_tracked = false;
    std::optional<std::int64_t> failure_round;

    bool lemma5_checked = false;
    std::int64_t lemma5_violations = 0;
    std::vector<PairRecord> pairs;

    std::vector<std::pair<Item, Item>> final_edges;
    std::vector<std::int64_t> final_S;  // row-major L x L
    std::vector<std::int64_t> final_N;
    std::int64_t total_edges_added = 0;

    bool clean() const { return !first_wrong_edge_round && !failure_round; }
};

// The BoundVariant whose Lemma 5 bound matches a boundary, if any.
std::optional<BoundVariant> matching_bound_variant(const BoundarySpec& spec);

// Runs n rounds of partition -> propose -> click -> update statistics ->
// update graph, with regret accounting from exact click probabilities.
RegretTrace run_episode(const ClickModel& model, const ConfidenceBoundary& boundary, std::int64_t n, Rng& rng,
                        const EpisodeOptions& options = {});

}  // namespace toprank
