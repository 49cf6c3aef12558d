#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "toprank/algorithm.hpp"
#include "toprank/boundary.hpp"
#include "toprank/env.hpp"
#include "toprank/rng.hpp"

namespace toprank {

// How the conditional mean mu_t of a synthetic process is chosen.
enum class MeanPolicy {
    Scheduled,    // mu_t from the schedule
    Adversarial,  // mu_t = |schedule_t| * sign(S_{t-1}), sign(0) = +1
};

// X_t in {-1, 0, 1}: zero with probability 1 - p_t, otherwise +1 with
// probability (1 + mu_t)/2. Schedules hold one entry (constant) or one per step.
struct SyntheticProcess {
    std::string name;
    std::int64_t horizon = 0;
    std::vector<double> p{1.0};
    std::vector<double> mu{0.0};
    MeanPolicy policy = MeanPolicy::Scheduled;

    static SyntheticProcess constant(std::string name, std::int64_t horizon, double p, double mu,
                                     MeanPolicy policy = MeanPolicy::Scheduled);

    double p_at(std::int64_t t) const { return p.size() == 1 ? p[0] : p[static_cast<std::size_t>(t - 1)]; }
    double mu_at(std::int64_t t) const { return mu.size() == 1 ? mu[0] : mu[static_cast<std::size_t>(t - 1)]; }

    void validate() const;
};

// The fixed suite used for boundary-crossing validation at horizon T.
std::vector<SyntheticProcess> standard_process_suite(std::int64_t horizon);

struct CrossingReport {
    std::string label;
    std::int64_t trials = 0;
    std::int64_t crossings = 0;
    double frequency = 0.0;
    double delta = 0.0;
    double bound = 0.0;        // delta for crossings, delta L^2 for failure events
    double bound_sigma = 0.0;  // binomial standard error at the bound
    double ci_low = 0.0;       // exact (Clopper-Pearson) 95% interval
    double ci_high = 0.0;
    std::int64_t horizon = 0;
    bool vacuous = false;      // bound >= 1
    std::vector<std::int64_t> crossing_times;  // per trial, 0 when no crossing

    // frequency <= bound + 3 sigma
    bool within_bound() const { return vacuous || frequency <= bound + 3.0 * bound_sigma; }
};

// Exact two-sided Clopper-Pearson interval for `successes` out of `trials`.
std::pair<double, double> clopper_pearson(std::int64_t successes, std::int64_t trials, double confidence = 0.95);

// Fraction of trials in which |S_t| >= boundary(N_t) for some t <= T with
// N_t > 0, where S_t = sum (X_s - mu_s |X_s|) and N_t = sum |X_s|. Trial k
// uses derive_seed(seed, kCrossingTrial, k).
CrossingReport simulate_crossing(const SyntheticProcess& process, const ConfidenceBoundary& boundary,
                                 std::int64_t trials, std::uint64_t seed, std::size_t threads = 1,
                                 bool keep_times = false);

// Fraction of TopRank episodes in which some pair's centered statistic
// crosses the boundary. Episode k uses derive_seed(seed, kFailureEpisode, k).
CrossingReport failure_event_rate(const ClickModel& model, const ConfidenceBoundary& boundary, std::int64_t n,
                                  std::int64_t episodes, std::uint64_t seed, std::size_t threads = 1,
                                  std::size_t max_enumeration_block = 8);

struct PairBiasReport {
    double mean_ij = 0.0;  // estimate of E[U_ij | U_ij != 0]
    double mean_ji = 0.0;  // estimate of E[U_ji | U_ji != 0]
    double std_error = 0.0;
    std::int64_t informative = 0;  // samples with U_ij != 0
    std::int64_t samples = 0;
    double lower_bound = 0.0;  // Delta_ij / (alpha(i) + alpha(j))
    bool holds_a = false;      // mean_ij >= lower_bound - 3 se
    bool holds_b = false;      // mean_ji <= 3 se
};

// Holds the blocks fixed and estimates the conditional click-difference
// means of one pair from `samples` independent rounds.
PairBiasReport estimate_pair_bias(const ClickModel& model, const BlockPartition& blocks, Item i, Item j,
                                  std::int64_t samples, Rng& rng);

// Independent episodes with seeds derive_seed(seed, kEpisode, k); output order
// follows k regardless of the thread count.
std::vector<RegretTrace> run_episodes(const ClickModel& model, const ConfidenceBoundary& boundary, std::int64_t n,
                                      std::int64_t episodes, std::uint64_t seed, std::size_t threads = 1,
                                      const EpisodeOptions& options = {});

}  // namespace toprank
