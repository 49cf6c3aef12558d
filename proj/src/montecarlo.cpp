#include "toprank/montecarlo.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/beta.hpp>

#include "toprank/error.hpp"
#include "toprank/parallel.hpp"

namespace toprank {

SyntheticProcess SyntheticProcess::constant(std::string name, std::int64_t horizon, double p, double mu,
                                            MeanPolicy policy) {
    SyntheticProcess out;
    out.name = std::move(name);
    out.horizon = horizon;
    out.p = {p};
    out.mu = {mu};
    out.policy = policy;
    out.validate();
    return out;
}

void SyntheticProcess::validate() const {
    if (horizon < 1) throw DomainError("synthetic process horizon must be positive");
    const auto sized = [&](const std::vector<double>& v) {
        return v.size() == 1 || v.size() == static_cast<std::size_t>(horizon);
    };
    if (!sized(p) || !sized(mu)) throw DomainError("schedules must hold 1 or T entries");
    for (double x : p) {
        if (!(x >= 0.0 && x <= 1.0)) throw DomainError("nonzero probability outside [0,1]");
    }
    for (double x : mu) {
        if (!(x >= -1.0 && x <= 1.0)) throw DomainError("conditional mean outside [-1,1]");
    }
}

std::vector<SyntheticProcess> standard_process_suite(std::int64_t horizon) {
    std::vector<SyntheticProcess> suite;
    suite.push_back(SyntheticProcess::constant("fair_walk", horizon, 1.0, 0.0));
    suite.push_back(SyntheticProcess::constant("sparse_drift", horizon, 0.3, 0.4));
    // Alternating sparsity and drift direction.
    SyntheticProcess varying;
    varying.name = "scheduled_varying";
    varying.horizon = horizon;
    varying.p.resize(static_cast<std::size_t>(horizon));
    varying.mu.resize(static_cast<std::size_t>(horizon));
    for (std::int64_t t = 1; t <= horizon; ++t) {
        const auto k = static_cast<std::size_t>(t - 1);
        varying.p[k] = (t / 100) % 2 == 0 ? 0.9 : 0.5;
        varying.mu[k] = (t / 250) % 2 == 0 ? 0.2 : -0.6;
    }
    varying.validate();
    suite.push_back(std::move(varying));
    suite.push_back(SyntheticProcess::constant("adversarial_sign", horizon, 1.0, 0.5, MeanPolicy::Adversarial));
    return suite;
}

std::pair<double, double> clopper_pearson(std::int64_t successes, std::int64_t trials, double confidence) {
    if (trials < 1 || successes < 0 || successes > trials) throw DomainError("invalid binomial counts");
    const double tail = 0.5 * (1.0 - confidence);
    const double x = static_cast<double>(successes);
    const double n = static_cast<double>(trials);
    double low = 0.0;
    double high = 1.0;
    if (successes > 0) low = boost::math::quantile(boost::math::beta_distribution<>(x, n - x + 1.0), tail);
    if (successes < trials) high = boost::math::quantile(boost::math::beta_distribution<>(x + 1.0, n - x), 1.0 - tail);
    return {low, high};
}

namespace {

void finish_report(CrossingReport& report) {
    report.frequency = static_cast<double>(report.crossings) / static_cast<double>(report.trials);
    const double p = std::min(report.bound, 1.0);
    report.bound_sigma = std::sqrt(p * (1.0 - p) / static_cast<double>(report.trials));
    report.vacuous = report.bound >= 1.0;
    std::tie(report.ci_low, report.ci_high) = clopper_pearson(report.crossings, report.trials);
}

std::int64_t first_crossing(const SyntheticProcess& process, const ConfidenceBoundary& boundary, Rng& rng) {
    double sum = 0.0;
    std::int64_t count = 0;
    for (std::int64_t t = 1; t <= process.horizon; ++t) {
        if (!rng.bernoulli(process.p_at(t))) continue;
        double mu = process.mu_at(t);
        if (process.policy == MeanPolicy::Adversarial) mu = std::abs(mu) * (sum < 0.0 ? -1.0 : 1.0);
        const double x = rng.bernoulli(0.5 * (1.0 + mu)) ? 1.0 : -1.0;
        sum += x - mu;
        ++count;
        if (std::abs(sum) >= boundary(count)) return t;
    }
    return 0;
}

}  // namespace

CrossingReport simulate_crossing(const SyntheticProcess& process, const ConfidenceBoundary& boundary,
                                 std::int64_t trials, std::uint64_t seed, std::size_t threads, bool keep_times) {
    process.validate();
    if (trials < 1) throw DomainError("need at least one trial");
    std::vector<std::int64_t> times(static_cast<std::size_t>(trials), 0);
    parallel_for(times.size(), threads, [&](std::size_t k) {
        Rng rng(derive_seed(seed, streams::kCrossingTrial, k));
        times[k] = first_crossing(process, boundary, rng);
    });

    CrossingReport report;
    report.label = process.name;
    report.trials = trials;
    report.crossings = std::count_if(times.begin(), times.end(), [](std::int64_t t) { return t > 0; });
    report.delta = boundary.delta();
    report.bound = boundary.delta();
    report.horizon = process.horizon;
    finish_report(report);
    if (keep_times) report.crossing_times = std::move(times);
    return report;
}

CrossingReport failure_event_rate(const ClickModel& model, const ConfidenceBoundary& boundary, std::int64_t n,
                                  std::int64_t episodes, std::uint64_t seed, std::size_t threads,
                                  std::size_t max_enumeration_block) {
    if (episodes < 1) throw DomainError("need at least one episode");
    EpisodeOptions options;
    options.track_failure = true;
    options.record_rounds = false;
    options.max_enumeration_block = max_enumeration_block;

    std::vector<std::int64_t> times(static_cast<std::size_t>(episodes), 0);
    parallel_for(times.size(), threads, [&](std::size_t k) {
        Rng rng(derive_seed(seed, streams::kFailureEpisode, k));
        const RegretTrace trace = run_episode(model, boundary, n, rng, options);
        times[k] = trace.failure_round.value_or(0);
    });

    const double L = static_cast<double>(model.num_items());
    CrossingReport report;
    report.label = "failure_event";
    report.trials = episodes;
    report.crossings = std::count_if(times.begin(), times.end(), [](std::int64_t t) { return t > 0; });
    report.delta = boundary.delta();
    report.bound = boundary.delta() * L * L;
    report.horizon = n;
    finish_report(report);
    report.crossing_times = std::move(times);
    return report;
}

PairBiasReport estimate_pair_bias(const ClickModel& model, const BlockPartition& blocks, Item i, Item j,
                                  std::int64_t samples, Rng& rng) {
    const auto index = blocks.block_index(model.num_items());
    if (i == j || index[i] != index[j]) throw DomainError("pair bias needs two distinct items in one block");
    const double ai = model.catalog().alpha(i);
    const double aj = model.catalog().alpha(j);
    if (ai < aj) throw DomainError("pair bias expects alpha(i) >= alpha(j)");

    PairBiasReport report;
    report.samples = samples;
    std::int64_t positive = 0;
    for (std::int64_t s = 0; s < samples; ++s) {
        const Permutation a = propose_permutation(blocks, rng);
        const ClickVector clicks = model.sample_clicks(a, rng);
        const int u = static_cast<int>(clicks.clicks[i]) - static_cast<int>(clicks.clicks[j]);
        if (u == 0) continue;
        ++report.informative;
        if (u > 0) ++positive;
    }
    if (report.informative == 0) {
        throw DegenerateConditioning("U_ij was zero in every one of " + std::to_string(samples) + " samples");
    }
    const double m = static_cast<double>(report.informative);
    report.mean_ij = (2.0 * static_cast<double>(positive) - m) / m;
    report.mean_ji = -report.mean_ij;
    // U is +-1 given U != 0, so its conditional variance is 1 - mean^2.
    report.std_error = std::sqrt(std::max(1.0 - report.mean_ij * report.mean_ij, 0.0) / m);
    report.lower_bound = ai + aj > 0.0 ? (ai - aj) / (ai + aj) : 0.0;
    report.holds_a = report.mean_ij >= report.lower_bound - 3.0 * report.std_error;
    report.holds_b = report.mean_ji <= 3.0 * report.std_error;
    return report;
}

std::vector<RegretTrace> run_episodes(const ClickModel& model, const ConfidenceBoundary& boundary, std::int64_t n,
                                      std::int64_t episodes, std::uint64_t seed, std::size_t threads,
                                      const EpisodeOptions& options) {
    if (episodes < 1) throw DomainError("need at least one episode");
    std::vector<RegretTrace> traces(static_cast<std::size_t>(episodes));
    parallel_for(traces.size(), threads, [&](std::size_t k) {
        Rng rng(derive_seed(seed, streams::kEpisode, k));
        traces[k] = run_episode(model, boundary, n, rng, options);
    });
    return traces;
}

}  // namespace toprank
