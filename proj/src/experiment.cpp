#include "toprank/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "toprank/algorithm.hpp"
#include "toprank/error.hpp"
#include "toprank/montecarlo.hpp"
#include "toprank/parallel.hpp"
#include "toprank/theory.hpp"

#ifndef TOPRANK_LAB_VERSION
#define TOPRANK_LAB_VERSION "0.0.0"
#endif

namespace toprank {

namespace {

using ojson = nlohmann::ordered_json;

const double kIteratedLogFloor = std::exp(std::exp(1.0));

std::string dump(const ojson& j) { return j.dump(2) + "\n"; }

// Items and slots are 1-based in every artifact.
ojson edges_json(const std::vector<std::pair<Item, Item>>& edges) {
    ojson out = ojson::array();
    for (const auto& [from, to] : edges) out.push_back({from + 1, to + 1});
    return out;
}

ojson blocks_json(const BlockPartition& blocks) {
    ojson out = ojson::array();
    for (const auto& block : blocks.blocks) {
        ojson b = ojson::array();
        for (Item i : block) b.push_back(i + 1);
        out.push_back(b);
    }
    return out;
}

ojson optional_round(const std::optional<std::int64_t>& t) { return t ? ojson(*t) : ojson(nullptr); }

ojson estimate_json(const ConstantEstimate& e) {
    ojson out;
    out["delta"] = e.delta;
    out["c0"] = e.c0;
    out["c1"] = e.c1;
    out["c2"] = e.c2;
    out["grid"] = {{"v_min", e.v_min}, {"v_max", e.v_max}, {"points", e.points}};
    return out;
}

ojson spec_json(const BoundarySpec& spec, const std::optional<ConstantEstimate>& estimate) {
    ojson out;
    out["variant"] = to_string(spec.variant);
    out["delta"] = spec.delta;
    if (spec.variant == BoundaryVariant::AsymptoticC1) out["c1"] = spec.c1;
    if (spec.variant == BoundaryVariant::SimpleLIL) out["c2"] = spec.c2;
    if (spec.variant == BoundaryVariant::AsymptoticC1 || spec.variant == BoundaryVariant::SimpleLIL) {
        out["n_min"] = spec.n_min;
    }
    out["constants_estimated"] = estimate.has_value();
    if (estimate) out["estimate"] = estimate_json(*estimate);
    return out;
}

ojson report_json(const CrossingReport& r) {
    ojson out;
    out["label"] = r.label;
    out["trials"] = r.trials;
    out["crossings"] = r.crossings;
    out["frequency"] = r.frequency;
    out["delta"] = r.delta;
    out["bound"] = r.bound;
    out["bound_sigma"] = r.bound_sigma;
    out["limit"] = r.bound + 3.0 * r.bound_sigma;
    out["ci95"] = {r.ci_low, r.ci_high};
    out["horizon"] = r.horizon;
    out["vacuous"] = r.vacuous;
    out["within_bound"] = r.within_bound();
    return out;
}

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

// Regret bounds at one horizon. Refined bounds need n > e^e.
struct BoundRow {
    double delta = 0.0;
    ConstantEstimate estimate;
    double gapfree_original = 0.0;
    std::optional<double> gapfree_c1;
    std::optional<double> gapfree_c2;
    std::optional<double> gapped_original;
    std::optional<double> gapped_c1;
    std::optional<double> gapped_c2;
};

BoundRow bounds_at(const ModelConfig& model, std::int64_t n, double delta, const ConstantEstimate& estimate) {
    BoundRow row;
    row.delta = delta;
    row.estimate = estimate;
    const std::size_t L = model.alphas.size();
    row.gapfree_original = regret_bound_gapfree(model.K, L, n, delta, BoundVariant::original());
    const bool refined = static_cast<double>(n) > kIteratedLogFloor;
    if (refined) {
        row.gapfree_c1 = regret_bound_gapfree(model.K, L, n, delta, BoundVariant::refined_c1(estimate.c1));
        row.gapfree_c2 = regret_bound_gapfree(model.K, L, n, delta, BoundVariant::refined_c2(estimate.c2));
    }
    const ItemCatalog catalog{model.alphas, model.K};
    if (catalog.strictly_decreasing()) {
        row.gapped_original = regret_bound_gapped(catalog, n, delta, BoundVariant::original());
        if (refined) {
            row.gapped_c1 = regret_bound_gapped(catalog, n, delta, BoundVariant::refined_c1(estimate.c1));
            row.gapped_c2 = regret_bound_gapped(catalog, n, delta, BoundVariant::refined_c2(estimate.c2));
        }
    }
    return row;
}

std::string cell(const std::optional<double>& x) { return x ? format_double(*x) : std::string(); }

std::vector<std::int64_t> default_counts() {
    std::vector<std::int64_t> out;
    for (double v : log_grid(1.0, 1e6, 4)) {
        const auto n = static_cast<std::int64_t>(std::llround(v));
        if (out.empty() || out.back() != n) out.push_back(n);
    }
    return out;
}

std::vector<std::int64_t> default_horizons() {
    std::vector<std::int64_t> out;
    for (std::int64_t n = 100; n <= 1000000000; n *= 10) out.push_back(n);
    return out;
}

ojson with_provenance(const ExperimentConfig& config, ojson body) {
    ojson out = provenance(config);
    for (auto it = body.begin(); it != body.end(); ++it) out[it.key()] = it.value();
    return out;
}

}  // namespace

std::string version() { return TOPRANK_LAB_VERSION; }

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buffer[64];
    const auto result = std::to_chars(buffer, buffer + sizeof buffer, x);
    return std::string(buffer, result.ptr);
}

ojson provenance(const ExperimentConfig& config) {
    ojson out;
    out["tool"] = "toprank_lab";
    out["version"] = version();
    out["seed"] = config.seed;
    out["config"] = config_to_json(config);
    return out;
}

ArtifactSet run_experiment(const ExperimentConfig& config, std::size_t threads) {
    const ModelConfig& model_config = config.require_model();
    const std::int64_t n = config.require_horizon();
    const ClickModel model = model_config.build();
    const double delta = effective_delta(config.boundary, n);

    std::optional<ConstantEstimate> estimate;
    const BoundarySpec spec = resolve_boundary(config.boundary, config.boundary.variant, delta, &estimate);
    const ConfidenceBoundary boundary(spec, n);

    EpisodeOptions options;
    options.track_failure = config.track_failure;
    options.record_rounds = true;

    std::ostringstream csv;
    csv << "episode,t,expected_regret_increment,cumulative_regret,edges_added,wrong_edge_flag\n";

    ojson episodes = ojson::array();
    std::vector<double> regrets;
    std::int64_t wrong_edge_episodes = 0;
    std::int64_t failure_episodes = 0;
    std::int64_t lemma4_violations = 0;
    std::int64_t lemma5_violations = 0;
    std::int64_t lemma5_checked = 0;

    // Episodes run in batches so only a bounded number of per-round traces
    // is alive at once. Episode k always uses derive_seed(seed, kEpisode, k).
    const std::size_t total = static_cast<std::size_t>(config.episodes);
    const std::size_t batch = std::max<std::size_t>(64, threads * 8);
    for (std::size_t first = 0; first < total; first += batch) {
        const std::size_t count = std::min(batch, total - first);
        std::vector<RegretTrace> traces(count);
        parallel_for(count, threads, [&](std::size_t k) {
            Rng rng(derive_seed(config.seed, streams::kEpisode, first + k));
            traces[k] = run_episode(model, boundary, n, rng, options);
        });
        for (std::size_t k = 0; k < count; ++k) {
            const RegretTrace& tr = traces[k];
            const std::size_t episode = first + k + 1;
            for (std::int64_t t = 1; t <= n; ++t) {
                if (t % config.regret_stride != 0 && t != n) continue;
                const auto r = static_cast<std::size_t>(t - 1);
                csv << episode << ',' << t << ',' << format_double(tr.expected_increment[r]) << ','
                    << format_double(tr.cumulative[r]) << ',' << tr.edges_added[r] << ','
                    << static_cast<int>(tr.wrong_edge[r]) << '\n';
            }

            RelationGraph graph(model.num_items());
            for (const auto& [from, to] : tr.final_edges) graph.add_edge(from, to);

            ojson e;
            e["episode"] = episode;
            e["seed"] = derive_seed(config.seed, streams::kEpisode, first + k);
            e["cumulative_regret"] = tr.cumulative_regret;
            e["realized_regret"] = tr.cumulative_realized;
            e["edges_added"] = tr.total_edges_added;
            e["final_edges"] = edges_json(tr.final_edges);
            e["final_blocks"] = blocks_json(partition_blocks(graph));
            e["wrong_edges"] = tr.wrong_edges;
            e["first_wrong_edge_round"] = optional_round(tr.first_wrong_edge_round);
            e["lemma4_checks"] = tr.lemma4_checks;
            e["lemma4_violations"] = tr.lemma4_violations;
            if (tr.failure_tracked) e["failure_round"] = optional_round(tr.failure_round);
            e["lemma5_checked"] = tr.lemma5_checked;
            if (tr.lemma5_checked) e["lemma5_violations"] = tr.lemma5_violations;
            episodes.push_back(e);

            regrets.push_back(tr.cumulative_regret);
            if (tr.first_wrong_edge_round) ++wrong_edge_episodes;
            if (tr.failure_round) ++failure_episodes;
            lemma4_violations += tr.lemma4_violations;
            if (tr.lemma5_checked) {
                ++lemma5_checked;
                lemma5_violations += tr.lemma5_violations;
            }
        }
    }

    ojson theory;
    theory["horizon"] = n;
    theory["delta"] = delta;
    theory["gapfree_original"] = regret_bound_gapfree(model_config.K, model.num_items(), n, delta,
                                                      BoundVariant::original());
    const auto matching = matching_bound_variant(spec);
    const bool refined_ok = static_cast<double>(n) > kIteratedLogFloor;
    if (matching && matching->tag != BoundTag::Original && refined_ok) {
        theory["matching_variant"] = to_string(matching->tag);
        theory["gapfree_matching"] = regret_bound_gapfree(model_config.K, model.num_items(), n, delta, *matching);
    }
    if (model.catalog().strictly_decreasing()) {
        theory["gapped_original"] = regret_bound_gapped(model.catalog(), n, delta, BoundVariant::original());
        if (matching && matching->tag != BoundTag::Original && refined_ok) {
            theory["gapped_matching"] = regret_bound_gapped(model.catalog(), n, delta, *matching);
        }
    }
    const double gapfree = theory["gapfree_original"].get<double>();

    ojson aggregate;
    aggregate["episodes"] = config.episodes;
    double sum = 0.0;
    for (double r : regrets) sum += r;
    aggregate["mean_regret"] = sum / static_cast<double>(regrets.size());
    aggregate["median_regret"] = median(regrets);
    aggregate["max_regret"] = *std::max_element(regrets.begin(), regrets.end());
    aggregate["episodes_within_gapfree_original"] =
        std::count_if(regrets.begin(), regrets.end(), [&](double r) { return r <= gapfree; });
    aggregate["wrong_edge_episodes"] = wrong_edge_episodes;
    if (config.track_failure) aggregate["failure_episodes"] = failure_episodes;
    aggregate["lemma4_violations"] = lemma4_violations;
    aggregate["lemma5_checked_episodes"] = lemma5_checked;
    aggregate["lemma5_violations"] = lemma5_violations;

    ojson body;
    body["effective_delta"] = delta;
    body["boundary"] = spec_json(spec, estimate);
    body["theory"] = theory;
    body["aggregate"] = aggregate;
    body["episodes"] = episodes;

    ArtifactSet set;
    set.files.push_back({"regret.csv", csv.str()});
    set.files.push_back({"summary.json", dump(with_provenance(config, body))});
    return set;
}

ArtifactSet boundary_table(const ExperimentConfig& config) {
    const double delta = effective_delta(config.boundary, config.horizon);
    const std::vector<std::int64_t> counts = config.table.n_values.empty() ? default_counts() : config.table.n_values;

    std::ostringstream csv;
    csv << "variant,delta,N,threshold\n";
    ojson specs = ojson::array();
    for (BoundaryVariant variant : config.table.variants) {
        std::optional<ConstantEstimate> estimate;
        const BoundarySpec spec = resolve_boundary(config.boundary, variant, delta, &estimate);
        specs.push_back(spec_json(spec, estimate));
        for (std::int64_t N : counts) {
            csv << to_string(variant) << ',' << format_double(delta) << ',' << N << ','
                << format_double(threshold(spec, N)) << '\n';
        }
    }

    ojson body;
    body["artifact"] = "boundary.csv";
    body["effective_delta"] = delta;
    body["specs"] = specs;
    ArtifactSet set;
    set.files.push_back({"boundary.csv", csv.str()});
    set.files.push_back({"boundary.meta.json", dump(with_provenance(config, body))});
    return set;
}

ArtifactSet bounds_table(const ExperimentConfig& config) {
    const ModelConfig& model = config.require_model();
    std::vector<std::int64_t> horizons = config.table.horizons;
    if (horizons.empty()) horizons = default_horizons();

    std::map<double, ConstantEstimate> estimates;
    const auto grid = constant_grid(config.boundary);
    const auto estimate_for = [&](double delta) {
        auto it = estimates.find(delta);
        if (it == estimates.end()) {
            ConstantEstimate e = estimate_constants(delta, grid, config.boundary.quadrature);
            if (config.boundary.c1) e.c1 = *config.boundary.c1;
            if (config.boundary.c2) e.c2 = *config.boundary.c2;
            it = estimates.emplace(delta, e).first;
        }
        return it->second;
    };

    std::ostringstream csv;
    csv << "n,delta,c1,c2,gapfree_original,gapfree_refined_c1,gapfree_refined_c2,"
           "gapped_original,gapped_refined_c1,gapped_refined_c2\n";
    std::vector<std::int64_t> refined_grid;
    std::map<std::int64_t, BoundRow> rows;
    for (std::int64_t n : horizons) {
        const double delta = effective_delta(config.boundary, n);
        const BoundRow row = bounds_at(model, n, delta, estimate_for(delta));
        rows[n] = row;
        if (row.gapfree_c2) refined_grid.push_back(n);
        csv << n << ',' << format_double(delta) << ',' << format_double(row.estimate.c1) << ','
            << format_double(row.estimate.c2) << ',' << format_double(row.gapfree_original) << ','
            << cell(row.gapfree_c1) << ',' << cell(row.gapfree_c2) << ',' << cell(row.gapped_original) << ','
            << cell(row.gapped_c1) << ',' << cell(row.gapped_c2) << '\n';
    }

    std::sort(refined_grid.begin(), refined_grid.end());
    const auto original = [&](std::int64_t n) { return rows.at(n).gapfree_original; };
    const auto c2_cross = refinement_crossover(refined_grid, [&](std::int64_t n) { return *rows.at(n).gapfree_c2; },
                                               original);
    const auto c1_cross = refinement_crossover(refined_grid, [&](std::int64_t n) { return *rows.at(n).gapfree_c1; },
                                               original);

    ojson est = ojson::array();
    for (const auto& [delta, e] : estimates) est.push_back(estimate_json(e));
    ojson body;
    body["artifact"] = "bounds.csv";
    body["constants"] = est;
    body["gapfree_crossover_refined_c1"] = optional_round(c1_cross);
    body["gapfree_crossover_refined_c2"] = optional_round(c2_cross);
    ArtifactSet set;
    set.files.push_back({"bounds.csv", csv.str()});
    set.files.push_back({"bounds.meta.json", dump(with_provenance(config, body))});
    return set;
}

ArtifactSet constants_report(const ExperimentConfig& config) {
    const double delta = effective_delta(config.boundary, config.horizon);
    const auto grid = constant_grid(config.boundary);
    const ConstantEstimate e = estimate_constants(delta, grid, config.boundary.quadrature);

    ojson body;
    body["delta"] = delta;
    body["c0"] = e.c0;
    body["c1"] = e.c1;
    body["c2"] = e.c2;
    body["grid"] = {{"v_min", e.v_min},
                    {"v_max", e.v_max},
                    {"points_per_decade", config.boundary.grid_points_per_decade},
                    {"points", e.points},
                    {"spacing", "log"}};
    body["n_min"] = config.boundary.n_min.value_or(static_cast<std::int64_t>(std::ceil(config.boundary.grid_min)));
    ArtifactSet set;
    set.files.push_back({"constants.json", dump(with_provenance(config, body))});
    return set;
}

ArtifactSet validate_boundaries(const ExperimentConfig& config, std::size_t threads) {
    const ValidateConfig& v = config.validate;
    const auto suite = standard_process_suite(v.horizon);

    ArtifactSet set;
    ojson reports = ojson::array();
    std::ostringstream times;
    if (v.keep_times) times << "variant,delta,process,trial,crossing_time\n";

    for (double delta : v.deltas) {
        for (BoundaryVariant variant : v.variants) {
            std::optional<ConstantEstimate> estimate;
            const BoundarySpec spec = resolve_boundary(config.boundary, variant, delta, &estimate);
            const ConfidenceBoundary boundary(spec, v.horizon);
            for (std::size_t p = 0; p < suite.size(); ++p) {
                // Each (delta, variant, process) cell gets its own stream of trials.
                const std::uint64_t cell_seed =
                    derive_seed(config.seed, streams::kCrossingTrial, reports.size());
                CrossingReport r = simulate_crossing(suite[p], boundary, v.trials, cell_seed, threads, v.keep_times);
                r.label = to_string(variant) + "/" + suite[p].name;
                ojson j = report_json(r);
                j["kind"] = "crossing";
                j["variant"] = to_string(variant);
                j["process"] = suite[p].name;
                j["boundary"] = spec_json(spec, estimate);
                j["cell_seed"] = cell_seed;
                reports.push_back(j);
                if (!r.within_bound()) {
                    set.ok = false;
                    set.message += "crossing frequency above bound: " + r.label + " at delta " +
                                   format_double(delta) + "\n";
                }
                if (v.keep_times) {
                    for (std::size_t k = 0; k < r.crossing_times.size(); ++k) {
                        times << to_string(variant) << ',' << format_double(delta) << ',' << suite[p].name << ','
                              << k + 1 << ',' << r.crossing_times[k] << '\n';
                    }
                }
            }
        }
    }

    ojson failures = ojson::array();
    if (v.failure_episodes > 0) {
        const ModelConfig& model_config = config.require_model();
        const std::int64_t n = config.require_horizon();
        const ClickModel model = model_config.build();
        const double delta = effective_delta(config.boundary, n);
        for (BoundaryVariant variant : v.variants) {
            std::optional<ConstantEstimate> estimate;
            const BoundarySpec spec = resolve_boundary(config.boundary, variant, delta, &estimate);
            const ConfidenceBoundary boundary(spec, n);
            const std::uint64_t cell_seed = derive_seed(config.seed, streams::kFailureEpisode, failures.size());
            CrossingReport r = failure_event_rate(model, boundary, n, v.failure_episodes, cell_seed, threads);
            r.label = to_string(variant) + "/failure_event";
            ojson j = report_json(r);
            j["kind"] = "failure_event";
            j["variant"] = to_string(variant);
            j["boundary"] = spec_json(spec, estimate);
            j["cell_seed"] = cell_seed;
            failures.push_back(j);
            if (!r.within_bound()) {
                set.ok = false;
                set.message += "failure-event frequency above bound: " + r.label + "\n";
            }
        }
    }

    ojson body;
    body["decision_rule"] = "frequency <= bound + 3 * bound_sigma";
    body["crossing"] = reports;
    body["failure_events"] = failures;
    body["all_within_bound"] = set.ok;
    set.files.push_back({"validate.json", dump(with_provenance(config, body))});
    if (v.keep_times) set.files.push_back({"crossing_times.csv", times.str()});
    return set;
}

ArtifactSet assumptions_report(const ExperimentConfig& config) {
    const ClickModel model = config.require_model().build();
    AssumptionReport report;
    if (model.num_items() <= kDefaultEnumerationLimit) {
        report = check_assumptions(model);
    } else {
        Rng rng(derive_seed(config.seed, streams::kPairBias, 0));
        report = spot_check_assumptions(model, 20000, rng);
    }

    ojson checks = ojson::array();
    for (const auto& c : report.checks) {
        ojson j;
        j["name"] = c.name;
        j["passed"] = c.passed;
        j["counterexample"] = c.counterexample;
        checks.push_back(j);
    }
    ojson body;
    body["model"] = to_string(model.kind());
    body["passed"] = report.passed;
    body["exhaustive"] = report.exhaustive;
    body["permutations_checked"] = report.permutations_checked;
    body["checks"] = checks;

    ArtifactSet set;
    set.ok = report.passed;
    if (!report.passed) set.message = "assumption check failed: " + report.first_counterexample() + "\n";
    set.files.push_back({"assumptions.json", dump(with_provenance(config, body))});
    return set;
}

void write_artifacts(const ArtifactSet& set, const std::string& dir) {
    std::filesystem::create_directories(dir);
    for (const auto& file : set.files) {
        const auto path = std::filesystem::path(dir) / file.name;
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write '" + path.string() + "'");
        out << file.content;
        if (!out) throw Error("write failed for '" + path.string() + "'");
    }
}

}  // namespace toprank
