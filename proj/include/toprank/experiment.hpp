#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "toprank/config.hpp"

namespace toprank {

// Version string embedded in every artifact.
std::string version();

// Shortest decimal text that round-trips to the same double; "inf", "-inf"
// and "nan" for non-finite values. Stable across runs and thread counts.
std::string format_double(double x);

// One artifact: a file name relative to the output directory and its bytes.
struct Artifact {
    std::string name;
    std::string content;
};

// Result of one front end. `ok` is false when a self-check failed (a
// crossing frequency above its bound, an assumption counterexample).
struct ArtifactSet {
    std::vector<Artifact> files;
    bool ok = true;
    std::string message;
};

// Provenance block shared by all JSON artifacts: tool, version, seed, config.
nlohmann::ordered_json provenance(const ExperimentConfig& config);

// `run`: regret.csv and summary.json for config.episodes episodes of
// TopRank with the configured boundary.
ArtifactSet run_experiment(const ExperimentConfig& config, std::size_t threads);

// `boundary`: boundary.csv (variant,delta,N,threshold) plus boundary.meta.json.
ArtifactSet boundary_table(const ExperimentConfig& config);

// `bounds`: bounds.csv with original and refined regret bounds over the
// horizon grid, plus bounds.meta.json.
ArtifactSet bounds_table(const ExperimentConfig& config);

// `constants`: constants.json with C0, C1, C2 and the grid they came from.
ArtifactSet constants_report(const ExperimentConfig& config);

// `validate`: validate.json with one CrossingReport per (variant, delta,
// process), optional failure-event reports, and crossing_times.csv when
// requested.
ArtifactSet validate_boundaries(const ExperimentConfig& config, std::size_t threads);

// `assumptions`: assumptions.json for the configured click model.
ArtifactSet assumptions_report(const ExperimentConfig& config);

// Writes every artifact under `dir`, creating it if needed.
void write_artifacts(const ArtifactSet& set, const std::string& dir);

}  // namespace toprank
