#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "toprank/boundary.hpp"
#include "toprank/env.hpp"

namespace toprank {

// Click model section of an experiment.
struct ModelConfig {
    ClickKind kind = ClickKind::PositionBased;
    std::vector<double> alphas;
    std::vector<double> chi;  // position-based and factored models only
    std::size_t K = 1;

    ClickModel build() const;
};

// Boundary section. Constants left unset for AsymptoticC1 / SimpleLIL are
// estimated on the log grid [grid_min, grid_max]; n_min defaults to grid_min
// so the closed forms are never used below the range they were fitted on.
struct BoundaryConfig {
    BoundaryVariant variant = BoundaryVariant::Baseline;
    bool delta_one_over_n = false;
    double delta = 0.05;
    std::optional<double> c1;
    std::optional<double> c2;
    std::optional<std::int64_t> n_min;
    double grid_min = 1e3;
    double grid_max = 1e12;
    std::size_t grid_points_per_decade = 4;
    QuadratureParams quadrature{};
};

// Settings for the `validate` front end.
struct ValidateConfig {
    std::int64_t horizon = 10000;
    std::int64_t trials = 10000;
    std::vector<double> deltas{0.1, 0.05, 0.01};
    std::vector<BoundaryVariant> variants{BoundaryVariant::Baseline, BoundaryVariant::MixtureExact,
                                          BoundaryVariant::AsymptoticC1, BoundaryVariant::SimpleLIL};
    bool keep_times = false;
    std::int64_t failure_episodes = 0;  // also run failure_event_rate when positive
};

// Settings for the `boundary` and `bounds` tables.
struct TableConfig {
    std::vector<BoundaryVariant> variants{BoundaryVariant::Baseline, BoundaryVariant::MixtureExact,
                                          BoundaryVariant::AsymptoticC1, BoundaryVariant::SimpleLIL};
    std::vector<std::int64_t> n_values;   // boundary table counts
    std::vector<std::int64_t> horizons;   // bounds table horizons
};

struct ExperimentConfig {
    std::optional<ModelConfig> model;
    BoundaryConfig boundary;
    std::int64_t horizon = 0;
    std::int64_t episodes = 1;
    std::uint64_t seed = 0;
    std::string output_dir = ".";
    std::size_t threads = 1;
    bool track_failure = false;
    std::int64_t regret_stride = 1;  // regret.csv keeps rounds t with t % stride == 0 and t = n
    ValidateConfig validate;
    TableConfig table;

    // ConfigError naming the field when the section is absent.
    const ModelConfig& require_model() const;
    std::int64_t require_horizon() const;
};

// Parses a JSON experiment description. Syntax errors report
// "<source>:<line>:<column>"; missing or mistyped fields name the field.
ExperimentConfig parse_config(const std::string& text, const std::string& source = "<config>");
ExperimentConfig load_config(const std::string& path);

// Canonical echo of a parsed config, embedded in every artifact.
nlohmann::ordered_json config_to_json(const ExperimentConfig& config);

// delta after expanding the "one_over_n" preset against the horizon.
double effective_delta(const BoundaryConfig& boundary, std::int64_t horizon);

// Boundary spec for one variant and delta, with estimated constants where the
// config leaves them open. `estimate` receives the estimate used, if any.
BoundarySpec resolve_boundary(const BoundaryConfig& boundary, BoundaryVariant variant, double delta,
                              std::optional<ConstantEstimate>* estimate = nullptr);

std::vector<double> constant_grid(const BoundaryConfig& boundary);

}  // namespace toprank
