#include "toprank/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "toprank/error.hpp"
#include "toprank/theory.hpp"

namespace toprank {

namespace {

using json = nlohmann::json;

// Walks one JSON object, tracking its dotted path for diagnostics and
// rejecting keys nobody asked about.
class Section {
public:
    Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
        if (!node_.is_object()) fail(path_.empty() ? "top level must be an object" : "expected an object");
    }

    bool has(const std::string& key) const { return node_.contains(key); }

    const json& at(const std::string& key) {
        seen_.insert(key);
        if (!node_.contains(key)) {
            throw ConfigError("missing required field '" + field(key) + "'");
        }
        return node_.at(key);
    }

    std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    double number(const std::string& key) {
        const json& v = at(key);
        if (!v.is_number()) type_error(key, "a number");
        return v.get<double>();
    }

    std::int64_t integer(const std::string& key) {
        const json& v = at(key);
        if (v.is_number_integer()) return v.get<std::int64_t>();
        if (v.is_number_float()) {
            const double d = v.get<double>();
            if (std::floor(d) == d && std::abs(d) < 9.0e15) return static_cast<std::int64_t>(d);
        }
        type_error(key, "an integer");
    }

    std::uint64_t unsigned_integer(const std::string& key) {
        const json& v = at(key);
        if (v.is_number_unsigned()) return v.get<std::uint64_t>();
        type_error(key, "a non-negative integer");
    }

    bool boolean(const std::string& key) {
        const json& v = at(key);
        if (!v.is_boolean()) type_error(key, "true or false");
        return v.get<bool>();
    }

    std::string string(const std::string& key) {
        const json& v = at(key);
        if (!v.is_string()) type_error(key, "a string");
        return v.get<std::string>();
    }

    std::vector<double> numbers(const std::string& key) {
        const json& v = at(key);
        if (!v.is_array()) type_error(key, "an array of numbers");
        std::vector<double> out;
        for (const auto& e : v) {
            if (!e.is_number()) type_error(key, "an array of numbers");
            out.push_back(e.get<double>());
        }
        return out;
    }

    std::vector<std::int64_t> integers(const std::string& key) {
        const json& v = at(key);
        if (!v.is_array()) type_error(key, "an array of integers");
        std::vector<std::int64_t> out;
        for (const auto& e : v) {
            if (e.is_number_integer()) {
                out.push_back(e.get<std::int64_t>());
            } else if (e.is_number_float() && std::floor(e.get<double>()) == e.get<double>()) {
                out.push_back(static_cast<std::int64_t>(e.get<double>()));
            } else {
                type_error(key, "an array of integers");
            }
        }
        return out;
    }

    std::vector<BoundaryVariant> variants(const std::string& key) {
        const json& v = at(key);
        if (!v.is_array()) type_error(key, "an array of variant names");
        std::vector<BoundaryVariant> out;
        for (const auto& e : v) {
            if (!e.is_string()) type_error(key, "an array of variant names");
            out.push_back(variant_from(key, e.get<std::string>()));
        }
        return out;
    }

    BoundaryVariant variant_from(const std::string& key, const std::string& name) const {
        try {
            return boundary_variant_from_string(name);
        } catch (const DomainError& e) {
            throw ConfigError(field(key) + ": " + e.what() +
                              " (expected baseline, mixture_exact, asymptotic_c1 or simple_lil)");
        }
    }

    Section child(const std::string& key) {
        const json& v = at(key);
        return Section(v, field(key));
    }

    void reject_unknown() const {
        for (auto it = node_.begin(); it != node_.end(); ++it) {
            if (!seen_.count(it.key())) throw ConfigError("unknown field '" + field(it.key()) + "'");
        }
    }

private:
    [[noreturn]] void fail(const std::string& message) const {
        throw ConfigError((path_.empty() ? std::string("config") : path_) + ": " + message);
    }

    [[noreturn]] void type_error(const std::string& key, const std::string& expected) const {
        throw ConfigError("field '" + field(key) + "' must be " + expected);
    }

    const json& node_;
    std::string path_;
    std::set<std::string> seen_;
};

std::string line_column(const std::string& text, std::size_t byte) {
    std::size_t line = 1;
    std::size_t column = 1;
    for (std::size_t k = 0; k < text.size() && k + 1 < byte; ++k) {
        if (text[k] == '\n') {
            ++line;
            column = 1;
        } else {
            ++column;
        }
    }
    return std::to_string(line) + ":" + std::to_string(column);
}

ModelConfig parse_model(Section s) {
    ModelConfig m;
    try {
        m.kind = click_kind_from_string(s.string("kind"));
    } catch (const DomainError& e) {
        throw ConfigError(s.field("kind") + ": " + e.what() + " (expected cascade, position_based or factored)");
    }
    m.alphas = s.numbers("alphas");
    const std::int64_t K = s.integer("K");
    if (K < 1) throw ConfigError("field '" + s.field("K") + "' must be at least 1");
    m.K = static_cast<std::size_t>(K);
    if (m.kind != ClickKind::Cascade) {
        m.chi = s.numbers("chi");
    } else if (s.has("chi")) {
        throw ConfigError("field '" + s.field("chi") + "' is not used by the cascade model");
    }
    s.reject_unknown();
    return m;
}

BoundaryConfig parse_boundary(Section s) {
    BoundaryConfig b;
    if (s.has("variant")) b.variant = s.variant_from("variant", s.string("variant"));
    if (s.has("delta")) {
        const json& d = s.at("delta");
        if (d.is_string()) {
            if (d.get<std::string>() != "one_over_n") {
                throw ConfigError("field '" + s.field("delta") + "' must be a number or \"one_over_n\"");
            }
            b.delta_one_over_n = true;
        } else {
            b.delta = s.number("delta");
            if (!(b.delta > 0.0 && b.delta < 1.0)) {
                throw ConfigError("field '" + s.field("delta") + "' must lie in (0, 1)");
            }
        }
    }
    if (s.has("c1")) b.c1 = s.number("c1");
    if (s.has("c2")) b.c2 = s.number("c2");
    if (s.has("n_min")) b.n_min = s.integer("n_min");
    if (s.has("grid")) {
        Section g = s.child("grid");
        if (g.has("min")) b.grid_min = g.number("min");
        if (g.has("max")) b.grid_max = g.number("max");
        if (g.has("points_per_decade")) {
            const std::int64_t ppd = g.integer("points_per_decade");
            if (ppd < 1) throw ConfigError("field '" + g.field("points_per_decade") + "' must be at least 1");
            b.grid_points_per_decade = static_cast<std::size_t>(ppd);
        }
        if (!(b.grid_min > std::exp(std::exp(1.0)) && b.grid_max > b.grid_min)) {
            throw ConfigError("field '" + s.field("grid") + "' needs e^e < min < max");
        }
        g.reject_unknown();
    }
    if (s.has("quadrature")) {
        Section q = s.child("quadrature");
        if (q.has("s_max")) b.quadrature.s_max = q.number("s_max");
        if (q.has("rel_tol")) b.quadrature.rel_tol = q.number("rel_tol");
        if (q.has("max_subdivisions")) {
            const std::int64_t m = q.integer("max_subdivisions");
            if (m < 1) throw ConfigError("field '" + q.field("max_subdivisions") + "' must be at least 1");
            b.quadrature.max_subdivisions = static_cast<std::size_t>(m);
        }
        q.reject_unknown();
        try {
            b.quadrature.validate();
        } catch (const DomainError& e) {
            throw ConfigError(s.field("quadrature") + ": " + e.what());
        }
    }
    s.reject_unknown();
    return b;
}

ValidateConfig parse_validate(Section s) {
    ValidateConfig v;
    if (s.has("horizon")) v.horizon = s.integer("horizon");
    if (s.has("trials")) v.trials = s.integer("trials");
    if (s.has("deltas")) v.deltas = s.numbers("deltas");
    if (s.has("variants")) v.variants = s.variants("variants");
    if (s.has("keep_times")) v.keep_times = s.boolean("keep_times");
    if (s.has("failure_episodes")) v.failure_episodes = s.integer("failure_episodes");
    if (v.horizon < 1) throw ConfigError("field '" + s.field("horizon") + "' must be at least 1");
    if (v.trials < 1) throw ConfigError("field '" + s.field("trials") + "' must be at least 1");
    if (v.failure_episodes < 0) throw ConfigError("field '" + s.field("failure_episodes") + "' must be >= 0");
    for (double d : v.deltas) {
        if (!(d > 0.0 && d < 1.0)) throw ConfigError("field '" + s.field("deltas") + "' entries must lie in (0, 1)");
    }
    s.reject_unknown();
    return v;
}

TableConfig parse_table(Section s) {
    TableConfig t;
    if (s.has("variants")) t.variants = s.variants("variants");
    if (s.has("n_values")) t.n_values = s.integers("n_values");
    if (s.has("horizons")) t.horizons = s.integers("horizons");
    for (auto n : t.n_values) {
        if (n < 1) throw ConfigError("field '" + s.field("n_values") + "' entries must be at least 1");
    }
    for (auto n : t.horizons) {
        if (n < 1) throw ConfigError("field '" + s.field("horizons") + "' entries must be at least 1");
    }
    s.reject_unknown();
    return t;
}

}  // namespace

ClickModel ModelConfig::build() const {
    ItemCatalog catalog{alphas, K};
    switch (kind) {
        case ClickKind::Cascade: return ClickModel::cascade(std::move(catalog));
        case ClickKind::PositionBased: return ClickModel::position_based(std::move(catalog), chi);
        case ClickKind::Factored: return ClickModel::factored(std::move(catalog), chi);
    }
    throw ConfigError("unknown click model kind");
}

const ModelConfig& ExperimentConfig::require_model() const {
    if (!model) throw ConfigError("missing required field 'model'");
    return *model;
}

std::int64_t ExperimentConfig::require_horizon() const {
    if (horizon < 1) throw ConfigError("missing required field 'horizon'");
    return horizon;
}

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        std::string what = e.what();
        const auto cut = what.find("syntax error");
        throw ConfigError(source + ":" + line_column(text, e.byte) + ": " +
                          (cut == std::string::npos ? what : what.substr(cut)));
    }

    try {
        ExperimentConfig c;
        Section top(root, "");
        c.seed = top.unsigned_integer("seed");
        if (top.has("model")) c.model = parse_model(top.child("model"));
        if (top.has("boundary")) c.boundary = parse_boundary(top.child("boundary"));
        if (top.has("horizon")) {
            c.horizon = top.integer("horizon");
            if (c.horizon < 1) throw ConfigError("field 'horizon' must be at least 1");
        }
        if (top.has("episodes")) {
            c.episodes = top.integer("episodes");
            if (c.episodes < 1) throw ConfigError("field 'episodes' must be at least 1");
        }
        if (top.has("output_dir")) c.output_dir = top.string("output_dir");
        if (top.has("threads")) {
            const std::int64_t t = top.integer("threads");
            if (t < 1) throw ConfigError("field 'threads' must be at least 1");
            c.threads = static_cast<std::size_t>(t);
        }
        if (top.has("track_failure")) c.track_failure = top.boolean("track_failure");
        if (top.has("regret_stride")) {
            c.regret_stride = top.integer("regret_stride");
            if (c.regret_stride < 1) throw ConfigError("field 'regret_stride' must be at least 1");
        }
        if (top.has("validate")) c.validate = parse_validate(top.child("validate"));
        if (top.has("table")) c.table = parse_table(top.child("table"));
        top.reject_unknown();

        if (c.boundary.delta_one_over_n && c.horizon < 1) {
            throw ConfigError("field 'boundary.delta' is \"one_over_n\" but 'horizon' is missing");
        }
        if (c.model) {
            try {
                c.model->build();
            } catch (const DomainError& e) {
                throw ConfigError(std::string("model: ") + e.what());
            }
        }
        return c;
    } catch (const ConfigError& e) {
        throw ConfigError(source + ": " + e.what());
    }
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str(), path);
}

nlohmann::ordered_json config_to_json(const ExperimentConfig& c) {
    nlohmann::ordered_json out;
    out["seed"] = c.seed;
    if (c.model) {
        nlohmann::ordered_json m;
        m["kind"] = to_string(c.model->kind);
        m["alphas"] = c.model->alphas;
        if (c.model->kind != ClickKind::Cascade) m["chi"] = c.model->chi;
        m["K"] = c.model->K;
        out["model"] = m;
    }
    nlohmann::ordered_json b;
    b["variant"] = to_string(c.boundary.variant);
    if (c.boundary.delta_one_over_n) {
        b["delta"] = "one_over_n";
    } else {
        b["delta"] = c.boundary.delta;
    }
    if (c.boundary.c1) b["c1"] = *c.boundary.c1;
    if (c.boundary.c2) b["c2"] = *c.boundary.c2;
    if (c.boundary.n_min) b["n_min"] = *c.boundary.n_min;
    b["grid"] = {{"min", c.boundary.grid_min},
                 {"max", c.boundary.grid_max},
                 {"points_per_decade", c.boundary.grid_points_per_decade}};
    b["quadrature"] = {{"s_max", c.boundary.quadrature.s_max},
                       {"rel_tol", c.boundary.quadrature.rel_tol},
                       {"max_subdivisions", c.boundary.quadrature.max_subdivisions}};
    out["boundary"] = b;
    if (c.horizon > 0) out["horizon"] = c.horizon;
    out["episodes"] = c.episodes;
    out["track_failure"] = c.track_failure;
    out["regret_stride"] = c.regret_stride;

    nlohmann::ordered_json v;
    v["horizon"] = c.validate.horizon;
    v["trials"] = c.validate.trials;
    v["deltas"] = c.validate.deltas;
    std::vector<std::string> names;
    for (auto var : c.validate.variants) names.push_back(to_string(var));
    v["variants"] = names;
    v["keep_times"] = c.validate.keep_times;
    v["failure_episodes"] = c.validate.failure_episodes;
    out["validate"] = v;

    nlohmann::ordered_json t;
    names.clear();
    for (auto var : c.table.variants) names.push_back(to_string(var));
    t["variants"] = names;
    t["n_values"] = c.table.n_values;
    t["horizons"] = c.table.horizons;
    out["table"] = t;
    return out;
}

double effective_delta(const BoundaryConfig& boundary, std::int64_t horizon) {
    return boundary.delta_one_over_n ? delta_one_over_n(horizon) : boundary.delta;
}

std::vector<double> constant_grid(const BoundaryConfig& boundary) {
    return log_grid(boundary.grid_min, boundary.grid_max, boundary.grid_points_per_decade);
}

BoundarySpec resolve_boundary(const BoundaryConfig& boundary, BoundaryVariant variant, double delta,
                              std::optional<ConstantEstimate>* estimate) {
    BoundarySpec spec;
    spec.variant = variant;
    spec.delta = delta;
    spec.quadrature = boundary.quadrature;
    spec.n_min = boundary.n_min.value_or(static_cast<std::int64_t>(std::ceil(boundary.grid_min)));

    const bool needs_c1 = variant == BoundaryVariant::AsymptoticC1 && !boundary.c1;
    const bool needs_c2 = variant == BoundaryVariant::SimpleLIL && !boundary.c2;
    if (needs_c1 || needs_c2) {
        const auto grid = constant_grid(boundary);
        ConstantEstimate e = estimate_constants(delta, grid, boundary.quadrature);
        spec.c1 = e.c1;
        spec.c2 = e.c2;
        if (estimate) *estimate = e;
    }
    if (boundary.c1) spec.c1 = *boundary.c1;
    if (boundary.c2) spec.c2 = *boundary.c2;
    spec.validate();
    return spec;
}

}  // namespace toprank
