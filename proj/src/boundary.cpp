#include "toprank/boundary.hpp"

#include <algorithm>
#include <functional>
#include <queue>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include "toprank/error.hpp"

namespace toprank {

namespace {

using std::numbers::e;
using std::numbers::pi;

using Kronrod = boost::math::quadrature::gauss_kronrod<double, 15>;

// e^-e, upper end of the mixing measure's support.
const double kLambdaMax = std::exp(-e);
// e^e, below which log log log v is undefined or negative.
const double kTripleLogFloor = std::exp(e);

double lambda_at(double s) { return std::exp(-std::exp(s)); }

struct Segment {
    double a;
    double b;
    double value;
    double error;

    bool operator<(const Segment& other) const { return error < other.error; }
};

// With max_depth = 0 Boost reports |K - G| on the reference interval
// [-1, 1]; it is rescaled here by the half-width to match the value.
Segment kronrod_segment(const std::function<double(double)>& f, double a, double b) {
    double err = 0.0;
    const double value = Kronrod::integrate(f, a, b, 0, 0.0, &err);
    return {a, b, value, err * 0.5 * (b - a)};
}

struct QuadratureResult {
    double value = 0.0;
    double error = 0.0;
};

// Globally adaptive Gauss-Kronrod: the segment with the largest error is
// bisected until the summed error meets rel_tol against the summed value.
// `cuts` are initial breakpoints; a final segment [cuts.back(), inf) is
// integrated through the rule's 1/(t+1) map when `to_infinity` is set.
QuadratureResult integrate_adaptive(const std::function<double(double)>& f, const std::vector<double>& cuts,
                                    bool to_infinity, const QuadratureParams& q, const char* what) {
    std::priority_queue<Segment> work;
    QuadratureResult total;
    for (std::size_t k = 1; k < cuts.size(); ++k) {
        if (!(cuts[k] > cuts[k - 1])) continue;
        work.push(kronrod_segment(f, cuts[k - 1], cuts[k]));
    }
    double tail_value = 0.0;
    double tail_error = 0.0;
    if (to_infinity) {
        tail_value = Kronrod::integrate(f, cuts.back(), std::numeric_limits<double>::infinity(), 12,
                                        q.rel_tol, &tail_error);
    }

    const auto sums = [&] {
        QuadratureResult r{tail_value, tail_error};
        auto copy = work;
        while (!copy.empty()) {
            r.value += copy.top().value;
            r.error += copy.top().error;
            copy.pop();
        }
        return r;
    };

    double value = tail_value;
    double error = tail_error;
    {
        const QuadratureResult r = sums();
        value = r.value;
        error = r.error;
    }
    std::size_t segments = work.size();
    while (error > q.rel_tol * std::abs(value) && segments < q.max_subdivisions && !work.empty()) {
        const Segment worst = work.top();
        work.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)) {
            work.push(worst);
            break;
        }
        const Segment left = kronrod_segment(f, worst.a, mid);
        const Segment right = kronrod_segment(f, mid, worst.b);
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        work.push(left);
        work.push(right);
        ++segments;
    }
    // Recompute sums from scratch to shed accumulated rounding.
    total = sums();
    if (!std::isfinite(total.value) || total.error > 10.0 * q.rel_tol * std::abs(total.value) + 1e-300) {
        char buffer[200];
        std::snprintf(buffer, sizeof buffer,
                      "%s: estimated error %.3g exceeds tolerance for value %.6g after %zu segments", what,
                      total.error, total.value, segments);
        throw QuadratureFailure(buffer);
    }
    return total;
}

double double_log(double v) { return std::log(std::log(v)); }

}  // namespace

std::string to_string(BoundaryVariant variant) {
    switch (variant) {
        case BoundaryVariant::Baseline: return "baseline";
        case BoundaryVariant::MixtureExact: return "mixture_exact";
        case BoundaryVariant::AsymptoticC1: return "asymptotic_c1";
        case BoundaryVariant::SimpleLIL: return "simple_lil";
    }
    return "unknown";
}

BoundaryVariant boundary_variant_from_string(const std::string& name) {
    if (name == "baseline") return BoundaryVariant::Baseline;
    if (name == "mixture_exact") return BoundaryVariant::MixtureExact;
    if (name == "asymptotic_c1") return BoundaryVariant::AsymptoticC1;
    if (name == "simple_lil") return BoundaryVariant::SimpleLIL;
    throw DomainError("unknown boundary variant '" + name + "'");
}

void QuadratureParams::validate() const {
    if (!(s_max > 1.0)) throw DomainError("quadrature s_max must exceed 1");
    if (!(rel_tol > 0.0 && rel_tol <= 1e-6)) throw DomainError("quadrature rel_tol must lie in (0, 1e-6]");
    if (max_subdivisions == 0) throw DomainError("quadrature max_subdivisions must be positive");
}

void BoundarySpec::validate() const {
    if (!(delta > 0.0 && delta < 1.0)) throw DomainError("delta must lie in (0,1)");
    if (variant == BoundaryVariant::AsymptoticC1 || variant == BoundaryVariant::SimpleLIL) {
        if (n_min < kDefaultSmallNCutoff) {
            throw DomainError("n_min must be at least 16 for iterated-log boundaries");
        }
    }
    if (!std::isfinite(c1) || !std::isfinite(c2)) throw DomainError("boundary constants must be finite");
    if (variant == BoundaryVariant::SimpleLIL && !(2.0 + c2 > 0.0)) {
        throw DomainError("simple_lil requires 2 + C2 > 0");
    }
    quadrature.validate();
}

double erf_series(double x) {
    // erf(x) = 2/sqrt(pi) sum_n (-1)^n x^(2n+1) / (n! (2n+1))
    const double x2 = x * x;
    double term = x;  // (-1)^n x^(2n+1) / n!
    double sum = x;
    for (int n = 1; n < 200; ++n) {
        term *= -x2 / n;
        const double contribution = term / (2 * n + 1);
        sum += contribution;
        if (std::abs(contribution) < 1e-17 * std::abs(sum)) break;
    }
    return 2.0 / std::sqrt(pi) * sum;
}

double click_constant() {
    static const double c = 4.0 * std::sqrt(2.0 / pi) / erf_series(std::sqrt(2.0));
    return c;
}

double truncated_mixture_mass(double s_max, const QuadratureParams& q) {
    if (!(s_max > 1.0)) throw DomainError("truncation point must exceed 1");
    const auto density = [](double s) { return 1.0 / (s * s); };
    return integrate_adaptive(density, {1.0, s_max}, false, q, "truncated mixture mass").value;
}

double mixture_density_mass(const QuadratureParams& q) {
    q.validate();
    const auto density = [](double s) { return 1.0 / (s * s); };
    return integrate_adaptive(density, {1.0, q.s_max}, true, q, "mixture mass").value;
}

double log_psi(double u, double v, const QuadratureParams& q) {
    if (!(v >= 0.0) || !std::isfinite(u) || !std::isfinite(v)) {
        throw DomainError("psi requires finite u and v >= 0");
    }

    // The exponent g(lambda) = lambda u - lambda^2 v / 2 is maximized over
    // (0, e^-e] at lambda_star; its value is factored out of the integrand.
    double lambda_star = 0.0;
    double peak_exponent = 0.0;
    if (u > 0.0) {
        lambda_star = v > 0.0 ? std::min(u / v, kLambdaMax) : kLambdaMax;
        peak_exponent = lambda_star * u - 0.5 * lambda_star * lambda_star * v;
    }

    const auto integrand = [&](double s) {
        const double lambda = lambda_at(s);
        return std::exp(lambda * u - 0.5 * lambda * lambda * v - peak_exponent) / (s * s);
    };

    // Breakpoints around the peak and around the point where lambda |u| ~ 1,
    // scaled by the local width of each feature.
    std::vector<double> cuts;
    const double s_max = std::max(q.s_max, 1.0);
    if (lambda_star > 0.0 && lambda_star < kLambdaMax) {
        const double log_inv = -std::log(lambda_star);
        const double centre = std::log(log_inv);
        const double width = 1.0 / (std::sqrt(v) * lambda_star * log_inv);
        for (double k : {-16.0, -4.0, -1.0, 0.0, 1.0, 4.0, 16.0}) cuts.push_back(centre + k * width);
    } else if (u > 0.0) {
        const double slope = std::max((u - kLambdaMax * v) * kLambdaMax * e, 1e-3);
        for (double k : {1.0, 4.0, 16.0}) cuts.push_back(1.0 + k / slope);
    }
    if (std::abs(u) > kTripleLogFloor) {
        const double log_u = std::log(std::abs(u));
        const double centre = std::log(log_u);
        for (double k : {-4.0, -1.0, 0.0, 1.0, 4.0}) cuts.push_back(centre + k / log_u);
    }
    for (double s = 1.5; s < s_max; s += 0.5) cuts.push_back(s);
    cuts.push_back(1.0);
    cuts.push_back(s_max);

    std::erase_if(cuts, [&](double s) { return !(s >= 1.0 && s <= s_max); });
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    const QuadratureResult r = integrate_adaptive(integrand, cuts, true, q, "psi");
    if (!(r.value > 0.0)) throw QuadratureFailure("psi integral underflowed");
    return peak_exponent + std::log(r.value);
}

double psi(double u, double v, const QuadratureParams& q) {
    const double lp = log_psi(u, v, q);
    if (lp > std::log(std::numeric_limits<double>::max())) {
        throw Overflow("psi(" + std::to_string(u) + ", " + std::to_string(v) +
                       ") exceeds double range; use log_psi");
    }
    return std::exp(lp);
}

namespace {

// Bisection on an increasing function with f(lo) < 0 <= f(hi).
template <class F>
double bisect(const F& f, double lo, double hi, double tol) {
    for (int iter = 0; iter < 4000; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (hi - lo <= tol * std::max(std::abs(lo), std::abs(hi))) break;
        const double value = f(mid);
        if (value == 0.0) return mid;
        (value < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

void check_root_args(double v, double c) {
    if (!(v > 0.0) || !std::isfinite(v)) throw DomainError("beta_f requires v > 0");
    if (!(c > 0.0) || !std::isfinite(c)) throw DomainError("beta_f requires c > 0");
}

}  // namespace

double beta_f(double v, double c, const QuadratureParams& q, double tol, double cap) {
    check_root_args(v, c);
    const double target = std::log(c);
    const auto f = [&](double u) { return log_psi(u, v, q) - target; };

    const double at_zero = f(0.0);
    if (at_zero == 0.0) return 0.0;
    double lo = 0.0;
    double hi = 0.0;
    if (at_zero < 0.0) {
        hi = 1.0;
        while (f(hi) < 0.0) {
            lo = hi;
            hi *= 2.0;
            if (hi > cap) throw BracketFailure("beta_f: Psi(u, v) < c for all u up to the cap");
        }
    } else {
        lo = -1.0;
        while (f(lo) > 0.0) {
            hi = lo;
            lo *= 2.0;
            if (-lo > cap) throw BracketFailure("beta_f: Psi(u, v) > c for all u down to -cap");
        }
    }
    return bisect(f, lo, hi, tol);
}

double beta_f_from(double v, double c, double lower, const QuadratureParams& q, double tol, double cap) {
    check_root_args(v, c);
    const double target = std::log(c);
    const auto f = [&](double u) { return log_psi(u, v, q) - target; };
    const double f_lower = f(lower);
    if (f_lower > 0.0) return beta_f(v, c, q, tol, cap);
    if (f_lower == 0.0) return lower;

    double step = std::max(std::abs(lower) / v, 1e-3);
    double lo = lower;
    double f_lo = f_lower;
    double hi = lower + step;
    double f_hi = f(hi);
    while (f_hi < 0.0) {
        lo = hi;
        f_lo = f_hi;
        step *= 2.0;
        hi = lower + step;
        if (hi > cap) throw BracketFailure("beta_f: Psi(u, v) < c for all u up to the cap");
        f_hi = f(hi);
    }
    // The bracket is narrow here, so TOMS 748 converges in a handful of steps.
    std::uintmax_t max_iter = 200;
    const auto done = [tol](double a, double b) { return b - a <= tol * std::max(std::abs(a), std::abs(b)); };
    const auto root = boost::math::tools::toms748_solve(f, lo, hi, f_lo, f_hi, done, max_iter);
    return 0.5 * (root.first + root.second);
}

double asymptotic_beta(double v, double c) {
    if (!(v > kTripleLogFloor)) throw DomainError("asymptotic_beta requires v > e^e");
    if (!(c > 0.0)) throw DomainError("asymptotic_beta requires c > 0");
    const double ll = double_log(v);
    const double bracket = ll + 2.5 * std::log(ll) + std::log(c / (2.0 * std::sqrt(pi)));
    return std::sqrt(2.0 * v * std::max(bracket, 0.0));
}

double threshold(const BoundarySpec& spec, std::int64_t n_obs) {
    if (n_obs < 1) throw DomainError("threshold requires N >= 1");
    const double n = static_cast<double>(n_obs);
    const auto mixture = [&] { return beta_f(n, 1.0 / (2.0 * spec.delta), spec.quadrature); };
    switch (spec.variant) {
        case BoundaryVariant::Baseline:
            return std::sqrt(2.0 * n * std::log(click_constant() * std::sqrt(n) / spec.delta));
        case BoundaryVariant::MixtureExact:
            return mixture();
        case BoundaryVariant::AsymptoticC1: {
            if (n_obs < spec.n_min) return mixture();
            const double ll = double_log(n);
            return std::sqrt(2.0 * n * std::max(ll + 2.5 * std::log(ll) + spec.c1, 0.0));
        }
        case BoundaryVariant::SimpleLIL:
            if (n_obs < spec.n_min) return mixture();
            return std::sqrt((2.0 + spec.c2) * n * double_log(n));
    }
    throw DomainError("unknown boundary variant");
}

ConfidenceBoundary::ConfidenceBoundary(BoundarySpec spec, std::int64_t table_size) : spec_(spec) {
    spec_.validate();
    std::int64_t exact_rows = 0;
    switch (spec_.variant) {
        case BoundaryVariant::Baseline: exact_rows = 0; break;
        case BoundaryVariant::MixtureExact: exact_rows = table_size; break;
        case BoundaryVariant::AsymptoticC1:
        case BoundaryVariant::SimpleLIL: exact_rows = spec_.n_min - 1; break;
    }
    const std::int64_t rows = std::max(table_size, exact_rows);
    table_.reserve(static_cast<std::size_t>(rows));
    const double c = 1.0 / (2.0 * spec_.delta);
    double previous = 0.0;
    for (std::int64_t n = 1; n <= rows; ++n) {
        double value = 0.0;
        if (n <= exact_rows) {
            // beta_f is nondecreasing in v: the previous root brackets from below.
            value = n == 1 ? beta_f(1.0, c, spec_.quadrature)
                           : beta_f_from(static_cast<double>(n), c, previous, spec_.quadrature);
            previous = value;
        } else {
            value = threshold(spec_, n);
        }
        table_.push_back(value);
    }
}

ConfidenceBoundary ConfidenceBoundary::constant(double value, double delta) {
    BoundarySpec spec;
    spec.delta = delta;
    ConfidenceBoundary boundary(spec, 0);
    boundary.fixed_ = value;
    return boundary;
}

double ConfidenceBoundary::operator()(std::int64_t n_obs) const {
    if (fixed_) return *fixed_;
    if (n_obs >= 1 && n_obs <= static_cast<std::int64_t>(table_.size())) {
        return table_[static_cast<std::size_t>(n_obs - 1)];
    }
    return threshold(spec_, n_obs);
}

std::vector<double> log_grid(double v_min, double v_max, std::size_t points_per_decade) {
    if (!(v_min > 0.0 && v_max >= v_min) || points_per_decade == 0) {
        throw DomainError("log_grid requires 0 < v_min <= v_max and a positive density");
    }
    const double lo = std::log10(v_min);
    const double hi = std::log10(v_max);
    const auto steps = static_cast<std::size_t>(std::ceil((hi - lo) * static_cast<double>(points_per_decade)));
    std::vector<double> grid;
    grid.reserve(steps + 1);
    for (std::size_t k = 0; k <= steps; ++k) {
        const double x = steps == 0 ? lo : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(steps);
        grid.push_back(std::pow(10.0, x));
    }
    grid.front() = v_min;
    grid.back() = v_max;
    return grid;
}

namespace {

void check_grid(std::span<const double> v_grid) {
    if (v_grid.empty()) throw DomainError("constant estimation needs a nonempty grid");
    for (double v : v_grid) {
        if (!(v > kTripleLogFloor)) throw DomainError("constant estimation grid points must exceed e^e");
    }
}

}  // namespace

ConstantEstimate estimate_constants(double delta, std::span<const double> v_grid, const QuadratureParams& q) {
    if (!(delta > 0.0 && delta < 1.0)) throw DomainError("delta must lie in (0,1)");
    check_grid(v_grid);
    std::vector<double> sorted(v_grid.begin(), v_grid.end());
    std::sort(sorted.begin(), sorted.end());

    const double c = 1.0 / (2.0 * delta);
    const double leading = std::log(1.0 / (4.0 * delta * std::sqrt(pi)));
    ConstantEstimate out;
    out.delta = delta;
    out.c0 = -std::numeric_limits<double>::infinity();
    out.c2 = 0.0;
    out.v_min = sorted.front();
    out.v_max = sorted.back();
    out.points = sorted.size();
    double previous = 0.0;
    bool first = true;
    for (double v : sorted) {
        const double beta = first ? beta_f(v, c, q) : beta_f_from(v, c, previous, q);
        previous = beta;
        first = false;
        const double ll = double_log(v);
        const double squared = beta * beta;
        out.c0 = std::max(out.c0, squared / (2.0 * v) - ll - 2.5 * std::log(ll) - leading);
        out.c2 = std::max(out.c2, squared / (v * ll) - 2.0);
    }
    out.c1 = leading + out.c0;
    return out;
}

ConstantEstimate estimate_c0(double delta, std::span<const double> v_grid, const QuadratureParams& q) {
    return estimate_constants(delta, v_grid, q);
}

double estimate_c2(double delta, std::span<const double> v_grid, const QuadratureParams& q) {
    return estimate_constants(delta, v_grid, q).c2;
}

std::optional<std::int64_t> crossover(const ConfidenceBoundary& lower, const ConfidenceBoundary& upper,
                                      std::span<const std::int64_t> n_grid) {
    std::vector<std::int64_t> sorted(n_grid.begin(), n_grid.end());
    std::sort(sorted.begin(), sorted.end());
    std::optional<std::int64_t> start;
    for (auto it = sorted.rbegin(); it != sorted.rend(); ++it) {
        if (!(lower(*it) < upper(*it))) break;
        start = *it;
    }
    return start;
}

}  // namespace toprank
