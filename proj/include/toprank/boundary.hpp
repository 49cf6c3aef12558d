#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace toprank {

// Confidence radius rules for the self-normalized pair statistic S against
// its comparison count N.
enum class BoundaryVariant {
    Baseline,      // sqrt(2N log(c sqrt(N) / delta))
    MixtureExact,  // beta_F(N, 1/(2 delta)) under the Robbins-Siegmund mixture
    AsymptoticC1,  // sqrt(2N [log log N + 5/2 log log log N + C1(delta)])
    SimpleLIL,     // sqrt((2 + C2(delta)) N log log N)
};

std::string to_string(BoundaryVariant variant);
BoundaryVariant boundary_variant_from_string(const std::string& name);

// Numerical control for Psi. The integral is taken in the variable
// s = log log(1/lambda) on [1, s_max] with globally adaptive Gauss-Kronrod
// refinement, and on [s_max, inf) through a mapped Gauss-Kronrod rule.
struct QuadratureParams {
    double s_max = 6.0;
    double rel_tol = 1e-12;
    std::size_t max_subdivisions = 2000;  // cap on the number of segments

    void validate() const;
};

inline constexpr std::int64_t kDefaultSmallNCutoff = 16;

struct BoundarySpec {
    BoundaryVariant variant = BoundaryVariant::Baseline;
    double delta = 0.05;
    double c1 = 0.0;  // AsymptoticC1 only
    double c2 = 0.0;  // SimpleLIL only
    std::int64_t n_min = kDefaultSmallNCutoff;  // iterated-log variants fall back below this
    QuadratureParams quadrature{};

    void validate() const;
};

// c = 4 sqrt(2/pi) / erf(sqrt 2), evaluated once with erf_series.
double click_constant();

// Maclaurin series for erf. Relative error is at double precision for
// |x| <= 2 and grows through cancellation to about 1e-13 at |x| = 3.
double erf_series(double x);

// Mass of the Robbins-Siegmund mixing density on (0, e^-e), i.e. the
// integral of ds/s^2 over [1, inf) after substitution. Equals 1.
double mixture_density_mass(const QuadratureParams& q = {});
// Same integral truncated to s in [1, s_max]; closed form 1 - 1/s_max.
double truncated_mixture_mass(double s_max, const QuadratureParams& q = {});

// log Psi(u, v). Evaluated with the integrand's maximum factored out, so it is
// finite for every finite u and v >= 0.
double log_psi(double u, double v, const QuadratureParams& q = {});

// Psi(u, v) = integral of exp(lambda u - lambda^2 v / 2) dF(lambda). Throws
// Overflow once log Psi exceeds the double range (about u > 1.07e4 for small
// v, since the exponent is at most e^-e * u).
double psi(double u, double v, const QuadratureParams& q = {});

inline constexpr double kDefaultRootTolerance = 1e-12;
inline constexpr double kDefaultBracketCap = 1e15;

// Unique u with Psi(u, v) = c. Brackets by doubling away from zero, then
// bisects to relative width `tol`. Throws BracketFailure past |u| = cap.
double beta_f(double v, double c, const QuadratureParams& q = {}, double tol = kDefaultRootTolerance,
              double cap = kDefaultBracketCap);

// Same root with a caller-supplied lower bound (e.g. the root at a smaller v,
// since beta_f is nondecreasing in v).
double beta_f_from(double v, double c, double lower, const QuadratureParams& q = {},
                   double tol = kDefaultRootTolerance, double cap = kDefaultBracketCap);

// Leading terms of the large-v expansion of beta_f(v, c). DomainError for v <= e^e.
double asymptotic_beta(double v, double c);

// Threshold for a single count N >= 1. MixtureExact costs one root solve.
double threshold(const BoundarySpec& spec, std::int64_t n_obs);

// A boundary with a precomputed table of thresholds for N in [1, table_size].
// Immutable after construction and safe to share across threads.
class ConfidenceBoundary {
public:
    explicit ConfidenceBoundary(BoundarySpec spec, std::int64_t table_size = 0);

    // Degenerate boundary returning `value` for every N. Used to exercise
    // crossing machinery (value = +inf never crosses).
    static ConfidenceBoundary constant(double value, double delta = 0.05);

    double operator()(std::int64_t n_obs) const;

    const BoundarySpec& spec() const { return spec_; }
    double delta() const { return spec_.delta; }
    bool is_constant() const { return fixed_.has_value(); }

private:
    BoundarySpec spec_;
    std::optional<double> fixed_;
    std::vector<double> table_;  // table_[N-1]
};

// Log-spaced grid from v_min to v_max inclusive.
std::vector<double> log_grid(double v_min, double v_max, std::size_t points_per_decade);

struct ConstantEstimate {
    double delta = 0.0;
    double c0 = 0.0;  // grid supremum of the o(1) term
    double c1 = 0.0;  // log(1/(4 delta sqrt(pi))) + c0
    double c2 = 0.0;
    double v_min = 0.0;
    double v_max = 0.0;
    std::size_t points = 0;
};

// Envelope of beta_F(v, 1/(2 delta))^2/(2v) - log log v - 5/2 log log log v
// - log(1/(4 delta sqrt(pi))) over the grid. Fills c0 and c1.
ConstantEstimate estimate_c0(double delta, std::span<const double> v_grid,
                             const QuadratureParams& q = {});

// Smallest C2 >= 0 with beta_F(v, 1/(2 delta)) <= sqrt((2 + C2) v log log v)
// on every grid point.
double estimate_c2(double delta, std::span<const double> v_grid, const QuadratureParams& q = {});

// Both estimates from one pass of root solves.
ConstantEstimate estimate_constants(double delta, std::span<const double> v_grid,
                                    const QuadratureParams& q = {});

// Smallest grid count N* such that lower(N) < upper(N) for every grid N >= N*.
std::optional<std::int64_t> crossover(const ConfidenceBoundary& lower, const ConfidenceBoundary& upper,
                                      std::span<const std::int64_t> n_grid);

}  // namespace toprank
