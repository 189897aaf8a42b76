#ifndef BRWLAB_WALK_HPP
#define BRWLAB_WALK_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "brwlab/laws.hpp"
#include "brwlab/rng.hpp"
#include "brwlab/stats.hpp"

namespace brwlab {

// Functional of a discretized path (values on a uniform grid).
using GridFunctional = std::function<double(std::span<const double>)>;

// Centred random walk associated to a reproduction law via the e^{-V} tilt.
class WalkLaw {
public:
    // One step realizes E[h(S1)] = E[sum_z h(V(z)) e^{-V(z)}].
    static WalkLaw from_reproduction(const ReproductionLaw& law);

    static WalkLaw gaussian(double mean, double var, std::string origin);
    // explicit two-point/finite step law; probs must sum to 1
    static WalkLaw discrete(std::vector<std::pair<double, double>> value_prob, std::string origin,
                            std::optional<LatticeInfo> lattice = std::nullopt);
    // test law: +1/-1 with probability 1/2 each
    static WalkLaw plus_minus_one();

    // the walk S^- with increments -S1
    WalkLaw negated() const;

    double sample_step(Rng& rng) const;
    double sigma_sq() const { return sigma_sq_; }
    double sigma() const;
    const std::optional<LatticeInfo>& lattice() const { return lattice_; }
    const std::string& tilt_origin() const { return origin_; }

private:
    enum class Kind { Gaussian, Discrete };
    Kind kind_ = Kind::Gaussian;
    double mean_ = 0.0;
    double var_ = 1.0;
    std::vector<double> values_;
    std::vector<double> cum_;
    double sigma_sq_ = 1.0;
    std::optional<LatticeInfo> lattice_;
    std::string origin_;
};

// --- ladder structure and renewal function -------------------------------

struct LadderResult {
    std::vector<double> heights;
    std::int64_t overruns = 0; // paths that hit the step budget and were redrawn
};

// i.i.d. samples of H1 = -S_{tau_1}, tau_1 the first strict descent epoch.
LadderResult ladder_heights(const WalkLaw& walk, std::int64_t n_paths, Rng& rng,
                            std::int64_t step_budget = 10000000);

struct RenewalTable {
    std::vector<double> grid;     // increasing, grid[0] = 0
    std::vector<double> r_values; // R(grid[i]); r_values[0] = 1
    std::int64_t n_ladder_samples = 0;
    std::int64_t ladder_overruns = 0;
    bool descending_for_negated = false;
    double slope = 0.0; // LS slope on the upper half, used for extrapolation

    // linear interpolation inside the grid, linear extrapolation beyond;
    // sets *clamped when extrapolating if given
    double value(double u, bool* clamped = nullptr) const;
    double max_u() const { return grid.empty() ? 0.0 : grid.back(); }
    // integral over [a, b] of the interpolant (for the excursion targets)
    double integral(double a, double b) const;
};

RenewalTable renewal_function(const WalkLaw& walk, std::vector<double> grid,
                              std::int64_t n_ladder_samples, std::uint64_t seed, int threads = 1,
                              std::int64_t ladder_step_budget = 1000000);

// default grid: step sigma/4 up to 50 sigma
std::vector<double> default_renewal_grid(const WalkLaw& walk);

// --- barrier probabilities ------------------------------------------------

// P(min_{0<=i<=n} S_i >= -u), Wilson CI attached
struct SurvivalEstimate {
    double value = 0.0;
    Interval ci;
    std::int64_t survivors = 0;
    std::int64_t n_paths = 0;
};
SurvivalEstimate survival_probability(const WalkLaw& walk, double u, std::int64_t n,
                                      std::int64_t n_paths, std::uint64_t seed, int threads = 1);

struct RwConstants {
    double c0 = 0.0, c0_se = 0.0;
    double theta = 0.0, theta_se = 0.0;
    double c0_minus = 0.0, c0_minus_se = 0.0;
    double theta_minus = 0.0, theta_minus_se = 0.0;
    double sigma = 0.0;
    RenewalTable table;       // R for S
    RenewalTable table_minus; // R^- for S^-
    bool fit_warning = false;
};

struct ConstantsBudget {
    std::int64_t n_ladder_runs = 20000;
    std::int64_t n_survival_paths = 100000;
    std::int64_t n_for_theta = 4096;
    std::vector<double> theta_u_sigmas = {2.0, 4.0, 8.0};
    std::int64_t ladder_step_budget = 1000000;
    int threads = 1;
    std::uint64_t seed = 1;
};

// c0 from the renewal-table slope, theta from sqrt(n) P(min >= -u)/R(u)
// averaged over the u grid; same for the negated walk.
RwConstants estimate_constants(const WalkLaw& walk, const ConstantsBudget& budget);

// --- conditioned endpoint laws --------------------------------------------

struct EndpointSample {
    std::vector<double> values; // (S_n + u)/(sigma sqrt n) of surviving paths
    std::int64_t n_paths = 0;
    bool too_few_survivors = false; // fewer than 100 survivors
};
EndpointSample conditioned_endpoint_law(const WalkLaw& walk, double u, std::int64_t n,
                                        std::int64_t n_paths, std::uint64_t seed, int threads = 1);

// One surviving path under the h-transform P+_u, importance-weighted by
// R(S_n)/R(u); resamples internally until the plain walk survives.
struct WeightedPath {
    std::vector<double> path; // S_0..S_n
    double weight = 1.0;
    bool table_clamped = false;
    std::int64_t attempts = 1;
};
WeightedPath hplus_sampler(const WalkLaw& walk, const RenewalTable& table, double u,
                           std::int64_t n, Rng& rng);

// Self-normalized weighted mean of F under P+_u (F on the full path).
struct WeightedEstimate {
    double value = 0.0;
    double se = 0.0;
    double ess = 0.0;
    bool table_clamped = false;
};
WeightedEstimate hplus_functional_mean(const WalkLaw& walk, const RenewalTable& table, double u,
                                       std::int64_t n, std::int64_t n_paths,
                                       const std::function<double(std::span<const double>)>& f,
                                       std::uint64_t seed, int threads = 1);

// --- two-barrier window estimates (excursion regime) -----------------------

enum class EndpointWindow { HalfOpenInterval, LatticePoint };

struct TwoBarrierEstimate {
    Estimate value;              // E[F(S^(n)) 1_A]
    std::int64_t hits = 0;
    std::int64_t n_paths = 0;
    bool zero_hits = false;
};

// A = {min_{<= floor(lambda n)} >= -u, min_{floor(lambda n)..n} >= v,
//      S_n in [v+b, v+b+h)}   (lattice mode: S_n = v+b on the lattice)
// F is evaluated on the rescaled path S_{floor(tn)}/(sigma sqrt n) over an
// (m_grid+1)-point grid; pass nullptr for F == 1.
TwoBarrierEstimate two_barrier_endpoint_estimate(const WalkLaw& walk, double u, double v, double b,
                                                 double h, EndpointWindow window, double lambda,
                                                 const GridFunctional& f, std::int64_t n,
                                                 std::int64_t n_paths, int m_grid,
                                                 std::uint64_t seed, int threads = 1);

// Analytic reference for the F == 1 two-barrier estimate:
// sqrt(pi/2) (theta theta-/sigma) R(u) n^{-3/2} integral_b^{b+h} R-.
double two_barrier_prefactor(const RwConstants& constants, double u, double b, double h,
                             std::int64_t n);

struct SternCheck {
    Estimate estimate;
    double target = 0.0;
};
// P(S_n in [b, b+h)) against h/(sigma sqrt(2 pi n)) e^{-b^2/(2 sigma^2 n)}
SternCheck stone_llt_check(const WalkLaw& walk, double b, double h, std::int64_t n,
                           std::int64_t n_paths, std::uint64_t seed, int threads = 1);

} // namespace brwlab

#endif
