#ifndef BRWLAB_EXPERIMENTS_HPP
#define BRWLAB_EXPERIMENTS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "brwlab/gibbs.hpp"
#include "brwlab/laws.hpp"
#include "brwlab/limit_paths.hpp"
#include "brwlab/spine.hpp"
#include "brwlab/tree.hpp"
#include "brwlab/walk.hpp"

namespace brwlab {

// Near-critical regimes of the partition function, beta_n = 1 +/- 1/alpha_n.
enum class Regime {
    AboveStrong,  // (i)   beta_n = 1 + 1/alpha_n, sqrt(n)/alpha_n -> inf
    WindowAbove,  // (ii)  beta_n = 1 + 1/alpha_n, sqrt(n)/alpha_n -> gamma
    WindowBelow,  // (iii) beta_n = 1 - 1/alpha_n, sqrt(n)/alpha_n -> gamma
    BelowWeak,    // (iv)  beta_n = 1 - 1/alpha_n, sqrt(n)/alpha_n -> inf
    FixedBeta,
};

enum class Conditioning { P, Pstar };

struct ScheduleError : std::runtime_error {
    explicit ScheduleError(const std::string& what) : std::runtime_error(what) {}
};

struct Schedule {
    enum class Kind { Power, GammaSqrt };
    Kind kind = Kind::Power;
    double p = 0.5;     // alpha_n = n^p
    double gamma = 1.0; // alpha_n = sqrt(n)/gamma

    double alpha(double n) const;
    static Schedule power(double p) { return {Kind::Power, p, 0.0}; }
    static Schedule gamma_sqrt(double gamma) { return {Kind::GammaSqrt, 0.0, gamma}; }
};

struct RegimeSpec {
    Regime regime = Regime::WindowAbove;
    Schedule schedule;
    std::vector<std::int64_t> n_list;
    double beta_fixed = 0.5; // FixedBeta only
    double L = 5.0;          // barrier for spine-walk statistics
    std::optional<double> K; // optional second barrier

    double beta_at(double n) const;
    // sqrt(n)/alpha_n at the smallest n (the gamma of the critical window)
    double gamma_value() const;
    // numeric regime consistency checks; throws ScheduleError
    void validate() const;
};

// Scaled-statistic prefactor, symbolically assembled per regime.
double partition_prefactor(Regime regime, double n, double alpha_n, double beta_n,
                           double psi_beta_n);
// Unified rewriting: n^{3(1-beta_n)/2} sqrt(n) / E[e^{(1-beta_n) sigma M(1) sqrt n}].
double unified_prefactor(double n, double beta_n, double sigma);
// Limit constant of the scaled statistic normalized by D (NaN when the limit
// is a nondegenerate random variable).
double partition_target(Regime regime, double sigma, double gamma);

struct SeriesRow {
    std::int64_t n = 0;
    double value = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    double target = 0.0;
    std::string method; // "tree" or "spine-walk"
};

struct ScalingSeries {
    std::string experiment_id;
    std::string statistic;
    Conditioning conditioning = Conditioning::Pstar;
    std::string target_description;
    std::vector<SeriesRow> rows;

    // enforces n-ordering; uncertainty must be present on every row
    void add_row(SeriesRow row);
};

enum class Verdict { Pass, Fail, Inconclusive };
std::string verdict_name(Verdict v);

struct CriterionResult {
    std::string name;
    Verdict verdict = Verdict::Inconclusive;
    double observed = 0.0;
    double threshold = 0.0;
    std::string detail;
};

struct ComparisonReport {
    std::string experiment_id;
    std::vector<ScalingSeries> series;
    std::vector<CriterionResult> verdicts;
};

struct Budget {
    std::int64_t n_trees = 2000;
    std::int64_t n_spine_walks = 400000;
    std::int64_t n_ref_paths = 100000; // continuum reference sampler paths
    std::vector<std::int64_t> spine_n_list = {256, 1024, 4096};
    std::size_t max_particles = 1u << 22;
    int m_grid = 256;
    std::int64_t k_pairs = 64;
    ConstantsBudget constants;
    int threads = 1;
    std::uint64_t seed = 1;
};

// --- regime runners ---------------------------------------------------------

// Tree-level scaled partition statistic per regime (normalized per tree by
// its own D_n), plus the spine-walk reduction rows for the critical-window
// and weak-disorder regimes, plus the mass-window diagnostic for regime (i).
std::vector<ScalingSeries> run_partition_scaling(const ReproductionLaw& law,
                                                 const RegimeSpec& spec, const Budget& budget);

ComparisonReport run_trajectory_limits(const ReproductionLaw& law, const RegimeSpec& spec,
                                       const Budget& budget);

ScalingSeries run_overlap(const ReproductionLaw& law, const RegimeSpec& spec,
                          const Budget& budget);

struct RwCalibrationBudget {
    ConstantsBudget constants;
    std::int64_t rayleigh_n = 4096;
    std::int64_t n_rayleigh_paths = 2500000;
    std::vector<std::int64_t> ballot_n_list = {512, 1024, 2048, 4096};
    std::int64_t ballot_base_paths = 2000000; // scaled linearly with n
    std::int64_t two_barrier_n = 4096;
    std::int64_t n_two_barrier_paths = 40000000;
    std::int64_t n_stone_paths = 100000;
    std::int64_t n_excursion_ref = 200000;
    int m_grid = 256;
    int threads = 1;
    std::uint64_t seed = 1;
};

ComparisonReport run_rw_calibration(const ReproductionLaw& law,
                                    const RwCalibrationBudget& budget);

// --- individual verdict helpers (shared with the acceptance suite) -----------

CriterionResult check_theta_c0(const RwConstants& constants);
CriterionResult check_theta_c0_relative(const RwConstants& constants, double rel_tol);
CriterionResult check_rayleigh(const WalkLaw& walk, std::int64_t n, std::int64_t n_paths,
                               double ks_threshold, std::int64_t min_survivors,
                               std::uint64_t seed, int threads);
CriterionResult check_ballot_exponent(const WalkLaw& walk, const std::vector<std::int64_t>& ns,
                                      std::int64_t base_paths, double window_hi_sigmas,
                                      double slope_band, std::uint64_t seed, int threads);
CriterionResult check_stone(const WalkLaw& walk, std::int64_t n, std::int64_t n_paths,
                            std::uint64_t seed, int threads);
struct TwoBarrierVerdicts {
    CriterionResult prefactor;
    CriterionResult sup_ratio;
};
TwoBarrierVerdicts check_two_barrier(const WalkLaw& walk, const RwConstants& constants,
                                     std::int64_t n, std::int64_t n_paths, double h_sigmas,
                                     std::int64_t n_excursion_ref, int m_grid,
                                     double prefactor_tol, double sup_tol, std::uint64_t seed,
                                     int threads);

// --- battery and continuum targets -------------------------------------------

namespace battery {
GridFunctional endpoint();
GridFunctional sup();
GridFunctional time_average();
GridFunctional positivity_fraction();
// the standard 4-functional battery with stable ids
std::vector<std::pair<std::string, GridFunctional>> standard();
} // namespace battery

// E[e^{c M(1)} F(M)] / E[e^{c M(1)}] for each functional, via the Imhof
// weights; c = 0 gives plain meander expectations.
std::vector<double> meander_tilted_targets(double c, const std::vector<GridFunctional>& fs, int m,
                                           std::int64_t n_paths, std::uint64_t seed, int threads);
std::vector<double> excursion_targets(const std::vector<GridFunctional>& fs, int m,
                                      std::int64_t n_paths, std::uint64_t seed, int threads);

// --- output -------------------------------------------------------------------

// long format: experiment_id,method,n,statistic,value,lo,hi,target
// (conditioning is recorded inside the statistic id, e.g. "...[Pstar]")
void write_results_csv(const std::string& path, const std::vector<ScalingSeries>& series);
void write_report_json(const std::string& path, const ComparisonReport& report,
                       std::uint64_t seed);
// per-sample export: tree_id,n,beta,functional_id,value
struct SampleRow {
    std::int64_t tree_id;
    std::int64_t n;
    double beta;
    std::string functional_id;
    double value;
};
void write_samples_csv(const std::string& path, const std::vector<SampleRow>& rows);

// 0 all-pass, 2 any fail, 3 inconclusive only
int exit_code_for(const std::vector<CriterionResult>& verdicts);

// builtin law names or a law definition file path
ReproductionLaw resolve_law(const std::string& name_or_path);

} // namespace brwlab

#endif
