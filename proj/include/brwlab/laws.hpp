#ifndef BRWLAB_LAWS_HPP
#define BRWLAB_LAWS_HPP

#include <optional>
#include <string>
#include <vector>

#include "brwlab/rng.hpp"

namespace brwlab {

enum class SupportKind { FiniteConfig, Continuous };

// Tri-state for assumptions that may be provable, sampled, or out of reach.
enum class TriState { Verified, Estimated, Unknown };

struct LatticeInfo {
    double span = 0.0;
    double offset = 0.0;
};

// One offspring configuration: probability and the children's displacements.
struct ConfigEntry {
    double prob = 0.0;
    std::vector<double> displacements;
};

struct LogLaplace {
    double value = 0.0;
    double se = 0.0; // 0 in exact mode
    bool exact = false;
    bool diverged = false;
};

struct LawDiagnostics {
    double mean_offspring = 0.0;
    double psi_at_1 = 0.0;
    double dpsi_at_1 = 0.0;
    double sigma_sq = 0.0;
    double x_log2_moment = 0.0;
    TriState h4_ok = TriState::Unknown;
    TriState h5_ok = TriState::Unknown;
    bool exact = false;
    bool boundary_ok = false;
    // standard errors of the MC estimates (0 in exact mode)
    double psi_se = 0.0;
    double dpsi_se = 0.0;
};

// Offspring point process in the boundary-case normalization. Immutable
// after construction; sampling takes the caller's RNG stream.
class ReproductionLaw {
public:
    // 2 children with i.i.d. Normal(2 log 2, 2 log 2) displacements.
    // Psi(beta) = (beta-1)^2 log 2, so the boundary case holds exactly.
    static ReproductionLaw gaussian_dyadic();

    // Probability 1/2: one child at d1 < 0; probability 1/2: two children
    // at d2 > 0. (d1, d2) solved so that Psi(1) = Psi'(1) = 0.
    static ReproductionLaw two_config();

    // One child at 0 (degenerate control law).
    static ReproductionLaw point_mass();

    static ReproductionLaw from_table(std::string name, std::vector<ConfigEntry> table,
                                      std::optional<LatticeInfo> lattice = std::nullopt);

    // Law definition file (JSON); format documented in the README.
    static ReproductionLaw load_file(const std::string& path);

    const std::string& name() const { return name_; }
    SupportKind support_kind() const { return kind_; }
    const std::optional<LatticeInfo>& lattice() const { return lattice_; }

    // Draws one offspring configuration into `out` (cleared first).
    void sample(Rng& rng, std::vector<double>& out) const;

    bool has_closed_form() const;
    // log E[sum_children e^{-beta V}] and derivatives, exact mode only.
    double psi_exact(double beta) const;
    double psi_prime(double beta) const;
    double psi_second(double beta) const;

    // Exhaustive configuration list; throws for continuous laws.
    const std::vector<ConfigEntry>& config_table() const;

    // (mean, var) of the per-child displacement for the dyadic Gaussian law
    std::optional<std::pair<double, double>> gaussian_params() const;

private:
    enum class Builtin { Table, GaussianDyadic };

    std::string name_;
    SupportKind kind_ = SupportKind::FiniteConfig;
    Builtin builtin_ = Builtin::Table;
    std::vector<ConfigEntry> table_;
    std::vector<double> cum_prob_;
    std::optional<LatticeInfo> lattice_;
    double g_mean_ = 0.0; // gaussian_dyadic displacement mean / variance
    double g_var_ = 0.0;

    void finalize_table();
};

// Psi(beta) with beta >= 0: exact when a closed form or config table is
// available, Monte Carlo otherwise.
LogLaplace log_laplace(const ReproductionLaw& law, double beta,
                       std::int64_t n_samples = 100000, std::uint64_t seed = 1);

// Monte Carlo estimate regardless of closed forms (cross-checks the sampler
// against the analytic descriptors).
LogLaplace log_laplace_mc(const ReproductionLaw& law, double beta, std::int64_t n_samples,
                          std::uint64_t seed);

// Sampled first/second tilted moments: E[sum e^{-V}], E[sum V e^{-V}] with
// standard errors.
struct TiltedMoments {
    double m0 = 0.0, m0_se = 0.0;
    double m1 = 0.0, m1_se = 0.0;
};
TiltedMoments sample_tilted_moments(const ReproductionLaw& law, std::int64_t n_samples,
                                    std::uint64_t seed);

// Fills all diagnostic fields and applies the boundary gate
// (|Psi(1)|, |Psi'(1)| <= tol in exact mode, <= 3 SE in MC mode).
LawDiagnostics boundary_check(const ReproductionLaw& law, std::int64_t n_samples = 100000,
                              double tol = 1e-9, std::uint64_t seed = 1);

inline const std::vector<ConfigEntry>& enumerate_configs(const ReproductionLaw& law) {
    return law.config_table();
}

} // namespace brwlab

#endif
