#ifndef BRWLAB_GIBBS_HPP
#define BRWLAB_GIBBS_HPP

#include <cstdint>
#include <vector>

#include "brwlab/tree.hpp"
#include "brwlab/walk.hpp"

namespace brwlab {

// Normalized log-weighted particle set on the final generation; weight i
// refers to final-frame particle i.
struct GibbsMeasure {
    double beta = 1.0; // may be +inf
    std::vector<double> log_weights;
    double log_W = kNegInf; // pre-normalization log partition (finite beta)
};

// beta = +inf puts uniform mass on the argmin set (ties within 1e-12 for
// continuous laws, exact for lattice laws when lattice_mode is set).
GibbsMeasure gibbs(const Population& pop, double beta, bool lattice_mode = false);

// Rescaling applied to ancestral paths before a functional is evaluated.
struct TrajectoryMode {
    bool drift_adjust = false;
    double psi_prime = 0.0; // drift term: value + t n Psi'(beta)
    double sigma_sq = 1.0;  // normalization sigma^2 (sigma_beta^2 in weak disorder)

    static TrajectoryMode plain(double sigma_sq) { return {false, 0.0, sigma_sq}; }
    static TrajectoryMode drifted(double psi_prime, double sigma_sq) {
        return {true, psi_prime, sigma_sq};
    }
};

struct PathGrid {
    std::vector<double> values; // m+1 grid values, values[0] = 0
    std::int64_t n = 0;
    double sigma = 1.0;
    double drift = 0.0;
};

// Rescaled ancestral path of one final particle on the grid t_j = j/m with
// value V(z_{floor(t_j n)}) (left-continuous step convention).
PathGrid rescaled_path(const Population& pop, std::size_t particle, const TrajectoryMode& mode,
                       int m);

// mu_{n,beta}(F): exact weighted average of F over all final particles.
double trajectory_mean(const Population& pop, const GibbsMeasure& g, const GridFunctional& f,
                       const TrajectoryMode& mode, int m);

// One pass over the tree evaluating several functionals; far cheaper than
// repeated trajectory_mean calls.
std::vector<double> trajectory_means(const Population& pop, const GibbsMeasure& g,
                                     const std::vector<GridFunctional>& fs,
                                     const TrajectoryMode& mode, int m);

// index draw from the Gibbs weights
std::size_t sample_particle(const GibbsMeasure& g, Rng& rng);

struct OverlapSample {
    std::vector<double> pairs; // |x ^ y| / n for each sampled pair
};

// i.i.d. pairs from gibbs x gibbs (with replacement); MRCA by parent-chain
// walk; values in [0,1].
OverlapSample sample_pairs_overlap(const Population& pop, const GibbsMeasure& g,
                                   std::int64_t k_pairs, Rng& rng);

// omega_{n,beta}([eps,1]) exactly: two Gibbs draws share a generation-k
// ancestor (k = ceil(eps n)) with probability sum_a m_a^2 over the gen-k
// subtree masses m_a.
double overlap_mass_above(const Population& pop, const GibbsMeasure& g, double eps);

// nu_{n,beta}([a,b]) exactly; a = -inf / b = +inf act as sentinels.
double mass_in_window(const Population& pop, const GibbsMeasure& g, double a, double b);

} // namespace brwlab

#endif
