#ifndef BRWLAB_SPINE_HPP
#define BRWLAB_SPINE_HPP

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "brwlab/laws.hpp"
#include "brwlab/tree.hpp"
#include "brwlab/walk.hpp"

namespace brwlab {

// Path functional over raw positions S_0..S_n (no rescaling).
using PathFunctional = std::function<double(std::span<const double>)>;

struct SpineRun {
    std::vector<double> path;                   // V(w_0..w_n)
    double weight = 1.0;                        // importance weight
    std::vector<std::vector<double>> siblings;  // per-step sibling displacements (diagnostics)
};

enum class WeightMode {
    Plain,         // estimates E[sum_{|z|=n} g]      as E[e^{S_n} g(S)]
    TiltExpMinusV, // estimates E[sum e^{-V(z)} g]    as E[g(S)]
};

struct McEstimate {
    Estimate est;
    double ess = 0.0;
    bool low_ess = false; // effective sample size below 50
};

// Many-to-one estimator over the associated random walk.
McEstimate many_to_one(const WalkLaw& walk, const PathFunctional& g, std::int64_t n,
                       std::int64_t n_paths, WeightMode mode, std::uint64_t seed,
                       int threads = 1);

// Spine run under the size-biased measure: offspring from the size-biased
// law, spine child chosen proportional to e^{-V(child)}. The spine path has
// the law of the associated walk.
SpineRun q_spine(const ReproductionLaw& law, std::int64_t n, Rng& rng,
                 bool record_siblings = false);

// Spine run under the barrier-conditioned change of measure. Finite-config
// laws are sampled by exact stepwise reweighting (weight 1); continuous laws
// by importance weighting against the q_spine run, resampling runs that dip
// below -L and recording R_L(S_n)/R_L(0) in spine_weight. attempts counts
// all runs including rejected ones.
SpineRun qL_spine(const ReproductionLaw& law, const RenewalTable& renewal, double L,
                  std::int64_t n, Rng& rng, std::int64_t* attempts = nullptr);

// Self-normalized mean of g over qL spine runs, with ESS reporting.
McEstimate qL_spine_functional_mean(const ReproductionLaw& law, const RenewalTable& renewal,
                                    double L, std::int64_t n, std::int64_t n_runs,
                                    const PathFunctional& g, std::uint64_t seed,
                                    int threads = 1);

// E[W^{(L)}_{n,beta}(F)] = E[e^{-(beta-1) S_n} F(S^(n)) 1_{min >= -L}] by the
// many-to-one reduction; F is a grid functional of the rescaled path on an
// (m_grid+1)-point grid (nullptr for F == 1). Reaches n far beyond direct
// tree simulation.
McEstimate spine_W_estimator(const ReproductionLaw& law, double beta, std::int64_t n,
                             const GridFunctional& f, double L, std::int64_t n_runs,
                             int m_grid, std::uint64_t seed, int threads = 1);

struct ExactExpectation {
    double value = 0.0;
    std::int64_t n = 0;
    std::string functional_id;
    std::string law_name;
};

// Full enumeration over all configuration assignments of all particles;
// exact products of probabilities, no sampling error. Guarded for n <= 3
// and finite-config laws.
using TreeFunctional = std::function<double(const Population&)>;
ExactExpectation brute_force(const ReproductionLaw& law, std::int64_t n, const TreeFunctional& f,
                             std::string functional_id, std::int64_t max_assignments = 10000000);

} // namespace brwlab

#endif
