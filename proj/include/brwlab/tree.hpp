#ifndef BRWLAB_TREE_HPP
#define BRWLAB_TREE_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "brwlab/laws.hpp"
#include "brwlab/rng.hpp"
#include "brwlab/walk.hpp"

namespace brwlab {

struct GenerationFrame {
    std::vector<double> position;
    std::vector<std::uint32_t> parent; // indices into the previous frame; empty at the root
};

// Second barrier at (3/2) log n - K, active from generation floor(n/2).
struct SecondBarrier {
    double K = 0.0;
};

// Window event A_n: position intervals per generation controlled by
// (k_n, alpha-, alpha+); the lower barrier -L comes from BarrierSpec::lower_L.
struct WindowBarrier {
    std::int64_t k_n = 0;
    double alpha_minus = 0.0;
    double alpha_plus = 0.0;
};

struct BarrierSpec {
    std::optional<double> lower_L;
    std::optional<SecondBarrier> second;
    std::optional<WindowBarrier> window;
    std::int64_t horizon = 0; // target generation n; needed by second/window levels

    static BarrierSpec none() { return {}; }
    static BarrierSpec lower(double L) {
        BarrierSpec b;
        b.lower_L = L;
        return b;
    }

    // allowed interval [lo, hi] for a particle at generation j
    std::pair<double, double> allowed(std::int64_t j) const;
    bool any() const { return lower_L || second || window; }
};

struct Population {
    std::vector<GenerationFrame> frames; // frames[g] = generation g
    bool alive = true;
    bool overflowed = false; // max_particles guard hit; result is partial
    std::string law_name;
    std::vector<std::pair<double, double>> barrier_log; // applied interval per grown generation

    std::int64_t generation() const { return static_cast<std::int64_t>(frames.size()) - 1; }
    const GenerationFrame& last() const { return frames.back(); }
    std::size_t n_final_particles() const { return frames.back().position.size(); }
};

Population make_root(std::string law_name);

// Appends one generation; applies barrier killing; sets alive = false on
// extinction. Particle counts above max_particles abort the replicate with
// the partial result flagged.
void grow(Population& pop, const ReproductionLaw& law, const BarrierSpec& barrier, Rng& rng,
          std::size_t max_particles = (1u << 22));

// Convenience: root + n grow steps.
Population grow_tree(const ReproductionLaw& law, std::int64_t n, const BarrierSpec& barrier,
                     Rng& rng, std::size_t max_particles = (1u << 22));

struct MartingaleReadout {
    double log_W = kNegInf; // log W_{n,beta}
    double D = 0.0;         // derivative martingale D_n
    double D_L = 0.0;       // truncated D_n^{(L)}; requires a renewal table
    double min_pos = 0.0;   // minimum position at the final generation
    std::int64_t n_particles = 0;
};

// log_W by streaming log-sum-exp; D as an exact sum; D_L = sum R(L+V) e^{-V}
// over particles whose whole ancestral path stayed >= -L.
MartingaleReadout readout(const Population& pop, double beta,
                          const RenewalTable* renewal = nullptr, double L = 0.0);

// Ancestral positions V(z_0..z_n) of a final-generation particle.
std::vector<double> path_of(const Population& pop, std::size_t particle_index);
// same, for a particle of an arbitrary generation
std::vector<double> path_of(const Population& pop, std::int64_t gen, std::size_t particle_index);

struct MinStats {
    double global_min = 0.0; // over all particles and generations
    double final_min = 0.0;  // over the final generation
};
MinStats min_trajectory_stats(const Population& pop);

// running min over each final particle's ancestral path (forward sweep)
std::vector<double> path_minima(const Population& pop);

// versioned binary snapshot
void save_population(const Population& pop, const std::string& path);
Population load_population(const std::string& path);

} // namespace brwlab

#endif
