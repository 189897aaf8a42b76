#ifndef BRWLAB_LIMIT_PATHS_HPP
#define BRWLAB_LIMIT_PATHS_HPP

#include <cstdint>
#include <vector>

#include "brwlab/rng.hpp"

namespace brwlab {

enum class LimitKind { Meander, Bessel3, Excursion, BesselBridge, Brownian };

// Continuum reference path on a uniform grid of m+1 points. Meander samples
// carry the Imhof importance weight sqrt(pi/2)/R(1): absolute functionals of
// the meander are plain averages of weight * F(path).
struct LimitPath {
    LimitKind kind = LimitKind::Brownian;
    std::vector<double> samples; // m+1 values on [0, length]
    double weight = 1.0;
};

struct LimitPathParams {
    double start = 0.0;  // Bessel3 / BesselBridge starting point b >= 0
    double length = 1.0; // BesselBridge length
};

LimitPath sample_limit_path(LimitKind kind, const LimitPathParams& params, int m, Rng& rng);

// Vervaat rotation of a Brownian bridge; cross-check sampler for the
// normalized excursion.
LimitPath vervaat_excursion(int m, Rng& rng);

// E[e^{c M(1)}] = 1 + sqrt(2 pi) c e^{c^2/2} Phi(c), with an asymptotic
// branch for c << 0 where the direct form would overflow.
double meander_laplace(double c);

} // namespace brwlab

#endif
