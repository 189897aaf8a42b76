#include "brwlab/gibbs.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "brwlab/stats.hpp"

namespace brwlab {

GibbsMeasure gibbs(const Population& pop, double beta, bool lattice_mode) {
    const GenerationFrame& last = pop.frames.back();
    if (last.position.empty())
        throw std::runtime_error("gibbs: extinct population has no Gibbs measure");
    GibbsMeasure g;
    g.beta = beta;
    g.log_weights.resize(last.position.size());

    if (std::isinf(beta) && beta > 0.0) {
        // uniform measure on the argmin set
        const double tol = lattice_mode ? 0.0 : 1e-12;
        double vmin = kPosInf;
        for (double v : last.position) vmin = std::min(vmin, v);
        std::int64_t ties = 0;
        for (double v : last.position)
            if (v <= vmin + tol) ++ties;
        const double w = -std::log(static_cast<double>(ties));
        for (std::size_t i = 0; i < last.position.size(); ++i)
            g.log_weights[i] = last.position[i] <= vmin + tol ? w : kNegInf;
        g.log_W = kNegInf;
        return g;
    }

    StreamingLse lse;
    for (double v : last.position) lse.push(-beta * v);
    g.log_W = lse.value();
    for (std::size_t i = 0; i < last.position.size(); ++i)
        g.log_weights[i] = -beta * last.position[i] - g.log_W;
    return g;
}

PathGrid rescaled_path(const Population& pop, std::size_t particle, const TrajectoryMode& mode,
                       int m) {
    const std::int64_t n = pop.generation();
    if (n < 1) throw std::invalid_argument("rescaled_path: need at least one generation");
    if (m < 1) throw std::invalid_argument("rescaled_path: m >= 1 required");
    const std::vector<double> path = path_of(pop, particle);

    PathGrid out;
    out.n = n;
    out.sigma = std::sqrt(mode.sigma_sq);
    out.drift = mode.drift_adjust ? mode.psi_prime : 0.0;
    out.values.resize(static_cast<std::size_t>(m) + 1);
    const double denom = out.sigma * std::sqrt(static_cast<double>(n));
    for (int j = 0; j <= m; ++j) {
        const double t = static_cast<double>(j) / static_cast<double>(m);
        const auto idx = static_cast<std::size_t>(t * static_cast<double>(n));
        const double v = path[std::min(idx, path.size() - 1)] +
                         (mode.drift_adjust ? t * static_cast<double>(n) * mode.psi_prime : 0.0);
        out.values[static_cast<std::size_t>(j)] = v / denom;
    }
    return out;
}

std::vector<double> trajectory_means(const Population& pop, const GibbsMeasure& g,
                                     const std::vector<GridFunctional>& fs,
                                     const TrajectoryMode& mode, int m) {
    const GenerationFrame& last = pop.frames.back();
    if (last.position.empty()) throw std::runtime_error("trajectory_means: extinct population");
    if (g.log_weights.size() != last.position.size())
        throw std::invalid_argument("trajectory_means: measure does not match population");

    std::vector<double> acc(fs.size(), 0.0);
    for (std::size_t i = 0; i < last.position.size(); ++i) {
        const double w = std::exp(g.log_weights[i]);
        if (w == 0.0) continue;
        const PathGrid grid = rescaled_path(pop, i, mode, m);
        for (std::size_t k = 0; k < fs.size(); ++k) acc[k] += w * fs[k](grid.values);
    }
    return acc;
}

double trajectory_mean(const Population& pop, const GibbsMeasure& g, const GridFunctional& f,
                       const TrajectoryMode& mode, int m) {
    return trajectory_means(pop, g, {f}, mode, m)[0];
}

std::size_t sample_particle(const GibbsMeasure& g, Rng& rng) {
    const double u = rng.uniform();
    double cum = 0.0;
    for (std::size_t i = 0; i < g.log_weights.size(); ++i) {
        cum += std::exp(g.log_weights[i]);
        if (u <= cum) return i;
    }
    return g.log_weights.size() - 1;
}

OverlapSample sample_pairs_overlap(const Population& pop, const GibbsMeasure& g,
                                   std::int64_t k_pairs, Rng& rng) {
    if (k_pairs < 1) throw std::invalid_argument("sample_pairs_overlap: k_pairs >= 1 required");
    const std::int64_t n = pop.generation();
    OverlapSample out;
    out.pairs.reserve(static_cast<std::size_t>(k_pairs));
    for (std::int64_t k = 0; k < k_pairs; ++k) {
        std::size_t a = sample_particle(g, rng);
        std::size_t b = sample_particle(g, rng);
        std::int64_t gen = n;
        while (a != b && gen > 0) {
            a = pop.frames[static_cast<std::size_t>(gen)].parent[a];
            b = pop.frames[static_cast<std::size_t>(gen)].parent[b];
            --gen;
        }
        out.pairs.push_back(n > 0 ? static_cast<double>(gen) / static_cast<double>(n) : 1.0);
    }
    return out;
}

double overlap_mass_above(const Population& pop, const GibbsMeasure& g, double eps) {
    const std::int64_t n = pop.generation();
    if (n == 0) return 1.0;
    const std::int64_t k =
        std::min<std::int64_t>(n, static_cast<std::int64_t>(std::ceil(eps * static_cast<double>(n))));
    if (k <= 0) return 1.0; // every pair shares the root
    // map each final particle to its generation-k ancestor
    const std::size_t count = pop.frames.back().position.size();
    std::vector<std::uint32_t> anc(count);
    for (std::size_t i = 0; i < count; ++i) anc[i] = static_cast<std::uint32_t>(i);
    for (std::int64_t g2 = n; g2 > k; --g2) {
        const auto& parents = pop.frames[static_cast<std::size_t>(g2)].parent;
        for (std::size_t i = 0; i < count; ++i) anc[i] = parents[anc[i]];
    }
    std::vector<double> mass(pop.frames[static_cast<std::size_t>(k)].position.size(), 0.0);
    for (std::size_t i = 0; i < count; ++i) mass[anc[i]] += std::exp(g.log_weights[i]);
    double total = 0.0;
    for (double m : mass) total += m * m;
    return total;
}

double mass_in_window(const Population& pop, const GibbsMeasure& g, double a, double b) {
    if (a > b) return 0.0;
    const GenerationFrame& last = pop.frames.back();
    double mass = 0.0;
    for (std::size_t i = 0; i < last.position.size(); ++i)
        if (last.position[i] >= a && last.position[i] <= b) mass += std::exp(g.log_weights[i]);
    return mass;
}

} // namespace brwlab
