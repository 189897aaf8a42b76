#include "brwlab/spine.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "brwlab/parallel.hpp"

namespace brwlab {

McEstimate many_to_one(const WalkLaw& walk, const PathFunctional& g, std::int64_t n,
                       std::int64_t n_paths, WeightMode mode, std::uint64_t seed, int threads) {
    if (n < 0 || n_paths < 1) throw std::invalid_argument("many_to_one: bad arguments");
    struct Acc {
        MeanAcc values;
        double wsum = 0.0, w2sum = 0.0;
    };
    Acc total = chunked_reduce(
        n_paths, threads, Acc{},
        [&](std::int64_t item, Acc& acc) {
            Rng rng = make_stream(seed, static_cast<std::uint64_t>(item) * 2 + 1);
            std::vector<double> path(static_cast<std::size_t>(n) + 1, 0.0);
            double s = 0.0;
            for (std::int64_t i = 1; i <= n; ++i) {
                s += walk.sample_step(rng);
                path[static_cast<std::size_t>(i)] = s;
            }
            const double gv = g(path);
            const double w = mode == WeightMode::Plain ? std::exp(s) : 1.0;
            acc.values.add(w * gv);
            acc.wsum += w;
            acc.w2sum += w * w;
        },
        [](Acc& a, const Acc& b) {
            a.values.merge(b.values);
            a.wsum += b.wsum;
            a.w2sum += b.w2sum;
        });

    McEstimate out;
    out.est = {total.values.mean(), total.values.se(), n_paths};
    out.ess = total.w2sum > 0.0 ? total.wsum * total.wsum / total.w2sum
                                : static_cast<double>(n_paths);
    out.low_ess = out.ess < 50.0;
    return out;
}

namespace {

// Size-biased offspring draw plus spine-child choice for a finite-config law.
// Returns (config index, child index).
std::pair<std::size_t, std::size_t> sample_sized_biased_config(const ReproductionLaw& law,
                                                               Rng& rng) {
    const auto& table = law.config_table();
    // q_i ~ p_i X_i with X_i = sum_j e^{-d_ij}; sums to e^{Psi(1)} = 1
    double total = 0.0;
    const double u = rng.uniform();
    std::size_t cfg = table.size() - 1;
    double norm = 0.0;
    for (const auto& e : table) {
        double x = 0.0;
        for (double d : e.displacements) x += std::exp(-d);
        norm += e.prob * x;
    }
    for (std::size_t i = 0; i < table.size(); ++i) {
        double x = 0.0;
        for (double d : table[i].displacements) x += std::exp(-d);
        total += table[i].prob * x / norm;
        if (u <= total) {
            cfg = i;
            break;
        }
    }
    const auto& kids = table[cfg].displacements;
    double xw = 0.0;
    for (double d : kids) xw += std::exp(-d);
    const double u2 = rng.uniform() * xw;
    double run = 0.0;
    std::size_t child = kids.size() - 1;
    for (std::size_t j = 0; j < kids.size(); ++j) {
        run += std::exp(-kids[j]);
        if (u2 <= run) {
            child = j;
            break;
        }
    }
    return {cfg, child};
}

} // namespace

SpineRun q_spine(const ReproductionLaw& law, std::int64_t n, Rng& rng, bool record_siblings) {
    if (n < 0) throw std::invalid_argument("q_spine: n >= 0 required");
    SpineRun run;
    run.path.reserve(static_cast<std::size_t>(n) + 1);
    run.path.push_back(0.0);

    const auto gparams = law.gaussian_params();
    for (std::int64_t step = 0; step < n; ++step) {
        const double a = run.path.back();
        if (gparams) {
            // size-biased pair: one child from the e^{-x}-tilted normal
            // (mean m - s^2), the other from the plain law; spine child
            // proportional to e^{-V}
            const auto [m, s2] = *gparams;
            const double sd = std::sqrt(s2);
            double d_tilt = (m - s2) + sd * rng.normal();
            double d_plain = m + sd * rng.normal();
            if (rng.uniform() < 0.5) std::swap(d_tilt, d_plain);
            const double w1 = std::exp(-d_tilt);
            const double w2 = std::exp(-d_plain);
            const bool pick_first = rng.uniform() * (w1 + w2) <= w1;
            const double chosen = pick_first ? d_tilt : d_plain;
            if (record_siblings) run.siblings.push_back({pick_first ? d_plain : d_tilt});
            run.path.push_back(a + chosen);
        } else {
            const auto [cfg, child] = sample_sized_biased_config(law, rng);
            const auto& kids = law.config_table()[cfg].displacements;
            if (record_siblings) {
                std::vector<double> sibs;
                for (std::size_t j = 0; j < kids.size(); ++j)
                    if (j != child) sibs.push_back(kids[j]);
                run.siblings.push_back(std::move(sibs));
            }
            run.path.push_back(a + kids[child]);
        }
    }
    return run;
}

SpineRun qL_spine(const ReproductionLaw& law, const RenewalTable& renewal, double L,
                  std::int64_t n, Rng& rng, std::int64_t* attempts) {
    if (n < 0 || L < 0.0) throw std::invalid_argument("qL_spine: bad arguments");

    if (law.support_kind() == SupportKind::FiniteConfig) {
        // exact stepwise reweighting by D_1^{(L)}/R_L(a)
        const auto& table = law.config_table();
        SpineRun run;
        run.path.push_back(0.0);
        for (std::int64_t step = 0; step < n; ++step) {
            const double a = run.path.back();
            std::vector<double> cfg_w(table.size(), 0.0);
            double norm = 0.0;
            for (std::size_t i = 0; i < table.size(); ++i) {
                double w = 0.0;
                for (double d : table[i].displacements) {
                    const double pos = a + d;
                    if (pos < -L) continue;
                    w += renewal.value(L + pos) * std::exp(-d);
                }
                cfg_w[i] = table[i].prob * w;
                norm += cfg_w[i];
            }
            if (!(norm > 0.0)) throw std::runtime_error("qL_spine: no admissible offspring");
            double u = rng.uniform() * norm;
            std::size_t cfg = table.size() - 1;
            for (std::size_t i = 0; i < table.size(); ++i) {
                u -= cfg_w[i];
                if (u <= 0.0) {
                    cfg = i;
                    break;
                }
            }
            const auto& kids = table[cfg].displacements;
            double child_norm = 0.0;
            for (double d : kids)
                if (a + d >= -L) child_norm += renewal.value(L + a + d) * std::exp(-d);
            double u2 = rng.uniform() * child_norm;
            double chosen = kids.back();
            for (double d : kids) {
                if (a + d < -L) continue;
                u2 -= renewal.value(L + a + d) * std::exp(-d);
                if (u2 <= 0.0) {
                    chosen = d;
                    break;
                }
            }
            run.path.push_back(a + chosen);
        }
        if (attempts) *attempts = 1;
        return run;
    }

    // continuous law: importance weighting against the q_spine run
    const double r0 = renewal.value(L);
    for (std::int64_t attempt = 1;; ++attempt) {
        SpineRun run = q_spine(law, n, rng);
        bool ok = true;
        for (double v : run.path)
            if (v < -L) {
                ok = false;
                break;
            }
        if (!ok) continue;
        run.weight = renewal.value(L + run.path.back()) / r0;
        if (attempts) *attempts = attempt;
        return run;
    }
}

McEstimate qL_spine_functional_mean(const ReproductionLaw& law, const RenewalTable& renewal,
                                    double L, std::int64_t n, std::int64_t n_runs,
                                    const PathFunctional& g, std::uint64_t seed, int threads) {
    struct Acc {
        WeightedAcc w;
    };
    Acc total = chunked_reduce(
        n_runs, threads, Acc{},
        [&](std::int64_t item, Acc& acc) {
            Rng rng = make_stream(seed, static_cast<std::uint64_t>(item) * 2 + 1);
            SpineRun run = qL_spine(law, renewal, L, n, rng);
            acc.w.add(g(run.path), run.weight);
        },
        [](Acc& a, const Acc& b) { a.w.merge(b.w); });

    McEstimate out;
    out.est = {total.w.mean(), total.w.se(), n_runs};
    out.ess = total.w.ess();
    out.low_ess = out.ess < 50.0;
    return out;
}

McEstimate spine_W_estimator(const ReproductionLaw& law, double beta, std::int64_t n,
                             const GridFunctional& f, double L, std::int64_t n_runs, int m_grid,
                             std::uint64_t seed, int threads) {
    if (n < 0 || n_runs < 1 || L < 0.0 || m_grid < 1)
        throw std::invalid_argument("spine_W_estimator: bad arguments");
    const WalkLaw walk = WalkLaw::from_reproduction(law);
    const double tilt = beta - 1.0;
    const double scale = n > 0 ? 1.0 / (walk.sigma() * std::sqrt(static_cast<double>(n))) : 1.0;

    struct Acc {
        MeanAcc values;
        double wsum = 0.0, w2sum = 0.0;
    };
    Acc total = chunked_reduce(
        n_runs, threads, Acc{},
        [&](std::int64_t item, Acc& acc) {
            Rng rng = make_stream(seed, static_cast<std::uint64_t>(item) * 2 + 1);
            if (n == 0) {
                std::vector<double> grid(static_cast<std::size_t>(m_grid) + 1, 0.0);
                acc.values.add(f ? f(grid) : 1.0);
                acc.wsum += 1.0;
                acc.w2sum += 1.0;
                return;
            }
            std::vector<double> gridvals;
            if (f) gridvals.assign(static_cast<std::size_t>(m_grid) + 1, 0.0);
            std::int64_t next_grid = 1;
            while (next_grid <= m_grid && next_grid * n / m_grid == 0) ++next_grid;
            double s = 0.0;
            for (std::int64_t i = 1; i <= n; ++i) {
                s += walk.sample_step(rng);
                if (s < -L) {
                    acc.values.add(0.0);
                    return;
                }
                if (f) {
                    while (next_grid <= m_grid && next_grid * n / m_grid == i) {
                        gridvals[static_cast<std::size_t>(next_grid)] = s * scale;
                        ++next_grid;
                    }
                }
            }
            const double w = std::exp(-tilt * s);
            acc.values.add(w * (f ? f(gridvals) : 1.0));
            acc.wsum += w;
            acc.w2sum += w * w;
        },
        [](Acc& a, const Acc& b) {
            a.values.merge(b.values);
            a.wsum += b.wsum;
            a.w2sum += b.w2sum;
        });

    McEstimate out;
    out.est = {total.values.mean(), total.values.se(), n_runs};
    out.ess = total.w2sum > 0.0 ? total.wsum * total.wsum / total.w2sum
                                : static_cast<double>(n_runs);
    out.low_ess = beta < 1.0 && out.ess < 50.0;
    return out;
}

namespace {

struct BruteForceState {
    const std::vector<ConfigEntry>* table = nullptr;
    const TreeFunctional* f = nullptr;
    std::int64_t depth_target = 0;
    std::int64_t max_assignments = 0;
    std::int64_t assignments = 0;
    double acc = 0.0;

    void leaf(Population& pop, double prob) {
        if (++assignments > max_assignments)
            throw std::runtime_error("brute_force: assignment budget exceeded");
        acc += prob * (*f)(pop);
    }

    // extend to full depth with empty frames once extinct
    void extinct(Population& pop, double prob) {
        const std::size_t before = pop.frames.size();
        while (static_cast<std::int64_t>(pop.frames.size()) - 1 < depth_target)
            pop.frames.emplace_back();
        pop.alive = false;
        leaf(pop, prob);
        pop.frames.resize(before);
        pop.alive = true;
    }

    void recurse_generation(Population& pop, double prob) {
        if (pop.generation() == depth_target) {
            leaf(pop, prob);
            return;
        }
        if (pop.frames.back().position.empty()) {
            extinct(pop, prob);
            return;
        }
        GenerationFrame next;
        assign_particle(pop, 0, next, prob);
    }

    void assign_particle(Population& pop, std::size_t p, GenerationFrame& next, double prob) {
        const GenerationFrame& cur = pop.frames.back();
        if (p == cur.position.size()) {
            pop.frames.push_back(std::move(next));
            recurse_generation(pop, prob);
            next = std::move(pop.frames.back());
            pop.frames.pop_back();
            // restore: strip the children added by this level's caller loop
            return;
        }
        const double base = cur.position[p];
        for (const ConfigEntry& e : *table) {
            const std::size_t added = e.displacements.size();
            for (double d : e.displacements) {
                next.position.push_back(base + d);
                next.parent.push_back(static_cast<std::uint32_t>(p));
            }
            assign_particle(pop, p + 1, next, prob * e.prob);
            next.position.resize(next.position.size() - added);
            next.parent.resize(next.parent.size() - added);
        }
    }
};

} // namespace

ExactExpectation brute_force(const ReproductionLaw& law, std::int64_t n, const TreeFunctional& f,
                             std::string functional_id, std::int64_t max_assignments) {
    if (law.support_kind() != SupportKind::FiniteConfig)
        throw std::invalid_argument("brute_force: finite-config law required");
    if (n < 0 || n > 3) throw std::invalid_argument("brute_force: n <= 3 required");

    BruteForceState state;
    state.table = &law.config_table();
    state.f = &f;
    state.depth_target = n;
    state.max_assignments = max_assignments;

    Population pop = make_root(law.name());
    state.recurse_generation(pop, 1.0);

    ExactExpectation out;
    out.value = state.acc;
    out.n = n;
    out.functional_id = std::move(functional_id);
    out.law_name = law.name();
    return out;
}

} // namespace brwlab
