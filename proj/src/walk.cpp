#include "brwlab/walk.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "brwlab/parallel.hpp"

namespace brwlab {

// --- WalkLaw ----------------------------------------------------------------

WalkLaw WalkLaw::from_reproduction(const ReproductionLaw& law) {
    if (law.support_kind() == SupportKind::FiniteConfig) {
        // exact tilted step table: P(step = d_ij) = p_i e^{-d_ij}
        std::vector<std::pair<double, double>> vp;
        for (const auto& e : law.config_table())
            for (double d : e.displacements) vp.emplace_back(d, e.prob * std::exp(-d));
        double total = 0.0;
        for (auto& [v, p] : vp) total += p;
        if (std::abs(total - 1.0) > 1e-9)
            throw std::invalid_argument("walk_from_reproduction: law '" + law.name() +
                                        "' is not in the boundary case (Psi(1) != 0)");
        for (auto& [v, p] : vp) p /= total;
        return discrete(std::move(vp), law.name(), law.lattice());
    }
    if (const auto params = law.gaussian_params()) {
        // tilting Normal(m, s^2) by e^{-x} shifts the mean by -s^2; here
        // m = s^2 = 2 log 2, so the step is Normal(0, 2 log 2)
        return gaussian(params->first - params->second, params->second, law.name());
    }
    throw std::invalid_argument("walk_from_reproduction: no exact tilted step law for '" +
                                law.name() + "'");
}

WalkLaw WalkLaw::gaussian(double mean, double var, std::string origin) {
    if (!(var > 0.0)) throw std::invalid_argument("WalkLaw::gaussian: var must be > 0");
    WalkLaw w;
    w.kind_ = Kind::Gaussian;
    w.mean_ = mean;
    w.var_ = var;
    w.sigma_sq_ = var + mean * mean;
    w.origin_ = std::move(origin);
    return w;
}

WalkLaw WalkLaw::discrete(std::vector<std::pair<double, double>> value_prob, std::string origin,
                          std::optional<LatticeInfo> lattice) {
    if (value_prob.empty()) throw std::invalid_argument("WalkLaw::discrete: empty table");
    WalkLaw w;
    w.kind_ = Kind::Discrete;
    double total = 0.0, m1 = 0.0, m2 = 0.0;
    for (auto& [v, p] : value_prob) {
        if (p < 0.0) throw std::invalid_argument("WalkLaw::discrete: negative probability");
        total += p;
        w.values_.push_back(v);
        w.cum_.push_back(total);
        m1 += v * p;
        m2 += v * v * p;
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw std::invalid_argument("WalkLaw::discrete: probabilities sum to " +
                                    std::to_string(total));
    w.cum_.back() = 1.0 + 1e-16;
    w.mean_ = m1;
    w.sigma_sq_ = m2; // E[S1^2]; the walk is centred in the boundary case
    w.lattice_ = lattice;
    w.origin_ = std::move(origin);
    return w;
}

WalkLaw WalkLaw::plus_minus_one() {
    return discrete({{-1.0, 0.5}, {1.0, 0.5}}, "plus_minus_one", LatticeInfo{2.0, 1.0});
}

WalkLaw WalkLaw::negated() const {
    WalkLaw w = *this;
    if (kind_ == Kind::Gaussian) {
        w.mean_ = -mean_;
    } else {
        for (double& v : w.values_) v = -v;
    }
    if (w.lattice_) w.lattice_->offset = -w.lattice_->offset;
    w.origin_ = origin_ + "-negated";
    return w;
}

double WalkLaw::sample_step(Rng& rng) const {
    if (kind_ == Kind::Gaussian) return mean_ + std::sqrt(var_) * rng.normal();
    const double u = rng.uniform();
    const auto it = std::upper_bound(cum_.begin(), cum_.end(), u);
    const std::size_t idx = std::min(values_.size() - 1,
                                     static_cast<std::size_t>(it - cum_.begin()));
    return values_[idx];
}

double WalkLaw::sigma() const { return std::sqrt(sigma_sq_); }

// --- ladder heights ----------------------------------------------------------

namespace {

// One H1 draw: walk until S < 0, return -S. Budget overruns are redrawn
// and counted by the caller.
bool draw_ladder_height(const WalkLaw& walk, Rng& rng, std::int64_t budget, double& h_out) {
    double s = 0.0;
    for (std::int64_t i = 0; i < budget; ++i) {
        s += walk.sample_step(rng);
        if (s < 0.0) {
            h_out = -s;
            return true;
        }
    }
    return false;
}

} // namespace

LadderResult ladder_heights(const WalkLaw& walk, std::int64_t n_paths, Rng& rng,
                            std::int64_t step_budget) {
    if (n_paths < 1) throw std::invalid_argument("ladder_heights: n_paths >= 1 required");
    LadderResult out;
    out.heights.reserve(static_cast<std::size_t>(n_paths));
    for (std::int64_t i = 0; i < n_paths; ++i) {
        double h = 0.0;
        while (!draw_ladder_height(walk, rng, step_budget, h)) ++out.overruns;
        out.heights.push_back(h);
    }
    return out;
}

// --- renewal table -------------------------------------------------------------

double RenewalTable::value(double u, bool* clamped) const {
    if (u < 0.0) throw std::invalid_argument("RenewalTable::value: u < 0");
    if (grid.empty()) throw std::runtime_error("RenewalTable::value: empty table");
    if (u >= grid.back()) {
        if (clamped && u > grid.back()) *clamped = true;
        return r_values.back() + slope * (u - grid.back());
    }
    const auto it = std::upper_bound(grid.begin(), grid.end(), u);
    const std::size_t hi = static_cast<std::size_t>(it - grid.begin());
    const std::size_t lo = hi - 1;
    const double t = (u - grid[lo]) / (grid[hi] - grid[lo]);
    return r_values[lo] * (1.0 - t) + r_values[hi] * t;
}

double RenewalTable::integral(double a, double b) const {
    if (a > b) throw std::invalid_argument("RenewalTable::integral: a > b");
    // segment-exact integral of the piecewise-linear interpolant
    double acc = 0.0;
    double x0 = a, f0 = value(a);
    auto it = std::upper_bound(grid.begin(), grid.end(), a);
    while (it != grid.end() && *it < b) {
        const double x1 = *it;
        const double f1 = value(x1);
        acc += 0.5 * (f0 + f1) * (x1 - x0);
        x0 = x1;
        f0 = f1;
        ++it;
    }
    acc += 0.5 * (f0 + value(b)) * (b - x0);
    return acc;
}

std::vector<double> default_renewal_grid(const WalkLaw& walk) {
    const double s = walk.sigma();
    std::vector<double> grid;
    for (int i = 0; i <= 200; ++i) grid.push_back(static_cast<double>(i) * s / 4.0);
    return grid;
}

RenewalTable renewal_function(const WalkLaw& walk, std::vector<double> grid,
                              std::int64_t n_ladder_samples, std::uint64_t seed, int threads,
                              std::int64_t ladder_step_budget) {
    if (n_ladder_samples < 1)
        throw std::invalid_argument("renewal_function: n_ladder_samples >= 1 required");
    if (grid.empty() || grid.front() != 0.0)
        throw std::invalid_argument("renewal_function: grid must start at 0");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1]) || grid[i] < 0.0)
            throw std::invalid_argument("renewal_function: grid must be nonnegative increasing");

    struct Acc {
        std::vector<std::int64_t> arrivals;
        std::int64_t overruns = 0;
    };
    Acc init;
    init.arrivals.assign(grid.size(), 0);
    const double u_max = grid.back();

    Acc total = chunked_reduce(
        n_ladder_samples, threads, init,
        [&](std::int64_t run, Acc& acc) {
            Rng rng = make_stream(seed, static_cast<std::uint64_t>(run) * 2 + 101);
            double t = 0.0;
            while (true) {
                double h = 0.0;
                while (!draw_ladder_height(walk, rng, ladder_step_budget, h)) ++acc.overruns;
                t += h;
                if (t > u_max) break;
                const auto it = std::lower_bound(grid.begin(), grid.end(), t);
                acc.arrivals[static_cast<std::size_t>(it - grid.begin())] += 1;
            }
        },
        [](Acc& a, const Acc& b) {
            for (std::size_t i = 0; i < a.arrivals.size(); ++i) a.arrivals[i] += b.arrivals[i];
            a.overruns += b.overruns;
        },
        /*chunk_size=*/256);

    RenewalTable table;
    table.grid = std::move(grid);
    table.n_ladder_samples = n_ladder_samples;
    table.ladder_overruns = total.overruns;
    table.r_values.resize(table.grid.size());
    std::int64_t cum = 0;
    for (std::size_t i = 0; i < table.grid.size(); ++i) {
        cum += total.arrivals[i];
        table.r_values[i] =
            1.0 + static_cast<double>(cum) / static_cast<double>(n_ladder_samples);
    }
    // slope from the upper half of the grid, where R is near-linear by the
    // renewal theorem
    const std::size_t half = table.grid.size() / 2;
    std::vector<double> xs(table.grid.begin() + half, table.grid.end());
    std::vector<double> ys(table.r_values.begin() + half, table.r_values.end());
    table.slope = xs.size() >= 2 ? linear_fit(xs, ys).slope : 1.0;
    return table;
}

// --- survival -----------------------------------------------------------------

SurvivalEstimate survival_probability(const WalkLaw& walk, double u, std::int64_t n,
                                      std::int64_t n_paths, std::uint64_t seed, int threads) {
    if (u < 0.0) throw std::invalid_argument("survival_probability: u >= 0 required");
    if (n < 1 || n_paths < 1)
        throw std::invalid_argument("survival_probability: n, n_paths >= 1 required");
    struct Acc {
        std::int64_t survivors = 0;
    };
    Acc total = chunked_reduce(
        n_paths, threads, Acc{},
        [&](std::int64_t path, Acc& acc) {
            Rng rng = make_stream(seed, static_cast<std::uint64_t>(path) * 2 + 1);
            double s = 0.0;
            for (std::int64_t i = 0; i < n; ++i) {
                s += walk.sample_step(rng);
                if (s < -u) return;
            }
            acc.survivors += 1;
        },
        [](Acc& a, const Acc& b) { a.survivors += b.survivors; });

    SurvivalEstimate est;
    est.survivors = total.survivors;
    est.n_paths = n_paths;
    est.value = static_cast<double>(total.survivors) / static_cast<double>(n_paths);
    est.ci = wilson_ci(total.survivors, n_paths);
    return est;
}

// --- constants ------------------------------------------------------------------

namespace {

struct ThetaFit {
    double theta = 0.0;
    double se = 0.0;
};

ThetaFit fit_theta(const WalkLaw& walk, const RenewalTable& table,
                   const ConstantsBudget& budget, std::uint64_t seed_salt) {
    const double sig = walk.sigma();
    const double sqn = std::sqrt(static_cast<double>(budget.n_for_theta));
    std::vector<double> thetas, ses;
    for (std::size_t k = 0; k < budget.theta_u_sigmas.size(); ++k) {
        const double u = budget.theta_u_sigmas[k] * sig;
        const auto surv = survival_probability(walk, u, budget.n_for_theta,
                                               budget.n_survival_paths,
                                               budget.seed + seed_salt + 977 * k, budget.threads);
        const double r = table.value(u);
        thetas.push_back(sqn * surv.value / r);
        ses.push_back(sqn * (surv.ci.hi - surv.ci.lo) / (2.0 * 1.96) / r);
    }
    ThetaFit fit;
    double se2 = 0.0;
    for (std::size_t k = 0; k < thetas.size(); ++k) {
        fit.theta += thetas[k];
        se2 += ses[k] * ses[k];
    }
    const double kcount = static_cast<double>(thetas.size());
    fit.theta /= kcount;
    double spread = 0.0;
    for (double t : thetas) spread += (t - fit.theta) * (t - fit.theta);
    spread = thetas.size() > 1 ? std::sqrt(spread / (kcount - 1.0) / kcount) : 0.0;
    fit.se = std::max(std::sqrt(se2) / kcount, spread);
    return fit;
}

} // namespace

RwConstants estimate_constants(const WalkLaw& walk, const ConstantsBudget& budget) {
    RwConstants out;
    out.sigma = walk.sigma();

    const WalkLaw neg = walk.negated();
    out.table = renewal_function(walk, default_renewal_grid(walk), budget.n_ladder_runs,
                                 budget.seed, budget.threads, budget.ladder_step_budget);
    out.table_minus = renewal_function(neg, default_renewal_grid(neg), budget.n_ladder_runs,
                                       budget.seed + 0x5eed, budget.threads,
                                       budget.ladder_step_budget);
    out.table_minus.descending_for_negated = true;

    auto slope_fit = [&](const RenewalTable& t, double& c0, double& se) {
        const std::size_t half = t.grid.size() / 2;
        if (t.grid.size() - half < 8) out.fit_warning = true;
        std::vector<double> xs(t.grid.begin() + half, t.grid.end());
        std::vector<double> ys(t.r_values.begin() + half, t.r_values.end());
        const LinearFit fit = linear_fit(xs, ys);
        c0 = fit.slope;
        se = fit.slope_se;
    };
    slope_fit(out.table, out.c0, out.c0_se);
    slope_fit(out.table_minus, out.c0_minus, out.c0_minus_se);

    const ThetaFit th = fit_theta(walk, out.table, budget, 0x7e7a);
    out.theta = th.theta;
    out.theta_se = th.se;
    ConstantsBudget nb = budget;
    const ThetaFit thm = fit_theta(neg, out.table_minus, nb, 0x7e7b);
    out.theta_minus = thm.theta;
    out.theta_minus_se = thm.se;
    return out;
}

// --- conditioned endpoint law ------------------------------------------------------

EndpointSample conditioned_endpoint_law(const WalkLaw& walk, double u, std::int64_t n,
                                        std::int64_t n_paths, std::uint64_t seed, int threads) {
    if (u < 0.0 || n < 1 || n_paths < 1)
        throw std::invalid_argument("conditioned_endpoint_law: bad arguments");
    struct Acc {
        std::vector<double> values;
    };
    const double scale = 1.0 / (walk.sigma() * std::sqrt(static_cast<double>(n)));
    Acc total = chunked_reduce(
        n_paths, threads, Acc{},
        [&](std::int64_t path, Acc& acc) {
            Rng rng = make_stream(seed, static_cast<std::uint64_t>(path) * 2 + 1);
            double s = 0.0;
            for (std::int64_t i = 0; i < n; ++i) {
                s += walk.sample_step(rng);
                if (s < -u) return;
            }
            acc.values.push_back((s + u) * scale);
        },
        [](Acc& a, const Acc& b) {
            a.values.insert(a.values.end(), b.values.begin(), b.values.end());
        });

    EndpointSample out;
    out.values = std::move(total.values);
    out.n_paths = n_paths;
    out.too_few_survivors = out.values.size() < 100;
    return out;
}

// --- h-transform sampler -------------------------------------------------------------

WeightedPath hplus_sampler(const WalkLaw& walk, const RenewalTable& table, double u,
                           std::int64_t n, Rng& rng) {
    if (u < 0.0) throw std::invalid_argument("hplus_sampler: u >= 0 required");
    WeightedPath out;
    if (n == 0) {
        out.path = {u};
        out.weight = 1.0;
        return out;
    }
    const double r_u = table.value(u);
    std::vector<double> path(static_cast<std::size_t>(n) + 1);
    for (std::int64_t attempt = 1;; ++attempt) {
        path[0] = u;
        double s = u;
        bool alive = true;
        for (std::int64_t i = 1; i <= n; ++i) {
            s += walk.sample_step(rng);
            if (s < 0.0) {
                alive = false;
                break;
            }
            path[static_cast<std::size_t>(i)] = s;
        }
        if (alive) {
            out.path = path;
            out.attempts = attempt;
            bool clamped = false;
            out.weight = table.value(s, &clamped) / r_u;
            out.table_clamped = clamped;
            return out;
        }
    }
}

WeightedEstimate hplus_functional_mean(const WalkLaw& walk, const RenewalTable& table, double u,
                                       std::int64_t n, std::int64_t n_paths,
                                       const std::function<double(std::span<const double>)>& f,
                                       std::uint64_t seed, int threads) {
    struct Acc {
        WeightedAcc w;
        bool clamped = false;
    };
    Acc total = chunked_reduce(
        n_paths, threads, Acc{},
        [&](std::int64_t item, Acc& acc) {
            Rng rng = make_stream(seed, static_cast<std::uint64_t>(item) * 2 + 1);
            std::vector<double> path(static_cast<std::size_t>(n) + 1);
            path[0] = u;
            double s = u;
            for (std::int64_t i = 1; i <= n; ++i) {
                s += walk.sample_step(rng);
                if (s < 0.0) return; // killed paths carry zero weight
                path[static_cast<std::size_t>(i)] = s;
            }
            bool clamped = false;
            const double w = table.value(s, &clamped);
            acc.clamped = acc.clamped || clamped;
            acc.w.add(f(path), w);
        },
        [](Acc& a, const Acc& b) {
            a.w.merge(b.w);
            a.clamped = a.clamped || b.clamped;
        });

    WeightedEstimate out;
    out.value = total.w.mean();
    out.se = total.w.se();
    out.ess = total.w.ess();
    out.table_clamped = total.clamped;
    return out;
}

// --- two-barrier window --------------------------------------------------------------

TwoBarrierEstimate two_barrier_endpoint_estimate(const WalkLaw& walk, double u, double v, double b,
                                                 double h, EndpointWindow window, double lambda,
                                                 const GridFunctional& f, std::int64_t n,
                                                 std::int64_t n_paths, int m_grid,
                                                 std::uint64_t seed, int threads) {
    if (!(lambda > 0.0 && lambda < 1.0))
        throw std::invalid_argument("two_barrier_endpoint_estimate: lambda in (0,1) required");
    if (u < 0.0 || n < 2 || n_paths < 1 || m_grid < 1)
        throw std::invalid_argument("two_barrier_endpoint_estimate: bad arguments");
    const std::int64_t m1 = static_cast<std::int64_t>(lambda * static_cast<double>(n));
    const double lo_target = v + b;
    const double scale = 1.0 / (walk.sigma() * std::sqrt(static_cast<double>(n)));
    const double lattice_tol =
        walk.lattice() ? walk.lattice()->span * 1e-9 : 0.0;

    struct Acc {
        MeanAcc f_ind;
        std::int64_t hits = 0;
    };
    Acc total = chunked_reduce(
        n_paths, threads, Acc{},
        [&](std::int64_t item, Acc& acc) {
            Rng rng = make_stream(seed, static_cast<std::uint64_t>(item) * 2 + 1);
            if (m1 == 0 && v > 0.0) {
                acc.f_ind.add(0.0); // S_0 = 0 already violates the second barrier
                return;
            }
            std::vector<double> gridvals;
            if (f) gridvals.assign(static_cast<std::size_t>(m_grid) + 1, 0.0);
            // grid indices mapping to step 0 keep S_0 = 0
            std::int64_t next_grid = 1;
            while (next_grid <= m_grid && next_grid * n / m_grid == 0) ++next_grid;
            double s = 0.0;
            for (std::int64_t i = 1; i <= n; ++i) {
                s += walk.sample_step(rng);
                if (i <= m1 && s < -u) {
                    acc.f_ind.add(0.0);
                    return;
                }
                if (i >= m1 && s < v) {
                    acc.f_ind.add(0.0);
                    return;
                }
                if (f) {
                    while (next_grid <= m_grid && next_grid * n / m_grid == i) {
                        gridvals[static_cast<std::size_t>(next_grid)] = s * scale;
                        ++next_grid;
                    }
                }
            }
            const bool in_window =
                window == EndpointWindow::HalfOpenInterval
                    ? (s >= lo_target && s < lo_target + h)
                    : (std::abs(s - lo_target) <= lattice_tol);
            if (!in_window) {
                acc.f_ind.add(0.0);
                return;
            }
            acc.hits += 1;
            acc.f_ind.add(f ? f(gridvals) : 1.0);
        },
        [](Acc& a, const Acc& b) {
            a.f_ind.merge(b.f_ind);
            a.hits += b.hits;
        });

    TwoBarrierEstimate out;
    out.value = {total.f_ind.mean(), total.f_ind.se(), n_paths};
    out.hits = total.hits;
    out.n_paths = n_paths;
    out.zero_hits = total.hits == 0;
    return out;
}

double two_barrier_prefactor(const RwConstants& constants, double u, double b, double h,
                             std::int64_t n) {
    const double nd = static_cast<double>(n);
    return std::sqrt(M_PI / 2.0) * constants.theta * constants.theta_minus / constants.sigma *
           constants.table.value(u) / (nd * std::sqrt(nd)) *
           constants.table_minus.integral(b, b + h);
}

// --- Stone local limit theorem ------------------------------------------------------------

SternCheck stone_llt_check(const WalkLaw& walk, double b, double h, std::int64_t n,
                           std::int64_t n_paths, std::uint64_t seed, int threads) {
    if (n < 1 || n_paths < 1 || h <= 0.0)
        throw std::invalid_argument("stone_llt_check: bad arguments");
    struct Acc {
        std::int64_t hits = 0;
    };
    Acc total = chunked_reduce(
        n_paths, threads, Acc{},
        [&](std::int64_t item, Acc& acc) {
            Rng rng = make_stream(seed, static_cast<std::uint64_t>(item) * 2 + 1);
            double s = 0.0;
            for (std::int64_t i = 0; i < n; ++i) s += walk.sample_step(rng);
            if (s >= b && s < b + h) acc.hits += 1;
        },
        [](Acc& a, const Acc& b2) { a.hits += b2.hits; });

    SternCheck out;
    const double p = static_cast<double>(total.hits) / static_cast<double>(n_paths);
    const Interval ci = wilson_ci(total.hits, n_paths);
    out.estimate = {p, (ci.hi - ci.lo) / (2.0 * 1.96), n_paths};
    const double nd = static_cast<double>(n);
    const double sig = walk.sigma();
    out.target = h / (sig * std::sqrt(2.0 * M_PI * nd)) *
                 std::exp(-b * b / (2.0 * sig * sig * nd));
    return out;
}

} // namespace brwlab
