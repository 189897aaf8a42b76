#include <doctest.h>

#include <cmath>

#include "brwlab/laws.hpp"
#include "brwlab/parallel.hpp"
#include "brwlab/stats.hpp"
#include "brwlab/experiments.hpp"
#include "brwlab/walk.hpp"

using namespace brwlab;

namespace {
const double kSigmaSq = 2.0 * M_LN2;
}

TEST_CASE("tilted walk from gaussian_dyadic is centred Normal(0, 2 log 2)") {
    const WalkLaw walk = WalkLaw::from_reproduction(ReproductionLaw::gaussian_dyadic());
    CHECK(walk.sigma_sq() == doctest::Approx(kSigmaSq).epsilon(1e-12));
    Rng rng = make_stream(101, 0);
    MeanAcc acc;
    for (int i = 0; i < 1000000; ++i) acc.add(walk.sample_step(rng));
    CHECK(std::abs(acc.mean()) <= 3.0 * acc.se());
    CHECK(acc.var() == doctest::Approx(kSigmaSq).epsilon(0.01));
}

TEST_CASE("tilted walk from two_config is the exact two-point law") {
    const ReproductionLaw law = ReproductionLaw::two_config();
    const WalkLaw walk = WalkLaw::from_reproduction(law);
    const double x = std::exp(-law.config_table()[0].displacements[0]);
    // step d1 with probability x/2, step d2 with probability 1 - x/2
    Rng rng = make_stream(102, 0);
    std::int64_t down = 0;
    const std::int64_t n = 200000;
    MeanAcc mean;
    for (std::int64_t i = 0; i < n; ++i) {
        const double s = walk.sample_step(rng);
        mean.add(s);
        if (s < 0.0) ++down;
    }
    const double p_down = static_cast<double>(down) / static_cast<double>(n);
    CHECK(p_down == doctest::Approx(x / 2.0).epsilon(0.01));
    CHECK(std::abs(mean.mean()) <= 3.0 * mean.se()); // boundary case centres the walk
    CHECK(walk.sigma_sq() == doctest::Approx(law.psi_second(1.0)).epsilon(1e-12));
}

TEST_CASE("ladder heights of the unit lattice walk are identically 1") {
    const WalkLaw walk = WalkLaw::plus_minus_one();
    Rng rng = make_stream(103, 0);
    const LadderResult ladder = ladder_heights(walk, 2000, rng, 100000);
    // overruns are reported and redrawn, never silently dropped
    CHECK(ladder.overruns >= 0);
    CHECK(ladder.heights.size() == 2000);
    for (double h : ladder.heights) CHECK(h == doctest::Approx(1.0));
}

TEST_CASE("ladder heights are strictly positive, E[H1] = sigma/sqrt(2) for symmetric walks") {
    const WalkLaw walk = WalkLaw::from_reproduction(ReproductionLaw::gaussian_dyadic());
    Rng rng = make_stream(104, 0);
    const LadderResult ladder = ladder_heights(walk, 50000, rng, 100000);
    MeanAcc acc;
    double min_h = kPosInf;
    for (double h : ladder.heights) {
        acc.add(h);
        min_h = std::min(min_h, h);
    }
    CHECK(min_h > 0.0);
    // Sparre Andersen / Spitzer: symmetric continuous walk has E[H1] = sigma/sqrt(2)
    CHECK(std::abs(acc.mean() - walk.sigma() / std::sqrt(2.0)) <= 4.0 * acc.se());
}

TEST_CASE("renewal table of the unit lattice walk counts integers exactly") {
    const WalkLaw walk = WalkLaw::plus_minus_one();
    std::vector<double> grid;
    for (int i = 0; i <= 12; ++i) grid.push_back(0.5 * i);
    const RenewalTable table = renewal_function(walk, grid, 4000, 2024, 2, 100000);
    // H_k = k, so R(u) = 1 + floor(u)
    for (int i = 0; i <= 12; ++i) {
        const double u = 0.5 * i;
        const double expect = 1.0 + std::floor(u);
        CHECK(table.value(u) == doctest::Approx(expect).epsilon(0.05));
    }
    CHECK(table.r_values.front() == doctest::Approx(1.0));
}

TEST_CASE("renewal table shape: monotone and linearly bounded") {
    const WalkLaw walk = WalkLaw::from_reproduction(ReproductionLaw::gaussian_dyadic());
    const RenewalTable table =
        renewal_function(walk, default_renewal_grid(walk), 4000, 7, 2, 100000);
    double ratio_min = kPosInf, ratio_max = 0.0;
    for (std::size_t i = 0; i < table.grid.size(); ++i) {
        if (i > 0) CHECK(table.r_values[i] >= table.r_values[i - 1]);
        const double ratio = table.r_values[i] / (1.0 + table.grid[i]);
        ratio_min = std::min(ratio_min, ratio);
        ratio_max = std::max(ratio_max, ratio);
    }
    CHECK(table.r_values.front() == doctest::Approx(1.0));
    // renewal-theorem shape: R(u)/(1+u) stays within fixed constants
    CHECK(ratio_max / ratio_min < 3.0);
    CHECK(table.slope > 0.0);
}

TEST_CASE("renewal table interpolation and extrapolation") {
    RenewalTable table;
    table.grid = {0.0, 1.0, 2.0};
    table.r_values = {1.0, 2.0, 3.0};
    table.slope = 1.0;
    CHECK(table.value(0.5) == doctest::Approx(1.5));
    bool clamped = false;
    CHECK(table.value(4.0, &clamped) == doctest::Approx(5.0));
    CHECK(clamped);
    CHECK(table.integral(0.0, 2.0) == doctest::Approx(4.0).epsilon(1e-12));
    CHECK_THROWS_AS(table.value(-0.1), std::invalid_argument);
}

TEST_CASE("survival probability basics") {
    const WalkLaw walk = WalkLaw::from_reproduction(ReproductionLaw::gaussian_dyadic());
    // u = 0, n = 1: symmetry of the first continuous step
    const SurvivalEstimate one = survival_probability(walk, 0.0, 1, 100000, 5, 2);
    CHECK(one.value == doctest::Approx(0.5).epsilon(0.02));
    // far barrier: certain survival
    const SurvivalEstimate far = survival_probability(walk, 200.0, 64, 2000, 6, 2);
    CHECK(far.value == doctest::Approx(1.0));
    // Kozlov scaling: quadrupling n halves the probability
    const SurvivalEstimate a = survival_probability(walk, 2.0, 256, 400000, 7, 2);
    const SurvivalEstimate b = survival_probability(walk, 2.0, 1024, 400000, 8, 2);
    CHECK(b.value / a.value == doctest::Approx(0.5).epsilon(0.10));
}

TEST_CASE("theta c0 identity within the joint confidence interval") {
    ConstantsBudget budget;
    budget.n_ladder_runs = 3000;
    budget.n_survival_paths = 30000;
    budget.n_for_theta = 1024;
    budget.ladder_step_budget = 100000;
    budget.threads = 2;
    budget.seed = 99;
    for (const ReproductionLaw& law :
         {ReproductionLaw::gaussian_dyadic(), ReproductionLaw::two_config()}) {
        const WalkLaw walk = WalkLaw::from_reproduction(law);
        const RwConstants c = estimate_constants(walk, budget);
        const double target = std::sqrt(2.0 / (M_PI * c.sigma * c.sigma));
        const double product = c.c0 * c.theta;
        const double rel_se = std::sqrt(std::pow(c.c0_se / c.c0, 2) +
                                        std::pow(c.theta_se / c.theta, 2));
        // finite-n bias of theta-hat enters too; allow 3 joint SEs + 3%
        CHECK(std::abs(product - target) <= 3.0 * product * rel_se + 0.03 * target);
        // symmetric walks: the negated walk has the same constants
        if (law.gaussian_params()) {
            CHECK(std::abs(c.c0 - c.c0_minus) <=
                  3.0 * std::sqrt(c.c0_se * c.c0_se + c.c0_minus_se * c.c0_minus_se) + 0.02);
            CHECK(std::abs(c.theta - c.theta_minus) <=
                  3.0 * std::sqrt(c.theta_se * c.theta_se + c.theta_minus_se * c.theta_minus_se) +
                      0.02);
        }
    }
}

TEST_CASE("conditioned endpoint with an inactive barrier is Gaussian") {
    const WalkLaw walk = WalkLaw::from_reproduction(ReproductionLaw::gaussian_dyadic());
    const std::int64_t n = 256;
    const double u = 10.0 * walk.sigma() * std::sqrt(static_cast<double>(n));
    const EndpointSample sample = conditioned_endpoint_law(walk, u, n, 20000, 11, 2);
    CHECK(!sample.too_few_survivors);
    CHECK(sample.values.size() == 20000); // barrier never binds
    const double shift = u / (walk.sigma() * std::sqrt(static_cast<double>(n)));
    const double ks = ks_distance(sample.values,
                                  [&](double t) { return normal_cdf(t - shift); });
    CHECK(ks < 0.03);
}

TEST_CASE("h-transform weights are mean one (harmonicity of R)") {
    const WalkLaw walk = WalkLaw::from_reproduction(ReproductionLaw::gaussian_dyadic());
    const RenewalTable table =
        renewal_function(walk, default_renewal_grid(walk), 5000, 13, 2, 100000);
    const double u = 1.0;
    const std::int64_t n = 64;
    MeanAcc acc;
    Rng rng = make_stream(14, 0);
    for (int i = 0; i < 40000; ++i) {
        double s = u;
        bool alive = true;
        for (std::int64_t k = 0; k < n; ++k) {
            s += walk.sample_step(rng);
            if (s < 0.0) {
                alive = false;
                break;
            }
        }
        acc.add(alive ? table.value(s) / table.value(u) : 0.0);
    }
    CHECK(std::abs(acc.mean() - 1.0) <= 3.5 * acc.se());
}

TEST_CASE("hplus sampler basics and oracle equivalence with direct conditioning") {
    const WalkLaw walk = WalkLaw::from_reproduction(ReproductionLaw::gaussian_dyadic());
    const RenewalTable table =
        renewal_function(walk, default_renewal_grid(walk), 5000, 15, 2, 100000);
    Rng rng = make_stream(16, 0);
    const WeightedPath trivial = hplus_sampler(walk, table, 2.0, 0, rng);
    CHECK(trivial.path == std::vector<double>{2.0});
    CHECK(trivial.weight == doctest::Approx(1.0));

    const WeightedPath path = hplus_sampler(walk, table, 2.0, 32, rng);
    CHECK(path.path.size() == 33);
    for (double v : path.path) CHECK(v >= 0.0);

    // P+(S_n <= a) under the h-transform vs the R-weighted direct estimate
    const std::int64_t n = 256;
    const double u = 2.0;
    const double a = walk.sigma() * std::sqrt(static_cast<double>(n));
    const auto below = [&](std::span<const double> p) { return p.back() <= a ? 1.0 : 0.0; };
    const WeightedEstimate h_est =
        hplus_functional_mean(walk, table, u, n, 150000, below, 17, 2);
    // direct: E[1{S_n <= a} R(S_n) 1{min >= 0}] / E[R(S_n) 1{min >= 0}]
    WeightedAcc direct;
    Rng rng2 = make_stream(18, 0);
    for (int i = 0; i < 150000; ++i) {
        double s = u;
        bool aliveflag = true;
        for (std::int64_t k = 0; k < n; ++k) {
            s += walk.sample_step(rng2);
            if (s < 0.0) {
                aliveflag = false;
                break;
            }
        }
        if (aliveflag) direct.add(s <= a ? 1.0 : 0.0, table.value(s));
    }
    const double joint = std::sqrt(h_est.se * h_est.se + direct.se() * direct.se());
    CHECK(std::abs(h_est.value - direct.mean()) <= 3.5 * std::max(joint, 1e-9));
}

TEST_CASE("two-barrier estimate shrinks monotonically with the window") {
    const WalkLaw walk = WalkLaw::from_reproduction(ReproductionLaw::gaussian_dyadic());
    const std::int64_t n = 128;
    double prev = kPosInf;
    for (double h : {4.0, 2.0, 1.0, 0.25}) {
        const TwoBarrierEstimate est = two_barrier_endpoint_estimate(
            walk, 0.0, 0.0, 0.0, h * walk.sigma(), EndpointWindow::HalfOpenInterval, 0.5,
            nullptr, n, 200000, 8, 19, 2);
        CHECK(est.value.value <= prev);
        prev = est.value.value;
    }
    CHECK(prev >= 0.0);
}

TEST_CASE("two-barrier estimate with a functional records the rescaled grid") {
    const WalkLaw walk = WalkLaw::plus_minus_one();
    // grid values must start at 0 and stay bounded by sup/(sigma sqrt n)
    const GridFunctional start_check = [](std::span<const double> v) {
        return v.front() == 0.0 ? 1.0 : -1.0;
    };
    const TwoBarrierEstimate est = two_barrier_endpoint_estimate(
        walk, 0.0, 0.0, 0.0, 1.0, EndpointWindow::LatticePoint, 0.5, start_check, 64, 50000, 16,
        20, 2);
    CHECK(est.hits > 0);
    // every hit contributes +1: E[F 1_A] equals the hit rate
    CHECK(est.value.value ==
          doctest::Approx(static_cast<double>(est.hits) / 50000.0).epsilon(1e-12));
}

TEST_CASE("stone local limit theorem scaling") {
    const WalkLaw walk = WalkLaw::from_reproduction(ReproductionLaw::gaussian_dyadic());
    const SternCheck a = stone_llt_check(walk, 0.0, walk.sigma(), 256, 200000, 21, 2);
    const SternCheck b = stone_llt_check(walk, 0.0, walk.sigma(), 1024, 200000, 22, 2);
    CHECK(a.estimate.value / a.target == doctest::Approx(1.0).epsilon(0.05));
    // n -> 4n halves the point probability
    CHECK(a.estimate.value / b.estimate.value == doctest::Approx(2.0).epsilon(0.10));
    // far tail: nothing lands there
    const double far = 10.0 * walk.sigma() * std::sqrt(256.0);
    const SternCheck c = stone_llt_check(walk, far, walk.sigma(), 256, 20000, 23, 2);
    CHECK(c.estimate.value < 10.0 / 20000.0);
}

TEST_CASE("negated walk flips the step law") {
    const ReproductionLaw law = ReproductionLaw::two_config();
    const WalkLaw walk = WalkLaw::from_reproduction(law);
    const WalkLaw neg = walk.negated();
    Rng r1 = make_stream(24, 0), r2 = make_stream(24, 0);
    for (int i = 0; i < 100; ++i) CHECK(neg.sample_step(r1) == doctest::Approx(-walk.sample_step(r2)));
}

TEST_CASE("lower envelope: touching probability vanishes as the envelope drops") {
    // envelope m_i = r_i - mu before the split, r_{n-i} - mu after, with
    // r_i = i^{0.4}; conditioned on the two-barrier window event the chance
    // of touching it decreases as mu grows
    const WalkLaw walk = WalkLaw::from_reproduction(ReproductionLaw::gaussian_dyadic());
    const std::int64_t n = 256;
    const std::int64_t ell = n / 2;
    const double window_hi = 1.0;
    const std::vector<double> mus = {0.0, 2.0, 4.0, 8.0};
    std::vector<double> touch_given_window;
    for (std::size_t mi = 0; mi < mus.size(); ++mi) {
        const double mu = mus[mi];
        std::int64_t hits = 0, touches = 0;
        Rng rng = make_stream(425, mi);
        for (int path = 0; path < 3000000; ++path) {
            double s = 0.0;
            bool window = true;
            bool touched = 0.0 <= -mu; // i = 0 (r_0 = 0, S_0 = 0)
            for (std::int64_t i = 1; i <= n && window; ++i) {
                s += walk.sample_step(rng);
                if (s < 0.0) window = false;
                const double envelope =
                    (i < ell ? std::pow(static_cast<double>(i), 0.4)
                             : std::pow(static_cast<double>(n - i), 0.4)) -
                    mu;
                if (s <= envelope) touched = true;
            }
            if (!window || s >= window_hi) continue;
            ++hits;
            touches += touched ? 1 : 0;
        }
        REQUIRE(hits > 100);
        touch_given_window.push_back(static_cast<double>(touches) /
                                     static_cast<double>(hits));
    }
    // mu = 0 touches at time 0 by construction; the trend must decrease
    CHECK(touch_given_window[0] == doctest::Approx(1.0));
    for (std::size_t i = 1; i < touch_given_window.size(); ++i)
        CHECK(touch_given_window[i] < touch_given_window[i - 1]);
    CHECK(touch_given_window.back() < 0.5);
}

TEST_CASE("h-transform endpoint marginal is the Bessel(3) time-1 law") {
    const WalkLaw walk = WalkLaw::from_reproduction(ReproductionLaw::gaussian_dyadic());
    const RenewalTable table =
        renewal_function(walk, default_renewal_grid(walk), 10000, 427, 2, 100000);
    const std::int64_t n = 4096;
    const double u = 2.0;
    const double scale = 1.0 / (walk.sigma() * std::sqrt(static_cast<double>(n)));
    std::vector<std::pair<double, double>> weighted;
    Rng rng = make_stream(428, 0);
    for (int path = 0; path < 600000; ++path) {
        double s = u;
        bool alive = true;
        for (std::int64_t i = 0; i < n; ++i) {
            s += walk.sample_step(rng);
            if (s < 0.0) {
                alive = false;
                break;
            }
        }
        if (alive) weighted.emplace_back(s * scale, table.value(s));
    }
    REQUIRE(weighted.size() > 10000);
    CHECK(ks_distance_weighted(std::move(weighted), maxwell_cdf) < 0.03);
}

TEST_CASE("conditioned endpoint mean matches the Rayleigh mean") {
    const WalkLaw walk = WalkLaw::from_reproduction(ReproductionLaw::gaussian_dyadic());
    const EndpointSample sample = conditioned_endpoint_law(walk, 0.0, 4096, 500000, 429, 2);
    MeanAcc acc;
    for (double v : sample.values) acc.add(v);
    CHECK(std::abs(acc.mean() - std::sqrt(M_PI / 2.0)) <= 3.0 * acc.se());
}

TEST_CASE("lattice two-barrier window against exhaustive path enumeration") {
    // +-1 walk at n = 8: every path has probability 2^{-8}; enumerate all
    // sign sequences to pin the lattice endpoint bookkeeping exactly
    const WalkLaw walk = WalkLaw::plus_minus_one();
    const std::int64_t n = 8;
    const std::int64_t m1 = 4; // lambda = 1/2
    const double u = 0.0, v = 0.0, b = 0.0;
    std::int64_t good = 0;
    for (int mask = 0; mask < (1 << n); ++mask) {
        double s = 0.0;
        bool ok = true;
        for (std::int64_t i = 1; i <= n && ok; ++i) {
            s += (mask >> (i - 1)) & 1 ? 1.0 : -1.0;
            if (i <= m1 && s < -u) ok = false;
            if (i >= m1 && s < v) ok = false;
        }
        if (ok && s == v + b) ++good;
    }
    const double exact = static_cast<double>(good) / static_cast<double>(1 << n);
    REQUIRE(exact > 0.0);

    const TwoBarrierEstimate est = two_barrier_endpoint_estimate(
        walk, u, v, b, /*h=*/0.0, EndpointWindow::LatticePoint, 0.5, nullptr, n, 400000, 8,
        430, 2);
    const double se = est.value.se;
    CHECK(std::abs(est.value.value - exact) <= 3.5 * std::max(se, 1e-9));
}

TEST_CASE("ballot scaling: n^{3/2} P stays flat across n") {
    const WalkLaw walk = WalkLaw::from_reproduction(ReproductionLaw::gaussian_dyadic());
    const RwConstants unused{}; // slope check needs no constants
    (void)unused;
    const CriterionResult c = check_ballot_exponent(walk, {128, 256, 512, 1024}, 400000, 4.0,
                                                    0.15, 431, 2);
    CHECK(c.verdict == Verdict::Pass);
}
