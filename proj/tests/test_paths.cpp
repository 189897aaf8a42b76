#include <doctest.h>

#include <cmath>

#include "brwlab/limit_paths.hpp"
#include "brwlab/parallel.hpp"
#include "brwlab/stats.hpp"

using namespace brwlab;

TEST_CASE("meander_laplace closed form") {
    CHECK(meander_laplace(0.0) == doctest::Approx(1.0));
    // asymptotics from the large-|c| expansions
    CHECK(meander_laplace(4.0) ==
          doctest::Approx(std::sqrt(2.0 * M_PI) * 4.0 * std::exp(8.0)).epsilon(0.10));
    CHECK(meander_laplace(-6.0) == doctest::Approx(1.0 / 36.0).epsilon(0.10));
    // reference values
    CHECK(meander_laplace(-1.0) == doctest::Approx(0.3443204575812015).epsilon(1e-12));
    CHECK(meander_laplace(1.0) == doctest::Approx(4.477051811703694).epsilon(1e-12));
    CHECK(meander_laplace(2.0) == doctest::Approx(37.20049542225231).epsilon(1e-12));
    // branch continuity
    CHECK(meander_laplace(-26.1) == doctest::Approx(meander_laplace(-25.9)).epsilon(1e-3));
    CHECK(meander_laplace(-200.0) == doctest::Approx(1.0 / 40000.0).epsilon(1e-3));
}

TEST_CASE("meander via Imhof weights: normalization and endpoint mean") {
    Rng rng = make_stream(21, 1);
    MeanAcc norm, endpoint;
    for (int i = 0; i < 20000; ++i) {
        const LimitPath p = sample_limit_path(LimitKind::Meander, {}, 64, rng);
        norm.add(p.weight);
        endpoint.add(p.weight * p.samples.back());
    }
    // F == 1: the Imhof relation normalizes
    CHECK(std::abs(norm.mean() - 1.0) <= 3.0 * norm.se());
    // F = endpoint: the weight cancels R(1) exactly, zero-variance estimate
    CHECK(endpoint.mean() == doctest::Approx(std::sqrt(M_PI / 2.0)).epsilon(1e-12));
    CHECK(endpoint.sd() < 1e-12);
}

TEST_CASE("meander_laplace closed form matches the Imhof sampler within 3 SE") {
    for (double c : {-1.0, 0.0, 1.0, 2.0}) {
        MeanAcc acc;
        Rng rng = make_stream(22, static_cast<std::uint64_t>(c * 8 + 100));
        for (int i = 0; i < 100000; ++i) {
            const LimitPath p = sample_limit_path(LimitKind::Meander, {}, 16, rng);
            acc.add(p.weight * std::exp(c * p.samples.back()));
        }
        const double closed = meander_laplace(c);
        CHECK(std::abs(acc.mean() - closed) <= 3.0 * std::max(acc.se(), 1e-12));
    }
}

TEST_CASE("meander endpoint law is Rayleigh") {
    Rng rng = make_stream(23, 5);
    std::vector<std::pair<double, double>> sample;
    for (int i = 0; i < 50000; ++i) {
        const LimitPath p = sample_limit_path(LimitKind::Meander, {}, 32, rng);
        sample.emplace_back(p.samples.back(), p.weight);
    }
    CHECK(ks_distance_weighted(std::move(sample), rayleigh_cdf) < 0.02);
}

TEST_CASE("excursion endpoints and interior positivity") {
    Rng rng = make_stream(24, 2);
    for (int i = 0; i < 200; ++i) {
        const LimitPath p = sample_limit_path(LimitKind::Excursion, {}, 128, rng);
        CHECK(p.samples.front() == 0.0);
        CHECK(p.samples.back() == 0.0);
        bool interior_positive = true;
        for (std::size_t j = 1; j + 1 < p.samples.size(); ++j)
            if (!(p.samples[j] > 0.0)) interior_positive = false;
        CHECK(interior_positive);
    }
}

TEST_CASE("excursion sup: bridge construction vs Vervaat rotation vs closed form") {
    Rng rng = make_stream(25, 3);
    MeanAcc bridge_sup, vervaat_sup;
    const int m = 256;
    for (int i = 0; i < 30000; ++i) {
        const LimitPath a = sample_limit_path(LimitKind::Excursion, {}, m, rng);
        bridge_sup.add(*std::max_element(a.samples.begin(), a.samples.end()));
        const LimitPath b = vervaat_excursion(m, rng);
        vervaat_sup.add(*std::max_element(b.samples.begin(), b.samples.end()));
    }
    // both are grid discretizations; Vervaat pays the max deficit twice
    // (max and min of the bridge), so compare with an O(m^{-1/2}) allowance
    CHECK(std::abs(bridge_sup.mean() - vervaat_sup.mean()) < 0.08);
    CHECK(vervaat_sup.mean() < bridge_sup.mean());
    // E[sup e] = sqrt(pi/2); the grid sup is biased low by O(m^{-1/2})
    CHECK(bridge_sup.mean() == doctest::Approx(std::sqrt(M_PI / 2.0)).epsilon(0.04));
}

TEST_CASE("bessel bridge pins both endpoints") {
    Rng rng = make_stream(26, 4);
    for (int i = 0; i < 50; ++i) {
        const LimitPath p = sample_limit_path(LimitKind::BesselBridge, {2.5, 0.75}, 64, rng);
        CHECK(p.samples.front() == doctest::Approx(2.5));
        CHECK(p.samples.back() == doctest::Approx(0.0));
        for (double v : p.samples) CHECK(v >= 0.0);
    }
}

TEST_CASE("brownian grid endpoint variance") {
    Rng rng = make_stream(27, 6);
    MeanAcc acc;
    for (int i = 0; i < 50000; ++i) {
        const LimitPath p = sample_limit_path(LimitKind::Brownian, {}, 32, rng);
        acc.add(p.samples.back());
    }
    CHECK(std::abs(acc.mean()) <= 3.0 * acc.se());
    CHECK(acc.var() == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("bessel3 marginal at time 1 is Maxwell") {
    Rng rng = make_stream(28, 7);
    std::vector<double> sample;
    for (int i = 0; i < 50000; ++i)
        sample.push_back(sample_limit_path(LimitKind::Bessel3, {}, 16, rng).samples.back());
    CHECK(ks_distance(sample, maxwell_cdf) < 0.02);
}

TEST_CASE("small grids are rejected") {
    Rng rng = make_stream(29, 8);
    CHECK_THROWS_AS(sample_limit_path(LimitKind::Meander, {}, 1, rng), std::invalid_argument);
}
