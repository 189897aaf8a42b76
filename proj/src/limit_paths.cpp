#include "brwlab/limit_paths.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "brwlab/stats.hpp"

namespace brwlab {

namespace {

// Brownian motion from 0 on a uniform grid over [0, length].
void brownian_grid(int m, double length, Rng& rng, std::vector<double>& out) {
    const double sd = std::sqrt(length / static_cast<double>(m));
    out.assign(static_cast<std::size_t>(m) + 1, 0.0);
    for (int i = 1; i <= m; ++i)
        out[static_cast<std::size_t>(i)] = out[static_cast<std::size_t>(i - 1)] + sd * rng.normal();
}

// Brownian bridge start -> end over [0, length].
void bridge_grid(int m, double length, double start, double end, Rng& rng,
                 std::vector<double>& out) {
    brownian_grid(m, length, rng, out);
    const double w_end = out.back();
    for (int i = 0; i <= m; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(m);
        out[static_cast<std::size_t>(i)] += start + t * (end - start - w_end);
    }
    out.back() = end; // pin the endpoint exactly
}

void norm3(const std::vector<double>& x, const std::vector<double>& y,
           const std::vector<double>& z, std::vector<double>& out) {
    out.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        out[i] = std::sqrt(x[i] * x[i] + y[i] * y[i] + z[i] * z[i]);
}

} // namespace

LimitPath sample_limit_path(LimitKind kind, const LimitPathParams& params, int m, Rng& rng) {
    if (m < 2) throw std::invalid_argument("sample_limit_path: m >= 2 required");
    LimitPath out;
    out.kind = kind;

    std::vector<double> x, y, z;
    switch (kind) {
    case LimitKind::Brownian:
        brownian_grid(m, 1.0, rng, out.samples);
        break;
    case LimitKind::Bessel3: {
        // norm of a 3-d Brownian motion started at (b, 0, 0)
        brownian_grid(m, 1.0, rng, x);
        for (double& v : x) v += params.start;
        brownian_grid(m, 1.0, rng, y);
        brownian_grid(m, 1.0, rng, z);
        norm3(x, y, z, out.samples);
        break;
    }
    case LimitKind::Meander: {
        // Imhof: E[F(M)] = sqrt(pi/2) E[F(R)/R(1)] with R the Bessel(3) path
        brownian_grid(m, 1.0, rng, x);
        brownian_grid(m, 1.0, rng, y);
        brownian_grid(m, 1.0, rng, z);
        norm3(x, y, z, out.samples);
        out.weight = std::sqrt(M_PI / 2.0) / out.samples.back();
        break;
    }
    case LimitKind::Excursion: {
        // Bessel(3) bridge 0 -> 0 of length 1: norm of three Brownian bridges
        bridge_grid(m, 1.0, 0.0, 0.0, rng, x);
        bridge_grid(m, 1.0, 0.0, 0.0, rng, y);
        bridge_grid(m, 1.0, 0.0, 0.0, rng, z);
        norm3(x, y, z, out.samples);
        break;
    }
    case LimitKind::BesselBridge: {
        if (params.start < 0.0 || params.length <= 0.0)
            throw std::invalid_argument("sample_limit_path: bessel bridge needs b >= 0, length > 0");
        bridge_grid(m, params.length, params.start, 0.0, rng, x);
        bridge_grid(m, params.length, 0.0, 0.0, rng, y);
        bridge_grid(m, params.length, 0.0, 0.0, rng, z);
        norm3(x, y, z, out.samples);
        break;
    }
    }
    return out;
}

LimitPath vervaat_excursion(int m, Rng& rng) {
    if (m < 2) throw std::invalid_argument("vervaat_excursion: m >= 2 required");
    std::vector<double> bridge;
    bridge_grid(m, 1.0, 0.0, 0.0, rng, bridge);
    std::size_t argmin = 0;
    for (std::size_t i = 1; i < bridge.size(); ++i)
        if (bridge[i] < bridge[argmin]) argmin = i;
    LimitPath out;
    out.kind = LimitKind::Excursion;
    out.samples.resize(bridge.size());
    const std::size_t mm = static_cast<std::size_t>(m);
    for (std::size_t j = 0; j <= mm; ++j)
        out.samples[j] = bridge[(argmin + j) % mm] - bridge[argmin];
    out.samples[mm] = 0.0;
    return out;
}

double meander_laplace(double c) {
    if (c < -26.0) {
        // Mills-ratio branch: 1/c^2 - 3/c^4 + 15/c^6 - 105/c^8
        const double i2 = 1.0 / (c * c);
        return i2 * (1.0 - i2 * (3.0 - i2 * (15.0 - 105.0 * i2)));
    }
    // Phi(c) e^{c^2/2} written through erfc keeps the c < 0 branch stable
    const double phi_scaled = 0.5 * std::exp(0.5 * c * c) * std::erfc(-c / std::sqrt(2.0));
    return 1.0 + std::sqrt(2.0 * M_PI) * c * phi_scaled;
}

} // namespace brwlab
