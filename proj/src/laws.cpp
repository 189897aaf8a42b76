#include "brwlab/laws.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "brwlab/stats.hpp"

namespace brwlab {

namespace {

constexpr double kTwoLog2 = 2.0 * M_LN2;

// Root of g(x) = x/2 log x + (1 - x/2) log(1 - x/2) on (1, 2); fixes the
// two_config displacements d1 = -log x, d2 = -log(1 - x/2).
double solve_two_config_x() {
    auto g = [](double x) {
        return 0.5 * x * std::log(x) + (1.0 - 0.5 * x) * std::log(1.0 - 0.5 * x);
    };
    double lo = 1.0 + 1e-12, hi = 2.0 - 1e-12;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (g(mid) <= 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace

void ReproductionLaw::finalize_table() {
    double total = 0.0;
    cum_prob_.clear();
    cum_prob_.reserve(table_.size());
    for (const auto& entry : table_) {
        if (entry.prob < 0.0) throw std::invalid_argument("config probability < 0");
        total += entry.prob;
        cum_prob_.push_back(total);
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw std::invalid_argument("config probabilities sum to " + std::to_string(total) +
                                    ", expected 1 within 1e-12");
    cum_prob_.back() = 1.0 + 1e-16; // guard against uniform() == total rounding
}

ReproductionLaw ReproductionLaw::gaussian_dyadic() {
    ReproductionLaw law;
    law.name_ = "gaussian_dyadic";
    law.kind_ = SupportKind::Continuous;
    law.builtin_ = Builtin::GaussianDyadic;
    law.g_mean_ = kTwoLog2;
    law.g_var_ = kTwoLog2;
    return law;
}

ReproductionLaw ReproductionLaw::two_config() {
    const double x = solve_two_config_x();
    const double d1 = -std::log(x);
    const double d2 = -std::log(1.0 - 0.5 * x);
    return from_table("two_config", {{0.5, {d1}}, {0.5, {d2, d2}}});
}

ReproductionLaw ReproductionLaw::point_mass() {
    return from_table("point_mass", {{1.0, {0.0}}});
}

ReproductionLaw ReproductionLaw::from_table(std::string name, std::vector<ConfigEntry> table,
                                            std::optional<LatticeInfo> lattice) {
    if (table.empty()) throw std::invalid_argument("empty config table");
    ReproductionLaw law;
    law.name_ = std::move(name);
    law.kind_ = SupportKind::FiniteConfig;
    law.builtin_ = Builtin::Table;
    law.table_ = std::move(table);
    law.lattice_ = lattice;
    law.finalize_table();
    return law;
}

ReproductionLaw ReproductionLaw::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open law file: " + path);
    nlohmann::json j;
    in >> j;
    const std::string kind = j.value("kind", "");
    std::optional<LatticeInfo> lattice;
    if (j.contains("lattice")) {
        lattice = LatticeInfo{j["lattice"].at("span").get<double>(),
                              j["lattice"].value("offset", 0.0)};
    }
    if (kind == "gaussian_dyadic") return gaussian_dyadic();
    if (kind == "two_config") return two_config();
    if (kind == "point_mass") return point_mass();
    if (kind == "table") {
        std::vector<ConfigEntry> table;
        for (const auto& row : j.at("table")) {
            ConfigEntry e;
            e.prob = row.at("prob").get<double>();
            for (const auto& d : row.at("displacements")) e.displacements.push_back(d.get<double>());
            table.push_back(std::move(e));
        }
        return from_table(j.value("name", std::string("table_law")), std::move(table), lattice);
    }
    throw std::runtime_error("law file " + path + ": unknown kind '" + kind + "'");
}

void ReproductionLaw::sample(Rng& rng, std::vector<double>& out) const {
    out.clear();
    if (builtin_ == Builtin::GaussianDyadic) {
        const double sd = std::sqrt(g_var_);
        out.push_back(rng.normal(g_mean_, sd));
        out.push_back(rng.normal(g_mean_, sd));
        return;
    }
    const double u = rng.uniform();
    std::size_t idx = 0;
    while (idx + 1 < cum_prob_.size() && u > cum_prob_[idx]) ++idx;
    out = table_[idx].displacements;
}

bool ReproductionLaw::has_closed_form() const {
    return builtin_ == Builtin::GaussianDyadic || kind_ == SupportKind::FiniteConfig;
}

double ReproductionLaw::psi_exact(double beta) const {
    if (builtin_ == Builtin::GaussianDyadic) {
        // log 2 - beta m + beta^2 v / 2 with m = v = 2 log 2
        return M_LN2 - beta * g_mean_ + 0.5 * beta * beta * g_var_;
    }
    if (kind_ != SupportKind::FiniteConfig)
        throw std::runtime_error("psi_exact: no closed form for " + name_);
    double m = 0.0;
    for (const auto& e : table_)
        for (double d : e.displacements) m += e.prob * std::exp(-beta * d);
    return std::log(m);
}

double ReproductionLaw::psi_prime(double beta) const {
    if (builtin_ == Builtin::GaussianDyadic) return -g_mean_ + beta * g_var_;
    if (kind_ != SupportKind::FiniteConfig)
        throw std::runtime_error("psi_prime: no closed form for " + name_);
    double m = 0.0, m1 = 0.0;
    for (const auto& e : table_)
        for (double d : e.displacements) {
            const double w = e.prob * std::exp(-beta * d);
            m += w;
            m1 += -d * w;
        }
    return m1 / m;
}

double ReproductionLaw::psi_second(double beta) const {
    if (builtin_ == Builtin::GaussianDyadic) return g_var_;
    if (kind_ != SupportKind::FiniteConfig)
        throw std::runtime_error("psi_second: no closed form for " + name_);
    double m = 0.0, m1 = 0.0, m2 = 0.0;
    for (const auto& e : table_)
        for (double d : e.displacements) {
            const double w = e.prob * std::exp(-beta * d);
            m += w;
            m1 += -d * w;
            m2 += d * d * w;
        }
    const double r1 = m1 / m;
    return m2 / m - r1 * r1;
}

std::optional<std::pair<double, double>> ReproductionLaw::gaussian_params() const {
    if (builtin_ == Builtin::GaussianDyadic) return std::make_pair(g_mean_, g_var_);
    return std::nullopt;
}

const std::vector<ConfigEntry>& ReproductionLaw::config_table() const {
    if (kind_ != SupportKind::FiniteConfig)
        throw std::runtime_error("enumerate_configs: unsupported law '" + name_ +
                                 "' has continuous support");
    return table_;
}

LogLaplace log_laplace(const ReproductionLaw& law, double beta, std::int64_t n_samples,
                       std::uint64_t seed) {
    if (beta < 0.0) throw std::invalid_argument("log_laplace: beta must be >= 0");
    if (law.has_closed_form()) return {law.psi_exact(beta), 0.0, true, false};
    return log_laplace_mc(law, beta, n_samples, seed);
}

LogLaplace log_laplace_mc(const ReproductionLaw& law, double beta, std::int64_t n_samples,
                          std::uint64_t seed) {
    if (beta < 0.0) throw std::invalid_argument("log_laplace: beta must be >= 0");
    if (n_samples < 1) throw std::invalid_argument("log_laplace: n_samples >= 1 required");
    MeanAcc acc;
    std::vector<double> kids;
    Rng rng = make_stream(seed, 0x10c1a91aceULL);
    bool diverged = false;
    for (std::int64_t i = 0; i < n_samples; ++i) {
        law.sample(rng, kids);
        double s = 0.0;
        for (double d : kids) s += std::exp(-beta * d);
        if (!std::isfinite(s) || s > 1e300) {
            diverged = true;
            break;
        }
        acc.add(s);
    }
    LogLaplace out;
    out.exact = false;
    out.diverged = diverged || !(acc.mean() > 0.0);
    if (!out.diverged) {
        out.value = std::log(acc.mean());
        out.se = acc.se() / acc.mean();
    }
    return out;
}

TiltedMoments sample_tilted_moments(const ReproductionLaw& law, std::int64_t n_samples,
                                    std::uint64_t seed) {
    if (n_samples < 1)
        throw std::invalid_argument("sample_tilted_moments: n_samples >= 1 required");
    MeanAcc a, b;
    std::vector<double> kids;
    Rng rng = make_stream(seed, 0x7117ed);
    for (std::int64_t i = 0; i < n_samples; ++i) {
        law.sample(rng, kids);
        double s0 = 0.0, s1 = 0.0;
        for (double x : kids) {
            const double w = std::exp(-x);
            s0 += w;
            s1 += x * w;
        }
        a.add(s0);
        b.add(s1);
    }
    return {a.mean(), a.se(), b.mean(), b.se()};
}

namespace {

// E[X (log+ X)^2 + Xtilde log+ Xtilde] contribution of one configuration.
double xlog2_term(const std::vector<double>& kids) {
    double x = 0.0, xt = 0.0;
    for (double d : kids) {
        const double w = std::exp(-d);
        x += w;
        if (d > 0.0) xt += d * w;
    }
    const double lx = std::max(0.0, std::log(x));
    const double lxt = xt > 1.0 ? std::log(xt) : 0.0;
    return x * lx * lx + xt * lxt;
}

} // namespace

LawDiagnostics boundary_check(const ReproductionLaw& law, std::int64_t n_samples, double tol,
                              std::uint64_t seed) {
    if (n_samples < 1) throw std::invalid_argument("boundary_check: n_samples >= 1 required");
    LawDiagnostics d;

    if (law.support_kind() == SupportKind::FiniteConfig) {
        d.exact = true;
        d.psi_at_1 = law.psi_exact(1.0);
        d.dpsi_at_1 = law.psi_prime(1.0);
        d.sigma_sq = law.psi_second(1.0);
        double mean_kids = 0.0, xlog2 = 0.0;
        for (const auto& e : law.config_table()) {
            mean_kids += e.prob * static_cast<double>(e.displacements.size());
            xlog2 += e.prob * xlog2_term(e.displacements);
        }
        d.mean_offspring = mean_kids;
        d.x_log2_moment = xlog2;
        // finite support: Psi finite on all of R and X bounded
        d.h4_ok = TriState::Verified;
        d.h5_ok = TriState::Verified;
        d.boundary_ok = std::abs(d.psi_at_1) <= tol && std::abs(d.dpsi_at_1) <= tol &&
                        d.sigma_sq > 0.0 && d.mean_offspring > 1.0;
        return d;
    }

    if (law.has_closed_form()) {
        d.exact = true;
        d.psi_at_1 = law.psi_exact(1.0);
        d.dpsi_at_1 = law.psi_prime(1.0);
        d.sigma_sq = law.psi_second(1.0);
        d.mean_offspring = 2.0; // dyadic branching is the only closed-form continuous law
        d.h4_ok = TriState::Verified; // Psi is a finite quadratic on all of R
        d.h5_ok = TriState::Verified; // lognormal sums have all moments
        MeanAcc xacc;
        std::vector<double> kids;
        Rng rng = make_stream(seed, 0xb0a2d);
        for (std::int64_t i = 0; i < n_samples; ++i) {
            law.sample(rng, kids);
            xacc.add(xlog2_term(kids));
        }
        d.x_log2_moment = xacc.mean();
        d.boundary_ok = std::abs(d.psi_at_1) <= tol && std::abs(d.dpsi_at_1) <= tol &&
                        d.sigma_sq > 0.0;
        return d;
    }

    // generic continuous law: everything by Monte Carlo
    d.exact = false;
    MeanAcc a, b, c, kcount, xlog2;
    std::vector<double> kids;
    Rng rng = make_stream(seed, 0xb0a2d);
    for (std::int64_t i = 0; i < n_samples; ++i) {
        law.sample(rng, kids);
        double s0 = 0.0, s1 = 0.0, s2 = 0.0;
        for (double x : kids) {
            const double w = std::exp(-x);
            s0 += w;
            s1 += x * w;
            s2 += x * x * w;
        }
        a.add(s0);
        b.add(s1);
        c.add(s2);
        kcount.add(static_cast<double>(kids.size()));
        xlog2.add(xlog2_term(kids));
    }
    d.mean_offspring = kcount.mean();
    d.psi_at_1 = std::log(a.mean());
    d.psi_se = a.se() / a.mean();
    d.dpsi_at_1 = -b.mean() / a.mean();
    d.dpsi_se = b.se() / a.mean();
    d.sigma_sq = c.mean() / a.mean();
    d.x_log2_moment = xlog2.mean();
    d.h4_ok = TriState::Estimated;
    d.h5_ok = TriState::Estimated;
    d.boundary_ok = std::abs(d.psi_at_1) <= 3.0 * d.psi_se &&
                    std::abs(d.dpsi_at_1) <= 3.0 * d.dpsi_se && d.sigma_sq > 0.0 &&
                    d.mean_offspring > 1.0;
    return d;
}

} // namespace brwlab
