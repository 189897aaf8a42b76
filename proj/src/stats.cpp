#include "brwlab/stats.hpp"

namespace brwlab {

double ks_distance(std::vector<double> sample, const std::function<double(double)>& cdf) {
    std::vector<std::pair<double, double>> sw;
    sw.reserve(sample.size());
    for (double x : sample) sw.emplace_back(x, 1.0);
    return ks_distance_weighted(std::move(sw), cdf);
}

double ks_distance_weighted(std::vector<std::pair<double, double>> sw,
                            const std::function<double(double)>& cdf) {
    if (sw.empty()) throw std::invalid_argument("ks_distance: empty sample");
    std::sort(sw.begin(), sw.end());
    double total = 0.0;
    for (const auto& [x, w] : sw) total += w;
    if (total <= 0.0) throw std::invalid_argument("ks_distance: nonpositive total weight");
    double cum = 0.0;
    double d = 0.0;
    for (const auto& [x, w] : sw) {
        const double f = cdf(x);
        d = std::max(d, std::abs(cum / total - f)); // just below the atom
        cum += w;
        d = std::max(d, std::abs(cum / total - f)); // just above
    }
    return d;
}

LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("linear_fit: need >= 2 equally sized points");
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double denom = n * sxx - sx * sx;
    if (denom == 0.0) throw std::invalid_argument("linear_fit: degenerate x");
    LinearFit fit;
    fit.slope = (n * sxy - sx * sy) / denom;
    fit.intercept = (sy - fit.slope * sx) / n;
    if (x.size() > 2) {
        double ss = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double r = y[i] - fit.intercept - fit.slope * x[i];
            ss += r * r;
        }
        fit.slope_se = std::sqrt(ss / (n - 2.0) / (sxx - sx * sx / n));
    }
    return fit;
}

namespace {
double quantile_sorted(const std::vector<double>& v, double q) {
    const double pos = q * static_cast<double>(v.size() - 1);
    const std::size_t i = static_cast<std::size_t>(pos);
    if (i + 1 >= v.size()) return v.back();
    const double frac = pos - static_cast<double>(i);
    return v[i] * (1.0 - frac) + v[i + 1] * frac;
}
} // namespace

double median(std::vector<double> v) {
    if (v.empty()) throw std::invalid_argument("median: empty");
    std::sort(v.begin(), v.end());
    return quantile_sorted(v, 0.5);
}

Interval quartiles(std::vector<double> v) {
    if (v.empty()) throw std::invalid_argument("quartiles: empty");
    std::sort(v.begin(), v.end());
    return {quantile_sorted(v, 0.25), quantile_sorted(v, 0.75)};
}

} // namespace brwlab
