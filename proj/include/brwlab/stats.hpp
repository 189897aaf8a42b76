#ifndef BRWLAB_STATS_HPP
#define BRWLAB_STATS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace brwlab {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kPosInf = std::numeric_limits<double>::infinity();

// Count-sum-sumsq accumulator. merge() is associative, so chunked parallel
// reductions give the same result as a serial pass when merged in a fixed
// order.
struct MeanAcc {
    std::int64_t n = 0;
    double sum = 0.0;
    double sumsq = 0.0;

    void add(double x) {
        ++n;
        sum += x;
        sumsq += x * x;
    }
    void merge(const MeanAcc& o) {
        n += o.n;
        sum += o.sum;
        sumsq += o.sumsq;
    }
    double mean() const { return n > 0 ? sum / static_cast<double>(n) : 0.0; }
    double var() const {
        if (n < 2) return 0.0;
        const double m = mean();
        double v = (sumsq - static_cast<double>(n) * m * m) / static_cast<double>(n - 1);
        return v > 0.0 ? v : 0.0;
    }
    double sd() const { return std::sqrt(var()); }
    double se() const { return n > 0 ? sd() / std::sqrt(static_cast<double>(n)) : 0.0; }
};

// Importance-weighted mean with effective sample size.
struct WeightedAcc {
    std::int64_t n = 0;
    double wsum = 0.0;
    double w2sum = 0.0;
    double wxsum = 0.0;
    double wx2sum = 0.0;

    void add(double x, double w) {
        ++n;
        wsum += w;
        w2sum += w * w;
        wxsum += w * x;
        wx2sum += w * x * x;
    }
    void merge(const WeightedAcc& o) {
        n += o.n;
        wsum += o.wsum;
        w2sum += o.w2sum;
        wxsum += o.wxsum;
        wx2sum += o.wx2sum;
    }
    double mean() const { return wsum > 0.0 ? wxsum / wsum : 0.0; }
    double ess() const { return w2sum > 0.0 ? wsum * wsum / w2sum : 0.0; }
    // delta-method standard error of the ratio estimator
    double se() const {
        if (n < 2 || wsum <= 0.0) return 0.0;
        const double m = mean();
        const double v = (wx2sum - 2.0 * m * wxsum + m * m * w2sum);
        return std::sqrt(std::max(0.0, v)) / wsum;
    }
};

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

struct Estimate {
    double value = 0.0;
    double se = 0.0;
    std::int64_t n = 0;
    Interval ci95() const { return {value - 1.96 * se, value + 1.96 * se}; }
};

// Wilson score interval for a binomial proportion.
inline Interval wilson_ci(std::int64_t successes, std::int64_t trials, double z = 1.96) {
    if (trials <= 0) return {0.0, 1.0};
    const double nd = static_cast<double>(trials);
    const double p = static_cast<double>(successes) / nd;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nd;
    const double centre = p + z2 / (2.0 * nd);
    const double half = z * std::sqrt(p * (1.0 - p) / nd + z2 / (4.0 * nd * nd));
    return {(centre - half) / denom, (centre + half) / denom};
}

// Streaming log-sum-exp: log(sum exp(a_i)) without materializing the terms.
class StreamingLse {
public:
    void push(double a) {
        if (a == kNegInf) return;
        if (!started_) {
            max_ = a;
            sum_ = 1.0;
            started_ = true;
            return;
        }
        if (a <= max_) {
            sum_ += std::exp(a - max_);
        } else {
            sum_ = sum_ * std::exp(max_ - a) + 1.0;
            max_ = a;
        }
    }
    double value() const { return started_ ? max_ + std::log(sum_) : kNegInf; }
    bool empty() const { return !started_; }

private:
    double max_ = 0.0;
    double sum_ = 0.0;
    bool started_ = false;
};

inline double log_sum_exp(std::span<const double> args) {
    StreamingLse lse;
    for (double a : args) lse.push(a);
    return lse.value();
}

inline double normal_pdf(double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
}
inline double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}
// Rayleigh: law of the meander endpoint M(1), density t e^{-t^2/2} on t>=0
inline double rayleigh_cdf(double t) {
    return t <= 0.0 ? 0.0 : 1.0 - std::exp(-0.5 * t * t);
}
// Maxwell: law of the Bessel(3) marginal at time 1, density sqrt(2/pi) t^2 e^{-t^2/2}
inline double maxwell_cdf(double t) {
    if (t <= 0.0) return 0.0;
    return std::erf(t / std::sqrt(2.0)) - std::sqrt(2.0 / M_PI) * t * std::exp(-0.5 * t * t);
}

// Kolmogorov-Smirnov distance of a (possibly weighted) sample against a
// reference CDF. Weights default to 1.
double ks_distance(std::vector<double> sample, const std::function<double(double)>& cdf);
double ks_distance_weighted(std::vector<std::pair<double, double>> sample_weights,
                            const std::function<double(double)>& cdf);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_se = 0.0;
};
LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

double median(std::vector<double> v);
// interquartile range endpoints (25%, 75%) by linear interpolation
Interval quartiles(std::vector<double> v);

} // namespace brwlab

#endif
