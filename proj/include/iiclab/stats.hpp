#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace iiclab {

struct FitPoint {
    double x = 0.0;
    double y = 0.0;
    double yerr = 0.0;  // one-sigma absolute error on y; <= 0 means unknown
};

struct LogLogFit {
    double slope = 0.0;
    double intercept = 0.0;  // in log-y units
    double slope_se = 0.0;
    double slope_ci_lo = 0.0;  // bootstrap percentile bounds (2.5% / 97.5%)
    double slope_ci_hi = 0.0;
    int points = 0;
    int bootstrap_used = 0;  // resamples that produced a usable refit
};

struct FitLogLogOptions {
    int bootstrap = 1000;
    std::uint64_t seed = 0;
};

// Least squares on (log x, log y), weighted by the delta-method error of the
// ordinate: se(log y) = yerr / y. If any point lacks an error bar the whole
// fit falls back to equal weights (mixing known and unknown variances would
// make the weights meaningless). Confidence bounds come from resampling the
// points with replacement. Throws std::invalid_argument on fewer than 4
// points or any nonpositive coordinate.
LogLogFit fit_loglog(std::span<const FitPoint> points, const FitLogLogOptions& opts = {});

// quantile of a sample by sorted linear interpolation, q in [0,1]
double sample_quantile(std::vector<double> values, double q);

}  // namespace iiclab
