#include "iiclab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "iiclab/rng.hpp"

namespace iiclab {

namespace {

struct WlsResult {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_se = 0.0;
    bool ok = false;
};

WlsResult wls(const std::vector<double>& x, const std::vector<double>& y,
              const std::vector<double>& w) {
    WlsResult r;
    double sw = 0.0, sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sw += w[i];
        sx += w[i] * x[i];
        sy += w[i] * y[i];
    }
    if (sw <= 0.0) return r;
    double mx = sx / sw, my = sy / sw;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += w[i] * (x[i] - mx) * (x[i] - mx);
        sxy += w[i] * (x[i] - mx) * (y[i] - my);
    }
    if (sxx <= 0.0) return r;  // all abscissae equal after resampling
    r.slope = sxy / sxx;
    r.intercept = my - r.slope * mx;
    double ssr = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double res = y[i] - (r.intercept + r.slope * x[i]);
        ssr += w[i] * res * res;
    }
    if (x.size() > 2) r.slope_se = std::sqrt(std::max(ssr / double(x.size() - 2), 0.0) / sxx);
    r.ok = true;
    return r;
}

}  // namespace

double sample_quantile(std::vector<double> values, double q) {
    if (values.empty()) throw std::invalid_argument("sample_quantile: empty sample");
    if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("sample_quantile: q outside [0,1]");
    std::sort(values.begin(), values.end());
    double pos = q * double(values.size() - 1);
    std::size_t lo = std::size_t(std::floor(pos));
    std::size_t hi = std::min(lo + 1, values.size() - 1);
    double frac = pos - double(lo);
    return values[lo] * (1.0 - frac) + values[hi] * frac;
}

LogLogFit fit_loglog(std::span<const FitPoint> points, const FitLogLogOptions& opts) {
    if (points.size() < 4) throw std::invalid_argument("fit_loglog: need at least 4 points");

    std::vector<double> lx, ly, w;
    lx.reserve(points.size());
    ly.reserve(points.size());
    w.reserve(points.size());
    bool all_errs = true;
    for (const FitPoint& p : points) {
        if (!(p.x > 0.0) || !(p.y > 0.0))
            throw std::invalid_argument("fit_loglog: nonpositive coordinate");
        lx.push_back(std::log(p.x));
        ly.push_back(std::log(p.y));
        if (p.yerr > 0.0) {
            double se_log = p.yerr / p.y;
            w.push_back(1.0 / (se_log * se_log));
        } else {
            all_errs = false;
            w.push_back(1.0);
        }
    }
    if (!all_errs) std::fill(w.begin(), w.end(), 1.0);

    WlsResult full = wls(lx, ly, w);
    if (!full.ok) throw std::invalid_argument("fit_loglog: degenerate abscissae");

    LogLogFit fit;
    fit.slope = full.slope;
    fit.intercept = full.intercept;
    fit.slope_se = full.slope_se;
    fit.points = int(points.size());

    if (opts.bootstrap > 0) {
        Xoshiro256pp rng(derive_seed(opts.seed, "fit-boot"));
        std::vector<double> slopes;
        slopes.reserve(std::size_t(opts.bootstrap));
        std::vector<double> bx(lx.size()), by(lx.size()), bw(lx.size());
        for (int b = 0; b < opts.bootstrap; ++b) {
            for (std::size_t i = 0; i < lx.size(); ++i) {
                std::size_t j = std::size_t(rng.bounded(lx.size()));
                bx[i] = lx[j];
                by[i] = ly[j];
                bw[i] = w[j];
            }
            WlsResult r = wls(bx, by, bw);
            if (r.ok) slopes.push_back(r.slope);
        }
        fit.bootstrap_used = int(slopes.size());
        if (slopes.size() >= 8) {
            fit.slope_ci_lo = sample_quantile(slopes, 0.025);
            fit.slope_ci_hi = sample_quantile(slopes, 0.975);
        } else {
            fit.slope_ci_lo = fit.slope - 1.96 * fit.slope_se;
            fit.slope_ci_hi = fit.slope + 1.96 * fit.slope_se;
        }
    } else {
        fit.slope_ci_lo = fit.slope - 1.96 * fit.slope_se;
        fit.slope_ci_hi = fit.slope + 1.96 * fit.slope_se;
    }
    return fit;
}

}  // namespace iiclab
