#pragma once

#include "eprmbl/errors.hpp"
#include "eprmbl/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace eprmbl {

/// One disorder-averaged curve: times, per-time mean and variance across n realizations.
struct Curve {
    std::vector<double> times;
    std::vector<double> mean;
    std::vector<double> variance;
    std::size_t         n = 1;
};

[[nodiscard]] inline Curve to_curve(const EnsembleResult &r, Measure m = Measure::log_negativity) {
    return {r.grid.times, r[m].mean, r[m].variance, r.n};
}

struct FitResult {
    double      exponent        = 0;
    double      amplitude       = 0;
    double      stderr_exponent = 0;
    double      window_lo       = 0;
    double      window_hi       = 0;
    std::size_t n_points        = 0;
    double      r_squared       = 0;
};

struct LinearFit {
    double slope        = 0;
    double intercept    = 0;
    double stderr_slope = 0;
    double r_squared    = 0;
};

/// Unweighted least squares y = intercept + slope * x.
[[nodiscard]] inline LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
    const auto n = x.size();
    if(n != y.size()) throw NumericError("fit inputs differ in length");
    if(n < 3) throw NumericError("fit needs at least 3 points (got " + std::to_string(n) + ")");
    double mx = 0, my = 0;
    for(std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0, sxy = 0, syy = 0;
    for(std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if(sxx == 0) throw NumericError("fit abscissas are all equal");
    LinearFit f;
    f.slope     = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ssr  = 0;
    for(std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - (f.intercept + f.slope * x[i]);
        ssr += r * r;
    }
    // Residuals below roundoff of the ordinates count as an exact fit.
    const double scale = std::max(syy, my * my * static_cast<double>(n));
    if(ssr <= 1e-24 * std::max(scale, 1e-300)) ssr = 0;
    f.stderr_slope = std::sqrt(ssr / static_cast<double>(n - 2) / sxx);
    f.r_squared    = syy > 0 ? 1.0 - ssr / syy : 1.0;
    return f;
}

namespace detail {
    inline void require_positive(std::span<const double> v, const char *what) {
        for(double x : v)
            if(!(x > 0) || !std::isfinite(x)) throw NumericError(std::string(what) + " must be positive and finite");
    }
    inline std::vector<double> logs(std::span<const double> v) {
        std::vector<double> out(v.size());
        std::transform(v.begin(), v.end(), out.begin(), [](double x) { return std::log(x); });
        return out;
    }
    // Inclusive window test with a relative slack, so grid points that land on a bound through
    // pow() roundoff are kept.
    inline bool in_window(double t, double lo, double hi) { return t >= lo * (1 - 1e-9) && t <= hi * (1 + 1e-9); }
} // namespace detail

struct Saturation {
    double      value                 = 0; // mean over the tail
    double      spread                = 0; // standard deviation of the curve over the tail
    double      sem                   = 0; // sqrt(tail-averaged disorder variance / n)
    double      tail_slope_per_decade = 0;
    bool        converged             = true;
    std::size_t n_points              = 0;
};

/// Saturation value from the last `tail_decades` decades of the curve. The tail counts as
/// converged when |d value / d log10 t| stays within `slope_threshold`.
[[nodiscard]] inline Saturation estimate_saturation(const Curve &c, double tail_decades = 1.0, double slope_threshold = 0.01) {
    if(c.times.size() < 2 || c.times.size() != c.mean.size()) throw NumericError("curve is empty or inconsistent");
    if(!(tail_decades > 0)) throw NumericError("tail_decades must be > 0");
    const double t_max = c.times.back();
    if(std::log10(t_max / c.times.front()) < tail_decades - 1e-9) throw NumericError("grid spans fewer than the requested tail decades");
    const double        t_lo = t_max / std::pow(10.0, tail_decades);
    std::vector<double> lt, y, var;
    for(std::size_t i = 0; i < c.times.size(); ++i) {
        if(!detail::in_window(c.times[i], t_lo, t_max)) continue;
        lt.push_back(std::log10(c.times[i]));
        y.push_back(c.mean[i]);
        var.push_back(c.variance.empty() ? 0.0 : c.variance[i]);
    }
    if(y.size() < 2) throw NumericError("tail holds fewer than 2 grid points");
    Saturation s;
    s.n_points = y.size();
    for(double v : y) s.value += v;
    s.value /= static_cast<double>(y.size());
    for(double v : y) s.spread += (v - s.value) * (v - s.value);
    s.spread = std::sqrt(s.spread / static_cast<double>(y.size()));
    double mv = 0;
    for(double v : var) mv += v;
    mv /= static_cast<double>(var.size());
    s.sem = std::sqrt(mv / static_cast<double>(std::max<std::size_t>(c.n, 1)));
    if(y.size() >= 3) s.tail_slope_per_decade = linear_fit(lt, y).slope;
    else s.tail_slope_per_decade = (y[1] - y[0]) / (lt[1] - lt[0]);
    s.converged = std::abs(s.tail_slope_per_decade) <= slope_threshold;
    return s;
}

/// [10 / delta, t_max / 10].
[[nodiscard]] inline std::pair<double, double> default_decay_window(double delta, double t_max) {
    if(!(delta > 0)) throw NumericError("default decay window needs delta > 0");
    return {10.0 / delta, t_max / 10.0};
}

/// S ~ A t^(-v): least squares of log S against log t inside [lo, hi]; exponent = v.
[[nodiscard]] inline FitResult fit_power_law_decay(const Curve &c, double lo, double hi) {
    if(!(lo > 0) || !(hi > lo)) throw NumericError("fit window must satisfy 0 < lo < hi");
    std::vector<double> x, y;
    for(std::size_t i = 0; i < c.times.size(); ++i) {
        if(!detail::in_window(c.times[i], lo, hi)) continue;
        if(!(c.mean[i] > 0)) throw NumericError("nonpositive value in fit window at t = " + std::to_string(c.times[i]));
        x.push_back(std::log(c.times[i]));
        y.push_back(std::log(c.mean[i]));
    }
    const auto f = linear_fit(x, y);
    return {-f.slope, std::exp(f.intercept), f.stderr_slope, lo, hi, x.size(), f.r_squared};
}

/// S_inf ~ A exp(-beta L); exponent = beta.
[[nodiscard]] inline FitResult fit_exponential_in_L(std::span<const double> L_values, std::span<const double> saturations) {
    if(L_values.size() < 3) throw NumericError("exponential fit needs at least 3 sizes");
    detail::require_positive(saturations, "saturations");
    const auto y = detail::logs(saturations);
    const auto f = linear_fit(L_values, y);
    const auto [lo, hi] = std::minmax_element(L_values.begin(), L_values.end());
    return {-f.slope, std::exp(f.intercept), f.stderr_slope, *lo, *hi, L_values.size(), f.r_squared};
}

/// y ~ A h^c; exponent = c.
[[nodiscard]] inline FitResult fit_h_power_law(std::span<const double> h_values, std::span<const double> y_values) {
    if(h_values.size() < 3) throw NumericError("power-law fit needs at least 3 disorder strengths");
    detail::require_positive(h_values, "disorder strengths");
    detail::require_positive(y_values, "fit ordinates");
    const auto f = linear_fit(detail::logs(h_values), detail::logs(y_values));
    const auto [lo, hi] = std::minmax_element(h_values.begin(), h_values.end());
    return {f.slope, std::exp(f.intercept), f.stderr_slope, *lo, *hi, h_values.size(), f.r_squared};
}

struct CollapseRow {
    double              x = 0; // bin center in t * delta
    std::vector<double> value;
    std::vector<double> sem;
};

struct CollapseResult {
    std::vector<CollapseRow> rows;
    double                   metric       = 0; // max over bins of (max - min) across curves
    double                   max_z        = 0; // max over bins of spread / joint standard error
    double                   mean_joint_se = 0;
};

/// Re-abscissas each curve to x = t * delta, keeps t > t_min_factor / delta and compares curves
/// in shared tenth-of-a-decade bins of x.
[[nodiscard]] inline CollapseResult scaling_collapse(std::span<const std::pair<double, Curve>> curves, double t_min_factor = 10.0) {
    if(curves.size() < 2) throw NumericError("collapse needs at least 2 curves");
    struct Acc {
        double      sum = 0, var = 0;
        std::size_t count = 0;
    };
    std::vector<std::map<long, Acc>> binned(curves.size());
    for(std::size_t i = 0; i < curves.size(); ++i) {
        const auto &[delta, c] = curves[i];
        if(!(delta > 0)) throw NumericError("collapse needs delta > 0");
        for(std::size_t k = 0; k < c.times.size(); ++k) {
            if(!(c.times[k] > t_min_factor / delta)) continue;
            const long key = std::lround(10.0 * std::log10(c.times[k] * delta));
            auto      &a   = binned[i][key];
            a.sum += c.mean[k];
            a.var += c.variance.empty() ? 0.0 : c.variance[k];
            ++a.count;
        }
    }
    CollapseResult out;
    double         se_sum = 0;
    for(const auto &[key, first] : binned[0]) {
        CollapseRow row;
        row.x      = std::pow(10.0, static_cast<double>(key) / 10.0);
        bool found = true;
        for(std::size_t i = 0; i < curves.size(); ++i) {
            auto it = binned[i].find(key);
            if(it == binned[i].end()) {
                found = false;
                break;
            }
            const auto &a = it->second;
            row.value.push_back(a.sum / static_cast<double>(a.count));
            row.sem.push_back(std::sqrt(a.var / static_cast<double>(a.count) / static_cast<double>(std::max<std::size_t>(curves[i].second.n, 1))));
        }
        if(!found) continue;
        const auto   [mn, mx] = std::minmax_element(row.value.begin(), row.value.end());
        const double diff     = *mx - *mn;
        const double se       = std::hypot(row.sem[static_cast<std::size_t>(mn - row.value.begin())], row.sem[static_cast<std::size_t>(mx - row.value.begin())]);
        out.metric            = std::max(out.metric, diff);
        if(se > 0) out.max_z = std::max(out.max_z, diff / se);
        else if(diff > 0) out.max_z = std::numeric_limits<double>::infinity();
        se_sum += se;
        out.rows.push_back(std::move(row));
    }
    if(out.rows.empty()) throw NumericError("curves have no overlapping t * delta range");
    out.mean_joint_se = se_sum / static_cast<double>(out.rows.size());
    return out;
}

/// Delta S_N^(L)(t) = mean S_N of the reference chain minus mean S_N of the chain truncated to L
/// sites next to Alice.
struct LightConeMap {
    int                              L_ref = 0;
    std::vector<int>                 L_values; // ascending, ends with L_ref
    TimeGrid                         grid;
    std::vector<std::vector<double>> delta_sn; // one row per L_values entry
    std::vector<Curve>               curves;   // disorder-averaged S_N per L_values entry
};

/// Contiguous window of `size` sites at Alice's end of the chain.
[[nodiscard]] inline SiteWindow truncation_window(const ChainConfig &chain, int size) {
    if(size < 2 || size > chain.L) throw NumericError("truncation length " + std::to_string(size) + " outside [2, " + std::to_string(chain.L) + "]");
    const SiteWindow w = 2 * chain.alice_site < chain.L ? SiteWindow{0, size} : SiteWindow{chain.L - size, chain.L};
    if(!w.contains(chain.alice_site) || !w.contains(chain.bob_site))
        throw NumericError("truncation window of " + std::to_string(size) + " sites excludes Alice or Bob");
    return w;
}

/// The window's sites as a standalone chain. The Neel phase is carried over so the truncated
/// initial state is the full initial state restricted to the window.
[[nodiscard]] inline ChainConfig truncated_config(const ChainConfig &chain, SiteWindow w) {
    ChainConfig sub = chain;
    sub.L           = w.size();
    sub.alice_site  = chain.alice_site - w.begin;
    sub.bob_site    = chain.bob_site - w.begin;
    bool up         = chain.neel_first_up;
    for(int i = 0; i < w.begin; ++i)
        if(i != chain.alice_site && i != chain.bob_site) up = !up;
    sub.neel_first_up = up;
    return sub;
}

/// Fields of the kept sites, same values as in the full realization.
[[nodiscard]] inline DisorderRealization truncated_fields(const DisorderRealization &r, SiteWindow w) {
    DisorderRealization sr;
    sr.fields.assign(r.fields.begin() + w.begin, r.fields.begin() + w.end);
    sr.seed              = r.seed;
    sr.realization_index = r.realization_index;
    return sr;
}

[[nodiscard]] inline LightConeMap light_cone_map(const ChainConfig &chain_ref, std::vector<int> L_values, const TimeGrid &grid, std::size_t n_realizations,
                                                 std::uint64_t master_seed, unsigned workers = default_workers()) {
    if(chain_ref.scenario != Scenario::SharedEnvironment) throw ConfigError("light cone needs the shared_environment scenario");
    if(n_realizations < 1) throw ConfigError("ensemble.realizations must be >= 1");
    std::sort(L_values.begin(), L_values.end());
    L_values.erase(std::unique(L_values.begin(), L_values.end()), L_values.end());
    if(L_values.empty() || L_values.back() != chain_ref.L) L_values.push_back(chain_ref.L);
    if(L_values.back() > chain_ref.L) throw NumericError("truncation length exceeds the reference chain");

    std::vector<SiteWindow>         windows;
    std::vector<RealizationContext> contexts;
    windows.reserve(L_values.size());
    contexts.reserve(L_values.size());
    for(int L : L_values) {
        if(L % 2 != 0) throw NumericError("truncation length must be even (got " + std::to_string(L) + ")");
        windows.push_back(truncation_window(chain_ref, L));
        contexts.emplace_back(truncated_config(chain_ref, windows.back()));
    }

    const auto                                    T = grid.size();
    std::vector<std::vector<std::vector<double>>> samples(L_values.size(), std::vector<std::vector<double>>(n_realizations));
    parallel_for_index(n_realizations, workers, [&](std::size_t k) {
        const auto full = draw_fields(chain_ref, realization_seed(master_seed, k), k);
        for(std::size_t j = 0; j < L_values.size(); ++j) {
            const auto          rec = contexts[j].run(truncated_fields(full, windows[j]), grid);
            std::vector<double> s(T);
            for(std::size_t t = 0; t < T; ++t) s[t] = rec[t].log_negativity;
            samples[j][k] = std::move(s);
        }
    });

    LightConeMap map;
    map.L_ref    = chain_ref.L;
    map.L_values = L_values;
    map.grid     = grid;
    for(std::size_t j = 0; j < L_values.size(); ++j) {
        auto st = aggregate(samples[j], T);
        map.curves.push_back({grid.times, std::move(st.mean), std::move(st.variance), n_realizations});
    }
    const auto &ref = map.curves.back().mean;
    for(std::size_t j = 0; j < L_values.size(); ++j) {
        std::vector<double> row(T);
        for(std::size_t t = 0; t < T; ++t) row[t] = ref[t] - map.curves[j].mean[t];
        map.delta_sn.push_back(std::move(row));
    }
    return map;
}

/// First grid time at which |Delta S_N^(L)| exceeds the threshold.
[[nodiscard]] inline std::optional<double> onset_time(const LightConeMap &map, int L, double threshold = 0.02) {
    const auto it = std::find(map.L_values.begin(), map.L_values.end(), L);
    if(it == map.L_values.end()) throw NumericError("L = " + std::to_string(L) + " is not part of the light-cone map");
    const auto &row = map.delta_sn[static_cast<std::size_t>(it - map.L_values.begin())];
    for(std::size_t t = 0; t < row.size(); ++t)
        if(std::abs(row[t]) > threshold) return map.grid.times[t];
    return std::nullopt;
}

} // namespace eprmbl
