#pragma once

#include "eprmbl/analysis.hpp"
#include "eprmbl/errors.hpp"
#include "eprmbl/experiment.hpp"
#include "eprmbl/format.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace eprmbl {

inline constexpr std::string_view tool_version     = "0.1.0";
inline constexpr std::uint64_t    default_master_seed = 0x9E3779B97F4A7C15ULL;

// ---------------------------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------------------------

struct AnalysisOptions {
    double                                 tail_decades    = 1.0;
    double                                 slope_threshold = 0.01;
    std::optional<std::pair<double, double>> window;
};

struct LightConeOptions {
    std::vector<int> L_values{4, 6, 8, 10};
    double           threshold = 0.02;
};

/// A parsed config file: one EnsembleSpec per sweep point (a single point without sweep axes).
struct ResolvedConfig {
    std::vector<EnsembleSpec> points;
    AnalysisOptions           analysis;
    LightConeOptions          lightcone;
    bool                      allow_l16 = false;
    // Every setting written out explicitly; parsing it reproduces the same points.
    nlohmann::ordered_json resolved;
};

namespace detail {
    inline const std::set<std::string> &known_keys() {
        static const std::set<std::string> keys{
            "chain.L",         "chain.J",        "chain.delta",          "chain.h",           "chain.scenario",     "chain.alice_site",
            "chain.bob_site",  "chain.bell",     "chain.boundary",       "chain.neel_first_up", "chain.allow_l16",  "grid.t_min",
            "grid.t_max",      "grid.points",    "grid.spacing",         "ensemble.realizations", "ensemble.seed",  "sweep.h",
            "sweep.delta",     "sweep.L",        "analysis.tail_decades", "analysis.slope_threshold", "analysis.window",
            "lightcone.L_values", "lightcone.threshold"};
        return keys;
    }

    // Bare top-level keys are shorthand for chain settings.
    inline const std::set<std::string> &chain_shorthand() {
        static const std::set<std::string> keys{"L", "J", "delta", "h", "scenario", "alice_site", "bob_site", "bell", "boundary", "neel_first_up", "allow_l16"};
        return keys;
    }

    inline void flatten(const nlohmann::json &j, const std::string &prefix, std::map<std::string, nlohmann::json> &out) {
        for(auto it = j.begin(); it != j.end(); ++it) {
            std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
            if(prefix.empty() && it.key().find('.') == std::string::npos && chain_shorthand().contains(it.key())) key = "chain." + it.key();
            if(it.value().is_object()) {
                flatten(it.value(), key, out);
            } else {
                if(out.contains(key)) throw ConfigError("duplicate key '" + key + "'");
                out[key] = it.value();
            }
        }
    }

    struct KeyReader {
        const std::map<std::string, nlohmann::json> &kv;

        [[nodiscard]] bool has(const std::string &k) const { return kv.contains(k); }

        [[nodiscard]] double number(const std::string &k, double fallback) const {
            if(!has(k)) return fallback;
            const auto &v = kv.at(k);
            if(!v.is_number()) throw ConfigError(k + ": expected a number");
            return v.get<double>();
        }
        [[nodiscard]] long long integer(const std::string &k, long long fallback) const {
            if(!has(k)) return fallback;
            const auto &v = kv.at(k);
            if(v.is_number_integer() || v.is_number_unsigned()) return v.get<long long>();
            if(v.is_number_float() && std::floor(v.get<double>()) == v.get<double>()) return static_cast<long long>(v.get<double>());
            throw ConfigError(k + ": expected an integer");
        }
        [[nodiscard]] std::string text(const std::string &k, const std::string &fallback) const {
            if(!has(k)) return fallback;
            const auto &v = kv.at(k);
            if(!v.is_string()) throw ConfigError(k + ": expected a string");
            return v.get<std::string>();
        }
        [[nodiscard]] bool boolean(const std::string &k, bool fallback) const {
            if(!has(k)) return fallback;
            const auto &v = kv.at(k);
            if(!v.is_boolean()) throw ConfigError(k + ": expected true or false");
            return v.get<bool>();
        }
        [[nodiscard]] std::vector<double> numbers(const std::string &k) const {
            std::vector<double> out;
            if(!has(k)) return out;
            const auto &v = kv.at(k);
            if(!v.is_array() || v.empty()) throw ConfigError(k + ": expected a non-empty list of numbers");
            for(const auto &x : v) {
                if(!x.is_number()) throw ConfigError(k + ": expected a list of numbers");
                out.push_back(x.get<double>());
            }
            return out;
        }
    };

    inline std::uint64_t parse_seed(const nlohmann::json &v) {
        if(v.is_number_unsigned()) return v.get<std::uint64_t>();
        if(v.is_number_integer()) throw ConfigError("ensemble.seed: must be non-negative");
        if(v.is_string()) {
            const auto s = v.get<std::string>();
            try {
                std::size_t pos = 0;
                const auto  r   = std::stoull(s, &pos, 0);
                if(pos != s.size()) throw ConfigError("ensemble.seed: malformed integer '" + s + "'");
                return r;
            } catch(const std::logic_error &) { throw ConfigError("ensemble.seed: malformed integer '" + s + "'"); }
        }
        throw ConfigError("ensemble.seed: expected an unsigned integer or a string");
    }

    inline Scenario parse_scenario(const std::string &s) {
        if(s == "isolated_bob") return Scenario::IsolatedBob;
        if(s == "shared_environment") return Scenario::SharedEnvironment;
        throw ConfigError("chain.scenario: expected isolated_bob or shared_environment (got '" + s + "')");
    }
    inline BellState parse_bell(const std::string &s) {
        if(s == "psi_plus") return BellState::PsiPlus;
        if(s == "psi_minus") return BellState::PsiMinus;
        throw ConfigError("chain.bell: expected psi_plus or psi_minus (got '" + s + "')");
    }
    inline Spacing parse_spacing(const std::string &s) {
        if(s == "log") return Spacing::Logarithmic;
        if(s == "linear") return Spacing::Linear;
        throw ConfigError("grid.spacing: expected log or linear (got '" + s + "')");
    }
} // namespace detail

/// Parses JSON config text. Sections: chain, grid, ensemble, sweep, analysis, lightcone. Bare
/// top-level chain keys ({"L": 8, "h": 3}) and dotted keys ("chain.L") are accepted. Unknown keys
/// are rejected.
[[nodiscard]] inline ResolvedConfig parse_config(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch(const nlohmann::json::parse_error &e) { throw ConfigError(std::string("malformed config: ") + e.what()); }
    if(!j.is_object()) throw ConfigError("config must be a JSON object");

    std::map<std::string, nlohmann::json> kv;
    detail::flatten(j, "", kv);
    for(const auto &[k, v] : kv)
        if(!detail::known_keys().contains(k)) throw ConfigError("unknown key '" + k + "'");
    const detail::KeyReader r{kv};

    ResolvedConfig out;
    out.allow_l16 = r.boolean("chain.allow_l16", false);

    ChainConfig base;
    base.J             = r.number("chain.J", 1.0);
    base.scenario      = detail::parse_scenario(r.text("chain.scenario", "isolated_bob"));
    base.bell_state    = detail::parse_bell(r.text("chain.bell", "psi_plus"));
    base.alice_site    = static_cast<int>(r.integer("chain.alice_site", 0));
    base.neel_first_up = r.boolean("chain.neel_first_up", true);
    if(r.text("chain.boundary", "open") != "open") throw ConfigError("chain.boundary: only open boundaries are supported");

    const std::size_t n_real = [&] {
        const auto n = r.integer("ensemble.realizations", 200);
        if(n < 1) throw ConfigError("ensemble.realizations: must be >= 1");
        return static_cast<std::size_t>(n);
    }();
    const std::uint64_t seed = r.has("ensemble.seed") ? detail::parse_seed(kv.at("ensemble.seed")) : default_master_seed;

    auto axis = [&](const std::string &sweep_key, const std::string &chain_key, double fallback, bool required) {
        if(r.has(sweep_key)) {
            if(r.has(chain_key)) throw ConfigError(sweep_key + ": conflicts with " + chain_key);
            return r.numbers(sweep_key);
        }
        if(required && !r.has(chain_key)) throw ConfigError(chain_key + ": required");
        return std::vector<double>{r.number(chain_key, fallback)};
    };
    const auto Ls     = axis("sweep.L", "chain.L", 0, true);
    const auto deltas = axis("sweep.delta", "chain.delta", 0.0, false);
    const auto hs     = axis("sweep.h", "chain.h", 3.0, false);

    const bool has_grid = r.has("grid.t_min") || r.has("grid.t_max") || r.has("grid.points") || r.has("grid.spacing");

    for(double Lf : Ls) {
        if(std::floor(Lf) != Lf) throw ConfigError("chain.L: expected an integer");
        for(double delta : deltas) {
            for(double h : hs) {
                EnsembleSpec s;
                s.chain         = base;
                s.chain.L       = static_cast<int>(Lf);
                s.chain.delta   = delta;
                s.chain.h_bound = h;
                s.chain.bob_site = static_cast<int>(r.integer("chain.bob_site", ChainConfig::default_bob_site(base.scenario, s.chain.L)));
                validate(s.chain, out.allow_l16);
                if(has_grid) {
                    const double tmin = r.number("grid.t_min", 0.1);
                    const double tmax = r.number("grid.t_max", default_t_max(delta));
                    const auto   pts  = r.integer("grid.points", 10 * std::lround(std::log10(tmax / tmin)) + 1);
                    try {
                        s.grid = make_time_grid(tmin, tmax, static_cast<int>(pts), detail::parse_spacing(r.text("grid.spacing", "log")));
                    } catch(const NumericError &e) { throw ConfigError(std::string("grid: ") + e.what()); }
                } else {
                    s.grid = default_time_grid(delta);
                }
                s.n_realizations = n_real;
                s.master_seed    = seed;
                out.points.push_back(std::move(s));
            }
        }
    }

    out.analysis.tail_decades    = r.number("analysis.tail_decades", 1.0);
    out.analysis.slope_threshold = r.number("analysis.slope_threshold", 0.01);
    if(!(out.analysis.tail_decades > 0)) throw ConfigError("analysis.tail_decades: must be > 0");
    if(r.has("analysis.window")) {
        const auto w = r.numbers("analysis.window");
        if(w.size() != 2 || !(w[0] > 0) || !(w[1] > w[0])) throw ConfigError("analysis.window: expected [lo, hi] with 0 < lo < hi");
        out.analysis.window = std::pair{w[0], w[1]};
    }
    if(r.has("lightcone.L_values")) {
        out.lightcone.L_values.clear();
        for(double L : r.numbers("lightcone.L_values")) {
            if(std::floor(L) != L || L < 2) throw ConfigError("lightcone.L_values: expected even integers >= 2");
            out.lightcone.L_values.push_back(static_cast<int>(L));
        }
    }
    out.lightcone.threshold = r.number("lightcone.threshold", 0.02);
    if(!(out.lightcone.threshold > 0)) throw ConfigError("lightcone.threshold: must be > 0");

    // Explicit echo of everything that was resolved.
    const auto &p0 = out.points.front();
    nlohmann::ordered_json res;
    res["chain"]["J"]             = base.J;
    res["chain"]["scenario"]      = std::string(to_string(base.scenario));
    res["chain"]["bell"]          = std::string(to_string(base.bell_state));
    res["chain"]["boundary"]      = "open";
    res["chain"]["alice_site"]    = base.alice_site;
    if(r.has("chain.bob_site")) res["chain"]["bob_site"] = p0.chain.bob_site;
    res["chain"]["neel_first_up"] = base.neel_first_up;
    res["chain"]["allow_l16"]     = out.allow_l16;
    auto put_axis                 = [&](const char *name, const std::vector<double> &v, bool integral) {
        nlohmann::ordered_json arr = nlohmann::ordered_json::array();
        for(double x : v) {
            if(integral) arr.push_back(static_cast<int>(x));
            else arr.push_back(x);
        }
        if(v.size() > 1 || r.has(std::string("sweep.") + name)) res["sweep"][name] = arr;
        else res["chain"][name] = arr[0];
    };
    put_axis("L", Ls, true);
    put_axis("delta", deltas, false);
    put_axis("h", hs, false);
    if(has_grid || deltas.size() == 1) {
        res["grid"]["t_min"]   = p0.grid.times.front();
        res["grid"]["t_max"]   = p0.grid.times.back();
        res["grid"]["points"]  = p0.grid.size();
        res["grid"]["spacing"] = std::string(to_string(p0.grid.spacing));
    }
    res["ensemble"]["realizations"] = n_real;
    res["ensemble"]["seed"]         = seed;
    res["analysis"]["tail_decades"]    = out.analysis.tail_decades;
    res["analysis"]["slope_threshold"] = out.analysis.slope_threshold;
    if(out.analysis.window) res["analysis"]["window"] = {out.analysis.window->first, out.analysis.window->second};
    res["lightcone"]["L_values"]  = out.lightcone.L_values;
    res["lightcone"]["threshold"] = out.lightcone.threshold;
    out.resolved                  = std::move(res);
    return out;
}

/// Applies --seed / --realizations overrides, keeping the resolved echo in sync.
inline void override_ensemble(ResolvedConfig &cfg, std::optional<std::uint64_t> seed, std::optional<std::size_t> realizations) {
    if(realizations && *realizations < 1) throw ConfigError("--realizations must be >= 1");
    for(auto &p : cfg.points) {
        if(seed) p.master_seed = *seed;
        if(realizations) p.n_realizations = *realizations;
    }
    if(seed) cfg.resolved["ensemble"]["seed"] = *seed;
    if(realizations) cfg.resolved["ensemble"]["realizations"] = *realizations;
}

// ---------------------------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------------------------

[[nodiscard]] inline std::string read_file(const std::filesystem::path &p) {
    std::ifstream in(p, std::ios::binary);
    if(!in) throw IoError("cannot open '" + p.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::filesystem::path &p, std::string_view content) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if(!out) throw IoError("cannot write '" + p.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if(!out) throw IoError("failed writing '" + p.string() + "'");
}

inline constexpr std::string_view results_header = "time,neg_mean,neg_var,logneg_mean,logneg_var,conc_mean,conc_var,eof_mean,eof_var,n";

[[nodiscard]] inline std::string results_csv(const EnsembleResult &r) {
    std::string out(results_header);
    out += '\n';
    for(std::size_t t = 0; t < r.grid.size(); ++t) {
        out += format_double(r.grid.times[t]);
        for(const auto &s : r.stats) {
            out += ',' + format_double(s.mean[t]);
            out += ',' + format_double(s.variance[t]);
        }
        out += ',' + std::to_string(r.n) + '\n';
    }
    return out;
}

namespace detail {
    inline std::vector<std::string_view> split(std::string_view line, char sep = ',') {
        std::vector<std::string_view> out;
        std::size_t                   start = 0;
        while(true) {
            const auto pos = line.find(sep, start);
            out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
            if(pos == std::string_view::npos) break;
            start = pos + 1;
        }
        return out;
    }

    inline std::vector<std::string_view> lines(std::string_view text) {
        std::vector<std::string_view> out;
        std::size_t                   start = 0;
        while(start < text.size()) {
            auto pos = text.find('\n', start);
            if(pos == std::string_view::npos) pos = text.size();
            out.push_back(text.substr(start, pos - start));
            start = pos + 1;
        }
        return out;
    }
} // namespace detail

/// Strict reader for results.csv: exact header, ten fields per row, increasing times.
[[nodiscard]] inline EnsembleResult parse_results_csv(std::string_view text) {
    const auto rows = detail::lines(text);
    if(rows.empty() || rows.front() != results_header) throw IoError("results.csv: unexpected header");
    EnsembleResult r;
    for(auto &s : r.stats) s = {};
    for(std::size_t i = 1; i < rows.size(); ++i) {
        const auto f = detail::split(rows[i]);
        if(f.size() != 10) throw IoError("results.csv: row " + std::to_string(i) + " has " + std::to_string(f.size()) + " fields");
        const double t = parse_double(f[0]);
        if(!r.grid.times.empty() && !(t > r.grid.times.back())) throw IoError("results.csv: times are not increasing");
        r.grid.times.push_back(t);
        for(std::size_t m = 0; m < n_measures; ++m) {
            r.stats[m].mean.push_back(parse_double(f[1 + 2 * m]));
            r.stats[m].variance.push_back(parse_double(f[2 + 2 * m]));
        }
        const double n = parse_double(f[9]);
        if(!(n >= 1) || std::floor(n) != n) throw IoError("results.csv: malformed count");
        r.n = static_cast<std::size_t>(n);
    }
    if(r.grid.times.empty()) throw IoError("results.csv: no data rows");
    return r;
}

/// Aggregate row of a sweep point.
struct SummaryRow {
    int         L       = 0;
    double      delta   = 0;
    double      h       = 0;
    std::string scenario;
    Saturation  saturation;
    std::optional<FitResult> decay;
    std::string results;
};

inline constexpr std::string_view summary_header =
    "L,delta,h,scenario,sn_inf,sn_inf_spread,sn_inf_sem,tail_slope,converged,v,v_stderr,v_r2,window_lo,window_hi,results";

[[nodiscard]] inline std::string summary_csv(const std::vector<SummaryRow> &rows) {
    std::string out(summary_header);
    out += '\n';
    const auto nan = std::numeric_limits<double>::quiet_NaN();
    for(const auto &r : rows) {
        out += std::to_string(r.L) + ',' + format_double(r.delta) + ',' + format_double(r.h) + ',' + r.scenario;
        out += ',' + format_double(r.saturation.value) + ',' + format_double(r.saturation.spread) + ',' + format_double(r.saturation.sem);
        out += ',' + format_double(r.saturation.tail_slope_per_decade) + ',' + (r.saturation.converged ? "1" : "0");
        out += ',' + format_double(r.decay ? r.decay->exponent : nan) + ',' + format_double(r.decay ? r.decay->stderr_exponent : nan);
        out += ',' + format_double(r.decay ? r.decay->r_squared : nan);
        out += ',' + format_double(r.decay ? r.decay->window_lo : nan) + ',' + format_double(r.decay ? r.decay->window_hi : nan);
        out += ',' + r.results + '\n';
    }
    return out;
}

[[nodiscard]] inline std::vector<SummaryRow> parse_summary_csv(std::string_view text) {
    const auto rows = detail::lines(text);
    if(rows.empty() || rows.front() != summary_header) throw IoError("summary.csv: unexpected header");
    std::vector<SummaryRow> out;
    for(std::size_t i = 1; i < rows.size(); ++i) {
        const auto f = detail::split(rows[i]);
        if(f.size() != 15) throw IoError("summary.csv: row " + std::to_string(i) + " has " + std::to_string(f.size()) + " fields");
        SummaryRow r;
        r.L                                = static_cast<int>(parse_double(f[0]));
        r.delta                            = parse_double(f[1]);
        r.h                                = parse_double(f[2]);
        r.scenario                         = std::string(f[3]);
        r.saturation.value                 = parse_double(f[4]);
        r.saturation.spread                = parse_double(f[5]);
        r.saturation.sem                   = parse_double(f[6]);
        r.saturation.tail_slope_per_decade = parse_double(f[7]);
        r.saturation.converged             = f[8] == "1";
        const double v                     = parse_double(f[9]);
        if(!std::isnan(v)) r.decay = FitResult{v, 0, parse_double(f[10]), parse_double(f[12]), parse_double(f[13]), 0, parse_double(f[11])};
        r.results = std::string(f[14]);
        out.push_back(std::move(r));
    }
    if(out.empty()) throw IoError("summary.csv: no data rows");
    return out;
}

inline constexpr std::string_view lightcone_header = "L,t,delta_sn";

[[nodiscard]] inline std::string lightcone_csv(const LightConeMap &m) {
    std::string out(lightcone_header);
    out += '\n';
    for(std::size_t j = 0; j < m.L_values.size(); ++j)
        for(std::size_t t = 0; t < m.grid.size(); ++t) out += std::to_string(m.L_values[j]) + ',' + format_double(m.grid.times[t]) + ',' + format_double(m.delta_sn[j][t]) + '\n';
    return out;
}

[[nodiscard]] inline nlohmann::ordered_json fit_json(const FitResult &f) {
    nlohmann::ordered_json j;
    j["exponent"]        = f.exponent;
    j["amplitude"]       = f.amplitude;
    j["stderr_exponent"] = f.stderr_exponent;
    j["window"]          = {f.window_lo, f.window_hi};
    j["n_points"]        = f.n_points;
    j["r_squared"]       = f.r_squared;
    return j;
}

// ---------------------------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------------------------

struct RunManifest {
    std::string              version{tool_version};
    std::string              timestamp;
    nlohmann::ordered_json   config;
    std::uint64_t            master_seed = 0;
    std::string              seeds_digest;
    std::vector<std::string> outputs;

    [[nodiscard]] nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["tool_version"] = version;
        j["timestamp"]    = timestamp;
        j["config"]       = config;
        j["master_seed"]  = master_seed;
        j["seeds_digest"] = seeds_digest;
        j["outputs"]      = outputs;
        return j;
    }

    [[nodiscard]] static RunManifest from_json(const nlohmann::json &j) {
        try {
            RunManifest m;
            m.version      = j.at("tool_version").get<std::string>();
            m.timestamp    = j.at("timestamp").get<std::string>();
            m.config       = nlohmann::ordered_json::parse(j.at("config").dump());
            m.master_seed  = j.at("master_seed").get<std::uint64_t>();
            m.seeds_digest = j.at("seeds_digest").get<std::string>();
            m.outputs      = j.at("outputs").get<std::vector<std::string>>();
            return m;
        } catch(const nlohmann::json::exception &e) { throw IoError(std::string("malformed manifest: ") + e.what()); }
    }
};

[[nodiscard]] inline std::string utc_timestamp() {
    const auto  now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm     tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// FNV-1a over the hex seeds of every realization of every point, in order.
[[nodiscard]] inline std::string seeds_digest(const std::vector<EnsembleSpec> &points) {
    std::string s;
    for(const auto &p : points)
        for(std::size_t k = 0; k < p.n_realizations; ++k) s += hex64(realization_seed(p.master_seed, k));
    return hex64(fnv1a64(s));
}

[[nodiscard]] inline std::string resolved_digest(const ResolvedConfig &cfg) {
    std::string s;
    for(const auto &p : cfg.points) s += canonical_description(p) + "|";
    s += cfg.resolved.dump();
    return hex64(fnv1a64(s));
}

} // namespace eprmbl
