#include "eprmbl/io.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace eprmbl;

namespace {

struct CommonOptions {
    std::string                  config_path;
    std::string                  out_dir = "runs";
    unsigned                     workers = default_workers();
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t>   realizations;
    bool                         force = false;
};

ResolvedConfig load_config(const CommonOptions &o) {
    auto cfg = parse_config(read_file(o.config_path));
    override_ensemble(cfg, o.seed, o.realizations);
    return cfg;
}

fs::path prepare_run_dir(const CommonOptions &o, const std::string &digest) {
    const fs::path dir = fs::path(o.out_dir) / digest;
    std::error_code ec;
    if(fs::exists(dir, ec) && !o.force) throw IoError("run directory '" + dir.string() + "' exists; pass --force to overwrite");
    fs::create_directories(dir, ec);
    if(ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
    return dir;
}

void write_manifest(const fs::path &dir, const ResolvedConfig &cfg, std::vector<std::string> outputs) {
    RunManifest m;
    m.timestamp    = utc_timestamp();
    m.config       = cfg.resolved;
    m.master_seed  = cfg.points.front().master_seed;
    m.seeds_digest = seeds_digest(cfg.points);
    m.outputs      = std::move(outputs);
    write_file(dir / "manifest.json", m.to_json().dump(2) + "\n");
}

const EnsembleSpec &single_point(const ResolvedConfig &cfg, const char *cmd) {
    if(cfg.points.size() != 1) throw ConfigError(std::string(cmd) + " takes a single configuration; use sweep for sweep.* axes");
    return cfg.points.front();
}

std::optional<FitResult> decay_fit(const EnsembleResult &r, const EnsembleSpec &p, const AnalysisOptions &a) {
    std::pair<double, double> w;
    if(a.window) w = *a.window;
    else if(p.chain.delta > 0) w = default_decay_window(p.chain.delta, r.grid.times.back());
    else return std::nullopt;
    try {
        return fit_power_law_decay(to_curve(r), w.first, w.second);
    } catch(const NumericError &e) {
        std::cerr << "warning: no decay fit for L=" << p.chain.L << " delta=" << format_double(p.chain.delta) << " h=" << format_double(p.chain.h_bound) << ": "
                  << e.what() << '\n';
        return std::nullopt;
    }
}

int cmd_run(const CommonOptions &o, std::optional<std::size_t> dump_rho) {
    const auto  cfg = load_config(o);
    const auto &p   = single_point(cfg, "run");
    const auto  dir = prepare_run_dir(o, config_digest(p));
    const auto  r   = run_ensemble(p, o.workers);
    write_file(dir / "results.csv", results_csv(r));
    std::vector<std::string> outputs{(dir / "results.csv").string()};

    if(dump_rho) {
        if(*dump_rho >= p.n_realizations) throw ConfigError("--dump-rho index exceeds the number of realizations");
        const RealizationContext ctx(p.chain);
        const auto               fields = draw_fields(p.chain, realization_seed(p.master_seed, *dump_rho), *dump_rho);
        const auto               H      = build_hamiltonian(p.chain, fields, ctx.basis());
        const auto               psi    = evolve_many(diagonalize(H, fields.seed), ctx.initial(), p.grid.times);
        std::string              csv    = "t";
        for(int i = 0; i < 16; ++i) csv += ",re" + std::to_string(i) + ",im" + std::to_string(i);
        csv += '\n';
        for(std::size_t k = 0; k < p.grid.size(); ++k) {
            csv += format_double(p.grid.times[k]);
            for(double v : ctx.layout().reduce(psi.col(static_cast<Eigen::Index>(k))).interleaved()) csv += ',' + format_double(v);
            csv += '\n';
        }
        write_file(dir / "rho.csv", csv);
        outputs.push_back((dir / "rho.csv").string());
    }
    write_manifest(dir, cfg, outputs);
    std::cout << dir.string() << '\n';
    return 0;
}

int cmd_sweep(const CommonOptions &o) {
    const auto cfg = load_config(o);
    const auto dir = prepare_run_dir(o, resolved_digest(cfg));

    std::vector<SummaryRow>  rows;
    std::vector<std::string> outputs;
    for(std::size_t i = 0; i < cfg.points.size(); ++i) {
        const auto &p   = cfg.points[i];
        const auto  sub = dir / ("point_" + std::to_string(i));
        fs::create_directories(sub);
        const auto r = run_ensemble(p, o.workers);
        write_file(sub / "results.csv", results_csv(r));
        outputs.push_back((sub / "results.csv").string());

        SummaryRow row;
        row.L          = p.chain.L;
        row.delta      = p.chain.delta;
        row.h          = p.chain.h_bound;
        row.scenario   = std::string(to_string(p.chain.scenario));
        row.saturation = estimate_saturation(to_curve(r), cfg.analysis.tail_decades, cfg.analysis.slope_threshold);
        row.decay      = decay_fit(r, p, cfg.analysis);
        row.results    = "point_" + std::to_string(i) + "/results.csv";
        rows.push_back(std::move(row));
        std::cerr << "point " << i + 1 << "/" << cfg.points.size() << " done\n";
    }
    write_file(dir / "summary.csv", summary_csv(rows));
    outputs.push_back((dir / "summary.csv").string());
    write_manifest(dir, cfg, outputs);
    std::cout << dir.string() << '\n';
    return 0;
}

int cmd_lightcone(const CommonOptions &o) {
    const auto  cfg = load_config(o);
    const auto &p   = single_point(cfg, "lightcone");
    const auto  dir = prepare_run_dir(o, resolved_digest(cfg));
    const auto  map = light_cone_map(p.chain, cfg.lightcone.L_values, p.grid, p.n_realizations, p.master_seed, o.workers);
    write_file(dir / "lightcone.csv", lightcone_csv(map));
    write_manifest(dir, cfg, {(dir / "lightcone.csv").string()});
    for(int L : map.L_values) {
        const auto t = onset_time(map, L, cfg.lightcone.threshold);
        std::cout << "L=" << L << " onset=" << (t ? format_double(*t) : std::string("none")) << '\n';
    }
    std::cout << dir.string() << '\n';
    return 0;
}

int cmd_fit(const std::string &input, const std::string &kind, const std::vector<double> &window, std::optional<double> delta, const std::string &target,
            const std::string &out_dir) {
    FitResult f;
    if(kind == "power") {
        const auto r = parse_results_csv(read_file(input));
        double     lo = 0, hi = 0;
        if(window.size() == 2) {
            lo = window[0];
            hi = window[1];
        } else if(delta) {
            std::tie(lo, hi) = default_decay_window(*delta, r.grid.times.back());
        } else {
            throw ConfigError("fit power: pass --window lo hi or --delta");
        }
        f = fit_power_law_decay(to_curve(r), lo, hi);
    } else if(kind == "exp-L" || kind == "h-power") {
        const auto          rows = parse_summary_csv(read_file(input));
        std::vector<double> x, y;
        for(const auto &r : rows) {
            x.push_back(kind == "exp-L" ? static_cast<double>(r.L) : r.h);
            if(kind == "exp-L" || target == "saturation") y.push_back(r.saturation.value);
            else if(target == "deficit") y.push_back(1.0 - r.saturation.value);
            else if(target == "v") {
                if(!r.decay) throw NumericError("summary row without a decay fit");
                y.push_back(r.decay->exponent);
            } else throw ConfigError("--target must be deficit, v or saturation");
        }
        f = kind == "exp-L" ? fit_exponential_in_L(x, y) : fit_h_power_law(x, y);
    } else {
        throw ConfigError("--kind must be power, exp-L or h-power");
    }
    std::cout << "exponent " << format_double(f.exponent) << "\namplitude " << format_double(f.amplitude) << "\nstderr_exponent "
              << format_double(f.stderr_exponent) << "\nwindow " << format_double(f.window_lo) << ' ' << format_double(f.window_hi) << "\nn_points "
              << f.n_points << "\nr_squared " << format_double(f.r_squared) << '\n';
    auto j    = fit_json(f);
    j["kind"] = kind;
    j["input"] = input;
    fs::path dir = out_dir.empty() ? fs::path(input).parent_path() : fs::path(out_dir);
    if(dir.empty()) dir = ".";
    fs::create_directories(dir);
    write_file(dir / "fits.json", j.dump(2) + "\n");
    return 0;
}

void add_common(CLI::App *cmd, CommonOptions &o) {
    cmd->add_option("--config", o.config_path, "JSON config file")->required();
    cmd->add_option("--out", o.out_dir, "Base output directory");
    cmd->add_option("--workers", o.workers, "Worker threads")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", o.seed, "Master seed (overrides ensemble.seed)");
    cmd->add_option("--realizations", o.realizations, "Disorder realizations (overrides ensemble.realizations)");
    cmd->add_flag("--force", o.force, "Overwrite an existing run directory");
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Entanglement dynamics of an EPR pair in a disordered XXZ chain"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(tool_version));

    CommonOptions              run_o, sweep_o, lc_o;
    std::optional<std::size_t> dump_rho;
    auto                      *run = app.add_subcommand("run", "Run one disorder ensemble");
    add_common(run, run_o);
    run->add_option("--dump-rho", dump_rho, "Also write the pair density matrices of realization k");
    auto *sweep = app.add_subcommand("sweep", "Run every point of the sweep.* axes");
    add_common(sweep, sweep_o);
    auto *lc = app.add_subcommand("lightcone", "Full vs truncated chain entanglement difference");
    add_common(lc, lc_o);

    std::string           fit_input, fit_kind = "power", fit_target = "deficit", fit_out;
    std::vector<double>   fit_window;
    std::optional<double> fit_delta;
    auto                 *fit = app.add_subcommand("fit", "Fit a results.csv or summary.csv");
    fit->add_option("input", fit_input, "results.csv (power) or summary.csv (exp-L, h-power)")->required();
    fit->add_option("--kind", fit_kind, "power | exp-L | h-power");
    fit->add_option("--window", fit_window, "Fit window lo hi")->expected(2);
    fit->add_option("--delta", fit_delta, "Interaction strength for the default power-law window");
    fit->add_option("--target", fit_target, "h-power ordinate: deficit (1 - S_N(inf)) | v | saturation");
    fit->add_option("--out", fit_out, "Directory for fits.json (default: next to the input)");

    try {
        app.parse(argc, argv);
    } catch(const CLI::ParseError &e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : static_cast<int>(ErrorClass::config);
    }

    try {
        if(*run) return cmd_run(run_o, dump_rho);
        if(*sweep) return cmd_sweep(sweep_o);
        if(*lc) return cmd_lightcone(lc_o);
        if(*fit) return cmd_fit(fit_input, fit_kind, fit_window, fit_delta, fit_target, fit_out);
    } catch(const Error &e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.exit_code();
    } catch(const fs::filesystem_error &e) {
        std::cerr << "error: " << e.what() << '\n';
        return static_cast<int>(ErrorClass::io);
    } catch(const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return static_cast<int>(ErrorClass::numeric);
    }
    return 0;
}
