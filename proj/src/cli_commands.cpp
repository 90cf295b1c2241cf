#include "homspec/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>

#include "homspec/beat_oracle.hpp"
#include "homspec/errors.hpp"
#include "homspec/estimator.hpp"
#include "homspec/io.hpp"
#include "homspec/rng.hpp"
#include "homspec/simulator.hpp"
#include "homspec/statistics.hpp"

namespace homspec::cli {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr double kPi = 3.14159265358979323846;

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> engine;
    std::optional<double> gate_width_s;
};

// Resolve "delta_hz" or the self-heterodyne FM block into delta (rad/s).
// Exactly one of the two must be present.
double resolve_delta_rad_s(const json& j, const std::string& context) {
    const bool has_direct = j.contains("delta_hz");
    const bool has_fm = j.contains("fm");
    if (has_direct == has_fm)
        throw SchemaError("config " + context +
                          ": exactly one of 'delta_hz' or 'fm' must be given");
    if (has_direct) return 2.0 * kPi * j["delta_hz"].get<double>();
    const json& fm = j["fm"];
    sim::FmEmulationSpec spec;
    spec.mod_depth_hz = fm.value("mod_depth_hz", 0.0);
    spec.period_s = fm.value("period_s", 322.6e-6);
    spec.am_gate_width_s = fm.value("am_gate_width_s", 30e-6);
    if (fm.contains("fiber_delay_s"))
        spec.fiber_delay_s = fm["fiber_delay_s"].get<double>();
    else if (fm.contains("fiber_length_m"))
        spec.fiber_delay_s = sim::fiber_delay_s(fm["fiber_length_m"].get<double>(),
                                                fm.value("group_index", 1.468));
    else
        throw SchemaError("config " + context + ".fm: need 'fiber_delay_s' or 'fiber_length_m'");
    return sim::delta_from_fm(spec);
}

sim::DetectorSpec parse_detector(const json& j) {
    sim::DetectorSpec d;
    d.efficiency = j.value("efficiency", 0.15);
    d.gate_width_s = j.value("gate_width_s", 2.5e-9);
    d.gate_rate_hz = j.value("gate_rate_hz", 1e6);
    d.dark_count_prob = j.value("dark_count_prob", 0.0);
    return d;
}

std::vector<double> make_grid(double lo, double hi, double step) {
    if (!(hi > lo) || !(step > 0.0)) throw SchemaError("config: degenerate delay grid");
    const auto n = static_cast<std::size_t>(std::llround((hi - lo) / step)) + 1;
    std::vector<double> grid(n);
    for (std::size_t i = 0; i < n; ++i)
        grid[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    return grid;
}

struct ExperimentConfig {
    sim::ScanConfig scan;
    double baseline_min_abs_tau_s = 0.0;  // 0: default 4.5 sigma
};

ExperimentConfig parse_experiment_config(const json& j, const Overrides& ov) {
    ExperimentConfig cfg;
    if (!j.contains("source")) throw SchemaError("missing field 'source'");
    const json& src = j["source"];
    cfg.scan.source.mu = src.value("mu", 0.1);
    if (!src.contains("sigma_s")) throw SchemaError("missing field 'source.sigma_s'");
    cfg.scan.source.sigma_s = src["sigma_s"].get<double>();
    cfg.scan.source.delta_rad_s = resolve_delta_rad_s(src, "source");

    const json det_shared = j.value("detectors", json::object());
    cfg.scan.detector_m = parse_detector(j.contains("detector_m") ? j["detector_m"] : det_shared);
    cfg.scan.detector_n = parse_detector(j.contains("detector_n") ? j["detector_n"] : det_shared);
    if (ov.gate_width_s) {
        cfg.scan.detector_m.gate_width_s = *ov.gate_width_s;
        cfg.scan.detector_n.gate_width_s = *ov.gate_width_s;
    }

    if (!j.contains("grid")) throw SchemaError("missing field 'grid'");
    const json& grid = j["grid"];
    if (grid.contains("tau_step_s")) {
        cfg.scan.delay_grid_s =
            make_grid(grid.value("tau_min_s", 0.0), grid.value("tau_max_s", 0.0),
                      grid["tau_step_s"].get<double>());
    } else {
        const auto points = grid.value("points", std::size_t{0});
        if (points < 2) throw SchemaError("missing field 'grid.tau_step_s' or 'grid.points'");
        const double lo = grid.value("tau_min_s", 0.0), hi = grid.value("tau_max_s", 0.0);
        cfg.scan.delay_grid_s.resize(points);
        for (std::size_t i = 0; i < points; ++i)
            cfg.scan.delay_grid_s[i] =
                lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
    }

    cfg.scan.rng_seed = ov.seed ? *ov.seed : j.value("seed", std::uint64_t{1});

    if (j.contains("trials_per_point")) {
        cfg.scan.trials_per_point = j["trials_per_point"].get<std::int64_t>();
    } else if (j.contains("seconds_per_point")) {
        // Heralds delivered by the gated SPD-M stream over the dwell time;
        // photons split evenly, so the mean at M is the per-source mu.
        cfg.scan.trials_per_point = sim::heralded_gate_stream(
            cfg.scan.detector_m, cfg.scan.source.mu, j["seconds_per_point"].get<double>(),
            cfg.scan.rng_seed);
        if (cfg.scan.trials_per_point <= 0)
            throw DataError("seconds_per_point yields zero herald gates");
    } else {
        throw SchemaError("missing field 'trials_per_point' (or 'seconds_per_point')");
    }

    std::string engine = j.value("engine", std::string("kernel"));
    if (ov.engine) engine = *ov.engine;
    if (engine == "kernel")
        cfg.scan.engine = sim::Engine::two_photon_kernel;
    else if (engine == "field")
        cfg.scan.engine = sim::Engine::semiclassical_field;
    else
        throw SchemaError("field 'engine' must be 'kernel' or 'field'");

    const std::string gk = j.value("gate_kernel", std::string("boxcar"));
    if (gk == "boxcar")
        cfg.scan.gate_kernel = stats::GateKernel::boxcar;
    else if (gk == "triangular")
        cfg.scan.gate_kernel = stats::GateKernel::triangular;
    else
        throw SchemaError("field 'gate_kernel' must be 'boxcar' or 'triangular'");

    cfg.baseline_min_abs_tau_s = j.value("baseline_min_abs_tau_s", 0.0);
    return cfg;
}

sim::CoincidenceScan run_simulation(const ExperimentConfig& cfg) {
    sim::CoincidenceScan scan = sim::simulate_scan(cfg.scan);
    const double window = cfg.baseline_min_abs_tau_s > 0.0
                              ? cfg.baseline_min_abs_tau_s
                              : 4.5 * cfg.scan.source.sigma_s;
    sim::estimate_baseline(scan, window, cfg.scan.source.sigma_s);
    return scan;
}

// ---- beat command ----------------------------------------------------------

struct BeatConfig {
    double delta_rad_s = 0.0;
    double sigma_s = 0.0;
    double sample_rate_hz = 0.0;
    double duration_s = 0.0;
    std::size_t segment_length = 4096;
    double overlap = 0.5;
    std::uint64_t seed = 1;
};

// Long enough for ~256 averaged segments, and for a finite linewidth at
// least 6000 jitter correlation times: the fitted line parameters converge
// as 1/sqrt(correlation times recorded), so this puts the width error near
// one percent.
double default_beat_duration(const BeatConfig& cfg) {
    const double by_segments =
        129.0 * static_cast<double>(cfg.segment_length) / cfg.sample_rate_hz;
    if (std::isinf(cfg.sigma_s)) return by_segments;
    const double by_coherence = 6000.0 * beat::jitter_correlation_sigmas * cfg.sigma_s;
    return std::max(by_segments, by_coherence);
}

BeatConfig parse_beat_config(const json& j, const Overrides& ov) {
    BeatConfig cfg;
    if (!j.contains("sigma_s")) throw SchemaError("missing field 'sigma_s'");
    cfg.sigma_s = j["sigma_s"].get<double>();
    cfg.delta_rad_s = resolve_delta_rad_s(j, "beat");
    cfg.segment_length = j.value("segment_length", std::size_t{4096});
    cfg.overlap = j.value("overlap", 0.5);
    cfg.seed = ov.seed ? *ov.seed : j.value("seed", std::uint64_t{1});
    const double nyq = 4.0 * (cfg.delta_rad_s / (2.0 * kPi) +
                              (std::isinf(cfg.sigma_s) ? 0.0 : 2.0 / cfg.sigma_s));
    cfg.sample_rate_hz = j.value("sample_rate_hz", 1.25 * nyq);
    cfg.duration_s = j.value("duration_s", default_beat_duration(cfg));
    return cfg;
}

ordered_json beat_config_to_json(const BeatConfig& cfg) {
    return ordered_json{{"delta_hz", cfg.delta_rad_s / (2.0 * kPi)},
                        {"sigma_s", cfg.sigma_s},
                        {"sample_rate_hz", cfg.sample_rate_hz},
                        {"duration_s", cfg.duration_s},
                        {"segment_length", cfg.segment_length},
                        {"overlap", cfg.overlap},
                        {"seed", cfg.seed}};
}

struct BeatOutputs {
    beat::BeatSpectrum spectrum;
    beat::LineFit line;
};

BeatOutputs run_beat(const BeatConfig& cfg) {
    const auto series = beat::synthesize_beat(cfg.delta_rad_s, cfg.sigma_s, cfg.duration_s,
                                              cfg.sample_rate_hz, cfg.seed);
    BeatOutputs out;
    out.spectrum =
        beat::estimate_spectrum(series, cfg.sample_rate_hz, cfg.segment_length, cfg.overlap);
    out.line = beat::fit_gaussian_line(out.spectrum);
    return out;
}

// ---- command entry points --------------------------------------------------

int cmd_model(const std::string& config_path, const std::string& out_path,
              const Overrides& ov) {
    const json j = io::read_json(config_path);
    if (!j.contains("sigma_s")) throw SchemaError("missing field 'sigma_s'");
    const double sigma = j["sigma_s"].get<double>();
    const double delta = resolve_delta_rad_s(j, "model");
    double gate_width = j.value("gate_width_s", 0.0);
    if (ov.gate_width_s) gate_width = *ov.gate_width_s;
    const std::string gk = j.value("gate_kernel", std::string("boxcar"));
    const auto kernel =
        gk == "triangular" ? stats::GateKernel::triangular : stats::GateKernel::boxcar;

    if (!j.contains("grid")) throw SchemaError("missing field 'grid'");
    const auto grid = make_grid(j["grid"].value("tau_min_s", 0.0),
                                j["grid"].value("tau_max_s", 0.0),
                                j["grid"].value("tau_step_s", 0.0));

    std::vector<double> values(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
        values[i] = stats::gate_averaged_model(grid[i], sigma, delta, gate_width, kernel);

    ordered_json cfg{{"sigma_s", sigma},
                     {"delta_hz", delta / (2.0 * kPi)},
                     {"gate_width_s", gate_width},
                     {"gate_kernel", gk},
                     {"tau_min_s", grid.front()},
                     {"tau_max_s", grid.back()},
                     {"points", grid.size()}};
    io::write_curve_csv(out_path, grid, values, cfg, "coincidence_prob");
    return 0;
}

int cmd_simulate(const std::string& config_path, const std::string& out_path,
                 const Overrides& ov) {
    const ExperimentConfig cfg = parse_experiment_config(io::read_json(config_path), ov);
    const sim::CoincidenceScan scan = run_simulation(cfg);
    io::write_scan_csv(scan, out_path);
    return 0;
}

int cmd_fit(const std::string& scan_path, const std::string& out_path, bool pure_model) {
    sim::CoincidenceScan scan = io::read_scan_csv(scan_path);
    if (!scan.is_normalized()) {
        sim::estimate_baseline(scan, 4.5 * scan.config.source.sigma_s,
                               scan.config.source.sigma_s);
    }
    est::FitOptions options;
    options.pure_model = pure_model;
    const est::FitResult fit = est::fit_hom_model(scan, std::nullopt, options);

    ordered_json j = io::fit_result_to_json(fit);
    const ordered_json cfg = io::scan_config_to_json(scan.config);
    j["config_hash"] = io::config_hash_hex(cfg);
    j["seed"] = scan.config.rng_seed;
    j["scan_file"] = scan_path;
    j["config"] = cfg;
    io::write_json(j, out_path);
    return 0;
}

int cmd_beat(const std::string& config_path, const std::string& out_prefix,
             const Overrides& ov) {
    const BeatConfig cfg = parse_beat_config(io::read_json(config_path), ov);
    const BeatOutputs out = run_beat(cfg);
    const ordered_json cfg_json = beat_config_to_json(cfg);
    io::write_spectrum_csv(out.spectrum, out_prefix + ".spectrum.csv", cfg_json, cfg.seed);
    ordered_json j = io::line_fit_to_json(out.line, out.spectrum);
    j["config_hash"] = io::config_hash_hex(cfg_json);
    j["seed"] = cfg.seed;
    j["config"] = cfg_json;
    io::write_json(j, out_prefix + ".linefit.json");
    return 0;
}

int cmd_compare(const std::string& config_path, const std::string& out_prefix,
                const Overrides& ov) {
    const json j = io::read_json(config_path);
    if (!j.contains("settings") || !j["settings"].is_array() || j["settings"].size() < 3)
        throw SchemaError("compare config: need a 'settings' array with at least 3 entries");

    const std::uint64_t seed = ov.seed ? *ov.seed : j.value("seed", std::uint64_t{1});
    const double mu = j.value("mu", 0.1);
    const json det_json = j.value("detectors", json::object());
    const auto trials = j.value("trials_per_point", std::int64_t{2000000});
    const std::string engine = ov.engine ? *ov.engine : j.value("engine", std::string("kernel"));
    const double grid_halfwidth_sigmas = j.value("grid_halfwidth_sigmas", 6.0);
    const json beat_defaults = j.value("beat", json::object());

    std::vector<est::ComparisonRow> rows;
    std::vector<double> truth_hz;
    ordered_json settings_out = ordered_json::array();

    for (std::size_t k = 0; k < j["settings"].size(); ++k) {
        const json& setting = j["settings"][k];
        if (!setting.contains("sigma_s"))
            throw SchemaError("compare config: settings[" + std::to_string(k) +
                              "].sigma_s missing");
        const double sigma = setting["sigma_s"].get<double>();
        const double delta = resolve_delta_rad_s(setting, "settings");
        truth_hz.push_back(delta / (2.0 * kPi));

        // Per-setting seeds derived from the top-level seed.
        CounterRng seeder(seed, rng_stream::setting, k);
        const std::uint64_t sim_seed = seeder.next_u64();
        const std::uint64_t beat_seed = seeder.next_u64();

        // Scan grid: span the envelope plus baseline region, and sample any
        // beat with at least ~5 points per period.
        ExperimentConfig cfg;
        cfg.scan.source.mu = mu;
        cfg.scan.source.sigma_s = sigma;
        cfg.scan.source.delta_rad_s = delta;
        cfg.scan.detector_m = parse_detector(det_json);
        cfg.scan.detector_n = cfg.scan.detector_m;
        if (ov.gate_width_s) {
            cfg.scan.detector_m.gate_width_s = *ov.gate_width_s;
            cfg.scan.detector_n.gate_width_s = *ov.gate_width_s;
        }
        double step = sigma / 8.0;
        if (delta > 0.0) step = std::min(step, 2.0 * kPi / delta / 5.0);
        cfg.scan.delay_grid_s = make_grid(-grid_halfwidth_sigmas * sigma,
                                          grid_halfwidth_sigmas * sigma, step);
        cfg.scan.trials_per_point = trials;
        cfg.scan.rng_seed = sim_seed;
        cfg.scan.engine = engine == "field" ? sim::Engine::semiclassical_field
                                            : sim::Engine::two_photon_kernel;

        const sim::CoincidenceScan scan = run_simulation(cfg);
        const est::FitResult fit = est::fit_hom_model(scan);

        BeatConfig bc;
        bc.delta_rad_s = delta;
        bc.sigma_s = sigma;
        bc.segment_length = beat_defaults.value("segment_length", std::size_t{4096});
        bc.overlap = beat_defaults.value("overlap", 0.5);
        const double nyq = 4.0 * (delta / (2.0 * kPi) + 2.0 / sigma);
        bc.sample_rate_hz = beat_defaults.value("sample_rate_hz", 1.25 * nyq);
        bc.duration_s = beat_defaults.value("duration_s", default_beat_duration(bc));
        bc.seed = beat_seed;
        const BeatOutputs beat_out = run_beat(bc);

        est::ComparisonRow row;
        row.delta_hom_hz = fit.delta_rad_s / (2.0 * kPi);
        row.delta_esa_hz = beat_out.line.center_hz;
        row.width_hom_hz = est::sigma_to_halfwidth_e2_hz(fit.sigma_s);
        row.width_esa_hz = beat_out.line.halfwidth_e2_hz;
        rows.push_back(row);

        const std::string tag = std::to_string(k);
        io::write_scan_csv(scan, out_prefix + ".scan" + tag + ".csv");
        ordered_json fit_json = io::fit_result_to_json(fit);
        const ordered_json scan_cfg = io::scan_config_to_json(cfg.scan);
        fit_json["config_hash"] = io::config_hash_hex(scan_cfg);
        fit_json["seed"] = sim_seed;
        io::write_json(fit_json, out_prefix + ".fit" + tag + ".json");
        const ordered_json bc_json = beat_config_to_json(bc);
        io::write_spectrum_csv(beat_out.spectrum, out_prefix + ".spectrum" + tag + ".csv",
                               bc_json, beat_seed);
        ordered_json line_json = io::line_fit_to_json(beat_out.line, beat_out.spectrum);
        line_json["config_hash"] = io::config_hash_hex(bc_json);
        line_json["seed"] = beat_seed;
        io::write_json(line_json, out_prefix + ".linefit" + tag + ".json");

        settings_out.push_back({{"delta_true_hz", truth_hz.back()},
                                {"sigma_true_s", sigma},
                                {"sim_seed", sim_seed},
                                {"beat_seed", beat_seed}});
    }

    const est::ComparisonReport report = est::correlate_techniques(rows);
    ordered_json cfg_json{{"seed", seed},
                          {"mu", mu},
                          {"engine", engine},
                          {"trials_per_point", trials},
                          {"settings", settings_out}};
    ordered_json rep_json = io::report_to_json(report);
    rep_json["config_hash"] = io::config_hash_hex(cfg_json);
    rep_json["seed"] = seed;
    rep_json["config"] = cfg_json;
    io::write_json(rep_json, out_prefix + ".report.json");
    io::write_rows_csv(report, truth_hz, out_prefix + ".rows.csv", cfg_json);
    return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
    CLI::App app{"homspec: spectral characterization of faint coherent sources via "
                 "two-photon interference"};
    app.require_subcommand(1);

    std::string config_path, out_path, scan_path;
    Overrides ov;
    bool pure_model = false;

    const auto add_common = [&](CLI::App* sub, bool with_engine) {
        sub->add_option("--out", out_path, "output path (or prefix)")->required();
        sub->add_option("--seed", ov.seed, "override the config seed");
        sub->add_option("--gate-width", ov.gate_width_s, "override gate width, seconds");
        if (with_engine)
            sub->add_option("--engine", ov.engine, "simulation engine")
                ->check(CLI::IsMember({"kernel", "field"}));
    };

    auto* model = app.add_subcommand("model", "evaluate the analytic coincidence model");
    model->add_option("--config", config_path, "model config JSON")->required();
    add_common(model, false);

    auto* simulate = app.add_subcommand("simulate", "Monte Carlo coincidence scan");
    simulate->add_option("--config", config_path, "experiment config JSON")->required();
    add_common(simulate, true);

    auto* fit = app.add_subcommand("fit", "fit the quantum-beat model to a scan");
    fit->add_option("--scan", scan_path, "scan CSV produced by simulate")->required();
    fit->add_flag("--pure", pure_model, "constrain baseline and visibility to the pure model");
    fit->add_option("--out", out_path, "output JSON path")->required();

    auto* beat = app.add_subcommand("beat", "classical heterodyne beat oracle");
    beat->add_option("--config", config_path, "beat config JSON")->required();
    add_common(beat, false);

    auto* compare = app.add_subcommand("compare", "full cross-technique comparison");
    compare->add_option("--config", config_path, "compare config JSON")->required();
    add_common(compare, true);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (model->parsed()) return cmd_model(config_path, out_path, ov);
        if (simulate->parsed()) return cmd_simulate(config_path, out_path, ov);
        if (fit->parsed()) return cmd_fit(scan_path, out_path, pure_model);
        if (beat->parsed()) return cmd_beat(config_path, out_path, ov);
        if (compare->parsed()) return cmd_compare(config_path, out_path, ov);
    } catch (const SchemaError& e) {
        std::fprintf(stderr, "error (schema): %s\n", e.what());
        return 2;
    } catch (const DataError& e) {
        std::fprintf(stderr, "error (data): %s\n", e.what());
        return 2;
    } catch (const NumericalError& e) {
        std::fprintf(stderr, "error (numerical): %s\n", e.what());
        return 3;
    }
    return 1;
}

}  // namespace homspec::cli
