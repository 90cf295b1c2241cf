#include "homspec/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string_view>

#include "homspec/errors.hpp"

namespace homspec::io {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr double kPi = 3.14159265358979323846;

std::string hex16(std::uint64_t v) {
    char buf[17];
    static const char* digits = "0123456789abcdef";
    for (int i = 15; i >= 0; --i) {
        buf[i] = digits[v & 0xf];
        v >>= 4;
    }
    buf[16] = '\0';
    return buf;
}

const json& require(const json& j, const std::string& key, const std::string& context) {
    auto it = j.find(key);
    if (it == j.end())
        throw SchemaError("missing field '" + context + key + "'");
    return *it;
}

double require_number(const json& j, const std::string& key, const std::string& context) {
    const json& v = require(j, key, context);
    if (!v.is_number()) throw SchemaError("field '" + context + key + "' must be a number");
    return v.get<double>();
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + path);
    return out;
}

}  // namespace

std::uint64_t fnv1a64(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string format_double(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string config_hash_hex(const ordered_json& config_json) {
    return hex16(fnv1a64(config_json.dump()));
}

ordered_json scan_config_to_json(const sim::ScanConfig& config) {
    ordered_json j;
    j["source"] = {{"mu", config.source.mu},
                   {"sigma_s", config.source.sigma_s},
                   {"delta_hz", config.source.delta_rad_s / (2.0 * kPi)}};
    const auto det = [](const sim::DetectorSpec& d) {
        return ordered_json{{"efficiency", d.efficiency},
                            {"gate_width_s", d.gate_width_s},
                            {"gate_rate_hz", d.gate_rate_hz},
                            {"dark_count_prob", d.dark_count_prob}};
    };
    j["detector_m"] = det(config.detector_m);
    j["detector_n"] = det(config.detector_n);
    j["grid"] = {{"tau_min_s", config.delay_grid_s.front()},
                 {"tau_max_s", config.delay_grid_s.back()},
                 {"points", config.delay_grid_s.size()}};
    j["trials_per_point"] = config.trials_per_point;
    j["engine"] = config.engine == sim::Engine::two_photon_kernel ? "kernel" : "field";
    j["gate_kernel"] =
        config.gate_kernel == stats::GateKernel::boxcar ? "boxcar" : "triangular";
    j["seed"] = config.rng_seed;
    return j;
}

sim::ScanConfig scan_config_from_json(const json& j) {
    sim::ScanConfig cfg;
    const json& src = require(j, "source", "");
    cfg.source.mu = require_number(src, "mu", "source.");
    cfg.source.sigma_s = require_number(src, "sigma_s", "source.");
    cfg.source.delta_rad_s = 2.0 * kPi * require_number(src, "delta_hz", "source.");
    const auto det = [&](const std::string& key) {
        const json& d = require(j, key, "");
        sim::DetectorSpec spec;
        spec.efficiency = require_number(d, "efficiency", key + ".");
        spec.gate_width_s = require_number(d, "gate_width_s", key + ".");
        spec.gate_rate_hz = require_number(d, "gate_rate_hz", key + ".");
        spec.dark_count_prob = require_number(d, "dark_count_prob", key + ".");
        return spec;
    };
    cfg.detector_m = det("detector_m");
    cfg.detector_n = det("detector_n");
    const json& grid = require(j, "grid", "");
    const double lo = require_number(grid, "tau_min_s", "grid.");
    const double hi = require_number(grid, "tau_max_s", "grid.");
    std::size_t points = 0;
    if (grid.contains("points")) {
        points = grid["points"].get<std::size_t>();
    } else if (grid.contains("tau_step_s")) {
        const double step = grid["tau_step_s"].get<double>();
        if (!(step > 0.0)) throw SchemaError("field 'grid.tau_step_s' must be positive");
        points = static_cast<std::size_t>(std::llround((hi - lo) / step)) + 1;
    } else {
        throw SchemaError("missing field 'grid.points' (or 'grid.tau_step_s')");
    }
    if (points < 2 || !(hi > lo)) throw SchemaError("field 'grid' is degenerate");
    cfg.delay_grid_s.resize(points);
    for (std::size_t i = 0; i < points; ++i)
        cfg.delay_grid_s[i] = lo + (hi - lo) * static_cast<double>(i) /
                                       static_cast<double>(points - 1);
    cfg.trials_per_point = require(j, "trials_per_point", "").get<std::int64_t>();
    const std::string engine = require(j, "engine", "").get<std::string>();
    if (engine == "kernel")
        cfg.engine = sim::Engine::two_photon_kernel;
    else if (engine == "field")
        cfg.engine = sim::Engine::semiclassical_field;
    else
        throw SchemaError("field 'engine' must be 'kernel' or 'field'");
    if (j.contains("gate_kernel")) {
        const std::string gk = j["gate_kernel"].get<std::string>();
        if (gk == "boxcar")
            cfg.gate_kernel = stats::GateKernel::boxcar;
        else if (gk == "triangular")
            cfg.gate_kernel = stats::GateKernel::triangular;
        else
            throw SchemaError("field 'gate_kernel' must be 'boxcar' or 'triangular'");
    }
    cfg.rng_seed = require(j, "seed", "").get<std::uint64_t>();
    return cfg;
}

void write_scan_csv(const sim::CoincidenceScan& scan, const std::string& path) {
    const ordered_json cfg = scan_config_to_json(scan.config);
    auto out = open_out(path);
    out << "# homspec scan v1\n";
    out << "# config_hash: " << config_hash_hex(cfg) << "\n";
    out << "# seed: " << scan.config.rng_seed << "\n";
    out << "# engine: " << (scan.config.engine == sim::Engine::two_photon_kernel ? "kernel" : "field")
        << "\n";
    out << "# config: " << cfg.dump() << "\n";
    out << "# baseline_estimate: " << format_double(scan.baseline_estimate) << "\n";
    out << "# baseline_stderr: " << format_double(scan.baseline_stderr) << "\n";
    out << "# baseline_window_min_abs_tau_s: "
        << format_double(scan.baseline_window_min_abs_tau_s) << "\n";
    out << "# truncation_warning: " << (scan.truncation_warning ? 1 : 0) << "\n";
    out << "delay_s,coincidences,heralds,normalized,norm_err\n";
    const bool normalized = scan.is_normalized();
    for (std::size_t i = 0; i < scan.delay_s.size(); ++i) {
        out << format_double(scan.delay_s[i]) << ',' << scan.coincidences[i] << ','
            << scan.heralds[i] << ','
            << format_double(normalized ? scan.normalized[i] : 0.0) << ','
            << format_double(normalized ? scan.norm_err[i] : 0.0) << '\n';
    }
}

sim::CoincidenceScan read_scan_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open scan file: " + path);

    sim::CoincidenceScan scan;
    bool have_config = false;
    bool have_header = false;
    std::string line;

    const auto parse_double = [&](std::string_view text, const char* what) {
        double v = 0.0;
        const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
        if (res.ec != std::errc() || res.ptr != text.data() + text.size())
            throw SchemaError(std::string("scan csv: bad numeric value in ") + what);
        return v;
    };

    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line.front() == '#') {
            const auto colon = line.find(": ");
            if (colon == std::string::npos) continue;
            const std::string key = line.substr(2, colon - 2);
            const std::string value = line.substr(colon + 2);
            if (key == "config") {
                scan.config = scan_config_from_json(json::parse(value));
                have_config = true;
            } else if (key == "baseline_estimate") {
                scan.baseline_estimate = parse_double(value, "baseline_estimate");
            } else if (key == "baseline_stderr") {
                scan.baseline_stderr = parse_double(value, "baseline_stderr");
            } else if (key == "baseline_window_min_abs_tau_s") {
                scan.baseline_window_min_abs_tau_s =
                    parse_double(value, "baseline_window_min_abs_tau_s");
            } else if (key == "truncation_warning") {
                scan.truncation_warning = value == "1";
            }
            continue;
        }
        if (!have_header) {
            if (line != "delay_s,coincidences,heralds,normalized,norm_err") {
                std::istringstream hdr(line);
                std::string col;
                std::vector<std::string> cols;
                while (std::getline(hdr, col, ',')) cols.push_back(col);
                for (const char* want :
                     {"delay_s", "coincidences", "heralds", "normalized", "norm_err"}) {
                    if (std::find(cols.begin(), cols.end(), want) == cols.end())
                        throw SchemaError(std::string("scan csv: missing column '") + want +
                                          "'");
                }
                throw SchemaError("scan csv: unexpected column order: " + line);
            }
            have_header = true;
            continue;
        }
        std::istringstream row(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(row, field, ',')) fields.push_back(field);
        if (fields.size() != 5) throw SchemaError("scan csv: row with wrong field count");
        scan.delay_s.push_back(parse_double(fields[0], "delay_s"));
        scan.coincidences.push_back(
            static_cast<std::int64_t>(std::llround(parse_double(fields[1], "coincidences"))));
        scan.heralds.push_back(
            static_cast<std::int64_t>(std::llround(parse_double(fields[2], "heralds"))));
        scan.normalized.push_back(parse_double(fields[3], "normalized"));
        scan.norm_err.push_back(parse_double(fields[4], "norm_err"));
    }
    if (!have_header) throw SchemaError("scan csv: missing header row");
    if (!have_config) throw SchemaError("scan csv: missing '# config:' metadata");
    if (scan.delay_s.empty()) throw SchemaError("scan csv: no data rows");
    if (scan.baseline_estimate == 0.0) {
        scan.normalized.clear();
        scan.norm_err.clear();
    }
    return scan;
}

void write_curve_csv(const std::string& path, const std::vector<double>& delay_s,
                     const std::vector<double>& value, const ordered_json& config_json,
                     const std::string& value_column) {
    auto out = open_out(path);
    out << "# homspec model v1\n";
    out << "# config_hash: " << config_hash_hex(config_json) << "\n";
    out << "# config: " << config_json.dump() << "\n";
    out << "delay_s," << value_column << "\n";
    for (std::size_t i = 0; i < delay_s.size(); ++i)
        out << format_double(delay_s[i]) << ',' << format_double(value[i]) << '\n';
}

void write_spectrum_csv(const beat::BeatSpectrum& spectrum, const std::string& path,
                        const ordered_json& config_json, std::uint64_t seed) {
    auto out = open_out(path);
    out << "# homspec spectrum v1\n";
    out << "# config_hash: " << config_hash_hex(config_json) << "\n";
    out << "# seed: " << seed << "\n";
    out << "# config: " << config_json.dump() << "\n";
    out << "# resolution_bw_hz: " << format_double(spectrum.resolution_bw_hz) << "\n";
    out << "# sample_rate_hz: " << format_double(spectrum.sample_rate_hz) << "\n";
    out << "# segments_averaged: " << spectrum.segments_averaged << "\n";
    out << "# time_domain_variance: " << format_double(spectrum.time_domain_variance)
        << "\n";
    out << "freq_hz,psd\n";
    for (std::size_t i = 0; i < spectrum.freq_hz.size(); ++i)
        out << format_double(spectrum.freq_hz[i]) << ',' << format_double(spectrum.psd[i])
            << '\n';
}

ordered_json fit_result_to_json(const est::FitResult& fit) {
    ordered_json j;
    j["format"] = "homspec.fit.v1";
    j["delta_hz"] = fit.delta_rad_s / (2.0 * kPi);
    j["delta_err_hz"] = fit.delta_err_rad_s / (2.0 * kPi);
    j["sigma_s"] = fit.sigma_s;
    j["sigma_err_s"] = fit.sigma_err_s;
    j["visibility"] = fit.visibility;
    j["visibility_err"] = fit.visibility_err;
    j["width_e2_hz"] = est::sigma_to_halfwidth_e2_hz(fit.sigma_s);
    j["baseline_counts"] = fit.baseline;
    j["center_s"] = fit.center_s;
    j["phase_rad"] = fit.phase_rad;
    j["chi2_per_dof"] = fit.chi2_per_dof;
    j["converged"] = fit.converged;
    j["singular_covariance"] = fit.singular_covariance;
    j["iterations"] = fit.iterations;
    j["covariance_order"] = {"baseline_counts", "visibility", "sigma_s",
                             "delta_rad_s",     "center_s",   "phase_rad"};
    j["covariance"] = fit.covariance;
    return j;
}

ordered_json line_fit_to_json(const beat::LineFit& fit, const beat::BeatSpectrum& spectrum) {
    ordered_json j;
    j["format"] = "homspec.linefit.v1";
    j["center_hz"] = fit.center_hz;
    j["center_err_hz"] = fit.center_err_hz;
    j["halfwidth_e2_hz"] = fit.halfwidth_e2_hz;
    j["halfwidth_err_hz"] = fit.halfwidth_err_hz;
    j["amplitude"] = fit.amplitude;
    j["offset"] = fit.offset;
    j["iterations"] = fit.iterations;
    j["resolution_bw_hz"] = spectrum.resolution_bw_hz;
    j["segments_averaged"] = spectrum.segments_averaged;
    return j;
}

ordered_json report_to_json(const est::ComparisonReport& report) {
    ordered_json j;
    j["format"] = "homspec.compare.v1";
    j["slope"] = report.slope;
    j["slope_err"] = report.slope_err;
    j["intercept_hz"] = report.intercept_hz;
    j["intercept_err_hz"] = report.intercept_err_hz;
    j["rows"] = ordered_json::array();
    for (const auto& r : report.rows) {
        j["rows"].push_back({{"delta_hom_hz", r.delta_hom_hz},
                             {"delta_esa_hz", r.delta_esa_hz},
                             {"width_hom_hz", r.width_hom_hz},
                             {"width_esa_hz", r.width_esa_hz},
                             {"rel_err_delta", r.rel_err_delta},
                             {"rel_err_width", r.rel_err_width}});
    }
    return j;
}

void write_json(const ordered_json& j, const std::string& path) {
    auto out = open_out(path);
    out << j.dump(2) << "\n";
}

nlohmann::json read_json(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open json file: " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw SchemaError("json parse error in " + path + ": " + e.what());
    }
}

void write_rows_csv(const est::ComparisonReport& report,
                    const std::vector<double>& delta_true_hz, const std::string& path,
                    const ordered_json& config_json) {
    auto out = open_out(path);
    out << "# homspec compare rows v1\n";
    out << "# config_hash: " << config_hash_hex(config_json) << "\n";
    out << "# config: " << config_json.dump() << "\n";
    out << "delta_true_hz,delta_hom_hz,delta_esa_hz,width_hom_hz,width_esa_hz,"
           "rel_err_delta,rel_err_width\n";
    for (std::size_t i = 0; i < report.rows.size(); ++i) {
        const auto& r = report.rows[i];
        const double truth = i < delta_true_hz.size() ? delta_true_hz[i] : 0.0;
        out << format_double(truth) << ',' << format_double(r.delta_hom_hz) << ','
            << format_double(r.delta_esa_hz) << ',' << format_double(r.width_hom_hz) << ','
            << format_double(r.width_esa_hz) << ',' << format_double(r.rel_err_delta) << ','
            << format_double(r.rel_err_width) << '\n';
    }
}

}  // namespace homspec::io
