#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "homspec/cli.hpp"
#include "homspec/errors.hpp"
#include "homspec/io.hpp"
#include "homspec/simulator.hpp"

using namespace homspec;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = 3.14159265358979323846;

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("homspec_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static int& counter() {
        static int c = 0;
        return c;
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return std::string(std::istreambuf_iterator<char>(in), {});
}

void spit(const std::string& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

sim::CoincidenceScan small_scan(std::uint64_t seed) {
    sim::ScanConfig cfg;
    cfg.source.mu = 0.1;
    cfg.source.sigma_s = 10e-9;
    cfg.source.delta_rad_s = 2.0 * kPi * 8e7;
    cfg.delay_grid_s.resize(61);
    for (int i = 0; i < 61; ++i) cfg.delay_grid_s[i] = -60e-9 + 2e-9 * i;
    cfg.trials_per_point = 50000;
    cfg.rng_seed = seed;
    auto scan = sim::simulate_scan(cfg);
    sim::estimate_baseline(scan, 45e-9, 10e-9);
    return scan;
}

const std::string sim_config = R"({
  "source": {"mu": 0.1, "sigma_s": 10e-9, "delta_hz": 8e7},
  "detectors": {"efficiency": 0.15, "gate_width_s": 1e-12, "gate_rate_hz": 1e6,
                "dark_count_prob": 0},
  "grid": {"tau_min_s": -60e-9, "tau_max_s": 60e-9, "tau_step_s": 2e-9},
  "trials_per_point": 60000,
  "engine": "kernel",
  "seed": 11
})";

}  // namespace

TEST_CASE("scan csv round trip is lossless and idempotent") {
    TempDir tmp;
    const auto scan = small_scan(7);
    const auto p1 = tmp.file("scan1.csv");
    const auto p2 = tmp.file("scan2.csv");
    io::write_scan_csv(scan, p1);
    const auto back = io::read_scan_csv(p1);
    io::write_scan_csv(back, p2);
    CHECK(slurp(p1) == slurp(p2));
    CHECK(back.delay_s == scan.delay_s);
    CHECK(back.coincidences == scan.coincidences);
    CHECK(back.normalized == scan.normalized);
    CHECK(back.config.rng_seed == scan.config.rng_seed);
    CHECK(back.config.source.sigma_s == scan.config.source.sigma_s);
}

TEST_CASE("scan csv schema violations are named") {
    TempDir tmp;
    const auto path = tmp.file("bad.csv");
    spit(path,
         "# homspec scan v1\n"
         "# config: {\"source\":{\"mu\":0.1,\"sigma_s\":1e-8,\"delta_hz\":0},"
         "\"detector_m\":{\"efficiency\":0.15,\"gate_width_s\":2.5e-9,"
         "\"gate_rate_hz\":1e6,\"dark_count_prob\":0},"
         "\"detector_n\":{\"efficiency\":0.15,\"gate_width_s\":2.5e-9,"
         "\"gate_rate_hz\":1e6,\"dark_count_prob\":0},"
         "\"grid\":{\"tau_min_s\":-1e-8,\"tau_max_s\":1e-8,\"points\":3},"
         "\"trials_per_point\":10,\"engine\":\"kernel\",\"seed\":1}\n"
         "delay_s,coincidences,heralds,norm_err\n"
         "0,1,10,0\n");
    try {
        io::read_scan_csv(path);
        FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
        CHECK(std::string(e.what()).find("normalized") != std::string::npos);
    }

    // Missing config metadata.
    spit(path, "delay_s,coincidences,heralds,normalized,norm_err\n0,1,10,0,0\n");
    CHECK_THROWS_AS(io::read_scan_csv(path), SchemaError);
}

TEST_CASE("cli: model curve endpoints") {
    TempDir tmp;
    const auto cfg = tmp.file("model.json");
    spit(cfg, R"({"sigma_s": 10e-9, "delta_hz": 0,
                  "grid": {"tau_min_s": -50e-9, "tau_max_s": 50e-9, "tau_step_s": 1e-9}})");
    const auto out = tmp.file("curve.csv");
    CHECK(cli::run({"model", "--config", cfg, "--out", out}) == 0);
    const auto text = slurp(out);
    CHECK(text.find("delay_s,coincidence_prob") != std::string::npos);
    CHECK(text.find("0,0.25\n") != std::string::npos);  // dip floor at tau = 0
}

TEST_CASE("cli: simulate then fit end to end") {
    TempDir tmp;
    const auto cfgp = tmp.file("sim.json");
    spit(cfgp, sim_config);
    const auto scanp = tmp.file("scan.csv");
    const auto fitp = tmp.file("fit.json");
    CHECK(cli::run({"simulate", "--config", cfgp, "--out", scanp}) == 0);
    CHECK(cli::run({"fit", "--scan", scanp, "--out", fitp}) == 0);
    const auto fit = io::read_json(fitp);
    CHECK(fit.at("converged").get<bool>());
    CHECK(fit.at("delta_hz").get<double>() == doctest::Approx(8e7).epsilon(0.05));
    CHECK(fit.at("config_hash").get<std::string>().size() == 16);

    // Unknown scan file -> data error (exit 2).
    CHECK(cli::run({"fit", "--scan", tmp.file("nope.csv"), "--out", fitp}) == 2);
}

TEST_CASE("cli: rerun with the same seed is byte-identical") {
    TempDir tmp;
    const auto cfgp = tmp.file("sim.json");
    spit(cfgp, sim_config);
    const auto a = tmp.file("a.csv");
    const auto b = tmp.file("b.csv");
    CHECK(cli::run({"simulate", "--config", cfgp, "--out", a}) == 0);
    CHECK(cli::run({"simulate", "--config", cfgp, "--out", b}) == 0);
    CHECK(slurp(a) == slurp(b));

    // Seed override changes the bytes.
    const auto c = tmp.file("c.csv");
    CHECK(cli::run({"simulate", "--config", cfgp, "--out", c, "--seed", "99"}) == 0);
    CHECK(slurp(a) != slurp(c));
}

TEST_CASE("cli: beat command produces a line fit near the configured offset") {
    TempDir tmp;
    const auto cfgp = tmp.file("beat.json");
    spit(cfgp, R"({"sigma_s": 10e-9, "delta_hz": 1.2e8, "segment_length": 2048, "seed": 3})");
    const auto out = tmp.file("beat");
    CHECK(cli::run({"beat", "--config", cfgp, "--out", out}) == 0);
    const auto line = io::read_json(out + ".linefit.json");
    CHECK(line.at("center_hz").get<double>() == doctest::Approx(1.2e8).epsilon(0.02));
    CHECK(fs::exists(out + ".spectrum.csv"));
}

TEST_CASE("cli: config errors surface as schema failures with field names") {
    TempDir tmp;
    const auto cfgp = tmp.file("bad.json");
    spit(cfgp, R"({"source": {"mu": 0.1, "sigma_s": 1e-8},
                   "grid": {"tau_min_s": -1e-8, "tau_max_s": 1e-8, "tau_step_s": 1e-9},
                   "trials_per_point": 10})");
    // Neither delta_hz nor fm.
    CHECK(cli::run({"simulate", "--config", cfgp, "--out", tmp.file("x.csv")}) == 2);

    // Both delta_hz and fm.
    spit(cfgp, R"({"source": {"mu": 0.1, "sigma_s": 1e-8, "delta_hz": 0,
                              "fm": {"mod_depth_hz": 1e8, "fiber_delay_s": 4e-5}},
                   "grid": {"tau_min_s": -1e-8, "tau_max_s": 1e-8, "tau_step_s": 1e-9},
                   "trials_per_point": 10})");
    CHECK(cli::run({"simulate", "--config", cfgp, "--out", tmp.file("x.csv")}) == 2);

    // Unparseable JSON.
    spit(cfgp, "{not json");
    CHECK(cli::run({"simulate", "--config", cfgp, "--out", tmp.file("x.csv")}) == 2);

    // Usage error: unknown option.
    CHECK(cli::run({"simulate", "--nonsense"}) == 1);
}

TEST_CASE("cli: fm source specification resolves to the expected offset") {
    TempDir tmp;
    const auto cfgp = tmp.file("fm.json");
    spit(cfgp, R"({
      "source": {"mu": 0.1, "sigma_s": 10e-9,
                 "fm": {"mod_depth_hz": 155.1e6, "period_s": 322.6e-6,
                        "fiber_length_m": 8500}},
      "detectors": {"gate_width_s": 1e-12},
      "grid": {"tau_min_s": -60e-9, "tau_max_s": 60e-9, "tau_step_s": 2e-9},
      "trials_per_point": 50000,
      "seed": 5
    })");
    const auto scanp = tmp.file("scan.csv");
    CHECK(cli::run({"simulate", "--config", cfgp, "--out", scanp}) == 0);
    const auto scan = io::read_scan_csv(scanp);
    // 2 * A * (n L / c) / T = 40 MHz.
    CHECK(scan.config.source.delta_rad_s / (2.0 * kPi) ==
          doctest::Approx(40.0e6).epsilon(2e-3));
}
