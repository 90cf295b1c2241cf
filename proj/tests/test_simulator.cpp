#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "homspec/errors.hpp"
#include "homspec/simulator.hpp"
#include "homspec/statistics.hpp"

using namespace homspec;

namespace {

constexpr double kPi = 3.14159265358979323846;

std::vector<double> grid(double lo, double hi, std::size_t n) {
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i)
        g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    return g;
}

sim::ScanConfig base_config(double sigma, double delta_hz, std::size_t points,
                            std::int64_t trials, std::uint64_t seed) {
    sim::ScanConfig cfg;
    cfg.source.mu = 0.1;
    cfg.source.sigma_s = sigma;
    cfg.source.delta_rad_s = 2.0 * kPi * delta_hz;
    cfg.delay_grid_s = grid(-6.0 * sigma, 6.0 * sigma, points);
    cfg.trials_per_point = trials;
    cfg.rng_seed = seed;
    cfg.detector_m.gate_width_s = 1e-12;  // point gates unless testing smearing
    cfg.detector_n.gate_width_s = 1e-12;
    return cfg;
}

}  // namespace

TEST_CASE("frequency offset from the self-heterodyne FM emulation") {
    sim::FmEmulationSpec spec;
    spec.mod_depth_hz = 155.1e6;
    spec.period_s = 322.6e-6;
    spec.fiber_delay_s = 41.6e-6;
    spec.am_gate_width_s = 30e-6;
    CHECK(sim::delta_from_fm(spec) / (2.0 * kPi) == doctest::Approx(40.0e6).epsilon(2e-3));

    // Fiber delay from the spool length: 8.5 km at group index 1.468.
    CHECK(sim::fiber_delay_s(8500.0) == doctest::Approx(41.62e-6).epsilon(1e-3));

    sim::FmEmulationSpec zero = spec;
    zero.mod_depth_hz = 0.0;
    CHECK(sim::delta_from_fm(zero) == 0.0);
    sim::FmEmulationSpec doubled = spec;
    doubled.mod_depth_hz *= 2.0;
    CHECK(sim::delta_from_fm(doubled) ==
          doctest::Approx(2.0 * sim::delta_from_fm(spec)).epsilon(1e-14));

    sim::FmEmulationSpec bad = spec;
    bad.am_gate_width_s = 0.6 * spec.period_s;
    CHECK_THROWS_AS(sim::delta_from_fm(bad), DataError);
}

TEST_CASE("determinism: identical config and seed give identical scans") {
    for (auto engine : {sim::Engine::two_photon_kernel, sim::Engine::semiclassical_field}) {
        auto cfg = base_config(5e-9, 8e7, 21, 20000, 77);
        cfg.engine = engine;
        const auto a = sim::simulate_scan(cfg);
        const auto b = sim::simulate_scan(cfg);
        CHECK(a.coincidences == b.coincidences);
        CHECK(a.heralds == b.heralds);
        auto cfg2 = cfg;
        cfg2.rng_seed = 78;
        const auto c = sim::simulate_scan(cfg2);
        CHECK(a.coincidences != c.coincidences);
    }
}

TEST_CASE("kernel engine reproduces the analytic model (chi-square per point ~ 1)") {
    // Mirrors the 80 MHz interference pattern: dense grid, enough counts for
    // a meaningful per-point chi-square against the binomial expectation.
    const double sigma = 10e-9;
    auto cfg = base_config(sigma, 8e7, 121, 400000, 1234);
    const auto scan = sim::simulate_scan(cfg);

    // Expected per-trial coincidence probability: lambda * eta * model(tau).
    const double tau_max = 6.0 * sigma;
    const double window = 2.0 * (tau_max + cfg.detector_n.gate_width_s + 6.0 * sigma);
    const double lambda = 2.0 * sigma * std::sqrt(2.0 * kPi) / (window * 2.0);
    const double eta = cfg.detector_n.efficiency;

    double chi2 = 0.0;
    for (std::size_t i = 0; i < scan.delay_s.size(); ++i) {
        const double p = lambda * eta *
                         stats::model_coincidence(scan.delay_s[i], sigma,
                                                  cfg.source.delta_rad_s);
        const double mean = p * static_cast<double>(cfg.trials_per_point);
        const double var = mean * (1.0 - p);
        const double d = static_cast<double>(scan.coincidences[i]) - mean;
        chi2 += d * d / var;
    }
    const double chi2_dof = chi2 / static_cast<double>(scan.delay_s.size());
    CHECK(chi2_dof > 0.6);
    CHECK(chi2_dof < 1.5);
}

TEST_CASE("normalized dip bottoms out at one half") {
    auto cfg = base_config(5e-9, 0.0, 49, 300000, 4321);
    auto scan = sim::simulate_scan(cfg);
    sim::estimate_baseline(scan, 4.5 * 5e-9, 5e-9);

    // tau = 0 sits at index 24 (odd count, symmetric grid).
    const std::size_t mid = 24;
    CHECK(scan.delay_s[mid] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(std::abs(scan.normalized[mid] - 0.5) < 3.0 * scan.norm_err[mid]);
    // Far points sit at the baseline.
    CHECK(std::abs(scan.normalized.front() - 1.0) < 3.0 * scan.norm_err.front());
    CHECK(std::abs(scan.normalized.back() - 1.0) < 3.0 * scan.norm_err.back());
    // Visibility of the normalized scan: 0.5 up to noise, never far above.
    CHECK(sim::scan_visibility(scan) == doctest::Approx(0.5).epsilon(0.12));
}

TEST_CASE("semiclassical engine shows the same dip") {
    auto cfg = base_config(5e-9, 0.0, 31, 150000, 999);
    cfg.engine = sim::Engine::semiclassical_field;
    auto scan = sim::simulate_scan(cfg);
    sim::estimate_baseline(scan, 4.5 * 5e-9, 5e-9);
    const std::size_t mid = 15;
    CHECK(scan.delay_s[mid] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(std::abs(scan.normalized[mid] - 0.5) < 3.5 * scan.norm_err[mid]);
    CHECK(std::abs(scan.normalized.front() - 1.0) < 3.5 * scan.norm_err.front());
}

TEST_CASE("baseline estimation") {
    sim::CoincidenceScan scan;
    scan.delay_s = grid(-50e-9, 50e-9, 26);
    scan.coincidences.assign(26, 1000);
    scan.heralds.assign(26, 100000);
    scan.config.source.sigma_s = 5e-9;

    const double b = sim::estimate_baseline(scan, 30e-9, 5e-9);
    CHECK(b == 1000.0);
    // Pooled Poisson error: sqrt(N*1000)/N with N window points.
    std::size_t nw = 0;
    for (double t : scan.delay_s)
        if (std::abs(t) >= 30e-9) ++nw;
    CHECK(scan.baseline_stderr ==
          doctest::Approx(std::sqrt(1000.0 / static_cast<double>(nw))).epsilon(1e-12));
    CHECK(scan.normalized[13] == doctest::Approx(1.0));

    // Window overlapping the dip region is refused.
    CHECK_THROWS_AS(sim::estimate_baseline(scan, 15e-9, 5e-9), DataError);
    // Window with too few points is refused.
    CHECK_THROWS_AS(sim::estimate_baseline(scan, 49.9e-9, 5e-9), DataError);
}

TEST_CASE("heralded gate stream") {
    sim::DetectorSpec det;  // 15%, 1 MHz
    const auto clicks = sim::heralded_gate_stream(det, 0.1, 1.0, 5);
    const double expect = 1e6 * (1.0 - std::exp(-0.015));
    CHECK(std::abs(static_cast<double>(clicks) - expect) < 3.0 * std::sqrt(expect));

    sim::DetectorSpec blind = det;
    blind.efficiency = 0.0;
    blind.dark_count_prob = 1e-3;
    const auto darks = sim::heralded_gate_stream(blind, 0.1, 1.0, 6);
    CHECK(std::abs(static_cast<double>(darks) - 1000.0) < 3.0 * std::sqrt(1000.0));

    blind.dark_count_prob = 0.0;
    CHECK(sim::heralded_gate_stream(blind, 0.0, 1.0, 7) == 0);

    // Deterministic per seed.
    CHECK(sim::heralded_gate_stream(det, 0.1, 1.0, 5) == clicks);
}

TEST_CASE("dark counts add a flat accidental floor") {
    auto cfg = base_config(5e-9, 0.0, 21, 50000, 31);
    cfg.detector_n.dark_count_prob = 5e-3;
    auto scan = sim::simulate_scan(cfg);
    auto cfg0 = cfg;
    cfg0.detector_n.dark_count_prob = 0.0;
    auto scan0 = sim::simulate_scan(cfg0);
    const double total = static_cast<double>(
        std::accumulate(scan.coincidences.begin(), scan.coincidences.end(), std::int64_t{0}));
    const double total0 = static_cast<double>(std::accumulate(
        scan0.coincidences.begin(), scan0.coincidences.end(), std::int64_t{0}));
    // 21 points x 5e4 trials x 5e-3 darks ~ 5250 extra coincidences.
    const double extra = total - total0;
    CHECK(extra > 3500.0);
    CHECK(extra < 7000.0);
}

TEST_CASE("config validation errors") {
    auto cfg = base_config(5e-9, 0.0, 11, 1000, 1);
    cfg.delay_grid_s.clear();
    CHECK_THROWS_AS(sim::simulate_scan(cfg), DataError);
    cfg = base_config(5e-9, 0.0, 11, 0, 1);
    CHECK_THROWS_AS(sim::simulate_scan(cfg), DataError);
    cfg = base_config(5e-9, 0.0, 11, 1000, 1);
    cfg.delay_grid_s[3] = cfg.delay_grid_s[2];
    CHECK_THROWS_AS(sim::simulate_scan(cfg), DataError);
    cfg = base_config(-5e-9, 0.0, 11, 1000, 1);
    CHECK_THROWS_AS(sim::simulate_scan(cfg), DataError);

    // mu beyond the truncation bound: proceeds, but flagged.
    cfg = base_config(5e-9, 0.0, 11, 1000, 1);
    cfg.source.mu = 0.3;
    CHECK(sim::simulate_scan(cfg).truncation_warning);
}
