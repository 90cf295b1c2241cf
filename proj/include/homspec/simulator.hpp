#pragma once

// Monte Carlo synthesis of heralded coincidence scans. Two engines:
//
//  - two_photon_kernel: conditions each herald gate on a two-photon emission,
//    draws the event class from the analytic weights, and accepts (1,1)
//    coincidences by rejection against the arrival-offset-resolved kernel, so
//    the interference shape is produced by the underlying kernel rather than
//    by the final model.
//  - semiclassical_field: classical fields with frozen Gaussian frequency
//    jitter, beamsplitter intensity interference, and Poisson photodetection.
//
// Every delay point consumes an independent counter-based RNG stream derived
// from (seed, point index), so results are bit-identical no matter how the
// points are scheduled.

#include <cstdint>
#include <vector>

#include "homspec/statistics.hpp"

namespace homspec::sim {

struct DetectorSpec {
    double efficiency = 0.15;
    double gate_width_s = 2.5e-9;
    double gate_rate_hz = 1e6;
    double dark_count_prob = 0.0;  // per gate; the reference setup omits darks

    void validate() const;
};

enum class Engine { two_photon_kernel, semiclassical_field };

// Self-heterodyne FM emulation of a frequency-displaced source pair.
struct FmEmulationSpec {
    double mod_depth_hz = 0.0;    // peak frequency deviation A
    double period_s = 322.6e-6;   // triangular FM period T
    double fiber_delay_s = 0.0;   // decorrelating delay tau
    double am_gate_width_s = 30e-6;

    void validate() const;
};

// Delta = 2 pi * (2 A tau / T), in rad/s.
double delta_from_fm(const FmEmulationSpec& spec);

// Group delay of a fiber spool; default group index 1.468 (assumed, the
// reference setup does not state it).
double fiber_delay_s(double length_m, double group_index = 1.468);

struct ScanConfig {
    std::vector<double> delay_grid_s;
    std::int64_t trials_per_point = 0;  // herald gates simulated per delay
    std::uint64_t rng_seed = 1;
    stats::SourcePairSpec source;
    DetectorSpec detector_m;
    DetectorSpec detector_n;
    Engine engine = Engine::two_photon_kernel;
    stats::GateKernel gate_kernel = stats::GateKernel::boxcar;  // engine (a) smearing

    void validate() const;
};

struct CoincidenceScan {
    std::vector<double> delay_s;
    std::vector<std::int64_t> coincidences;
    std::vector<std::int64_t> heralds;

    // Filled by estimate_baseline.
    std::vector<double> normalized;
    std::vector<double> norm_err;
    double baseline_estimate = 0.0;
    double baseline_stderr = 0.0;
    double baseline_window_min_abs_tau_s = 0.0;

    bool truncation_warning = false;
    ScanConfig config;  // provenance

    bool is_normalized() const { return !normalized.empty(); }
};

CoincidenceScan simulate_scan(const ScanConfig& config);

// Mean coincidence count over the window |tau| >= window_min_abs_tau_s, which
// must lie outside four envelope widths and contain at least five points.
// Fills scan.normalized / scan.norm_err and returns the baseline.
double estimate_baseline(CoincidenceScan& scan, double window_min_abs_tau_s,
                         double sigma_hint_s);

// (1 - min(normalized)): the dip visibility of a normalized scan.
double scan_visibility(const CoincidenceScan& scan);

// Number of SPD-M clicks over a duration of internally gated operation,
// Binomial(gates, 1 - (1-dark) exp(-eta mu)). Deterministic per seed.
std::int64_t heralded_gate_stream(const DetectorSpec& detector, double mu_at_m,
                                  double duration_s, std::uint64_t seed);

}  // namespace homspec::sim
