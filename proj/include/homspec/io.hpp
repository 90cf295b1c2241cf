#pragma once

// File formats. CSV for anything plottable (header row, '#' metadata lines
// carrying config hash, seed and engine), JSON for results. Doubles are
// serialized shortest-round-trip so write -> read -> write is byte-identical.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "homspec/beat_oracle.hpp"
#include "homspec/estimator.hpp"
#include "homspec/simulator.hpp"

namespace homspec::io {

std::uint64_t fnv1a64(std::string_view text);
std::string format_double(double v);  // shortest round-trip representation

// ScanConfig <-> JSON (embedded in scan CSV metadata and reports).
nlohmann::ordered_json scan_config_to_json(const sim::ScanConfig& config);
sim::ScanConfig scan_config_from_json(const nlohmann::json& j);
std::string config_hash_hex(const nlohmann::ordered_json& config_json);

void write_scan_csv(const sim::CoincidenceScan& scan, const std::string& path);
sim::CoincidenceScan read_scan_csv(const std::string& path);

void write_curve_csv(const std::string& path, const std::vector<double>& delay_s,
                     const std::vector<double>& value,
                     const nlohmann::ordered_json& config_json,
                     const std::string& value_column);

void write_spectrum_csv(const beat::BeatSpectrum& spectrum, const std::string& path,
                        const nlohmann::ordered_json& config_json, std::uint64_t seed);

nlohmann::ordered_json fit_result_to_json(const est::FitResult& fit);
nlohmann::ordered_json line_fit_to_json(const beat::LineFit& fit,
                                        const beat::BeatSpectrum& spectrum);
nlohmann::ordered_json report_to_json(const est::ComparisonReport& report);

void write_json(const nlohmann::ordered_json& j, const std::string& path);
nlohmann::json read_json(const std::string& path);

void write_rows_csv(const est::ComparisonReport& report,
                    const std::vector<double>& delta_true_hz, const std::string& path,
                    const nlohmann::ordered_json& config_json);

}  // namespace homspec::io
