#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gmcs/ekf.hpp"
#include "gmcs/metrics.hpp"
#include "gmcs/mixture.hpp"
#include "gmcs/model.hpp"

namespace gmcs::io {

// File or filesystem problem; maps to the I/O exit code in the CLI.
class IoError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Structure file: {"n_points": N, "mean": [3N], "cov": [[...]] (optional)}.
// A structure without a covariance loads with diagonal `default_variance`.
nlohmann::json structure_to_json(const StateEstimate& state, bool include_cov = true);
StateEstimate structure_from_json(const nlohmann::json& j, double default_variance = 0.0);

// Constraint file: [{"i", "j", "components": [{"weight","mean","variance"}]}]
nlohmann::json constraints_to_json(const std::vector<MixtureConstraint>& cs);
std::vector<MixtureConstraint> constraints_from_json(const nlohmann::json& j);

// Answer key: {"0": real-component-index, ...}
nlohmann::json answer_key_to_json(const std::vector<int>& key);
std::vector<int> answer_key_from_json(const nlohmann::json& j);

// Trace CSV: cycle,avg_error_sd,max_error_sd,rmsd_angstrom,reheated
std::string trace_to_csv(const ConvergenceTrace& trace);

nlohmann::json ellipsoids_to_json(const std::vector<Ellipsoid>& ellipsoids);
nlohmann::json stage_log_to_json(const std::vector<StageRecord>& stages);

nlohmann::json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);
void write_text(const std::filesystem::path& path, const std::string& text);

// FNV-1a 64 over the file bytes, lowercase hex.
std::string file_checksum(const std::filesystem::path& path);

}  // namespace gmcs::io
