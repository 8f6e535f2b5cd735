#pragma once

// Flat file formats for datasets and reports. Numbers are written with
// round-trip precision; every file is written to a temporary sibling and
// renamed into place.

#include <Eigen/Core>

#include <filesystem>
#include <string>
#include <vector>

#include "pcsid/experiment.hpp"
#include "pcsid/simulate.hpp"

namespace pcsid {

inline constexpr int kDatasetSchemaVersion = 1;

// Throws ConfigError when the file cannot be read or written.
std::string read_text(const std::filesystem::path& path);
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

// Shortest representation that parses back to the same double.
std::string format_number(double value);

struct CsvTable {
  std::vector<std::string> header;
  Eigen::MatrixXd values;  // one row per data line
};

// Numeric CSV with a single header line. Throws ConfigError on malformed input.
CsvTable parse_csv(const std::string& text);
std::string to_csv(const std::vector<std::string>& header, const Eigen::MatrixXd& values);

// One row per (frame, marker): t, marker_index, s, x, y, theta.
std::string markers_to_csv(const TrajectoryDataset& dataset);
// One row per frame: t, tau_1..tau_n.
std::string torques_to_csv(const TrajectoryDataset& dataset);
// One row per frame: t, q_1..q_n, qd_1..qd_n, qdd_1..qdd_n.
std::string states_to_csv(const TrajectoryDataset& dataset);

// Rebuilds a dataset from its marker and torque files; states are optional
// (empty text skips them).
TrajectoryDataset dataset_from_csv(const std::string& markers, const std::string& torques,
                                   const std::string& states, ActuationKind actuation);

// One row per configuration: sample, kappa0, kappa1, then x, y, theta per marker.
std::string pac_to_csv(const PacDataset& pac);
PacDataset pac_from_csv(const std::string& text, const BackboneAbscissas& s);

// Writes manifest.json plus per-trajectory CSV files into dir.
void write_experiment(const std::filesystem::path& dir, const ExperimentConfig& config, const ExperimentData& data);

struct StoredExperiment {
  ExperimentConfig config;
  ExperimentData data;
};

// Reads what write_experiment produced. Throws ConfigError on a missing or
// incompatible manifest.
StoredExperiment read_experiment(const std::filesystem::path& dir);

std::string fusion_to_json(const FusionResult& fusion);
std::string pareto_to_csv(const std::vector<ParetoPoint>& points);

}  // namespace pcsid
