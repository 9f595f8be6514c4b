#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mixhp/em.hpp"
#include "mixhp/simlab.hpp"
#include "mixhp/tuning.hpp"

namespace mixhp {

inline constexpr int kSchemaVersion = 1;

// Wall-clock fields live in their own object so artifact comparisons can
// exclude them.
struct Timing {
  double seconds = 0.0;
};

struct FitArtifact {
  int schema_version = kSchemaVersion;
  std::uint64_t seed = 0;
  Eigen::Index n = 0;
  FitConfig config;
  PenaltySpec penalty;
  FitResult fit;
  double df = 0.0;
  double bic = 0.0;
  Timing timing;
};

struct TuneArtifact {
  int schema_version = kSchemaVersion;
  Eigen::Index n = 0;
  TuneGrid grid;
  FitConfig config;
  FitArtifact best;
  TuneCell best_cell;
  std::vector<TuneCell> table;
  Timing timing;
};

struct TruthArtifact {
  int schema_version = kSchemaVersion;
  SimDesign design;
  GroundTruth truth;
};

struct ExperimentArtifact {
  int schema_version = kSchemaVersion;
  SimDesign design;
  TuneGrid grid;
  ExperimentResult result;
  Timing timing;
};

struct ReportArtifact {
  int schema_version = kSchemaVersion;
  EvalReport report;
};

struct SimulationManifest {
  int schema_version = kSchemaVersion;
  SimDesign design;
  double snr = 0.0;
  int reps = 0;
  std::vector<std::string> data_files;
  std::vector<std::string> truth_files;
};

struct BenchCell {
  Eigen::Index n = 0;
  Eigen::Index p = 0;
  int m = 0;
  int lambda_count = 0;
  double seconds = 0.0;
};

struct BenchArtifact {
  int schema_version = kSchemaVersion;
  std::uint64_t seed = 0;
  std::vector<BenchCell> cells;  // seconds per (n, p, m, lambda-path) cell
};

FitArtifact make_fit_artifact(const Dataset& data, const PenaltySpec& penalty,
                              const FitConfig& config, const FitResult& fit,
                              double seconds);

void write_fit_artifact(const FitArtifact& artifact, const std::filesystem::path& path);
FitArtifact read_fit_artifact(const std::filesystem::path& path);

void write_tune_artifact(const TuneArtifact& artifact, const std::filesystem::path& path);
TuneArtifact read_tune_artifact(const std::filesystem::path& path);

void write_truth_artifact(const TruthArtifact& artifact, const std::filesystem::path& path);
TruthArtifact read_truth_artifact(const std::filesystem::path& path);

void write_experiment_artifact(const ExperimentArtifact& artifact,
                               const std::filesystem::path& path);
ExperimentArtifact read_experiment_artifact(const std::filesystem::path& path);

void write_report_artifact(const ReportArtifact& artifact,
                           const std::filesystem::path& path);
ReportArtifact read_report_artifact(const std::filesystem::path& path);

void write_simulation_manifest(const SimulationManifest& artifact,
                               const std::filesystem::path& path);
SimulationManifest read_simulation_manifest(const std::filesystem::path& path);

void write_bench_artifact(const BenchArtifact& artifact,
                          const std::filesystem::path& path);
BenchArtifact read_bench_artifact(const std::filesystem::path& path);

// Serialized artifact with every "timing" object removed; byte-stable
// across identical-seed runs.
std::string canonical_json(const std::filesystem::path& artifact_path);

}  // namespace mixhp
