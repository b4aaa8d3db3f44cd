#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "symprobe/analysis.hpp"
#include "symprobe/dataset.hpp"
#include "symprobe/vae.hpp"

namespace symprobe {

// Multi-seed experiment: one dataset, one training template, one run per seed.
//
// Config file (JSON):
//   {
//     "dataset": {"generator": "circle", "n": 10000, "seed": 1, "r": 10,
//                 "sqrt_s": 80, "m_z": 91.1876, "min_pt": 20, "max_abs_eta": 2.4},
//     "train":   {"latent_dim": 4, "beta": 0.1, "lr": 0.001, "epochs": 30,
//                 "batch_size": 128, "hidden": [64, 64]},
//     "seeds": [1, 2, 3],
//     "output_dir": "out/circle",
//     "min_gap": 2.0,
//     "scatter_points": 2000
//   }
// Only dataset.generator, train.latent_dim and seeds are required.
struct ExperimentConfig {
  DatasetSpec dataset;
  TrainConfig train;  // seed is overwritten per run
  std::vector<std::uint64_t> seeds;
  std::filesystem::path output_dir;
  double min_gap = kDefaultMinGap;
  Eigen::Index scatter_points = 2000;

  void validate() const;
};

ExperimentConfig experiment_config_from_json(const std::string& text);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
std::string experiment_config_to_json(const ExperimentConfig& cfg);

struct RunResult {
  std::uint64_t seed = 0;
  RelevanceReport relevance;
  TrainTrace trace;
  LatentStats stats;
};

struct ExperimentResult {
  ExperimentConfig config;
  Dataset raw;           // as generated
  Dataset standardized;  // as trained on
  std::vector<RunResult> runs;  // listed-seed order
  RelevanceReport aggregate;
  CorrelationMatrix correlations;  // representative (first) run
  std::string report_json;
};

// Raised when a stage fails; names the stage and seed.
struct StageError : Error {
  StageError(const std::string& stage, std::optional<std::uint64_t> seed, const std::string& what)
      : Error("stage", "stage '" + stage + "'" +
                           (seed ? " (seed " + std::to_string(*seed) + ")" : std::string()) +
                           " failed: " + what) {}
};

// Worker count from SYMPROBE_THREADS: unset -> hardware concurrency, 0 -> serial.
unsigned worker_count_from_env();

// Runs every seed on up to `workers` threads (0 or 1 = serial) and joins in listed-seed
// order, so the report does not depend on the worker count.
ExperimentResult run_experiment(const ExperimentConfig& cfg, unsigned workers = 0);

// report.json plus the figures of write_report_figures.
void write_experiment_outputs(const ExperimentResult& result, const std::filesystem::path& dir);

// Single trained model on a dataset; `standardized` is what the encoder consumes,
// `raw` supplies plot coordinates.
std::string single_run_report_json(const VaeModel& model, const Dataset& raw,
                                   const Dataset& standardized, double min_gap = kDefaultMinGap,
                                   Eigen::Index scatter_points = 2000);

// ---- report documents ---------------------------------------------------

// Parsed back from report JSON, enough to render figures.
struct ReportView {
  std::string generator;
  std::vector<double> relevance;  // sorted, aggregated
  int effective_dim = 0;
  double gap_ratio = 0.0;
  int runs = 0;
  std::vector<std::string> feature_names;
  std::vector<std::string> latent_labels;  // ordered by relevance
  Matrix features;  // sampled rows, raw units
  Matrix z_mean;    // sampled rows, columns follow latent_labels
};

ReportView report_from_json(const std::string& text);
ReportView load_report(const std::filesystem::path& path);

// relevance.svg, scatter.svg and, for two-column datasets, latent_map.svg.
void write_report_figures(const ReportView& view, const std::filesystem::path& dir);

}  // namespace symprobe
