#pragma once

#include <span>
#include <string>
#include <vector>

#include "symprobe/dataset.hpp"
#include "symprobe/linalg.hpp"
#include "symprobe/vae.hpp"

namespace symprobe {

inline constexpr double kDefaultMinGap = 2.0;
inline constexpr double kRelevanceFloor = 1e-12;

struct RelevanceReport {
  // Single run: indexed by latent. Aggregate: the rank-averaged sorted profile.
  std::vector<double> relevance;
  std::vector<std::size_t> order;  // latent indices by decreasing relevance
  int effective_dim = 0;
  double gap_ratio = 0.0;
  int runs = 1;

  std::vector<double> sorted() const;
};

// Relevance_j = std_i(<z_j>) / mean_i(sigma_j), population standard deviation.
RelevanceReport relevance(const LatentStats& stats, double min_gap = kDefaultMinGap);

// Largest consecutive ratio r_k / r_{k+1} of a descending profile, values floored at 1e-12.
double gap_ratio(std::span<const double> sorted);

// k at the largest consecutive ratio if that ratio reaches min_gap, else the profile length.
int effective_dim(std::span<const double> sorted, double min_gap = kDefaultMinGap);

// Sorts each run, averages rank by rank and re-derives effective_dim.
RelevanceReport aggregate_runs(std::span<const RelevanceReport> reports,
                               double min_gap = kDefaultMinGap);

// A linear combination of dataset columns used as a correlation target.
struct Probe {
  std::string label;
  Vector weights;  // one weight per column
};

// Raw columns, then for collision datasets the muon/antimuon component differences and sums.
std::vector<Probe> default_probes(const Dataset& data);

struct CorrelationMatrix {
  Matrix r;  // latents x probes, Pearson coefficients
  std::vector<std::string> latent_labels;
  std::vector<std::string> probe_labels;
  std::vector<bool> zero_variance;  // per probe; such columns are reported as 0
};

CorrelationMatrix latent_feature_correlations(const LatentStats& stats, const Dataset& data,
                                              std::span<const Probe> probes);

// Pearson r of two equally long samples; 0 when either has zero variance.
double pearson(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b);

struct ScatterTable {
  std::string feature_name;
  std::string latent_name;
  Vector feature;
  Vector z_mean;

  Dataset to_dataset() const;
  static ScatterTable from_dataset(const Dataset& d);
};

ScatterTable scatter_export(const LatentStats& stats, const Dataset& data,
                            Eigen::Index latent_idx, Eigen::Index feature_idx);

}  // namespace symprobe
