#include <algorithm>
#include <cmath>
#include <numeric>

#include "symprobe/analysis.hpp"

namespace symprobe {

namespace {

std::vector<std::size_t> descending_order(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return v[a] > v[b]; });
  return order;
}

double population_std(const Eigen::Ref<const Vector>& x) {
  const double mean = x.mean();
  return std::sqrt((x.array() - mean).square().mean());
}

}  // namespace

std::vector<double> RelevanceReport::sorted() const {
  std::vector<double> out;
  out.reserve(order.size());
  for (auto i : order) out.push_back(relevance[i]);
  return out;
}

double gap_ratio(std::span<const double> sorted) {
  double best = 0.0;
  for (std::size_t k = 0; k + 1 < sorted.size(); ++k) {
    const double ratio =
        std::max(sorted[k], kRelevanceFloor) / std::max(sorted[k + 1], kRelevanceFloor);
    best = std::max(best, ratio);
  }
  return best;
}

int effective_dim(std::span<const double> sorted, double min_gap) {
  if (sorted.size() < 2) throw ShapeError("effective_dim: need at least two latents");
  double best = 0.0;
  std::size_t best_k = sorted.size();
  for (std::size_t k = 0; k + 1 < sorted.size(); ++k) {
    const double ratio =
        std::max(sorted[k], kRelevanceFloor) / std::max(sorted[k + 1], kRelevanceFloor);
    if (ratio > best) {
      best = ratio;
      best_k = k + 1;
    }
  }
  return best >= min_gap ? static_cast<int>(best_k) : static_cast<int>(sorted.size());
}

RelevanceReport relevance(const LatentStats& stats, double min_gap) {
  stats.validate();
  if (stats.z_mean.rows() < 2) throw ShapeError("relevance: need at least two events");
  RelevanceReport rep;
  const Eigen::Index d = stats.z_mean.cols();
  rep.relevance.resize(static_cast<std::size_t>(d));
  for (Eigen::Index j = 0; j < d; ++j) {
    const Vector mean_col = stats.z_mean.col(j);
    const double spread = population_std(mean_col);
    const double width = stats.z_sigma.col(j).mean();
    rep.relevance[static_cast<std::size_t>(j)] = spread / width;
  }
  rep.order = descending_order(rep.relevance);
  const auto s = rep.sorted();
  rep.gap_ratio = gap_ratio(s);
  rep.effective_dim = s.size() >= 2 ? effective_dim(s, min_gap) : static_cast<int>(s.size());
  rep.runs = 1;
  return rep;
}

RelevanceReport aggregate_runs(std::span<const RelevanceReport> reports, double min_gap) {
  if (reports.empty()) throw ConfigError("aggregate_runs: no reports");
  const std::size_t d = reports.front().relevance.size();
  std::vector<double> mean(d, 0.0);
  int runs = 0;
  for (const auto& r : reports) {
    if (r.relevance.size() != d)
      throw ShapeError("aggregate_runs: mixed latent dimensions (" + std::to_string(d) + " vs " +
                       std::to_string(r.relevance.size()) + ")");
    auto s = r.relevance;
    std::sort(s.begin(), s.end(), std::greater<>());
    for (std::size_t k = 0; k < d; ++k) mean[k] += s[k] * r.runs;
    runs += r.runs;
  }
  for (auto& m : mean) m /= runs;

  RelevanceReport out;
  out.relevance = std::move(mean);
  out.order.resize(d);
  std::iota(out.order.begin(), out.order.end(), std::size_t{0});
  out.gap_ratio = gap_ratio(out.relevance);
  out.effective_dim = d >= 2 ? effective_dim(out.relevance, min_gap) : static_cast<int>(d);
  out.runs = runs;
  return out;
}

// ---- correlations -------------------------------------------------------

std::vector<Probe> default_probes(const Dataset& data) {
  std::vector<Probe> probes;
  const Eigen::Index d = data.cols();
  for (Eigen::Index j = 0; j < d; ++j) {
    Vector w = Vector::Zero(d);
    w[j] = 1.0;
    probes.push_back({data.names[static_cast<std::size_t>(j)], std::move(w)});
  }
  // Pair every `<c>_mu` column with its `<c>_mubar` partner.
  std::vector<std::pair<std::string, std::pair<Eigen::Index, Eigen::Index>>> pairs;
  for (Eigen::Index j = 0; j < d; ++j) {
    const auto& name = data.names[static_cast<std::size_t>(j)];
    const std::string suffix = "_mu";
    if (name.size() <= suffix.size() || name.compare(name.size() - suffix.size(), suffix.size(), suffix) != 0)
      continue;
    const std::string comp = name.substr(0, name.size() - suffix.size());
    const auto partner = std::find(data.names.begin(), data.names.end(), comp + "_mubar");
    if (partner == data.names.end()) continue;
    pairs.push_back({comp, {j, static_cast<Eigen::Index>(partner - data.names.begin())}});
  }
  for (const auto& [comp, cols] : pairs) {
    Vector w = Vector::Zero(d);
    w[cols.first] = 1.0;
    w[cols.second] = -1.0;
    probes.push_back({comp + "_mu-" + comp + "_mubar", std::move(w)});
  }
  for (const auto& [comp, cols] : pairs) {
    Vector w = Vector::Zero(d);
    w[cols.first] = 1.0;
    w[cols.second] = 1.0;
    probes.push_back({comp + "_mu+" + comp + "_mubar", std::move(w)});
  }
  return probes;
}

double pearson(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b) {
  if (a.size() != b.size()) throw ShapeError("pearson: length mismatch");
  const Vector da = a.array() - a.mean();
  const Vector db = b.array() - b.mean();
  const double denom = std::sqrt(da.squaredNorm() * db.squaredNorm());
  if (!(denom > 0.0)) return 0.0;
  return std::clamp(da.dot(db) / denom, -1.0, 1.0);
}

CorrelationMatrix latent_feature_correlations(const LatentStats& stats, const Dataset& data,
                                              std::span<const Probe> probes) {
  stats.validate();
  data.validate();
  if (stats.z_mean.rows() != data.rows())
    throw ShapeError("correlations: " + std::to_string(stats.z_mean.rows()) + " latent rows vs " +
                     std::to_string(data.rows()) + " events");
  const Eigen::Index d = stats.z_mean.cols();
  CorrelationMatrix out;
  out.r = Matrix::Zero(d, static_cast<Eigen::Index>(probes.size()));
  for (Eigen::Index j = 0; j < d; ++j) out.latent_labels.push_back("z" + std::to_string(j + 1));

  Vector feature_std(data.cols());
  for (Eigen::Index k = 0; k < data.cols(); ++k) feature_std[k] = population_std(data.features.col(k));

  for (std::size_t p = 0; p < probes.size(); ++p) {
    const auto& probe = probes[p];
    if (probe.weights.size() != data.cols())
      throw ShapeError("probe '" + probe.label + "' has " + std::to_string(probe.weights.size()) +
                       " weights for " + std::to_string(data.cols()) + " columns");
    out.probe_labels.push_back(probe.label);
    const Vector values = data.features * probe.weights;
    // Zero variance relative to the spread its ingredients carry.
    const double scale = probe.weights.cwiseAbs().dot(feature_std);
    const double spread = population_std(values);
    const bool flat = !(spread > 1e-9 * scale) || !(spread > 0.0);
    out.zero_variance.push_back(flat);
    if (flat) continue;
    for (Eigen::Index j = 0; j < d; ++j)
      out.r(j, static_cast<Eigen::Index>(p)) = pearson(stats.z_mean.col(j), values);
  }
  return out;
}

// ---- scatter export -----------------------------------------------------

Dataset ScatterTable::to_dataset() const {
  Dataset d;
  d.features.resize(feature.size(), 2);
  d.features.col(0) = feature;
  d.features.col(1) = z_mean;
  d.names = {feature_name, latent_name};
  d.meta.generator = "scatter";
  return d;
}

ScatterTable ScatterTable::from_dataset(const Dataset& d) {
  if (d.cols() != 2) throw ShapeError("scatter table needs exactly two columns");
  return {d.names[0], d.names[1], d.features.col(0), d.features.col(1)};
}

ScatterTable scatter_export(const LatentStats& stats, const Dataset& data, Eigen::Index latent_idx,
                            Eigen::Index feature_idx) {
  if (stats.z_mean.rows() != data.rows())
    throw ShapeError("scatter_export: latent rows and events differ");
  if (latent_idx < 0 || latent_idx >= stats.z_mean.cols())
    throw ShapeError("scatter_export: latent index " + std::to_string(latent_idx) +
                     " out of range [0, " + std::to_string(stats.z_mean.cols()) + ")");
  if (feature_idx < 0 || feature_idx >= data.cols())
    throw ShapeError("scatter_export: feature index " + std::to_string(feature_idx) +
                     " out of range [0, " + std::to_string(data.cols()) + ")");
  return {data.names[static_cast<std::size_t>(feature_idx)], "z" + std::to_string(latent_idx + 1),
          data.features.col(feature_idx), stats.z_mean.col(latent_idx)};
}

}  // namespace symprobe
