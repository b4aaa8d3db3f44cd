#include "symprobe/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "symprobe/svg.hpp"

namespace symprobe {

using Json = nlohmann::ordered_json;

// ---- config -------------------------------------------------------------

void ExperimentConfig::validate() const {
  dataset.validate();
  train.validate();
  if (seeds.empty()) throw ConfigError("experiment: at least one seed is required");
  if (!(min_gap >= 1.0)) throw ConfigError("experiment: min_gap must be >= 1");
  if (scatter_points < 1) throw ConfigError("experiment: scatter_points must be >= 1");
}

namespace {

template <typename T>
T get_or(const Json& j, const char* key, T fallback) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  return it->template get<T>();
}

Json dataset_spec_json(const DatasetSpec& d) {
  Json j;
  j["generator"] = d.generator;
  j["n"] = d.n;
  j["seed"] = d.seed;
  if (d.generator == "uniform2d" || d.generator == "circle") j["r"] = d.r;
  if (d.generator == "ee-dimuon" || d.generator == "pp-drellyan") {
    j["sqrt_s"] = d.sqrt_s > 0.0 ? d.sqrt_s : (d.generator == "ee-dimuon" ? 80.0 : 13.0);
  }
  if (d.generator == "pp-drellyan") {
    j["m_z"] = d.m_z;
    if (d.cuts.min_pt) j["min_pt"] = *d.cuts.min_pt;
    if (d.cuts.max_abs_eta) j["max_abs_eta"] = *d.cuts.max_abs_eta;
  }
  return j;
}

Json train_config_json(const TrainConfig& t) {
  Json j;
  j["latent_dim"] = t.latent_dim;
  j["beta"] = t.beta;
  j["lr"] = t.lr;
  j["epochs"] = t.epochs;
  j["batch_size"] = t.batch_size;
  j["hidden"] = t.hidden;
  return j;
}

Json config_echo(const ExperimentConfig& cfg) {
  Json j;
  j["dataset"] = dataset_spec_json(cfg.dataset);
  j["train"] = train_config_json(cfg.train);
  j["seeds"] = cfg.seeds;
  j["min_gap"] = cfg.min_gap;
  j["scatter_points"] = cfg.scatter_points;
  return j;
}

}  // namespace

ExperimentConfig experiment_config_from_json(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError(std::string("experiment config: ") + e.what(), 0);
  }
  ExperimentConfig cfg;
  try {
    const auto& d = j.at("dataset");
    cfg.dataset.generator = d.at("generator").get<std::string>();
    cfg.dataset.n = get_or<Eigen::Index>(d, "n", cfg.dataset.n);
    cfg.dataset.seed = get_or<std::uint64_t>(d, "seed", cfg.dataset.seed);
    cfg.dataset.r = get_or<double>(d, "r", cfg.dataset.r);
    cfg.dataset.sqrt_s = get_or<double>(d, "sqrt_s", cfg.dataset.sqrt_s);
    cfg.dataset.m_z = get_or<double>(d, "m_z", cfg.dataset.m_z);
    if (d.contains("min_pt") && !d["min_pt"].is_null()) cfg.dataset.cuts.min_pt = d["min_pt"].get<double>();
    if (d.contains("max_abs_eta") && !d["max_abs_eta"].is_null())
      cfg.dataset.cuts.max_abs_eta = d["max_abs_eta"].get<double>();

    const auto& t = j.at("train");
    cfg.train.latent_dim = t.at("latent_dim").get<Eigen::Index>();
    cfg.train.beta = get_or<double>(t, "beta", cfg.train.beta);
    cfg.train.lr = get_or<double>(t, "lr", cfg.train.lr);
    cfg.train.epochs = get_or<int>(t, "epochs", cfg.train.epochs);
    cfg.train.batch_size = get_or<Eigen::Index>(t, "batch_size", cfg.train.batch_size);
    cfg.train.hidden = get_or<std::vector<Eigen::Index>>(t, "hidden", cfg.train.hidden);

    cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    cfg.output_dir = get_or<std::string>(j, "output_dir", "");
    cfg.min_gap = get_or<double>(j, "min_gap", cfg.min_gap);
    cfg.scatter_points = get_or<Eigen::Index>(j, "scatter_points", cfg.scatter_points);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("experiment config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return experiment_config_from_json(ss.str());
}

std::string experiment_config_to_json(const ExperimentConfig& cfg) {
  Json j = config_echo(cfg);
  if (!cfg.output_dir.empty()) j["output_dir"] = cfg.output_dir.string();
  return j.dump(2) + "\n";
}

unsigned worker_count_from_env() {
  const char* env = std::getenv("SYMPROBE_THREADS");
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (env == nullptr || *env == '\0') return hw;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (end == env || *end != '\0' || v < 0)
    throw ConfigError("SYMPROBE_THREADS must be a non-negative integer");
  return static_cast<unsigned>(v);
}

// ---- report assembly ----------------------------------------------------

namespace {

LatentStats reorder_latents(const LatentStats& stats, const std::vector<std::size_t>& order) {
  LatentStats out;
  out.z_mean.resize(stats.z_mean.rows(), stats.z_mean.cols());
  out.z_sigma.resize(stats.z_sigma.rows(), stats.z_sigma.cols());
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto src = static_cast<Eigen::Index>(order[k]);
    out.z_mean.col(static_cast<Eigen::Index>(k)) = stats.z_mean.col(src);
    out.z_sigma.col(static_cast<Eigen::Index>(k)) = stats.z_sigma.col(src);
  }
  return out;
}

Json matrix_rows(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json relevance_json(const RelevanceReport& r) {
  Json j;
  j["relevance"] = r.relevance;
  j["order"] = r.order;
  j["sorted"] = r.sorted();
  j["effective_dim"] = r.effective_dim;
  j["gap_ratio"] = r.gap_ratio;
  j["runs"] = r.runs;
  return j;
}

Json dataset_json(const Dataset& d) {
  Json j;
  j["generator"] = d.meta.generator;
  j["events"] = d.rows();
  j["columns"] = d.names;
  Json cs = Json::array();
  for (const auto& c : d.constraints) cs.push_back({{"id", c.id}, {"count", c.count}});
  j["constraints"] = cs;
  j["constraint_count"] = d.constraint_count();
  j["params"] = d.meta.params;
  return j;
}

// Correlations and scatter sample of one run, latents relabelled by decreasing relevance.
void add_latent_sections(Json& doc, const LatentStats& stats, const RelevanceReport& rel,
                         const Dataset& raw, const Dataset& standardized,
                         Eigen::Index scatter_points, CorrelationMatrix* corr_out) {
  const LatentStats ranked = reorder_latents(stats, rel.order);
  const auto probes = default_probes(standardized);
  CorrelationMatrix corr = latent_feature_correlations(ranked, standardized, probes);

  Json c;
  c["latents"] = corr.latent_labels;
  Json idx = Json::array();
  for (auto i : rel.order) idx.push_back(i);
  c["latent_index"] = idx;
  c["probes"] = corr.probe_labels;
  c["zero_variance"] = corr.zero_variance;
  c["r"] = matrix_rows(corr.r);
  doc["correlations"] = c;

  const Eigen::Index rows = std::min(scatter_points, raw.rows());
  Json s;
  s["rows"] = rows;
  s["columns"] = raw.names;
  s["latents"] = corr.latent_labels;
  s["features"] = matrix_rows(raw.features.topRows(rows));
  s["z_mean"] = matrix_rows(ranked.z_mean.topRows(rows));
  doc["scatter"] = s;
  if (corr_out) *corr_out = std::move(corr);
}

Json trace_json(const TrainTrace& t) {
  Json arr = Json::array();
  for (const auto& e : t.epochs) arr.push_back({{"total", e.total}, {"rec", e.rec}, {"kl", e.kl}});
  return arr;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, unsigned workers) {
  cfg.validate();
  ExperimentResult result;
  result.config = cfg;
  try {
    result.raw = generate(cfg.dataset);
  } catch (const std::exception& e) {
    throw StageError("generate", std::nullopt, e.what());
  }
  try {
    result.standardized = standardize(result.raw).first;
  } catch (const std::exception& e) {
    throw StageError("standardize", std::nullopt, e.what());
  }

  const std::size_t n_runs = cfg.seeds.size();
  result.runs.resize(n_runs);
  std::vector<std::exception_ptr> errors(n_runs);
  std::vector<std::string> stages(n_runs);

  auto run_one = [&](std::size_t k) {
    RunResult& run = result.runs[k];
    run.seed = cfg.seeds[k];
    std::string stage = "train";
    try {
      TrainConfig tc = cfg.train;
      tc.seed = run.seed;
      auto trained = train(result.standardized, tc);
      run.trace = std::move(trained.trace);
      stage = "encode";
      run.stats = posterior_stats(trained.model, result.standardized);
      stage = "relevance";
      run.relevance = relevance(run.stats, cfg.min_gap);
    } catch (...) {
      errors[k] = std::current_exception();
      stages[k] = stage;
    }
  };

  const unsigned threads = std::min<unsigned>(std::max(workers, 1u), static_cast<unsigned>(n_runs));
  if (threads <= 1) {
    for (std::size_t k = 0; k < n_runs; ++k) run_one(k);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (std::size_t k = next++; k < n_runs; k = next++) run_one(k);
      });
  }

  for (std::size_t k = 0; k < n_runs; ++k) {
    if (!errors[k]) continue;
    try {
      std::rethrow_exception(errors[k]);
    } catch (const std::exception& e) {
      throw StageError(stages[k], cfg.seeds[k], e.what());
    }
  }

  std::vector<RelevanceReport> reports;
  for (const auto& r : result.runs) reports.push_back(r.relevance);
  result.aggregate = aggregate_runs(reports, cfg.min_gap);

  Json doc;
  doc["format"] = "symprobe-report";
  doc["version"] = 1;
  doc["kind"] = "experiment";
  doc["config"] = config_echo(cfg);
  doc["dataset"] = dataset_json(result.raw);
  Json runs = Json::array();
  for (const auto& r : result.runs) {
    Json jr;
    jr["seed"] = r.seed;
    jr["report"] = relevance_json(r.relevance);
    jr["trace"] = trace_json(r.trace);
    runs.push_back(std::move(jr));
  }
  doc["runs"] = runs;
  doc["aggregate"] = relevance_json(result.aggregate);
  doc["representative_seed"] = result.runs.front().seed;
  add_latent_sections(doc, result.runs.front().stats, result.runs.front().relevance, result.raw,
                      result.standardized, cfg.scatter_points, &result.correlations);
  result.report_json = doc.dump(2) + "\n";
  return result;
}

std::string single_run_report_json(const VaeModel& model, const Dataset& raw,
                                   const Dataset& standardized, double min_gap,
                                   Eigen::Index scatter_points) {
  if (raw.rows() != standardized.rows() || raw.cols() != standardized.cols())
    throw ShapeError("single run report: raw and standardized datasets differ in shape");
  const LatentStats stats = posterior_stats(model, standardized);
  const RelevanceReport rel = relevance(stats, min_gap);
  Json doc;
  doc["format"] = "symprobe-report";
  doc["version"] = 1;
  doc["kind"] = "single-run";
  doc["config"] = {{"latent_dim", model.latent_dim}, {"input_dim", model.input_dim},
                   {"min_gap", min_gap}, {"scatter_points", scatter_points}};
  doc["dataset"] = dataset_json(raw);
  doc["runs"] = Json::array({{{"report", relevance_json(rel)}}});
  RelevanceReport agg = aggregate_runs(std::span<const RelevanceReport>(&rel, 1), min_gap);
  doc["aggregate"] = relevance_json(agg);
  add_latent_sections(doc, stats, rel, raw, standardized, scatter_points, nullptr);
  return doc.dump(2) + "\n";
}

void write_report_figures(const ReportView& view, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < view.relevance.size(); ++i) labels.push_back("z" + std::to_string(i + 1));
  write_file_atomic(dir / "relevance.svg",
                    svg::bar_chart(view.relevance, labels,
                                   "Relevance (" + view.generator + ", " +
                                       std::to_string(view.runs) + " runs)"));
  write_file_atomic(dir / "scatter.svg",
                    svg::scatter_grid(view.features, view.feature_names, view.z_mean,
                                      view.latent_labels, "Mean latent activation vs features"));
  if (view.features.cols() == 2)
    write_file_atomic(dir / "latent_map.svg",
                      svg::colored_scatter(view.features.col(0), view.features.col(1),
                                           view.z_mean.col(0), view.feature_names[0],
                                           view.feature_names[1], "<z1> over the input plane"));
}

void write_experiment_outputs(const ExperimentResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_file_atomic(dir / "report.json", result.report_json);
  write_report_figures(report_from_json(result.report_json), dir);
}

// ---- reading reports ----------------------------------------------------

ReportView report_from_json(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError(std::string("report: ") + e.what(), 0);
  }
  ReportView v;
  try {
    if (j.value("format", std::string()) != "symprobe-report")
      throw ParseError("report: missing format tag 'symprobe-report'", 0);
    v.generator = j.at("dataset").at("generator").get<std::string>();
    const auto& agg = j.at("aggregate");
    v.relevance = agg.at("sorted").get<std::vector<double>>();
    v.effective_dim = agg.at("effective_dim").get<int>();
    v.gap_ratio = agg.at("gap_ratio").get<double>();
    v.runs = agg.at("runs").get<int>();
    const auto& s = j.at("scatter");
    v.feature_names = s.at("columns").get<std::vector<std::string>>();
    v.latent_labels = s.at("latents").get<std::vector<std::string>>();
    const auto feats = s.at("features").get<std::vector<std::vector<double>>>();
    const auto zs = s.at("z_mean").get<std::vector<std::vector<double>>>();
    if (feats.size() != zs.size()) throw ParseError("report: scatter row counts differ", 0);
    v.features.resize(static_cast<Eigen::Index>(feats.size()),
                      static_cast<Eigen::Index>(v.feature_names.size()));
    v.z_mean.resize(static_cast<Eigen::Index>(zs.size()),
                    static_cast<Eigen::Index>(v.latent_labels.size()));
    for (std::size_t i = 0; i < feats.size(); ++i) {
      if (feats[i].size() != v.feature_names.size() || zs[i].size() != v.latent_labels.size())
        throw ParseError("report: ragged scatter row " + std::to_string(i), 0);
      for (std::size_t k = 0; k < feats[i].size(); ++k)
        v.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = feats[i][k];
      for (std::size_t k = 0; k < zs[i].size(); ++k)
        v.z_mean(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = zs[i][k];
    }
  } catch (const Json::exception& e) {
    throw ParseError(std::string("report: ") + e.what(), 0);
  }
  if (v.relevance.empty() || v.latent_labels.empty())
    throw ParseError("report: empty latent list", 0);
  if (v.features.rows() == 0) throw ParseError("report: no scatter rows", 0);
  return v;
}

ReportView load_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return report_from_json(ss.str());
}

}  // namespace symprobe
