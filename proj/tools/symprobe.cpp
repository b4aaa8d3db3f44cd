// symprobe: generate datasets, train VAEs and measure latent relevance.
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "symprobe/analysis.hpp"
#include "symprobe/dataset.hpp"
#include "symprobe/experiment.hpp"
#include "symprobe/vae.hpp"

namespace fs = std::filesystem;
using namespace symprobe;

namespace {

struct GenArgs {
  DatasetSpec spec;
  double min_pt = -1.0;
  double max_abs_eta = -1.0;
  std::string out;
};

struct TrainArgs {
  std::string data;
  TrainConfig cfg;
  std::string model_out = "model.json";
  std::string trace_out = "trace.csv";
};

struct AnalyzeArgs {
  std::string model;
  std::string data;
  std::string out = "report.json";
  std::string svg_dir;
  double min_gap = kDefaultMinGap;
};

struct ExperimentArgs {
  std::string config;
  std::string out;
  int threads = -1;
};

struct ReportArgs {
  std::string in;
  std::string svg_dir;
};

int cmd_gen(GenArgs& a) {
  if (a.min_pt >= 0.0) a.spec.cuts.min_pt = a.min_pt;
  if (a.max_abs_eta >= 0.0) a.spec.cuts.max_abs_eta = a.max_abs_eta;
  const Dataset d = generate(a.spec);
  const auto check = verify_constraints(d);
  if (!check.passed()) throw NumericError("generated dataset violates its declared constraints");
  csv_write(d, fs::path(a.out));
  std::cout << "wrote " << d.rows() << " events x " << d.cols() << " features to " << a.out
            << " (" << d.constraint_count() << " constraints verified)\n";
  return 0;
}

int cmd_train(TrainArgs& a) {
  const Dataset raw = csv_read(fs::path(a.data));
  auto [data, standardizer] = standardize(raw);
  const auto result = train(data, a.cfg);
  save_model(a.model_out, result.model, standardizer);
  std::ostringstream trace;
  trace << "epoch,total,rec,kl\n";
  char buf[128];
  for (std::size_t e = 0; e < result.trace.epochs.size(); ++e) {
    const auto& l = result.trace.epochs[e];
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g\n", e + 1, l.total, l.rec, l.kl);
    trace << buf;
  }
  write_file_atomic(a.trace_out, trace.str());
  const auto& first = result.trace.epochs.front();
  const auto& last = result.trace.epochs.back();
  std::cout << "trained " << a.cfg.epochs << " epochs: loss " << first.total << " -> "
            << last.total << "; model " << a.model_out << ", trace " << a.trace_out << "\n";
  return 0;
}

int cmd_analyze(AnalyzeArgs& a) {
  const auto loaded = load_model(a.model);
  const Dataset raw = csv_read(fs::path(a.data));
  Dataset standardized = raw;
  if (loaded.standardizer) {
    standardized.features = loaded.standardizer->transform(raw.features);
  } else {
    standardized = standardize(raw).first;
  }
  const std::string json = single_run_report_json(loaded.model, raw, standardized, a.min_gap);
  write_file_atomic(a.out, json);
  const ReportView view = report_from_json(json);
  std::cout << "effective_dim " << view.effective_dim << ", gap ratio " << view.gap_ratio
            << "; report " << a.out << "\n";
  if (!a.svg_dir.empty()) write_report_figures(view, a.svg_dir);
  return 0;
}

int cmd_experiment(ExperimentArgs& a) {
  ExperimentConfig cfg = load_experiment_config(a.config);
  if (!a.out.empty()) cfg.output_dir = a.out;
  if (cfg.output_dir.empty()) throw ConfigError("no output directory: set output_dir or pass --out");
  const unsigned workers = a.threads >= 0 ? static_cast<unsigned>(a.threads) : worker_count_from_env();
  const auto result = run_experiment(cfg, workers);
  write_experiment_outputs(result, cfg.output_dir);
  std::cout << result.runs.size() << " runs on " << cfg.dataset.generator << ": effective_dim "
            << result.aggregate.effective_dim << ", relevance";
  for (double r : result.aggregate.relevance) std::cout << ' ' << r;
  std::cout << "\nwrote " << (cfg.output_dir / "report.json").string() << "\n";
  return 0;
}

int cmd_report(ReportArgs& a) {
  write_report_figures(load_report(a.in), a.svg_dir);
  std::cout << "wrote figures to " << a.svg_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"symprobe: latent relevance of VAEs trained on constrained datasets"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "Generate a dataset as CSV");
  g->add_option("--dataset", gen.spec.generator, "uniform2d | circle | ee-dimuon | pp-drellyan")
      ->required();
  g->add_option("--n", gen.spec.n, "Number of events")->capture_default_str();
  g->add_option("--seed", gen.spec.seed, "Generator seed")->capture_default_str();
  g->add_option("--r", gen.spec.r, "Radius / half-width for the 2D datasets")->capture_default_str();
  g->add_option("--sqrt-s", gen.spec.sqrt_s, "Collision energy: GeV for ee-dimuon, TeV for pp-drellyan");
  g->add_option("--m-z", gen.spec.m_z, "Z mass in GeV")->capture_default_str();
  g->add_option("--min-pt", gen.min_pt, "pp-drellyan: minimum muon pT in GeV (off by default)");
  g->add_option("--max-abs-eta", gen.max_abs_eta, "pp-drellyan: maximum muon |eta| (off by default)");
  g->add_option("--out", gen.out, "Output CSV path")->required();

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Standardize a CSV dataset and train a VAE");
  t->add_option("--data", tr.data, "Input CSV")->required();
  t->add_option("--latent-dim", tr.cfg.latent_dim, "Latent dimension")->required();
  t->add_option("--seed", tr.cfg.seed, "Training seed")->required();
  t->add_option("--beta", tr.cfg.beta, "KL weight")->capture_default_str();
  t->add_option("--lr", tr.cfg.lr, "Adam learning rate")->capture_default_str();
  t->add_option("--epochs", tr.cfg.epochs, "Epochs")->capture_default_str();
  t->add_option("--batch", tr.cfg.batch_size, "Batch size")->capture_default_str();
  t->add_option("--hidden", tr.cfg.hidden, "Hidden layer widths")->capture_default_str();
  t->add_option("--model", tr.model_out, "Model JSON output")->capture_default_str();
  t->add_option("--trace", tr.trace_out, "Per-epoch loss CSV output")->capture_default_str();

  AnalyzeArgs an;
  auto* a = app.add_subcommand("analyze", "Relevance report for one trained model");
  a->add_option("--model", an.model, "Model JSON")->required();
  a->add_option("--data", an.data, "Dataset CSV")->required();
  a->add_option("--out", an.out, "Report JSON output")->capture_default_str();
  a->add_option("--svg", an.svg_dir, "Also render figures into this directory");
  a->add_option("--min-gap", an.min_gap, "Relevance gap threshold")->capture_default_str();

  ExperimentArgs ex;
  auto* e = app.add_subcommand("experiment", "Run a multi-seed experiment from a JSON config");
  e->add_option("--config", ex.config, "Experiment config JSON")->required();
  e->add_option("--out", ex.out, "Output directory (overrides output_dir)");
  e->add_option("--threads", ex.threads, "Worker threads, 0 = serial (default: SYMPROBE_THREADS)");

  ReportArgs rp;
  auto* r = app.add_subcommand("report", "Render SVG figures from a report JSON");
  r->add_option("--in", rp.in, "Report JSON")->required();
  r->add_option("--svg", rp.svg_dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& s) {
    return app.exit(s);
  } catch (const CLI::ParseError& err) {
    std::string msg = err.what();
    for (auto& c : msg)
      if (c == '\n') c = ' ';
    std::cerr << "error[usage]: " << msg << "\n";
    return 2;
  }

  try {
    if (*g) return cmd_gen(gen);
    if (*t) return cmd_train(tr);
    if (*a) return cmd_analyze(an);
    if (*e) return cmd_experiment(ex);
    if (*r) return cmd_report(rp);
  } catch (const symprobe::Error& err) {
    std::cerr << "error[" << err.code() << "]: " << err.what() << "\n";
    return 1;
  } catch (const std::exception& err) {
    std::cerr << "error[internal]: " << err.what() << "\n";
    return 1;
  }
  return 1;
}
