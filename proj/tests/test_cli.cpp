#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>
#include <string>

#include "doctest.h"
#include "symprobe/dataset.hpp"
#include "symprobe/experiment.hpp"
#include "symprobe/vae.hpp"

namespace fs = std::filesystem;
using namespace symprobe;

namespace {

struct Outcome {
  int status = -1;
  std::string out;
  std::string err;
};

const fs::path& workdir() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / "symprobe_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome run(const std::string& args) {
  const auto out = workdir() / "stdout.txt";
  const auto err = workdir() / "stderr.txt";
  const std::string cmd = "cd '" + workdir().string() + "' && '" SYMPROBE_CLI "' " + args +
                          " >'" + out.string() + "' 2>'" + err.string() + "'";
  const int raw = std::system(cmd.c_str());
  Outcome o;
  o.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  o.out = slurp(out);
  o.err = slurp(err);
  return o;
}

// One line of the form error[code]: message.
bool single_error_line(const std::string& err) {
  static const std::regex form(R"(error\[[a-z]+\]: [^\n]+\n)");
  return std::regex_match(err, form);
}

}  // namespace

TEST_CASE("gen writes verified datasets") {
  auto o = run("gen --dataset circle --n 10000 --r 10 --seed 1 --out circle.csv");
  REQUIRE(o.status == 0);
  const auto d = csv_read(workdir() / "circle.csv");
  CHECK(d.rows() == 10000);
  CHECK(verify_constraints(d).passed());

  o = run("gen --dataset ee-dimuon --n 2000 --sqrt-s 80 --out ee.csv");
  REQUIRE(o.status == 0);
  const auto ee = csv_read(workdir() / "ee.csv");
  CHECK(ee.cols() == 6);
  CHECK(verify_constraints(ee).passed());

  o = run("gen --dataset pp-drellyan --n 500 --min-pt 20 --out pp.csv");
  REQUIRE(o.status == 0);
  CHECK(verify_constraints(csv_read(workdir() / "pp.csv")).passed());
}

TEST_CASE("gen errors") {
  auto o = run("gen --dataset circle --n 10");
  CHECK(o.status != 0);
  CHECK(single_error_line(o.err));
  o = run("gen --dataset torus --out x.csv");
  CHECK(o.status != 0);
  CHECK(single_error_line(o.err));
  CHECK(o.err.find("error[config]") == 0);
  o = run("gen --dataset circle --n 0 --out x.csv");
  CHECK(o.status != 0);
  CHECK(single_error_line(o.err));
  o = run("");
  CHECK(o.status != 0);
}

TEST_CASE("train and analyze") {
  REQUIRE(run("gen --dataset circle --n 10000 --seed 1 --out circle.csv").status == 0);
  auto o = run("train --data circle.csv --latent-dim 4 --seed 1 --model m.json --trace t.csv");
  REQUIRE(o.status == 0);
  const auto loaded = load_model(workdir() / "m.json");
  CHECK(loaded.model.latent_dim == 4);
  CHECK(loaded.standardizer.has_value());
  std::ifstream trace(workdir() / "t.csv");
  std::string line;
  std::getline(trace, line);
  CHECK(line == "epoch,total,rec,kl");
  std::vector<double> totals;
  while (std::getline(trace, line)) {
    const auto a = line.find(','), b = line.find(',', a + 1);
    totals.push_back(std::stod(line.substr(a + 1, b - a - 1)));
  }
  REQUIRE(totals.size() == 30);
  CHECK(totals.back() < totals.front());

  o = run("analyze --model m.json --data circle.csv --out r.json --svg figs");
  REQUIRE(o.status == 0);
  const auto view = load_report(workdir() / "r.json");
  CHECK(view.relevance.size() == 4);
  CHECK(fs::exists(workdir() / "figs" / "relevance.svg"));
  CHECK(fs::exists(workdir() / "figs" / "latent_map.svg"));
}

TEST_CASE("train on ee data with six latents") {
  REQUIRE(run("gen --dataset ee-dimuon --n 1000 --out ee_small.csv").status == 0);
  const auto o = run("train --data ee_small.csv --latent-dim 6 --seed 2 --epochs 2 --model ee.json "
                     "--trace ee_trace.csv");
  CHECK(o.status == 0);
  CHECK(load_model(workdir() / "ee.json").model.latent_dim == 6);
}

TEST_CASE("train errors") {
  REQUIRE(run("gen --dataset circle --n 200 --out small.csv").status == 0);
  auto o = run("train --data small.csv --latent-dim 4 --seed 1 --epochs 0");
  CHECK(o.status != 0);
  CHECK(single_error_line(o.err));
  CHECK(o.err.find("error[config]") == 0);
  o = run("train --data missing.csv --latent-dim 4 --seed 1");
  CHECK(o.status != 0);
  CHECK(single_error_line(o.err));
  o = run("train --data small.csv --seed 1");
  CHECK(o.status != 0);
  CHECK(single_error_line(o.err));
  o = run("train --data small.csv --latent-dim 4 --seed 1 --lr 1e300 --model d.json --trace d.csv");
  CHECK(o.status != 0);
  CHECK(single_error_line(o.err));
  CHECK(o.err.find("error[diverged]") == 0);
  CHECK(o.err.find("epoch") != std::string::npos);
}

TEST_CASE("experiment and report") {
  {
    std::ofstream cfg(workdir() / "exp.json");
    cfg << R"({"dataset": {"generator": "circle", "n": 500},
               "train": {"latent_dim": 3, "epochs": 2, "hidden": [8, 8]},
               "seeds": [1, 2], "scatter_points": 100})";
  }
  auto o = run("experiment --config exp.json --out exp_serial --threads 0");
  REQUIRE(o.status == 0);
  o = run("experiment --config exp.json --out exp_threaded --threads 2");
  REQUIRE(o.status == 0);
  CHECK(slurp(workdir() / "exp_serial" / "report.json") ==
        slurp(workdir() / "exp_threaded" / "report.json"));
  CHECK(slurp(workdir() / "exp_serial" / "relevance.svg") ==
        slurp(workdir() / "exp_threaded" / "relevance.svg"));

  o = run("report --in exp_serial/report.json --svg rendered");
  REQUIRE(o.status == 0);
  CHECK(slurp(workdir() / "rendered" / "scatter.svg") ==
        slurp(workdir() / "exp_serial" / "scatter.svg"));

  {
    std::ofstream cfg(workdir() / "noseeds.json");
    cfg << R"({"dataset": {"generator": "circle"}, "train": {"latent_dim": 4}, "seeds": []})";
  }
  o = run("experiment --config noseeds.json --out nope");
  CHECK(o.status != 0);
  CHECK(single_error_line(o.err));
  CHECK(o.err.find("error[config]") == 0);

  {
    std::ofstream bad(workdir() / "bad.json");
    bad << "{not json";
  }
  o = run("report --in bad.json --svg out");
  CHECK(o.status != 0);
  CHECK(single_error_line(o.err));
  CHECK(o.err.find("error[parse]") == 0);
}
