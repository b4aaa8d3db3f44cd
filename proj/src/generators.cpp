#include <algorithm>
#include <cmath>
#include <numbers>

#include "symprobe/dataset.hpp"

namespace symprobe {

namespace {

void require_count(Eigen::Index n, const char* who) {
  if (n < 1) throw ConfigError(std::string(who) + ": n must be >= 1, got " + std::to_string(n));
}

void require_positive(double v, const char* who, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v))
    throw ConfigError(std::string(who) + ": " + name + " must be positive and finite");
}

const std::vector<std::string> kEeNames = {"px_mu", "py_mu", "pz_mu",
                                           "px_mubar", "py_mubar", "pz_mubar"};
const std::vector<std::string> kPpNames = {"E_mu",    "px_mu",    "py_mu",    "pz_mu",
                                           "E_mubar", "px_mubar", "py_mubar", "pz_mubar"};

// cos(theta) with density (3/8)(1 + c^2) on [-1, 1], by rejection against the flat envelope.
double sample_qed_cos_theta(Rng& rng) {
  for (;;) {
    const double c = rng.uniform(-1.0, 1.0);
    if (2.0 * rng.uniform() < 1.0 + c * c) return c;
  }
}

double pseudorapidity(double px, double py, double pz) {
  const double pt = std::hypot(px, py);
  return std::asinh(pz / pt);
}

}  // namespace

Dataset gen_uniform2d(Eigen::Index n, double r, Rng& rng) {
  require_count(n, "gen_uniform2d");
  require_positive(r, "gen_uniform2d", "r");
  Dataset d;
  d.features.resize(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    d.features(i, 0) = rng.uniform(-r, r);
    d.features(i, 1) = rng.uniform(-r, r);
  }
  d.names = {"x1", "x2"};
  d.meta.generator = "uniform2d";
  d.meta.params = {{"r", r}};
  return d;
}

Dataset circle_from_angles(std::span<const double> theta, double r) {
  require_count(static_cast<Eigen::Index>(theta.size()), "gen_circle");
  require_positive(r, "gen_circle", "r");
  Dataset d;
  d.features.resize(static_cast<Eigen::Index>(theta.size()), 2);
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    d.features(row, 0) = r * std::cos(theta[i]);
    d.features(row, 1) = r * std::sin(theta[i]);
  }
  d.names = {"x1", "x2"};
  d.meta.generator = "circle";
  d.meta.params = {{"r", r}};
  d.constraints = {{"circle", 1}};
  return d;
}

Dataset gen_circle(Eigen::Index n, double r, Rng& rng) {
  require_count(n, "gen_circle");
  std::vector<double> theta(static_cast<std::size_t>(n));
  for (auto& t : theta) t = 2.0 * std::numbers::pi * rng.uniform();
  return circle_from_angles(theta, r);
}

Dataset gen_ee_dimuon(Eigen::Index n, double sqrt_s_gev, Rng& rng) {
  require_count(n, "gen_ee_dimuon");
  require_positive(sqrt_s_gev, "gen_ee_dimuon", "sqrt_s");
  const double p = 0.5 * sqrt_s_gev;
  Dataset d;
  d.features.resize(n, 6);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double c = sample_qed_cos_theta(rng);
    const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
    const double phi = 2.0 * std::numbers::pi * rng.uniform();
    const double px = p * s * std::cos(phi);
    const double py = p * s * std::sin(phi);
    const double pz = p * c;
    d.features.row(i) << px, py, pz, -px, -py, -pz;
  }
  d.names = kEeNames;
  d.meta.generator = "ee-dimuon";
  d.meta.params = {{"sqrt_s", sqrt_s_gev}};
  d.constraints = {{"p_sum_zero", 3}};
  return d;
}

Dataset gen_pp_drellyan(Eigen::Index n, double sqrt_s_tev, double m_z_gev, Rng& rng,
                        const MuonCuts& cuts) {
  require_count(n, "gen_pp_drellyan");
  require_positive(sqrt_s_tev, "gen_pp_drellyan", "sqrt_s");
  require_positive(m_z_gev, "gen_pp_drellyan", "m_z");
  const double sqrt_s = 1000.0 * sqrt_s_tev;
  const double tau = (m_z_gev * m_z_gev) / (sqrt_s * sqrt_s);
  if (!(tau < 1.0)) throw ConfigError("gen_pp_drellyan: m_z^2 must be below s");
  const double log_tau = std::log(tau);
  const double half_m = 0.5 * m_z_gev;

  // Bounded so an unsatisfiable cut cannot spin forever.
  const long max_attempts = 1000 * static_cast<long>(n) + 100000;
  long attempts = 0;

  Dataset d;
  d.features.resize(n, 8);
  for (Eigen::Index i = 0; i < n;) {
    if (++attempts > max_attempts)
      throw ConfigError("gen_pp_drellyan: muon cuts reject almost every event");
    // x1 = tau^u has density proportional to 1/x on [tau, 1].
    const double x1 = std::exp(rng.uniform() * log_tau);
    const double x2 = tau / x1;
    const double rapidity = 0.5 * std::log(x1 / x2);

    const double c = rng.uniform(-1.0, 1.0);
    const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
    const double phi = 2.0 * std::numbers::pi * rng.uniform();
    const double px = half_m * s * std::cos(phi);
    const double py = half_m * s * std::sin(phi);
    const double pz = half_m * c;

    const double ch = std::cosh(rapidity);
    const double sh = std::sinh(rapidity);
    const double e_mu = half_m * ch + pz * sh;
    const double pz_mu = pz * ch + half_m * sh;
    const double e_mubar = half_m * ch - pz * sh;
    const double pz_mubar = -pz * ch + half_m * sh;

    if (cuts.active()) {
      const double pt = std::hypot(px, py);
      if (cuts.min_pt && pt < *cuts.min_pt) continue;
      if (cuts.max_abs_eta && (std::abs(pseudorapidity(px, py, pz_mu)) > *cuts.max_abs_eta ||
                               std::abs(pseudorapidity(-px, -py, pz_mubar)) > *cuts.max_abs_eta))
        continue;
    }
    d.features.row(i) << e_mu, px, py, pz_mu, e_mubar, -px, -py, pz_mubar;
    ++i;
  }
  d.names = kPpNames;
  d.meta.generator = "pp-drellyan";
  d.meta.params = {{"sqrt_s", sqrt_s_tev}, {"m_z", m_z_gev}};
  if (cuts.min_pt) d.meta.params["min_pt"] = *cuts.min_pt;
  if (cuts.max_abs_eta) d.meta.params["max_abs_eta"] = *cuts.max_abs_eta;
  d.constraints = {{"pt_sum_zero", 2}, {"massless_mu", 2}, {"z_mass", 1}};
  return d;
}

const std::vector<std::string>& generator_ids() {
  static const std::vector<std::string> ids = {"uniform2d", "circle", "ee-dimuon", "pp-drellyan"};
  return ids;
}

void DatasetSpec::validate() const {
  if (std::find(generator_ids().begin(), generator_ids().end(), generator) == generator_ids().end())
    throw ConfigError("unknown dataset '" + generator + "'");
  if (n < 1) throw ConfigError("n must be >= 1");
  if (generator == "uniform2d" || generator == "circle") {
    if (!(r > 0.0) || !std::isfinite(r)) throw ConfigError("r must be positive");
  }
  if (sqrt_s < 0.0 || !std::isfinite(sqrt_s)) throw ConfigError("sqrt_s must be positive");
  if (generator == "pp-drellyan" && (!(m_z > 0.0) || !std::isfinite(m_z)))
    throw ConfigError("m_z must be positive");
}

Dataset generate(const DatasetSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  Dataset d;
  if (spec.generator == "uniform2d") {
    d = gen_uniform2d(spec.n, spec.r, rng);
  } else if (spec.generator == "circle") {
    d = gen_circle(spec.n, spec.r, rng);
  } else if (spec.generator == "ee-dimuon") {
    d = gen_ee_dimuon(spec.n, spec.sqrt_s > 0.0 ? spec.sqrt_s : 80.0, rng);
  } else {
    d = gen_pp_drellyan(spec.n, spec.sqrt_s > 0.0 ? spec.sqrt_s : 13.0, spec.m_z, rng, spec.cuts);
  }
  d.meta.seed = spec.seed;
  return d;
}

}  // namespace symprobe
