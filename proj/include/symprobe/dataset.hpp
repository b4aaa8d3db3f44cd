#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "symprobe/linalg.hpp"
#include "symprobe/rng.hpp"

namespace symprobe {

// A named constraint family; count is the number of scalar equations it contributes.
struct Constraint {
  std::string id;
  int count = 1;
  friend bool operator==(const Constraint&, const Constraint&) = default;
};

struct DatasetMeta {
  std::string generator;
  std::optional<std::uint64_t> seed;
  std::map<std::string, double> params;  // e.g. r, sqrt_s, m_z
  friend bool operator==(const DatasetMeta&, const DatasetMeta&) = default;
};

struct Dataset {
  Matrix features;  // N x D
  std::vector<std::string> names;
  DatasetMeta meta;
  std::vector<Constraint> constraints;

  Eigen::Index rows() const { return features.rows(); }
  Eigen::Index cols() const { return features.cols(); }

  int constraint_count() const {
    int n = 0;
    for (const auto& c : constraints) n += c.count;
    return n;
  }

  Eigen::Index column(const std::string& name) const;
  void validate() const;
};

// ---- generators ----------------------------------------------------------

inline constexpr double kZMassGeV = 91.1876;

// Uniform on the square [-r, r]^2; no constraints.
Dataset gen_uniform2d(Eigen::Index n, double r, Rng& rng);

// Uniform on the circle of radius r; declares `circle`.
Dataset gen_circle(Eigen::Index n, double r, Rng& rng);
Dataset circle_from_angles(std::span<const double> theta, double r);

// e+e- -> mu+mu- at fixed sqrt(s) in GeV. Massless back-to-back muons,
// cos(theta) ~ 1 + cos^2(theta), phi uniform. Declares `p_sum_zero` (3).
Dataset gen_ee_dimuon(Eigen::Index n, double sqrt_s_gev, Rng& rng);

// Optional muon acceptance for the pp generator; both off by default.
struct MuonCuts {
  std::optional<double> min_pt;       // GeV
  std::optional<double> max_abs_eta;
  bool active() const { return min_pt.has_value() || max_abs_eta.has_value(); }
};

// pp -> Z -> mu+mu- at sqrt(s) in TeV with an on-shell Z of mass m_z (GeV).
// x1 ~ 1/x on [tau, 1], x2 = tau / x1, isotropic decay in the Z rest frame, boost along z.
// Declares `pt_sum_zero` (2), `massless_mu` (2), `z_mass` (1).
Dataset gen_pp_drellyan(Eigen::Index n, double sqrt_s_tev, double m_z_gev, Rng& rng,
                        const MuonCuts& cuts = {});

// Generator selected by id, as exposed on the command line.
struct DatasetSpec {
  std::string generator;  // uniform2d | circle | ee-dimuon | pp-drellyan
  Eigen::Index n = 10000;
  std::uint64_t seed = 1;
  double r = 10.0;
  double sqrt_s = 0.0;  // 0 selects the generator default: 80 GeV (ee), 13 TeV (pp)
  double m_z = kZMassGeV;
  MuonCuts cuts;

  void validate() const;
};

Dataset generate(const DatasetSpec& spec);
const std::vector<std::string>& generator_ids();

// ---- constraint verification --------------------------------------------

struct ConstraintCheck {
  std::string id;
  int count = 0;
  double max_violation = 0.0;  // relative, see tolerance
  double tolerance = 0.0;
  bool passed = true;
};

struct ConstraintReport {
  std::vector<ConstraintCheck> checks;
  bool passed() const;
};

// Re-checks every declared constraint row by row.
ConstraintReport verify_constraints(const Dataset& data);

// ---- standardization ----------------------------------------------------

struct Standardizer {
  Vector mean;
  Vector stddev;  // population convention

  Matrix transform(const Matrix& x) const;
  Matrix inverse(const Matrix& z) const;
  friend bool operator==(const Standardizer& a, const Standardizer& b) {
    return a.mean.size() == b.mean.size() && a.mean == b.mean && a.stddev == b.stddev;
  }
};

Standardizer fit_standardizer(const Dataset& data);
std::pair<Dataset, Standardizer> standardize(const Dataset& data);

// ---- CSV ----------------------------------------------------------------

void csv_write(const Dataset& data, std::ostream& out);
void csv_write(const Dataset& data, const std::filesystem::path& path);
Dataset csv_read(std::istream& in);
Dataset csv_read(const std::filesystem::path& path);

// Writes to a sibling temporary and renames, so readers never see a partial file.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace symprobe
