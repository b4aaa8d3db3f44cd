#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "symprobe/dataset.hpp"

namespace symprobe {

Eigen::Index Dataset::column(const std::string& name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw ShapeError("dataset has no column '" + name + "'");
  return static_cast<Eigen::Index>(it - names.begin());
}

void Dataset::validate() const {
  if (static_cast<Eigen::Index>(names.size()) != features.cols())
    throw ShapeError("dataset: " + std::to_string(names.size()) + " names for " +
                     std::to_string(features.cols()) + " columns");
  require_finite(features, "dataset");
}

// ---- constraint verification --------------------------------------------

namespace {

double param(const Dataset& d, const std::string& key) {
  const auto it = d.meta.params.find(key);
  if (it == d.meta.params.end())
    throw ConfigError("constraint check needs dataset parameter '" + key + "'");
  return it->second;
}

ConstraintCheck check_circle(const Dataset& d) {
  const double r = param(d, "r");
  const double r2 = r * r;
  const auto x1 = d.column("x1"), x2 = d.column("x2");
  ConstraintCheck c{"circle", 1, 0.0, 1e-9, true};
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    const double a = d.features(i, x1), b = d.features(i, x2);
    c.max_violation = std::max(c.max_violation, std::abs(a * a + b * b - r2) / r2);
  }
  return c;
}

ConstraintCheck check_p_sum_zero(const Dataset& d) {
  const char* axes[] = {"x", "y", "z"};
  Eigen::Index mu[3], bar[3];
  for (int k = 0; k < 3; ++k) {
    mu[k] = d.column(std::string("p") + axes[k] + "_mu");
    bar[k] = d.column(std::string("p") + axes[k] + "_mubar");
  }
  ConstraintCheck c{"p_sum_zero", 3, 0.0, 1e-9, true};
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    double norm_mu = 0.0, norm_bar = 0.0;
    for (int k = 0; k < 3; ++k) {
      norm_mu += d.features(i, mu[k]) * d.features(i, mu[k]);
      norm_bar += d.features(i, bar[k]) * d.features(i, bar[k]);
    }
    const double scale = std::max({std::sqrt(norm_mu), std::sqrt(norm_bar), 1e-300});
    for (int k = 0; k < 3; ++k)
      c.max_violation = std::max(
          c.max_violation, std::abs(d.features(i, mu[k]) + d.features(i, bar[k])) / scale);
  }
  return c;
}

struct FourMomenta {
  Eigen::Index e, px, py, pz;
};

FourMomenta four_momentum_columns(const Dataset& d, const std::string& suffix) {
  return {d.column("E" + suffix), d.column("px" + suffix), d.column("py" + suffix),
          d.column("pz" + suffix)};
}

ConstraintCheck check_pt_sum_zero(const Dataset& d) {
  const auto mu = four_momentum_columns(d, "_mu");
  const auto bar = four_momentum_columns(d, "_mubar");
  ConstraintCheck c{"pt_sum_zero", 2, 0.0, 1e-9, true};
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    const double scale = std::max(d.features(i, mu.e) + d.features(i, bar.e), 1e-300);
    c.max_violation =
        std::max({c.max_violation,
                  std::abs(d.features(i, mu.px) + d.features(i, bar.px)) / scale,
                  std::abs(d.features(i, mu.py) + d.features(i, bar.py)) / scale});
  }
  return c;
}

double mass_squared(const Matrix& f, Eigen::Index i, const FourMomenta& p) {
  const double e = f(i, p.e), x = f(i, p.px), y = f(i, p.py), z = f(i, p.pz);
  return e * e - x * x - y * y - z * z;
}

ConstraintCheck check_massless_mu(const Dataset& d) {
  const auto mu = four_momentum_columns(d, "_mu");
  const auto bar = four_momentum_columns(d, "_mubar");
  ConstraintCheck c{"massless_mu", 2, 0.0, 1e-6, true};
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    for (const auto& p : {mu, bar}) {
      const double e2 = std::max(d.features(i, p.e) * d.features(i, p.e), 1e-300);
      c.max_violation = std::max(c.max_violation, std::abs(mass_squared(d.features, i, p)) / e2);
    }
  }
  return c;
}

ConstraintCheck check_z_mass(const Dataset& d) {
  const double mz = param(d, "m_z");
  const auto mu = four_momentum_columns(d, "_mu");
  const auto bar = four_momentum_columns(d, "_mubar");
  ConstraintCheck c{"z_mass", 1, 0.0, 1e-6, true};
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    const auto& f = d.features;
    const double e = f(i, mu.e) + f(i, bar.e);
    const double x = f(i, mu.px) + f(i, bar.px);
    const double y = f(i, mu.py) + f(i, bar.py);
    const double z = f(i, mu.pz) + f(i, bar.pz);
    const double m2 = e * e - x * x - y * y - z * z;
    c.max_violation = std::max(c.max_violation, std::abs(m2 - mz * mz) / (mz * mz));
  }
  return c;
}

}  // namespace

bool ConstraintReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

ConstraintReport verify_constraints(const Dataset& data) {
  data.validate();
  ConstraintReport report;
  for (const auto& constraint : data.constraints) {
    ConstraintCheck check;
    if (constraint.id == "circle") {
      check = check_circle(data);
    } else if (constraint.id == "p_sum_zero") {
      check = check_p_sum_zero(data);
    } else if (constraint.id == "pt_sum_zero") {
      check = check_pt_sum_zero(data);
    } else if (constraint.id == "massless_mu") {
      check = check_massless_mu(data);
    } else if (constraint.id == "z_mass") {
      check = check_z_mass(data);
    } else {
      throw ConfigError("unknown constraint '" + constraint.id + "'");
    }
    check.count = constraint.count;
    check.passed = check.max_violation <= check.tolerance;
    report.checks.push_back(check);
  }
  return report;
}

// ---- standardization ----------------------------------------------------

Matrix Standardizer::transform(const Matrix& x) const {
  if (x.cols() != mean.size())
    throw ShapeError("standardizer: " + std::to_string(mean.size()) + " features, input " +
                     shape_str(x));
  Matrix out = x.rowwise() - mean.transpose();
  out.array().rowwise() /= stddev.transpose().array();
  return out;
}

Matrix Standardizer::inverse(const Matrix& z) const {
  if (z.cols() != mean.size())
    throw ShapeError("standardizer: " + std::to_string(mean.size()) + " features, input " +
                     shape_str(z));
  Matrix out = z.array().rowwise() * stddev.transpose().array();
  out.rowwise() += mean.transpose();
  return out;
}

Standardizer fit_standardizer(const Dataset& data) {
  data.validate();
  if (data.rows() < 1) throw ShapeError("standardize: empty dataset");
  Standardizer s;
  const auto n = static_cast<double>(data.rows());
  s.mean = data.features.colwise().sum().transpose() / n;
  const Matrix centered = data.features.rowwise() - s.mean.transpose();
  s.stddev = (centered.colwise().squaredNorm().transpose() / n).cwiseSqrt();
  for (Eigen::Index j = 0; j < s.stddev.size(); ++j) {
    const double scale = std::max(std::abs(s.mean[j]), 1.0);
    if (!(s.stddev[j] > 1e-12 * scale))
      throw NumericError("standardize: column '" + data.names[static_cast<std::size_t>(j)] +
                         "' has zero variance");
  }
  return s;
}

std::pair<Dataset, Standardizer> standardize(const Dataset& data) {
  Standardizer s = fit_standardizer(data);
  Dataset out = data;
  out.features = s.transform(data.features);
  return {std::move(out), std::move(s)};
}

// ---- CSV ----------------------------------------------------------------

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, sep)) out.push_back(trim(field));
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double parse_double(const std::string& s, long line) {
  double v = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  if (begin != end && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end || s.empty())
    throw ParseError("cannot parse '" + s + "' as a number", line);
  if (!std::isfinite(v)) throw ParseError("non-finite value '" + s + "'", line);
  return v;
}

std::uint64_t parse_u64(const std::string& s, long line) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw ParseError("cannot parse '" + s + "' as an unsigned integer", line);
  return v;
}

// Metadata comment lines: `# key: value`, where key is generator, seed, `param <name>`
// or `constraint <id>`.
void parse_meta_line(const std::string& body, long line, Dataset& d) {
  const auto colon = body.find(':');
  if (colon == std::string::npos) return;  // free-form comment
  const std::string key = trim(body.substr(0, colon));
  const std::string value = trim(body.substr(colon + 1));
  if (key == "generator") {
    d.meta.generator = value;
  } else if (key == "seed") {
    d.meta.seed = parse_u64(value, line);
  } else if (key.rfind("param ", 0) == 0) {
    d.meta.params[trim(key.substr(6))] = parse_double(value, line);
  } else if (key.rfind("constraint ", 0) == 0) {
    d.constraints.push_back(
        {trim(key.substr(11)), static_cast<int>(parse_u64(value, line))});
  }
}

}  // namespace

void csv_write(const Dataset& data, std::ostream& out) {
  data.validate();
  if (!data.meta.generator.empty()) out << "# generator: " << data.meta.generator << '\n';
  if (data.meta.seed) out << "# seed: " << *data.meta.seed << '\n';
  for (const auto& [k, v] : data.meta.params) out << "# param " << k << ": " << format_double(v) << '\n';
  for (const auto& c : data.constraints) out << "# constraint " << c.id << ": " << c.count << '\n';
  for (std::size_t j = 0; j < data.names.size(); ++j) out << (j ? "," : "") << data.names[j];
  out << '\n';
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    for (Eigen::Index j = 0; j < data.cols(); ++j)
      out << (j ? "," : "") << format_double(data.features(i, j));
    out << '\n';
  }
  if (!out) throw IoError("csv_write: stream failure");
}

void csv_write(const Dataset& data, const std::filesystem::path& path) {
  std::ostringstream ss;
  csv_write(data, ss);
  write_file_atomic(path, ss.str());
}

Dataset csv_read(std::istream& in) {
  Dataset d;
  std::string raw;
  long line = 0;
  bool have_header = false;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, raw)) {
    ++line;
    const std::string text = trim(raw);
    if (text.empty()) continue;
    if (!have_header) {
      if (text.front() == '#') {
        parse_meta_line(text.substr(1), line, d);
        continue;
      }
      d.names = split(text, ',');
      for (const auto& name : d.names)
        if (name.empty()) throw ParseError("empty column name in header", line);
      have_header = true;
      continue;
    }
    if (text.front() == '#') continue;
    const auto fields = split(text, ',');
    if (fields.size() != d.names.size())
      throw ParseError("expected " + std::to_string(d.names.size()) + " columns, found " +
                           std::to_string(fields.size()),
                       line);
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto& f : fields) row.push_back(parse_double(f, line));
    rows.push_back(std::move(row));
  }
  if (!have_header) throw ParseError("empty file: no header row", line);
  if (rows.empty()) throw ParseError("no data rows", line);
  d.features.resize(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(d.names.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < d.names.size(); ++j)
      d.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return d;
}

Dataset csv_read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return csv_read(in);
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out << contents;
    out.flush();
    if (!out) throw IoError("write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
}

}  // namespace symprobe
