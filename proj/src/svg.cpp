#include "symprobe/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace symprobe::svg {

namespace {

std::string num(double v) {
  if (std::abs(v) < 1e-300) v = 0.0;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string open(double w, double h) {
  return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
         num(w) + "\" height=\"" + num(h) + "\" viewBox=\"0 0 " + num(w) + " " + num(h) +
         "\" font-family=\"sans-serif\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

std::string text(double x, double y, const std::string& s, int size = 12,
                 const char* anchor = "middle") {
  return "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-size=\"" + std::to_string(size) +
         "\" text-anchor=\"" + anchor + "\">" + escape(s) + "</text>\n";
}

struct Range {
  double lo = 0.0, hi = 1.0;
  double map(double v, double a, double b) const {
    return a + (v - lo) / (hi - lo) * (b - a);
  }
};

Range range_of(const Eigen::Ref<const Vector>& v) {
  Range r{v.minCoeff(), v.maxCoeff()};
  if (!(r.hi > r.lo)) {
    r.lo -= 0.5;
    r.hi += 0.5;
  }
  return r;
}

}  // namespace

std::string ramp_color(double t) {
  t = std::clamp(t, 0.0, 1.0);
  const int r = static_cast<int>(std::lround(255.0 * t));
  const int g = static_cast<int>(std::lround(255.0 * (1.0 - std::abs(2.0 * t - 1.0)) * 0.8));
  const int b = static_cast<int>(std::lround(255.0 * (1.0 - t)));
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

std::string bar_chart(const std::vector<double>& values, const std::vector<std::string>& labels,
                      const std::string& title) {
  if (values.empty()) throw ShapeError("bar_chart: no values");
  const double w = 120.0 + 60.0 * static_cast<double>(values.size());
  const double h = 320.0;
  const double left = 60.0, top = 40.0, bottom = 270.0;
  const double vmax = std::max(*std::max_element(values.begin(), values.end()), 1e-300);
  std::string out = open(w, h);
  out += text(w / 2, 24, title, 14);
  out += "<line x1=\"" + num(left) + "\" y1=\"" + num(bottom) + "\" x2=\"" + num(w - 20) +
         "\" y2=\"" + num(bottom) + "\" stroke=\"black\"/>\n";
  out += "<line x1=\"" + num(left) + "\" y1=\"" + num(top) + "\" x2=\"" + num(left) + "\" y2=\"" +
         num(bottom) + "\" stroke=\"black\"/>\n";
  out += text(left - 6, top + 4, num(vmax), 10, "end");
  out += text(left - 6, bottom, "0", 10, "end");
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = std::max(values[i], 0.0);
    const double bh = (bottom - top) * v / vmax;
    const double x = left + 20.0 + 60.0 * static_cast<double>(i);
    out += "<rect class=\"bar\" x=\"" + num(x) + "\" y=\"" + num(bottom - bh) +
           "\" width=\"40\" height=\"" + num(bh) + "\" fill=\"#4878a8\" data-value=\"" +
           num(values[i]) + "\"/>\n";
    const std::string label = i < labels.size() ? labels[i] : std::to_string(i + 1);
    out += text(x + 20, bottom + 16, label, 11);
  }
  out += "</svg>\n";
  return out;
}

std::string scatter_grid(const Matrix& features, const std::vector<std::string>& feature_names,
                         const Matrix& z, const std::vector<std::string>& latent_names,
                         const std::string& title) {
  if (features.rows() != z.rows()) throw ShapeError("scatter_grid: row counts differ");
  if (z.cols() == 0 || features.cols() == 0) throw ShapeError("scatter_grid: nothing to plot");
  const double cell = 140.0, pad = 10.0, left = 60.0, top = 50.0;
  const double w = left + cell * static_cast<double>(features.cols()) + 20.0;
  const double h = top + cell * static_cast<double>(z.cols()) + 40.0;
  std::string out = open(w, h);
  out += text(w / 2, 24, title, 14);
  for (Eigen::Index j = 0; j < features.cols(); ++j) {
    const std::string name = j < static_cast<Eigen::Index>(feature_names.size())
                                 ? feature_names[static_cast<std::size_t>(j)]
                                 : "x" + std::to_string(j + 1);
    out += text(left + cell * (static_cast<double>(j) + 0.5), h - 16, name, 11);
  }
  for (Eigen::Index i = 0; i < z.cols(); ++i) {
    const std::string name = i < static_cast<Eigen::Index>(latent_names.size())
                                 ? latent_names[static_cast<std::size_t>(i)]
                                 : "z" + std::to_string(i + 1);
    out += text(left - 10, top + cell * (static_cast<double>(i) + 0.5), name, 11, "end");
    const Range ry = range_of(z.col(i));
    for (Eigen::Index j = 0; j < features.cols(); ++j) {
      const double x0 = left + cell * static_cast<double>(j);
      const double y0 = top + cell * static_cast<double>(i);
      out += "<g class=\"panel\">\n<rect x=\"" + num(x0 + pad / 2) + "\" y=\"" + num(y0 + pad / 2) +
             "\" width=\"" + num(cell - pad) + "\" height=\"" + num(cell - pad) +
             "\" fill=\"none\" stroke=\"#999\"/>\n";
      const Range rx = range_of(features.col(j));
      for (Eigen::Index r = 0; r < features.rows(); ++r) {
        const double px = rx.map(features(r, j), x0 + pad, x0 + cell - pad);
        const double py = ry.map(z(r, i), y0 + cell - pad, y0 + pad);
        out += "<circle cx=\"" + num(px) + "\" cy=\"" + num(py) + "\" r=\"1\" fill=\"#333\"/>\n";
      }
      out += "</g>\n";
    }
  }
  out += "</svg>\n";
  return out;
}

std::string colored_scatter(const Vector& x, const Vector& y, const Vector& value,
                            const std::string& x_label, const std::string& y_label,
                            const std::string& title) {
  if (x.size() != y.size() || x.size() != value.size())
    throw ShapeError("colored_scatter: length mismatch");
  if (x.size() == 0) throw ShapeError("colored_scatter: no points");
  const double size = 420.0, margin = 50.0;
  std::string out = open(size, size + 20);
  out += text(size / 2, 24, title, 14);
  out += text(size / 2, size + 10, x_label, 12);
  out += text(16, size / 2, y_label, 12);
  // Equal scaling on both axes so circles stay round.
  const double lo = std::min(x.minCoeff(), y.minCoeff());
  const double hi = std::max(x.maxCoeff(), y.maxCoeff());
  Range r{lo, hi > lo ? hi : lo + 1.0};
  const Range rv = range_of(value);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double px = r.map(x[i], margin, size - margin);
    const double py = r.map(y[i], size - margin, margin);
    const double t = rv.map(value[i], 0.0, 1.0);
    out += "<circle cx=\"" + num(px) + "\" cy=\"" + num(py) + "\" r=\"2\" fill=\"" +
           ramp_color(t) + "\"/>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace symprobe::svg
