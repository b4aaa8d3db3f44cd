#pragma once

#include <string>
#include <vector>

#include "symprobe/linalg.hpp"

namespace symprobe::svg {

// Standalone SVG documents. Every coordinate is printed with 6 significant digits.

// One bar per value, height proportional to value.
std::string bar_chart(const std::vector<double>& values, const std::vector<std::string>& labels,
                      const std::string& title);

// Grid of panels: row i plots latent column i of z against feature column j.
std::string scatter_grid(const Matrix& features, const std::vector<std::string>& feature_names,
                         const Matrix& z, const std::vector<std::string>& latent_names,
                         const std::string& title);

// Points at (x, y) coloured by value on a blue-to-red ramp.
std::string colored_scatter(const Vector& x, const Vector& y, const Vector& value,
                            const std::string& x_label, const std::string& y_label,
                            const std::string& title);

// Ramp used by colored_scatter, t in [0, 1].
std::string ramp_color(double t);

}  // namespace symprobe::svg
