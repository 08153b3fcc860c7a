#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace ptcl {

/// Bar chart of histogram counts over [0, 1].
void write_histogram_svg(const std::filesystem::path& path, const std::vector<std::size_t>& counts,
                         const std::string& title);

/// One polyline per named series, x = index.
void write_curves_svg(const std::filesystem::path& path, const std::map<std::string, std::vector<double>>& series,
                      const std::string& title, const std::string& x_label, const std::string& y_label);

}  // namespace ptcl
