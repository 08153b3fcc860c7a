#include "ptcl/plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace ptcl {

namespace {

constexpr double kWidth = 640, kHeight = 400, kLeft = 60, kRight = 20, kTop = 40, kBottom = 50;
const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};

std::string escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

void open_svg(std::ostringstream& svg, const std::string& title) {
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(title)
      << "</text>\n"
      << "<line x1=\"" << kLeft << "\" y1=\"" << kHeight - kBottom << "\" x2=\"" << kWidth - kRight << "\" y2=\""
      << kHeight - kBottom << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kHeight - kBottom
      << "\" stroke=\"black\"/>\n";
}

void save(const std::filesystem::path& path, std::ostringstream& svg) {
  svg << "</svg>\n";
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << svg.str();
}

}  // namespace

void write_histogram_svg(const std::filesystem::path& path, const std::vector<std::size_t>& counts,
                         const std::string& title) {
  std::ostringstream svg;
  open_svg(svg, title);
  const double plot_w = kWidth - kLeft - kRight, plot_h = kHeight - kTop - kBottom;
  const std::size_t peak = counts.empty() ? 1 : std::max<std::size_t>(1, *std::max_element(counts.begin(), counts.end()));
  const double bar_w = counts.empty() ? plot_w : plot_w / static_cast<double>(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double h = plot_h * static_cast<double>(counts[i]) / static_cast<double>(peak);
    const double x = kLeft + bar_w * static_cast<double>(i);
    svg << "<rect x=\"" << x + 1 << "\" y=\"" << kHeight - kBottom - h << "\" width=\"" << bar_w - 2 << "\" height=\""
        << h << "\" fill=\"" << kPalette[0] << "\"/>\n";
    svg << "<text x=\"" << x + bar_w / 2 << "\" y=\"" << kHeight - kBottom - h - 4 << "\" text-anchor=\"middle\">"
        << counts[i] << "</text>\n";
  }
  for (std::size_t i = 0; i <= counts.size(); ++i) {
    svg << "<text x=\"" << kLeft + bar_w * static_cast<double>(i) << "\" y=\"" << kHeight - kBottom + 16
        << "\" text-anchor=\"middle\">" << static_cast<double>(i) / static_cast<double>(std::max<std::size_t>(1, counts.size()))
        << "</text>\n";
  }
  svg << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 12 << "\" text-anchor=\"middle\">consistency</text>\n";
  save(path, svg);
}

void write_curves_svg(const std::filesystem::path& path, const std::map<std::string, std::vector<double>>& series,
                      const std::string& title, const std::string& x_label, const std::string& y_label) {
  std::ostringstream svg;
  open_svg(svg, title);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  std::size_t longest = 1;
  for (const auto& [name, ys] : series) {
    longest = std::max(longest, ys.size());
    for (double y : ys) {
      if (std::isfinite(y)) {
        lo = std::min(lo, y);
        hi = std::max(hi, y);
      }
    }
  }
  if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
  if (hi - lo < 1e-9) lo -= 0.5, hi += 0.5;
  const double plot_w = kWidth - kLeft - kRight, plot_h = kHeight - kTop - kBottom;
  const auto px = [&](std::size_t i) {
    return kLeft + (longest > 1 ? plot_w * static_cast<double>(i) / static_cast<double>(longest - 1) : plot_w / 2);
  };
  const auto py = [&](double y) { return kHeight - kBottom - plot_h * (y - lo) / (hi - lo); };

  std::size_t color = 0;
  for (const auto& [name, ys] : series) {
    const char* stroke = kPalette[color % std::size(kPalette)];
    svg << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < ys.size(); ++i) {
      if (std::isfinite(ys[i])) svg << px(i) << "," << py(ys[i]) << " ";
    }
    svg << "\"/>\n";
    svg << "<text x=\"" << kWidth - kRight - 120 << "\" y=\"" << kTop + 16 * static_cast<double>(color) + 10
        << "\" fill=\"" << stroke << "\">" << escape(name) << "</text>\n";
    ++color;
  }
  for (std::size_t i = 0; i < longest; ++i) {
    svg << "<text x=\"" << px(i) << "\" y=\"" << kHeight - kBottom + 16 << "\" text-anchor=\"middle\">" << i
        << "</text>\n";
  }
  svg << "<text x=\"" << kLeft - 6 << "\" y=\"" << py(lo) << "\" text-anchor=\"end\">" << lo << "</text>\n";
  svg << "<text x=\"" << kLeft - 6 << "\" y=\"" << py(hi) << "\" text-anchor=\"end\">" << hi << "</text>\n";
  svg << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 12 << "\" text-anchor=\"middle\">" << escape(x_label)
      << "</text>\n";
  svg << "<text x=\"16\" y=\"" << kHeight / 2 << "\" transform=\"rotate(-90 16 " << kHeight / 2
      << ")\" text-anchor=\"middle\">" << escape(y_label) << "</text>\n";
  save(path, svg);
}

}  // namespace ptcl
