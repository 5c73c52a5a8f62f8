#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace qlcs {

// Self-contained SVG heatmap of a rate matrix in [0, 1]; CSV stays the
// canonical output, the SVG is a convenience view.
inline void write_heatmap_svg(const std::filesystem::path& path, const Eigen::MatrixXd& values,
                              const std::string& title, const std::string& xlabel,
                              const std::string& ylabel,
                              const std::vector<std::string>& xticks = {},
                              const std::vector<std::string>& yticks = {}) {
  const int rows = static_cast<int>(values.rows());
  const int cols = static_cast<int>(values.cols());
  const int cell = std::max(6, std::min(40, 640 / std::max(rows, cols)));
  const int margin_left = 70, margin_top = 40, margin_bottom = 50, margin_right = 20;
  const int width = margin_left + cols * cell + margin_right;
  const int height = margin_top + rows * cell + margin_bottom;

  std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  std::ofstream out(path);
  char buf[256];
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << title
      << "</text>\n";

  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const double v = std::clamp(values(r, c), 0.0, 1.0);
      // dark blue (0) to yellow (1)
      const int red = static_cast<int>(20 + 235 * v);
      const int green = static_cast<int>(30 + 200 * v);
      const int blue = static_cast<int>(120 - 80 * v);
      std::snprintf(buf, sizeof(buf),
                    "<rect x=\"%d\" y=\"%d\" width=\"%d\" height=\"%d\" fill=\"rgb(%d,%d,%d)\"/>\n",
                    margin_left + c * cell, margin_top + (rows - 1 - r) * cell, cell, cell, red, green,
                    blue);
      out << buf;
    }
  }

  for (std::size_t i = 0; i < xticks.size() && i < static_cast<std::size_t>(cols); ++i) {
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%d\" y=\"%d\" text-anchor=\"middle\" font-size=\"10\">%s</text>\n",
                  margin_left + static_cast<int>(i) * cell + cell / 2, margin_top + rows * cell + 14,
                  xticks[i].c_str());
    out << buf;
  }
  for (std::size_t i = 0; i < yticks.size() && i < static_cast<std::size_t>(rows); ++i) {
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%d\" y=\"%d\" text-anchor=\"end\" font-size=\"10\">%s</text>\n",
                  margin_left - 6,
                  margin_top + (rows - 1 - static_cast<int>(i)) * cell + cell / 2 + 4,
                  yticks[i].c_str());
    out << buf;
  }

  out << "<text x=\"" << margin_left + cols * cell / 2 << "\" y=\"" << height - 12
      << "\" text-anchor=\"middle\" font-size=\"12\">" << xlabel << "</text>\n";
  out << "<text x=\"16\" y=\"" << margin_top + rows * cell / 2
      << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 "
      << margin_top + rows * cell / 2 << ")\">" << ylabel << "</text>\n";
  out << "</svg>\n";
}

}  // namespace qlcs
