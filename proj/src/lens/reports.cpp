// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <fstream>

#include "onedatum/lens/lens.hpp"

namespace onedatum::lens {

namespace {
const char* kPalette[10] = {"#4363d8", "#e6194b", "#3cb44b", "#ffe119",
                            "#911eb4", "#f58231", "#42d4f4", "#f032e6",
                            "#8a6d4b", "#469990"};
}

void write_histogram_svg(const Histogram& h, const std::string& title,
                         const std::string& path) {
  const int W = 640, H = 400, pad = 48;
  std::ofstream os(path);
  if (!os) throw IoError("cannot open for write: " + path);
  std::int64_t peak = 1;
  for (auto c : h.counts) peak = std::max(peak, c);

  os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W
     << "' height='" << H << "'>\n";
  os << "<rect width='100%' height='100%' fill='white'/>\n";
  os << "<text x='" << W / 2 << "' y='24' text-anchor='middle' "
        "font-family='sans-serif' font-size='15'>"
     << title << "</text>\n";
  double bw = static_cast<double>(W - 2 * pad) / h.counts.size();
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    double frac = static_cast<double>(h.counts[i]) / peak;
    double bh = frac * (H - 2 * pad);
    os << "<rect x='" << pad + i * bw << "' y='" << H - pad - bh
       << "' width='" << std::max(1.0, bw - 1.0) << "' height='" << bh
       << "' fill='#4363d8'/>\n";
  }
  os << "<line x1='" << pad << "' y1='" << H - pad << "' x2='" << W - pad
     << "' y2='" << H - pad << "' stroke='black'/>\n";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", h.edges.front());
  os << "<text x='" << pad << "' y='" << H - pad + 18
     << "' font-family='sans-serif' font-size='12'>" << buf << "</text>\n";
  std::snprintf(buf, sizeof(buf), "%.2f", h.edges.back());
  os << "<text x='" << W - pad << "' y='" << H - pad + 18
     << "' text-anchor='end' font-family='sans-serif' font-size='12'>" << buf
     << "</text>\n";
  os << "<text x='" << pad - 6 << "' y='" << pad
     << "' text-anchor='end' font-family='sans-serif' font-size='12'>"
     << peak << "</text>\n";
  os << "</svg>\n";
}

void write_scatter_svg(std::span<const std::array<double, 2>> points,
                       std::span<const std::int32_t> labels,
                       const std::string& title, const std::string& path) {
  const int W = 640, H = 640, pad = 40;
  std::ofstream os(path);
  if (!os) throw IoError("cannot open for write: " + path);
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& p : points) {
    xmin = std::min(xmin, p[0]);
    xmax = std::max(xmax, p[0]);
    ymin = std::min(ymin, p[1]);
    ymax = std::max(ymax, p[1]);
  }
  if (!(xmax > xmin)) xmax = xmin + 1.0;
  if (!(ymax > ymin)) ymax = ymin + 1.0;

  os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W
     << "' height='" << H << "'>\n";
  os << "<rect width='100%' height='100%' fill='white'/>\n";
  os << "<text x='" << W / 2 << "' y='24' text-anchor='middle' "
        "font-family='sans-serif' font-size='15'>"
     << title << "</text>\n";
  for (std::size_t i = 0; i < points.size(); ++i) {
    double x = pad + (points[i][0] - xmin) / (xmax - xmin) * (W - 2 * pad);
    double y = H - pad - (points[i][1] - ymin) / (ymax - ymin) * (H - 2 * pad);
    const char* color =
        i < labels.size() ? kPalette[labels[i] % 10] : kPalette[0];
    os << "<circle cx='" << x << "' cy='" << y << "' r='2.5' fill='" << color
       << "' fill-opacity='0.7'/>\n";
  }
  os << "</svg>\n";
}

void write_heatmap_svg(const CkaHeatmap& map, const std::string& title,
                       const std::string& path) {
  const std::size_t rows = map.taps_a.size();
  const std::size_t cols = map.taps_b.size();
  const int cell = 36, pad = 60;
  const int W = pad * 2 + cell * static_cast<int>(cols);
  const int H = pad * 2 + cell * static_cast<int>(rows);
  std::ofstream os(path);
  if (!os) throw IoError("cannot open for write: " + path);
  os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W
     << "' height='" << H << "'>\n";
  os << "<rect width='100%' height='100%' fill='white'/>\n";
  os << "<text x='" << W / 2 << "' y='24' text-anchor='middle' "
        "font-family='sans-serif' font-size='14'>"
     << title << "</text>\n";
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      double v = std::clamp(map.at(i, j), 0.0, 1.0);
      int blue = static_cast<int>(255 * (1.0 - v));
      os << "<rect x='" << pad + static_cast<int>(j) * cell << "' y='"
         << pad + static_cast<int>(i) * cell << "' width='" << cell
         << "' height='" << cell << "' fill='rgb(" << 255 - blue / 3 << ","
         << blue << "," << blue << ")'/>\n";
      char buf[16];
      std::snprintf(buf, sizeof(buf), "%.2f", map.at(i, j));
      os << "<text x='" << pad + static_cast<int>(j) * cell + cell / 2
         << "' y='" << pad + static_cast<int>(i) * cell + cell / 2 + 4
         << "' text-anchor='middle' font-family='sans-serif' "
            "font-size='9'>"
         << buf << "</text>\n";
    }
  }
  os << "</svg>\n";
}

}  // namespace onedatum::lens
