#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

// Minimal dependency-free SVG plotter: line/scatter charts and heatmap grids.
// The CSVs are the canonical artifacts; these renderings are for quick looks.
namespace avfbel::svg {

struct Series {
    std::string label;
    std::string color = "#1f6fb2";
    bool draw_line = true;
    bool draw_points = false;
    std::vector<std::pair<double, double>> points;
};

namespace detail {

constexpr double kWidth = 720, kHeight = 440;
constexpr double kLeft = 64, kRight = 24, kTop = 40, kBottom = 48;

inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

} // namespace detail

inline std::string xy_chart(const std::string& title, const std::string& x_label,
                            const std::string& y_label, const std::vector<Series>& series) {
    using namespace detail;
    double x_min = 0, x_max = 1, y_min = 0, y_max = 1;
    bool first = true;
    for (const Series& s : series)
        for (const auto& [x, y] : s.points) {
            if (first) {
                x_min = x_max = x;
                y_min = y_max = y;
                first = false;
            }
            x_min = std::min(x_min, x);
            x_max = std::max(x_max, x);
            y_min = std::min(y_min, y);
            y_max = std::max(y_max, y);
        }
    if (x_max == x_min) x_max = x_min + 1;
    if (y_max == y_min) y_max = y_min + 1;
    const double plot_w = kWidth - kLeft - kRight, plot_h = kHeight - kTop - kBottom;
    const auto sx = [&](double x) { return kLeft + (x - x_min) / (x_max - x_min) * plot_w; };
    const auto sy = [&](double y) { return kTop + plot_h - (y - y_min) / (y_max - y_min) * plot_h; };

    std::ostringstream out;
    out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << kWidth << "' height='" << kHeight
        << "' font-family='sans-serif' font-size='12'>\n";
    out << "<rect x='" << kLeft << "' y='" << kTop << "' width='" << plot_w << "' height='"
        << plot_h << "' fill='none' stroke='#333'/>\n";
    out << "<text x='" << kWidth / 2 << "' y='20' text-anchor='middle' font-size='14'>" << title
        << "</text>\n";
    out << "<text x='" << kWidth / 2 << "' y='" << kHeight - 10 << "' text-anchor='middle'>"
        << x_label << "</text>\n";
    out << "<text x='16' y='" << kHeight / 2 << "' text-anchor='middle' transform='rotate(-90 16 "
        << kHeight / 2 << ")'>" << y_label << "</text>\n";
    for (int tick = 0; tick <= 4; ++tick) {
        const double fx = x_min + (x_max - x_min) * tick / 4.0;
        const double fy = y_min + (y_max - y_min) * tick / 4.0;
        out << "<text x='" << sx(fx) << "' y='" << kTop + plot_h + 16
            << "' text-anchor='middle' fill='#555'>" << fmt(fx) << "</text>\n";
        out << "<text x='" << kLeft - 6 << "' y='" << sy(fy) + 4
            << "' text-anchor='end' fill='#555'>" << fmt(fy) << "</text>\n";
    }
    double legend_y = kTop + 14;
    for (const Series& s : series) {
        if (s.draw_line && s.points.size() > 1) {
            out << "<polyline fill='none' stroke='" << s.color << "' stroke-width='1.5' points='";
            for (const auto& [x, y] : s.points) out << fmt(sx(x)) << ',' << fmt(sy(y)) << ' ';
            out << "'/>\n";
        }
        if (s.draw_points)
            for (const auto& [x, y] : s.points)
                out << "<circle cx='" << fmt(sx(x)) << "' cy='" << fmt(sy(y)) << "' r='2' fill='"
                    << s.color << "'/>\n";
        if (!s.label.empty()) {
            out << "<rect x='" << kLeft + plot_w - 150 << "' y='" << legend_y - 9
                << "' width='10' height='10' fill='" << s.color << "'/>\n";
            out << "<text x='" << kLeft + plot_w - 136 << "' y='" << legend_y << "'>" << s.label
                << "</text>\n";
            legend_y += 16;
        }
    }
    out << "</svg>\n";
    return out.str();
}

// Row-major heatmap; diverging blue (negative) to red (positive) around zero.
inline std::string heatmap(const std::string& title, std::size_t rows, std::size_t cols,
                           const std::vector<double>& values) {
    using namespace detail;
    double max_abs = 1e-12;
    for (double v : values) max_abs = std::max(max_abs, std::fabs(v));
    const double plot_w = kWidth - kLeft - kRight, plot_h = kHeight - kTop - kBottom;
    const double cell_w = plot_w / static_cast<double>(cols);
    const double cell_h = plot_h / static_cast<double>(rows);

    std::ostringstream out;
    out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << kWidth << "' height='" << kHeight
        << "' font-family='sans-serif' font-size='12'>\n";
    out << "<text x='" << kWidth / 2 << "' y='20' text-anchor='middle' font-size='14'>" << title
        << "</text>\n";
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) {
            const double v = values[r * cols + c] / max_abs; // in [-1,1]
            const int red = v > 0 ? 255 : static_cast<int>(255 * (1.0 + v));
            const int blue = v < 0 ? 255 : static_cast<int>(255 * (1.0 - v));
            const int green = static_cast<int>(255 * (1.0 - std::fabs(v)));
            char color[16];
            std::snprintf(color, sizeof(color), "#%02x%02x%02x", red, green, blue);
            out << "<rect x='" << fmt(kLeft + static_cast<double>(c) * cell_w) << "' y='"
                << fmt(kTop + static_cast<double>(r) * cell_h) << "' width='" << fmt(cell_w)
                << "' height='" << fmt(cell_h) << "' fill='" << color
                << "' stroke='#ffffff' stroke-width='0.5'/>\n";
        }
    out << "</svg>\n";
    return out.str();
}

} // namespace avfbel::svg
