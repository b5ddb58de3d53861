#pragma once

// Minimal standalone SVG line charts. Output bytes are a pure function of
// the input series, so reruns of the same experiment produce identical files.

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>
#include <vector>

#include "gwcast/timeseries.hpp"  // format_double

namespace gwcast {

struct SvgSeries {
    std::string label;
    std::string color;
    std::vector<double> y;
};

inline void write_line_chart_svg(std::ostream& out, const std::string& title,
                                 const std::string& x_label, const std::string& y_label,
                                 const std::vector<SvgSeries>& series) {
    const double width = 960.0, height = 440.0;
    const double ml = 70.0, mr = 20.0, mt = 40.0, mb = 50.0;
    const double plot_w = width - ml - mr;
    const double plot_h = height - mt - mb;

    std::size_t n = 0;
    double y_min = 0.0, y_max = 1.0;
    bool any = false;
    for (const auto& s : series) {
        n = std::max(n, s.y.size());
        for (double v : s.y) {
            if (!any) {
                y_min = y_max = v;
                any = true;
            } else {
                y_min = std::min(y_min, v);
                y_max = std::max(y_max, v);
            }
        }
    }
    if (!any || y_max == y_min) {
        y_min -= 1.0;
        y_max += 1.0;
    }
    const double pad = 0.05 * (y_max - y_min);
    y_min -= pad;
    y_max += pad;

    const auto sx = [&](std::size_t i) {
        return ml + (n > 1 ? plot_w * static_cast<double>(i) / static_cast<double>(n - 1) : 0.0);
    };
    const auto sy = [&](double v) { return mt + plot_h * (1.0 - (v - y_min) / (y_max - y_min)); };

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << format_double(width)
        << "\" height=\"" << format_double(height) << "\" viewBox=\"0 0 "
        << format_double(width) << " " << format_double(height) << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << format_double(width / 2)
        << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">"
        << title << "</text>\n";
    out << "<rect x=\"" << format_double(ml) << "\" y=\"" << format_double(mt) << "\" width=\""
        << format_double(plot_w) << "\" height=\"" << format_double(plot_h)
        << "\" fill=\"none\" stroke=\"black\"/>\n";

    // y-axis end labels
    out << "<text x=\"" << format_double(ml - 8) << "\" y=\"" << format_double(mt + 5)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
        << format_double(y_max) << "</text>\n";
    out << "<text x=\"" << format_double(ml - 8) << "\" y=\"" << format_double(mt + plot_h)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
        << format_double(y_min) << "</text>\n";
    out << "<text x=\"" << format_double(ml + plot_w / 2) << "\" y=\""
        << format_double(height - 12)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << x_label
        << "</text>\n";
    out << "<text x=\"18\" y=\"" << format_double(mt + plot_h / 2)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
           "transform=\"rotate(-90 18 "
        << format_double(mt + plot_h / 2) << ")\">" << y_label << "</text>\n";

    for (const auto& s : series) {
        if (s.y.empty()) continue;
        out << "<polyline fill=\"none\" stroke=\"" << s.color
            << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.y.size(); ++i) {
            if (i) out << ' ';
            out << format_double(sx(i)) << ',' << format_double(sy(s.y[i]));
        }
        out << "\"/>\n";
    }

    // legend, top-left inside the plot
    double ly = mt + 16.0;
    for (const auto& s : series) {
        out << "<line x1=\"" << format_double(ml + 10) << "\" y1=\"" << format_double(ly - 4)
            << "\" x2=\"" << format_double(ml + 34) << "\" y2=\"" << format_double(ly - 4)
            << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"/>\n";
        out << "<text x=\"" << format_double(ml + 40) << "\" y=\"" << format_double(ly)
            << "\" font-family=\"sans-serif\" font-size=\"12\">" << s.label << "</text>\n";
        ly += 16.0;
    }
    out << "</svg>\n";
}

}  // namespace gwcast
