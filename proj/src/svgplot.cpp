#include "dynrec/svgplot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace dynrec {

namespace {

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                          "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    void include(double v) {
        if (std::isfinite(v)) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    void pad() {
        if (!(lo < hi)) {
            lo -= 1.0;
            hi += 1.0;
        } else {
            const double m = 0.05 * (hi - lo);
            lo -= m;
            hi += m;
        }
    }
};

std::vector<double> ticks(double lo, double hi, int target = 5) {
    const double span = hi - lo;
    const double raw = span / target;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double mult : {1.0, 2.0, 5.0, 10.0})
        if (mag * mult >= raw) {
            step = mag * mult;
            break;
        }
    std::vector<double> out;
    for (double t = std::ceil(lo / step) * step; t <= hi + 1e-12 * span; t += step)
        out.push_back(t);
    return out;
}

}  // namespace

void write_line_plot(const std::string& path, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     const std::vector<PlotSeries>& series) {
    const int width = 720, height = 480;
    const int ml = 70, mr = 20, mt = 40, mb = 50;
    Range rx, ry;
    for (const auto& s : series) {
        for (double v : s.x) rx.include(v);
        for (double v : s.y) ry.include(v);
    }
    if (!std::isfinite(rx.lo) || !std::isfinite(ry.lo)) {
        rx = {0.0, 1.0};
        ry = {0.0, 1.0};
    }
    rx.pad();
    ry.pad();
    const auto sx = [&](double v) {
        return ml + (v - rx.lo) / (rx.hi - rx.lo) * (width - ml - mr);
    };
    const auto sy = [&](double v) {
        return height - mb - (v - ry.lo) / (ry.hi - ry.lo) * (height - mt - mb);
    };

    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write plot: " + path);
    f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    f << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    f << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\" "
         "font-family=\"sans-serif\">" << title << "</text>\n";

    for (double t : ticks(rx.lo, rx.hi)) {
        f << "<line x1=\"" << fmt(sx(t)) << "\" y1=\"" << mt << "\" x2=\"" << fmt(sx(t))
          << "\" y2=\"" << height - mb << "\" stroke=\"#dddddd\"/>\n";
        f << "<text x=\"" << fmt(sx(t)) << "\" y=\"" << height - mb + 18
          << "\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\">" << fmt(t)
          << "</text>\n";
    }
    for (double t : ticks(ry.lo, ry.hi)) {
        f << "<line x1=\"" << ml << "\" y1=\"" << fmt(sy(t)) << "\" x2=\"" << width - mr
          << "\" y2=\"" << fmt(sy(t)) << "\" stroke=\"#dddddd\"/>\n";
        f << "<text x=\"" << ml - 8 << "\" y=\"" << fmt(sy(t) + 4)
          << "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\">" << fmt(t)
          << "</text>\n";
    }
    f << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << width - ml - mr
      << "\" height=\"" << height - mt - mb << "\" fill=\"none\" stroke=\"#333333\"/>\n";
    f << "<text x=\"" << (ml + width - mr) / 2 << "\" y=\"" << height - 12
      << "\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\">" << x_label
      << "</text>\n";
    f << "<text x=\"18\" y=\"" << (mt + height - mb) / 2
      << "\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\" "
         "transform=\"rotate(-90 18 " << (mt + height - mb) / 2 << ")\">" << y_label
      << "</text>\n";

    for (size_t si = 0; si < series.size(); si++) {
        const auto& s = series[si];
        const char* color = kPalette[si % 8];
        f << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (size_t i = 0; i < s.x.size() && i < s.y.size(); i++) {
            if (i) f << ' ';
            f << fmt(sx(s.x[i])) << ',' << fmt(sy(s.y[i]));
        }
        f << "\"/>\n";
        const int ly = mt + 16 + static_cast<int>(si) * 16;
        f << "<line x1=\"" << ml + 8 << "\" y1=\"" << ly - 4 << "\" x2=\"" << ml + 28
          << "\" y2=\"" << ly - 4 << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        f << "<text x=\"" << ml + 34 << "\" y=\"" << ly
          << "\" font-size=\"12\" font-family=\"sans-serif\">" << s.label << "</text>\n";
    }
    f << "</svg>\n";
}

void write_tsv(const std::string& path, const std::vector<std::string>& columns,
               const std::vector<std::vector<double>>& rows) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write data file: " + path);
    for (size_t i = 0; i < columns.size(); i++) f << (i ? "\t" : "") << columns[i];
    f << '\n';
    for (const auto& row : rows) {
        for (size_t i = 0; i < row.size(); i++) {
            if (i) f << '\t';
            if (std::isnan(row[i]))
                f << "nan";
            else
                f << fmt(row[i]);
        }
        f << '\n';
    }
}

}  // namespace dynrec
