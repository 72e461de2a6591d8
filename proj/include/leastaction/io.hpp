#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "leastaction/errors.hpp"
#include "leastaction/optimizer.hpp"
#include "leastaction/path.hpp"

namespace leastaction {

// Shortest round-trippable decimal representation; used for every emitted
// number so reruns are byte-identical.
inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    // prefer the shorter %.15g / %.16g form when it round-trips
    for (int precision = 15; precision <= 16; ++precision) {
        char short_buf[40];
        std::snprintf(short_buf, sizeof(short_buf), "%.*g", precision, v);
        double parsed = 0.0;
        std::sscanf(short_buf, "%lf", &parsed);
        if (parsed == v) return short_buf;
    }
    return buf;
}

inline void write_path_csv(std::ostream& out, const Path& path) {
    out << "t";
    for (std::size_t k = 0; k < path.dim(); ++k) out << ",coord_" << k;
    out << "\n";
    for (std::size_t i = 0; i < path.points(); ++i) {
        out << fmt_double(path.time_at(i));
        for (std::size_t k = 0; k < path.dim(); ++k) out << "," << fmt_double(path.coords(i, k));
        out << "\n";
    }
}

inline void write_history_csv(std::ostream& out, const OptimizeHistory& history) {
    out << "step,S,T,V,mse,grad_norm\n";
    for (const StepRecord& r : history.records) {
        out << r.step << "," << fmt_double(r.S) << "," << fmt_double(r.t_sum) << ","
            << fmt_double(r.v_sum) << ",";
        if (r.mse) out << fmt_double(*r.mse);
        out << "," << fmt_double(r.grad_norm) << "\n";
    }
}

// --------------------------------------------------------------------------
// Minimal SVG emission: polyline charts for optimization traces and planar
// path overlays. No plotting dependency, fixed viewport, deterministic text.
// --------------------------------------------------------------------------

namespace detail {

struct SvgRange {
    double lo = 0.0, hi = 1.0;
    void expand(double v) {
        if (v < lo) lo = v;
        if (v > hi) hi = v;
    }
    double span() const { return hi > lo ? hi - lo : 1.0; }
};

inline std::string svg_polyline(const std::vector<double>& xs, const std::vector<double>& ys,
                                const SvgRange& xr, const SvgRange& yr, const char* color,
                                int width, int height, int margin) {
    std::string points;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double px = margin + (xs[i] - xr.lo) / xr.span() * (width - 2 * margin);
        const double py = height - margin - (ys[i] - yr.lo) / yr.span() * (height - 2 * margin);
        points += fmt_double(px) + "," + fmt_double(py) + " ";
    }
    return "<polyline fill=\"none\" stroke=\"" + std::string(color) +
           "\" stroke-width=\"1.5\" points=\"" + points + "\"/>\n";
}

}  // namespace detail

// One chart per labelled series against a shared horizontal axis.
inline void write_series_svg(std::ostream& out,
                             const std::vector<std::pair<std::string, std::vector<double>>>& series) {
    const int width = 640, height = 360, margin = 40;
    detail::SvgRange xr{0.0, 1.0}, yr{0.0, 0.0};
    std::size_t longest = 0;
    for (const auto& [label, ys] : series) {
        longest = std::max(longest, ys.size());
        for (double y : ys) yr.expand(y);
    }
    xr.hi = longest > 1 ? static_cast<double>(longest - 1) : 1.0;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    static const char* palette[] = {"#4363d8", "#3cb44b", "#e6194b", "#f58231", "#911eb4"};
    int color_index = 0;
    int label_y = 16;
    for (const auto& [label, ys] : series) {
        std::vector<double> xs(ys.size());
        for (std::size_t i = 0; i < ys.size(); ++i) xs[i] = static_cast<double>(i);
        const char* color = palette[color_index % 5];
        out << detail::svg_polyline(xs, ys, xr, yr, color, width, height, margin);
        out << "<text x=\"" << (width - margin - 150) << "\" y=\"" << label_y
            << "\" fill=\"" << color << "\" font-size=\"12\">" << label << "</text>\n";
        label_y += 14;
        ++color_index;
    }
    out << "</svg>\n";
}

// Overlay of planar body tracks (pairs of columns) or x-vs-t for 1-D paths,
// one color per named path.
inline void write_path_overlay_svg(std::ostream& out,
                                   const std::vector<std::pair<std::string, const Path*>>& paths) {
    const int width = 480, height = 480, margin = 30;
    detail::SvgRange xr, yr;
    bool first = true;
    auto track = [&](const Path& p, std::size_t cx, std::size_t cy, std::vector<double>& xs,
                     std::vector<double>& ys) {
        xs.clear();
        ys.clear();
        for (std::size_t i = 0; i < p.points(); ++i) {
            const double x = p.dim() == 1 ? p.time_at(i) : p.coords(i, cx);
            const double y = p.dim() == 1 ? p.coords(i, cx) : p.coords(i, cy);
            xs.push_back(x);
            ys.push_back(y);
            if (first) {
                xr = detail::SvgRange{x, x};
                yr = detail::SvgRange{y, y};
                first = false;
            } else {
                xr.expand(x);
                yr.expand(y);
            }
        }
    };
    // first pass to get ranges, second to draw
    std::vector<double> xs, ys;
    for (const auto& [label, p] : paths) {
        const std::size_t tracks = p->dim() == 1 ? 1 : p->dim() / 2;
        for (std::size_t b = 0; b < tracks; ++b) track(*p, 2 * b, 2 * b + 1, xs, ys);
    }
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    static const char* palette[] = {"#911eb4", "#e6c700", "#3cb44b", "#4363d8"};
    int color_index = 0;
    int label_y = 16;
    for (const auto& [label, p] : paths) {
        const char* color = palette[color_index % 4];
        const std::size_t tracks = p->dim() == 1 ? 1 : p->dim() / 2;
        for (std::size_t b = 0; b < tracks; ++b) {
            track(*p, 2 * b, 2 * b + 1, xs, ys);
            out << detail::svg_polyline(xs, ys, xr, yr, color, width, height, margin);
        }
        out << "<text x=\"" << margin << "\" y=\"" << label_y << "\" fill=\"" << color
            << "\" font-size=\"12\">" << label << "</text>\n";
        label_y += 14;
        ++color_index;
    }
    out << "</svg>\n";
}

// ASCII PGM, one gray value per matrix cell; values must be pre-scaled to
// [0, 255].
inline void write_pgm(std::ostream& out, const std::vector<int>& gray, std::size_t rows,
                      std::size_t cols) {
    out << "P2\n" << cols << " " << rows << "\n255\n";
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            out << gray[i * cols + j] << (j + 1 == cols ? "" : " ");
        }
        out << "\n";
    }
}

inline void write_text_file(const std::filesystem::path& file, const std::string& content) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw ConfigError("cannot open for writing: " + file.string());
    out << content;
}

}  // namespace leastaction
