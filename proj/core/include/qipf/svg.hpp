#pragma once

#include <span>
#include <string>
#include <vector>

namespace qipf::io {

struct LineSeries {
    std::vector<double> x;
    std::vector<double> y;
    std::string color = "#1f77b4";
    bool dashed = false;
    std::string label;
};

/// Shaded region between `lower` and `upper`.
struct BandSeries {
    std::vector<double> x;
    std::vector<double> lower;
    std::vector<double> upper;
    std::string color = "#1f77b4";
    double opacity = 0.25;
};

struct Chart {
    std::string title;
    std::string x_label;
    std::string y_label;
    double width = 720;
    double height = 420;
    std::vector<BandSeries> bands;
    std::vector<LineSeries> lines;
};

/// Static SVG 1.1 document with axes, bands, polylines and a legend.
std::string render_svg(const Chart& chart);

/// Color for the i-th series from a fixed palette.
std::string palette_color(std::size_t i);

/// Rescales to [0, 1]; a constant series maps to zeros.
std::vector<double> min_max_normalize(std::span<const double> v);

}  // namespace qipf::io
