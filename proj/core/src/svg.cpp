#include "qipf/svg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "qipf/error.hpp"

namespace qipf::io {

std::string palette_color(std::size_t i) {
    static constexpr std::array<const char*, 10> colors = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                                           "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
    return colors[i % colors.size()];
}

std::vector<double> min_max_normalize(std::span<const double> v) {
    std::vector<double> out(v.begin(), v.end());
    if (out.empty()) return out;
    const auto [lo, hi] = std::minmax_element(out.begin(), out.end());
    const double a = *lo;
    const double range = *hi - *lo;
    for (double& x : out) x = range > 0.0 ? (x - a) / range : 0.0;
    return out;
}

namespace {

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

struct Frame {
    double x0, x1, y0, y1;
    double left = 60, right = 20, top = 36, bottom = 48;
    double w = 0;
    double h = 0;

    double px(double x) const { return left + (x - x0) / (x1 - x0) * (w - left - right); }
    double py(double y) const { return h - bottom - (y - y0) / (y1 - y0) * (h - top - bottom); }
};

}  // namespace

std::string render_svg(const Chart& chart) {
    double x0 = std::numeric_limits<double>::infinity();
    double x1 = -x0;
    double y0 = x0;
    double y1 = -x0;
    auto extend = [&](std::span<const double> xs, std::span<const double> ys) {
        for (double v : xs) if (std::isfinite(v)) { x0 = std::min(x0, v); x1 = std::max(x1, v); }
        for (double v : ys) if (std::isfinite(v)) { y0 = std::min(y0, v); y1 = std::max(y1, v); }
    };
    for (const auto& l : chart.lines) {
        if (l.x.size() != l.y.size()) throw InvalidArgument("line series x and y differ in length");
        extend(l.x, l.y);
    }
    for (const auto& b : chart.bands) {
        if (b.x.size() != b.lower.size() || b.x.size() != b.upper.size()) throw InvalidArgument("band series lengths differ");
        extend(b.x, b.lower);
        extend(b.x, b.upper);
    }
    if (!(x1 >= x0) || !(y1 >= y0)) throw InvalidArgument("chart has no finite data");
    if (x1 == x0) { x0 -= 0.5; x1 += 0.5; }
    if (y1 == y0) { y0 -= 0.5; y1 += 0.5; }

    Frame f{x0, x1, y0, y1};
    f.w = chart.width;
    f.h = chart.height;

    std::string s;
    s += fmt::format("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    s += fmt::format("<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{:.0f}\" height=\"{:.0f}\" viewBox=\"0 0 {:.0f} {:.0f}\">\n",
                     f.w, f.h, f.w, f.h);
    s += fmt::format("<rect x=\"0\" y=\"0\" width=\"{:.0f}\" height=\"{:.0f}\" fill=\"white\"/>\n", f.w, f.h);
    if (!chart.title.empty()) {
        s += fmt::format("<text x=\"{:.2f}\" y=\"22\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\">{}</text>\n",
                         f.w / 2, escape(chart.title));
    }

    // axes with five ticks each
    const double ax_l = f.left;
    const double ax_r = f.w - f.right;
    const double ax_t = f.top;
    const double ax_b = f.h - f.bottom;
    s += fmt::format("<g stroke=\"black\" stroke-width=\"1\" fill=\"none\">\n");
    s += fmt::format("<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\"/>\n", ax_l, ax_b, ax_r, ax_b);
    s += fmt::format("<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\"/>\n", ax_l, ax_b, ax_l, ax_t);
    s += "</g>\n<g font-family=\"sans-serif\" font-size=\"10\">\n";
    for (int i = 0; i <= 4; ++i) {
        const double xv = x0 + (x1 - x0) * i / 4.0;
        const double yv = y0 + (y1 - y0) * i / 4.0;
        s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">{:.3g}</text>\n", f.px(xv), ax_b + 14, xv);
        s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"end\">{:.3g}</text>\n", ax_l - 4, f.py(yv) + 3, yv);
    }
    if (!chart.x_label.empty()) {
        s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">{}</text>\n", (ax_l + ax_r) / 2, f.h - 10,
                         escape(chart.x_label));
    }
    if (!chart.y_label.empty()) {
        s += fmt::format("<text x=\"14\" y=\"{:.2f}\" text-anchor=\"middle\" transform=\"rotate(-90 14 {:.2f})\">{}</text>\n",
                         (ax_t + ax_b) / 2, (ax_t + ax_b) / 2, escape(chart.y_label));
    }
    s += "</g>\n";

    for (const auto& b : chart.bands) {
        std::string pts;
        for (std::size_t i = 0; i < b.x.size(); ++i) pts += fmt::format("{:.2f},{:.2f} ", f.px(b.x[i]), f.py(b.upper[i]));
        for (std::size_t i = b.x.size(); i-- > 0;) pts += fmt::format("{:.2f},{:.2f} ", f.px(b.x[i]), f.py(b.lower[i]));
        if (!pts.empty()) pts.pop_back();
        s += fmt::format("<polygon points=\"{}\" fill=\"{}\" fill-opacity=\"{:.2f}\" stroke=\"none\"/>\n", pts, b.color, b.opacity);
    }
    for (const auto& l : chart.lines) {
        std::string pts;
        for (std::size_t i = 0; i < l.x.size(); ++i) {
            if (!std::isfinite(l.x[i]) || !std::isfinite(l.y[i])) continue;
            pts += fmt::format("{:.2f},{:.2f} ", f.px(l.x[i]), f.py(l.y[i]));
        }
        if (!pts.empty()) pts.pop_back();
        s += fmt::format("<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"{}/>\n", pts, l.color,
                         l.dashed ? " stroke-dasharray=\"6 4\"" : "");
    }

    // legend
    double ly = ax_t + 6;
    for (const auto& l : chart.lines) {
        if (l.label.empty()) continue;
        s += fmt::format("<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"{}\" stroke-width=\"2\"{}/>\n",
                         ax_r - 90, ly, ax_r - 70, ly, l.color, l.dashed ? " stroke-dasharray=\"6 4\"" : "");
        s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" font-family=\"sans-serif\" font-size=\"10\">{}</text>\n", ax_r - 66,
                         ly + 3, escape(l.label));
        ly += 14;
    }
    s += "</svg>\n";
    return s;
}

}  // namespace qipf::io
