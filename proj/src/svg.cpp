#include "hcb/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace hcb {

namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 440.0;
constexpr double kMarginLeft = 70.0;
constexpr double kMarginRight = 140.0;
constexpr double kMarginTop = 40.0;
constexpr double kMarginBottom = 50.0;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                          "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

}  // namespace

std::string svg_line_chart(const std::string& title, const std::string& x_label,
                           const std::string& y_label, const std::vector<SvgSeries>& series,
                           bool log_x) {
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = std::numeric_limits<double>::infinity(), ymax = -ymin;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            const double xv = log_x ? std::log10(std::max(s.x[i], 1e-300)) : s.x[i];
            xmin = std::min(xmin, xv);
            xmax = std::max(xmax, xv);
            ymin = std::min(ymin, s.y[i]);
            ymax = std::max(ymax, s.y[i]);
        }
    if (!(xmax > xmin)) xmax = xmin + 1.0;
    if (!(ymax > ymin)) ymax = ymin + 1.0;

    const double plot_w = kWidth - kMarginLeft - kMarginRight;
    const double plot_h = kHeight - kMarginTop - kMarginBottom;
    auto px = [&](double xv) {
        if (log_x) xv = std::log10(std::max(xv, 1e-300));
        return kMarginLeft + (xv - xmin) / (xmax - xmin) * plot_w;
    };
    auto py = [&](double yv) { return kMarginTop + (ymax - yv) / (ymax - ymin) * plot_h; };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
       << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\" "
          "font-family=\"sans-serif\">" << title << "</text>\n";

    // Frame
    os << "<rect x=\"" << kMarginLeft << "\" y=\"" << kMarginTop << "\" width=\"" << plot_w
       << "\" height=\"" << plot_h << "\" fill=\"none\" stroke=\"black\"/>\n";

    // Ticks: 5 per axis
    for (int i = 0; i <= 4; ++i) {
        const double fx = xmin + (xmax - xmin) * i / 4.0;
        const double fy = ymin + (ymax - ymin) * i / 4.0;
        const double tx = kMarginLeft + plot_w * i / 4.0;
        const double ty = kMarginTop + plot_h - plot_h * i / 4.0;
        os << "<line x1=\"" << tx << "\" y1=\"" << kMarginTop + plot_h << "\" x2=\"" << tx
           << "\" y2=\"" << kMarginTop + plot_h + 5 << "\" stroke=\"black\"/>\n";
        os << "<text x=\"" << tx << "\" y=\"" << kMarginTop + plot_h + 20
           << "\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\">"
           << (log_x ? "1e" + fmt(fx) : fmt(fx)) << "</text>\n";
        os << "<line x1=\"" << kMarginLeft - 5 << "\" y1=\"" << ty << "\" x2=\"" << kMarginLeft
           << "\" y2=\"" << ty << "\" stroke=\"black\"/>\n";
        os << "<text x=\"" << kMarginLeft - 8 << "\" y=\"" << ty + 4
           << "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\">" << fmt(fy)
           << "</text>\n";
    }
    os << "<text x=\"" << kMarginLeft + plot_w / 2 << "\" y=\"" << kHeight - 12
       << "\" text-anchor=\"middle\" font-size=\"12\" font-family=\"sans-serif\">" << x_label
       << "</text>\n";
    os << "<text x=\"16\" y=\"" << kMarginTop + plot_h / 2
       << "\" text-anchor=\"middle\" font-size=\"12\" font-family=\"sans-serif\" transform=\"rotate(-90 16 "
       << kMarginTop + plot_h / 2 << ")\">" << y_label << "</text>\n";

    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const char* color = kPalette[k % 8];
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (i) os << ' ';
            os << fmt(px(s.x[i])) << ',' << fmt(py(s.y[i]));
        }
        os << "\"/>\n";
        const double ly = kMarginTop + 14 + 16.0 * static_cast<double>(k);
        os << "<line x1=\"" << kWidth - kMarginRight + 10 << "\" y1=\"" << ly << "\" x2=\""
           << kWidth - kMarginRight + 34 << "\" y2=\"" << ly << "\" stroke=\"" << color
           << "\" stroke-width=\"2\"/>\n";
        os << "<text x=\"" << kWidth - kMarginRight + 40 << "\" y=\"" << ly + 4
           << "\" font-size=\"11\" font-family=\"sans-serif\">" << s.label << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace hcb
