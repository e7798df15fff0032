#pragma once

#include <string>
#include <vector>

namespace hcb {

struct SvgSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

// Minimal native line chart: polylines, axis ticks, legend. No external
// renderer; output is a pure function of the inputs.
std::string svg_line_chart(const std::string& title, const std::string& x_label,
                           const std::string& y_label, const std::vector<SvgSeries>& series,
                           bool log_x = false);

}  // namespace hcb
