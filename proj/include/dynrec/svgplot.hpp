#pragma once

#include <string>
#include <vector>

namespace dynrec {

/// Minimal deterministic SVG line charts; byte-identical output for
/// identical inputs.
struct PlotSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

void write_line_plot(const std::string& path, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     const std::vector<PlotSeries>& series);

/// Tab-separated data file with a header row; one x column per series block.
void write_tsv(const std::string& path, const std::vector<std::string>& columns,
               const std::vector<std::vector<double>>& rows);

}  // namespace dynrec
