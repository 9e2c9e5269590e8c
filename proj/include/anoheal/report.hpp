#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "anoheal/image.hpp"

namespace anoheal {

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

struct ChartSeries {
    std::string name;
    std::vector<std::pair<double, double>> points;
};

struct ChartSpec {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<ChartSeries> series;
};

// Minimal static line chart, one polyline per series.
void write_svg_chart(const std::filesystem::path& path, const ChartSpec& spec);

// 8-bit grayscale dump of a [0,1] image (binary PGM).
void write_pgm(const std::filesystem::path& path, const Image& img);

} // namespace anoheal
