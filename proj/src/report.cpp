#include "anoheal/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "anoheal/errors.hpp"

namespace anoheal {

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write csv: " + path.string());
    for (size_t i = 0; i < header.size(); ++i) {
        out << header[i] << (i + 1 < header.size() ? "," : "\n");
    }
    for (const auto& row : rows) {
        for (size_t i = 0; i < row.size(); ++i) {
            out << row[i] << (i + 1 < row.size() ? "," : "\n");
        }
    }
}

namespace {

std::string fmt(double v) {
    std::ostringstream ss;
    ss << std::setprecision(4) << v;
    return ss.str();
}

const char* kSeriesColors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd"};

} // namespace

void write_svg_chart(const std::filesystem::path& path, const ChartSpec& spec) {
    constexpr int width = 640, height = 420;
    constexpr int ml = 70, mr = 20, mt = 40, mb = 55;
    const int plot_w = width - ml - mr;
    const int plot_h = height - mt - mb;

    double x_min = 0, x_max = 1, y_min = 0, y_max = 1;
    bool first = true;
    for (const auto& s : spec.series) {
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
    }
    if (x_max - x_min < 1e-12) x_max = x_min + 1.0;
    const double y_pad = std::max(1e-12, (y_max - y_min) * 0.08);
    y_min -= y_pad;
    y_max += y_pad;

    auto px = [&](double x) { return ml + (x - x_min) / (x_max - x_min) * plot_w; };
    auto py = [&](double y) { return mt + (1.0 - (y - y_min) / (y_max - y_min)) * plot_h; };

    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write svg: " + path.string());
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
        << spec.title << "</text>\n";

    // Axes with 5 ticks per side.
    out << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << plot_w << "\" height=\""
        << plot_h << "\" fill=\"none\" stroke=\"#444\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double xv = x_min + (x_max - x_min) * i / 5.0;
        const double yv = y_min + (y_max - y_min) * i / 5.0;
        out << "<line x1=\"" << px(xv) << "\" y1=\"" << mt + plot_h << "\" x2=\"" << px(xv)
            << "\" y2=\"" << mt + plot_h + 5 << "\" stroke=\"#444\"/>\n";
        out << "<text x=\"" << px(xv) << "\" y=\"" << mt + plot_h + 20
            << "\" text-anchor=\"middle\">" << fmt(xv) << "</text>\n";
        out << "<line x1=\"" << ml - 5 << "\" y1=\"" << py(yv) << "\" x2=\"" << ml << "\" y2=\""
            << py(yv) << "\" stroke=\"#444\"/>\n";
        out << "<text x=\"" << ml - 9 << "\" y=\"" << py(yv) + 4
            << "\" text-anchor=\"end\">" << fmt(yv) << "</text>\n";
    }
    out << "<text x=\"" << ml + plot_w / 2 << "\" y=\"" << height - 12
        << "\" text-anchor=\"middle\">" << spec.x_label << "</text>\n";
    out << "<text x=\"18\" y=\"" << mt + plot_h / 2
        << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " << mt + plot_h / 2 << ")\">"
        << spec.y_label << "</text>\n";

    for (size_t si = 0; si < spec.series.size(); ++si) {
        const auto& s = spec.series[si];
        const char* color = kSeriesColors[si % 5];
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
        for (const auto& [x, y] : s.points) out << px(x) << "," << py(y) << " ";
        out << "\"/>\n";
        for (const auto& [x, y] : s.points) {
            out << "<circle cx=\"" << px(x) << "\" cy=\"" << py(y) << "\" r=\"3\" fill=\""
                << color << "\"/>\n";
        }
        // Legend entry.
        const int ly = mt + 14 + static_cast<int>(si) * 18;
        out << "<line x1=\"" << ml + 10 << "\" y1=\"" << ly << "\" x2=\"" << ml + 34 << "\" y2=\""
            << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        out << "<text x=\"" << ml + 40 << "\" y=\"" << ly + 4 << "\">" << s.name << "</text>\n";
    }
    out << "</svg>\n";
}

void write_pgm(const std::filesystem::path& path, const Image& img) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write pgm: " + path.string());
    out << "P5\n" << img.w << " " << img.h << "\n255\n";
    for (float v : img.v) {
        const int q = static_cast<int>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
        out.put(static_cast<char>(q));
    }
}

} // namespace anoheal
