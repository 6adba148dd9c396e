#include "procwarm/report.hpp"

#include "procwarm/errors.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace procwarm::report {

namespace {

std::string fixed2(double v, bool with_sign = false) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), with_sign ? "%+.2f" : "%.2f", v);
    return buf;
}

const NamedRun* find_run(const std::vector<NamedRun>& runs, const std::string& name) {
    for (const NamedRun& r : runs) {
        if (r.name == name) return &r;
    }
    return nullptr;
}

}  // namespace

std::string comparison_table(const std::vector<NamedRun>& runs, const std::string& baseline_name) {
    if (runs.empty()) throw ValidationError("report needs at least one run");
    const NamedRun* base = find_run(runs, baseline_name);
    if (!base) throw ValidationError("baseline run not found: " + baseline_name);
    const double base_acc = base->metrics.final_accuracy("eval");

    std::size_t name_width = 4;
    for (const NamedRun& r : runs) name_width = std::max(name_width, r.name.size());

    std::ostringstream out;
    out << "run";
    out << std::string(name_width - 3, ' ') << "  final_acc  delta\n";
    for (const NamedRun& r : runs) {
        const double acc = r.metrics.final_accuracy("eval");
        out << r.name << std::string(name_width - r.name.size(), ' ');
        out << "  " << fixed2(acc * 100.0) << "     ";
        if (r.name == baseline_name) {
            out << "baseline";
        } else {
            out << fixed2((acc - base_acc) * 100.0, /*with_sign=*/true);
        }
        out << "\n";
    }
    return out.str();
}

std::string accuracy_curves_svg(const std::vector<NamedRun>& runs, const std::string& split) {
    if (runs.empty()) throw ValidationError("report needs at least one run");
    static const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                     "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
    constexpr int kW = 800, kH = 480, kMargin = 60;
    const int plot_w = kW - 2 * kMargin;
    const int plot_h = kH - 2 * kMargin;

    std::uint64_t max_step = 1;
    for (const NamedRun& r : runs) {
        for (const auto& rec : r.metrics.records) {
            if (rec.split == split) max_step = std::max(max_step, rec.step);
        }
    }

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
        << "\" viewBox=\"0 0 " << kW << " " << kH << "\">\n";
    out << "<rect width=\"" << kW << "\" height=\"" << kH << "\" fill=\"white\"/>\n";
    out << "<line x1=\"" << kMargin << "\" y1=\"" << kH - kMargin << "\" x2=\"" << kW - kMargin
        << "\" y2=\"" << kH - kMargin << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << kMargin << "\" y1=\"" << kMargin << "\" x2=\"" << kMargin << "\" y2=\""
        << kH - kMargin << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << kW / 2 << "\" y=\"" << kH - 16
        << "\" text-anchor=\"middle\" font-size=\"14\">step</text>\n";
    out << "<text x=\"18\" y=\"" << kH / 2 << "\" text-anchor=\"middle\" font-size=\"14\" "
        << "transform=\"rotate(-90 18 " << kH / 2 << ")\">" << split << " accuracy</text>\n";
    for (int tick = 0; tick <= 4; ++tick) {
        const double frac = tick / 4.0;
        const int y = kH - kMargin - static_cast<int>(frac * plot_h);
        out << "<text x=\"" << kMargin - 8 << "\" y=\"" << y + 4
            << "\" text-anchor=\"end\" font-size=\"12\">" << fixed2(frac) << "</text>\n";
    }
    out << "<text x=\"" << kW - kMargin << "\" y=\"" << kH - kMargin + 20
        << "\" text-anchor=\"end\" font-size=\"12\">" << max_step << "</text>\n";

    int color = 0;
    int legend_y = kMargin;
    for (const NamedRun& r : runs) {
        const char* stroke = kPalette[color % 8];
        ++color;
        out << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"2\" points=\"";
        bool any = false;
        for (const auto& rec : r.metrics.records) {
            if (rec.split != split) continue;
            const double x = kMargin + static_cast<double>(rec.step) / max_step * plot_w;
            const double y = kH - kMargin - rec.accuracy * plot_h;
            out << fixed2(x) << "," << fixed2(y) << " ";
            any = true;
        }
        out << "\"/>\n";
        out << "<text x=\"" << kW - kMargin - 4 << "\" y=\"" << legend_y
            << "\" text-anchor=\"end\" font-size=\"12\" fill=\"" << stroke << "\">" << r.name
            << (any ? "" : " (no data)") << "</text>\n";
        legend_y += 18;
    }
    out << "</svg>\n";
    return out.str();
}

}  // namespace procwarm::report
