#include "interact/figure.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "interact/effects.hpp"

namespace interact {

std::string_view to_string(FigureKind k) {
    switch (k) {
        case FigureKind::additivity: return "additivity";
        case FigureKind::log_risk: return "log_risk";
        case FigureKind::log_odds: return "log_odds";
    }
    return "?";
}

std::string_view to_string(YScale s) {
    switch (s) {
        case YScale::risk_per_100k: return "risk_per_100k";
        case YScale::log_probability: return "log_probability";
        case YScale::log_odds: return "log_odds";
    }
    return "?";
}

FigureKind parse_figure(std::string_view s) {
    if (s == "additivity") return FigureKind::additivity;
    if (s == "log_risk") return FigureKind::log_risk;
    if (s == "log_odds") return FigureKind::log_odds;
    throw std::invalid_argument("unknown figure '" + std::string(s) + "' (expected additivity, log_risk, log_odds)");
}

Figure make_figure(const ExposureTable& table, FigureKind kind, double scale, double level, CovarianceFlavor flavor) {
    ModelSpec spec;
    Figure fig;
    fig.kind = kind;
    double multiplier = 1.0;
    switch (kind) {
        case FigureKind::additivity:
            spec.link = Link::identity;
            fig.y_scale = YScale::risk_per_100k;
            multiplier = scale;
            fig.title = "Predicted risk by exposure (identity link)";
            fig.y_label = "Risk per " + std::to_string(static_cast<long long>(scale));
            break;
        case FigureKind::log_risk:
            spec.link = Link::log;
            fig.y_scale = YScale::log_probability;
            fig.title = "Predicted log probability (log link)";
            fig.y_label = "ln P(Y=1)";
            break;
        case FigureKind::log_odds:
            spec.link = Link::logit;
            fig.y_scale = YScale::log_odds;
            fig.title = "Predicted log odds (logit link)";
            fig.y_label = "ln odds(Y=1)";
            break;
    }
    const auto labels = table.labels().value_or(TableLabels{});
    fig.x_label = labels.x;

    const FitResult f = fit_or_throw(table, spec);
    const auto cells = link_scale_cells(f, flavor, level);
    for (int z = 0; z <= 1; ++z) {
        auto& s = fig.series[static_cast<std::size_t>(z)];
        s.z = z;
        s.label = labels.z + "=" + std::to_string(z);
        for (int x = 0; x <= 1; ++x) {
            const auto& w = cells[cell_index(x, z)];
            s.points.push_back({x, w.estimate * multiplier, w.ci_low * multiplier, w.ci_high * multiplier});
        }
    }
    return fig;
}

double slope_difference(const Figure& figure) {
    auto slope = [](const FigureSeries& s) { return s.points.at(1).estimate - s.points.at(0).estimate; };
    return slope(figure.series[1]) - slope(figure.series[0]);
}

void write_figure_csv(std::ostream& out, const Figure& figure) {
    out << "figure,y_scale,z,x,estimate,ci_low,ci_high\n";
    char buf[256];
    for (const auto& s : figure.series) {
        for (const auto& p : s.points) {
            std::snprintf(buf, sizeof buf, "%s,%s,%d,%d,%.17g,%.17g,%.17g\n",
                          std::string(to_string(figure.kind)).c_str(), std::string(to_string(figure.y_scale)).c_str(),
                          s.z, p.x, p.estimate, p.ci_low, p.ci_high);
            out << buf;
        }
    }
}

namespace {

std::string xml_escape(std::string_view s) {
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

// Roughly five round-numbered ticks covering [lo, hi].
std::vector<double> nice_ticks(double lo, double hi) {
    const double span = hi - lo;
    const double raw = span / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 2.5, 5.0, 10.0}) {
        step = m * mag;
        if (step >= raw) break;
    }
    std::vector<double> ticks;
    for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * span; t += step) ticks.push_back(t);
    return ticks;
}

}  // namespace

void write_figure_svg(std::ostream& out, const Figure& figure) {
    constexpr double width = 640, height = 420;
    constexpr double left = 80, right = 150, top = 50, bottom = 60;
    const double plot_w = width - left - right;
    const double plot_h = height - top - bottom;

    double lo = figure.series[0].points[0].ci_low;
    double hi = figure.series[0].points[0].ci_high;
    for (const auto& s : figure.series)
        for (const auto& p : s.points) {
            lo = std::min(lo, p.ci_low);
            hi = std::max(hi, p.ci_high);
        }
    if (hi - lo <= 0.0) {
        lo -= 1.0;
        hi += 1.0;
    }
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;

    auto px = [&](int x, int z) { return left + plot_w * (0.25 + 0.5 * x) + (z == 0 ? -8.0 : 8.0); };
    auto py = [&](double v) { return top + plot_h * (hi - v) / (hi - lo); };
    static constexpr std::array<const char*, 2> colors{"#1f77b4", "#d62728"};

    char buf[512];
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"no\"?>\n";
    std::snprintf(buf, sizeof buf,
                  "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"%.0f\" height=\"%.0f\" "
                  "viewBox=\"0 0 %.0f %.0f\" font-family=\"sans-serif\" font-size=\"12\">\n",
                  width, height, width, height);
    out << buf;
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">%s</text>\n",
                  width / 2, xml_escape(figure.title).c_str());
    out << buf;

    // axes
    std::snprintf(buf, sizeof buf,
                  "<g stroke=\"black\" fill=\"none\"><line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\"/>"
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\"/></g>\n",
                  left, top, left, top + plot_h, left, top + plot_h, left + plot_w, top + plot_h);
    out << buf;
    for (double t : nice_ticks(lo, hi)) {
        std::snprintf(buf, sizeof buf,
                      "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"#ccc\"/>"
                      "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\" dominant-baseline=\"middle\">%g</text>\n",
                      left, py(t), left + plot_w, py(t), left - 6, py(t), t);
        out << buf;
    }
    for (int x = 0; x <= 1; ++x) {
        std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">%s=%d</text>\n",
                      left + plot_w * (0.25 + 0.5 * x), top + plot_h + 20, xml_escape(figure.x_label).c_str(), x);
        out << buf;
    }
    std::snprintf(buf, sizeof buf,
                  "<text x=\"20\" y=\"%.1f\" text-anchor=\"middle\" transform=\"rotate(-90 20 %.1f)\">%s</text>\n",
                  top + plot_h / 2, top + plot_h / 2, xml_escape(figure.y_label).c_str());
    out << buf;

    for (std::size_t si = 0; si < figure.series.size(); ++si) {
        const auto& s = figure.series[si];
        const char* color = colors[si];
        std::snprintf(buf, sizeof buf, "<g stroke=\"%s\" fill=\"%s\">\n", color, color);
        out << buf;
        const auto& a = s.points[0];
        const auto& b = s.points[1];
        std::snprintf(buf, sizeof buf, "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke-width=\"2\"/>\n",
                      px(a.x, s.z), py(a.estimate), px(b.x, s.z), py(b.estimate));
        out << buf;
        for (const auto& p : s.points) {
            const double cx = px(p.x, s.z);
            std::snprintf(buf, sizeof buf,
                          "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\"/>"
                          "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\"/>"
                          "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\"/>"
                          "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"4\"/>\n",
                          cx, py(p.ci_low), cx, py(p.ci_high), cx - 5, py(p.ci_low), cx + 5, py(p.ci_low), cx - 5,
                          py(p.ci_high), cx + 5, py(p.ci_high), cx, py(p.estimate));
            out << buf;
        }
        out << "</g>\n";
        const double ly = top + 20.0 + 22.0 * static_cast<double>(si);
        std::snprintf(buf, sizeof buf,
                      "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"%s\" stroke-width=\"2\"/>"
                      "<text x=\"%.1f\" y=\"%.1f\" dominant-baseline=\"middle\">%s</text>\n",
                      left + plot_w + 15, ly, left + plot_w + 40, ly, color, left + plot_w + 46, ly,
                      xml_escape(s.label).c_str());
        out << buf;
    }
    out << "</svg>\n";
}

}  // namespace interact
