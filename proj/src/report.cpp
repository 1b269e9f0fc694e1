#include "msjlab/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace msjlab::report {

namespace {

constexpr double kPanelWidth = 520.0;
constexpr double kPanelHeight = 400.0;
constexpr double kMarginLeft = 80.0;
constexpr double kMarginRight = 20.0;
constexpr double kMarginTop = 40.0;
constexpr double kMarginBottom = 60.0;

std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", x);
    return buf;
}

std::string tick_label(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", x);
    return buf;
}

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

struct Axis {
    bool log = false;
    double lo = 0.0;
    double hi = 1.0;

    [[nodiscard]] double unit(double v) const {
        const double a = log ? std::log10(v) : v;
        return (a - lo) / (hi - lo);
    }

    [[nodiscard]] std::vector<double> ticks() const {
        std::vector<double> t;
        if (log) {
            for (double e = std::ceil(lo - 1e-9); e <= hi + 1e-9; e += 1.0) t.push_back(std::pow(10.0, e));
            return t;
        }
        for (int i = 0; i <= 5; ++i) t.push_back(lo + (hi - lo) * i / 5.0);
        return t;
    }
};

Axis make_axis(const std::vector<double>& values, bool log) {
    Axis ax;
    ax.log = log;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (double v : values) {
        if (!std::isfinite(v) || (log && !(v > 0.0))) continue;
        const double a = log ? std::log10(v) : v;
        lo = std::min(lo, a);
        hi = std::max(hi, a);
    }
    if (!std::isfinite(lo)) {
        lo = 0.0;
        hi = 1.0;
    }
    if (hi - lo < 1e-12) {
        lo -= 0.5;
        hi += 0.5;
    }
    if (log) {
        lo = std::floor(lo);
        hi = std::ceil(hi);
    } else {
        const double pad = 0.05 * (hi - lo);
        lo -= pad;
        hi += pad;
    }
    ax.lo = lo;
    ax.hi = hi;
    return ax;
}

void marker(std::ostringstream& s, Marker m, double x, double y, const std::string& color) {
    constexpr double r = 4.0;
    switch (m) {
        case Marker::Square:
            s << "<rect x=\"" << num(x - r) << "\" y=\"" << num(y - r) << "\" width=\"" << num(2 * r)
              << "\" height=\"" << num(2 * r) << "\" fill=\"" << color << "\"/>\n";
            break;
        case Marker::TriangleUp:
            s << "<polygon points=\"" << num(x) << "," << num(y - r) << " " << num(x - r) << "," << num(y + r) << " "
              << num(x + r) << "," << num(y + r) << "\" fill=\"" << color << "\"/>\n";
            break;
        case Marker::TriangleDown:
            s << "<polygon points=\"" << num(x) << "," << num(y + r) << " " << num(x - r) << "," << num(y - r) << " "
              << num(x + r) << "," << num(y - r) << "\" fill=\"" << color << "\"/>\n";
            break;
        case Marker::Circle:
            s << "<circle cx=\"" << num(x) << "\" cy=\"" << num(y) << "\" r=\"" << num(r) << "\" fill=\"" << color
              << "\"/>\n";
            break;
    }
}

void render_panel(std::ostringstream& s, const Panel& p, double x0) {
    std::vector<double> xs, ys;
    for (const auto& se : p.series) {
        for (auto [x, y] : se.points) {
            xs.push_back(x);
            ys.push_back(y);
        }
    }
    const Axis ax = make_axis(xs, p.log_x);
    const Axis ay = make_axis(ys, p.log_y);
    const double left = x0 + kMarginLeft;
    const double right = x0 + kPanelWidth - kMarginRight;
    const double top = kMarginTop;
    const double bottom = kPanelHeight - kMarginBottom;
    auto px = [&](double v) { return left + ax.unit(v) * (right - left); };
    auto py = [&](double v) { return bottom - ay.unit(v) * (bottom - top); };

    s << "<g>\n<text x=\"" << num((left + right) / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">"
      << escape(p.title) << "</text>\n";
    s << "<rect x=\"" << num(left) << "\" y=\"" << num(top) << "\" width=\"" << num(right - left) << "\" height=\""
      << num(bottom - top) << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (double t : ax.ticks()) {
        const double x = px(t);
        s << "<line x1=\"" << num(x) << "\" y1=\"" << num(bottom) << "\" x2=\"" << num(x) << "\" y2=\""
          << num(bottom + 5) << "\" stroke=\"black\"/>\n";
        s << "<text x=\"" << num(x) << "\" y=\"" << num(bottom + 18) << "\" text-anchor=\"middle\" font-size=\"11\">"
          << tick_label(t) << "</text>\n";
    }
    for (double t : ay.ticks()) {
        const double y = py(t);
        s << "<line x1=\"" << num(left - 5) << "\" y1=\"" << num(y) << "\" x2=\"" << num(left) << "\" y2=\"" << num(y)
          << "\" stroke=\"black\"/>\n";
        s << "<text x=\"" << num(left - 8) << "\" y=\"" << num(y + 4) << "\" text-anchor=\"end\" font-size=\"11\">"
          << tick_label(t) << "</text>\n";
    }
    s << "<text x=\"" << num((left + right) / 2) << "\" y=\"" << num(kPanelHeight - 20)
      << "\" text-anchor=\"middle\" font-size=\"12\">" << escape(p.x_label) << "</text>\n";
    s << "<text x=\"" << num(x0 + 18) << "\" y=\"" << num((top + bottom) / 2) << "\" text-anchor=\"middle\" "
      << "font-size=\"12\" transform=\"rotate(-90 " << num(x0 + 18) << " " << num((top + bottom) / 2) << ")\">"
      << escape(p.y_label) << "</text>\n";

    double legend_y = top + 16;
    for (const auto& se : p.series) {
        std::vector<std::pair<double, double>> pts;
        for (auto [x, y] : se.points) {
            if (!std::isfinite(x) || !std::isfinite(y)) continue;
            if ((p.log_x && !(x > 0.0)) || (p.log_y && !(y > 0.0))) continue;
            pts.emplace_back(px(x), py(y));
        }
        if (!pts.empty()) {
            s << "<polyline fill=\"none\" stroke=\"" << se.color << "\" stroke-width=\"1.5\" points=\"";
            for (std::size_t i = 0; i < pts.size(); ++i) s << (i ? " " : "") << num(pts[i].first) << "," << num(pts[i].second);
            s << "\"/>\n";
            for (auto [x, y] : pts) marker(s, se.marker, x, y, se.color);
        }
        marker(s, se.marker, left + 14, legend_y - 4, se.color);
        s << "<text x=\"" << num(left + 24) << "\" y=\"" << num(legend_y) << "\" font-size=\"11\">" << escape(se.label)
          << "</text>\n";
        legend_y += 16;
    }
    s << "</g>\n";
}

}  // namespace

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void write_csv(std::ostream& out, const std::vector<std::string>& provenance, const std::vector<CsvRow>& rows) {
    for (const auto& line : provenance) out << "# " << line << '\n';
    out << kCsvHeader << '\n';
    auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
    for (const auto& r : rows) {
        out << r.setting << ',' << opt(r.n) << ',' << opt(r.alpha) << ',' << opt(r.p_n) << ',' << opt(r.mu1) << ','
            << opt(r.mun) << ',' << opt(r.lambda) << ',' << opt(r.rho) << ',' << r.metric << ','
            << format_double(r.value) << ',' << opt(r.ci_low) << ',' << opt(r.ci_high) << ',' << r.method << ','
            << (r.seed ? std::to_string(*r.seed) : std::string()) << '\n';
    }
}

std::string render_svg(const std::vector<Panel>& panels, const std::string& provenance) {
    std::ostringstream s;
    const double width = kPanelWidth * static_cast<double>(std::max<std::size_t>(1, panels.size()));
    s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\"" << num(kPanelHeight)
      << "\" viewBox=\"0 0 " << num(width) << " " << num(kPanelHeight) << "\" font-family=\"sans-serif\">\n";
    s << "<desc>" << escape(provenance) << "</desc>\n";
    s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    for (std::size_t i = 0; i < panels.size(); ++i) render_panel(s, panels[i], kPanelWidth * static_cast<double>(i));
    s << "</svg>\n";
    return s.str();
}

}  // namespace msjlab::report
