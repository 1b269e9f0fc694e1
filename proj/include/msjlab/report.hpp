#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

// Fixed-schema CSV rows and a small deterministic SVG line-plot emitter.
namespace msjlab::report {

/// One long-format result row. Unset optionals print as empty cells.
struct CsvRow {
    std::string setting;
    std::optional<double> n;
    std::optional<double> alpha;
    std::optional<double> p_n;
    std::optional<double> mu1;
    std::optional<double> mun;
    std::optional<double> lambda;
    std::optional<double> rho;
    std::string metric;
    double value = 0.0;
    std::optional<double> ci_low;
    std::optional<double> ci_high;
    std::string method;
    std::optional<std::uint64_t> seed;
};

inline constexpr const char* kCsvHeader =
    "setting,n,alpha,p_n,mu1,mun,lambda,rho,metric,value,ci_low,ci_high,method,seed";

/// 17 significant digits, "nan"/"inf" spelled out.
std::string format_double(double x);

/// Writes "# key: value" provenance lines, the header, then the rows.
void write_csv(std::ostream& out, const std::vector<std::string>& provenance, const std::vector<CsvRow>& rows);

enum class Marker { Square, TriangleUp, TriangleDown, Circle };

struct Series {
    std::string label;
    std::string color;  // any SVG color
    Marker marker = Marker::Circle;
    std::vector<std::pair<double, double>> points;
};

struct Panel {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_x = false;
    bool log_y = false;
    std::vector<Series> series;
};

/// Self-contained SVG with the panels side by side. `provenance` is stored
/// in a <desc> element.
std::string render_svg(const std::vector<Panel>& panels, const std::string& provenance);

}  // namespace msjlab::report
