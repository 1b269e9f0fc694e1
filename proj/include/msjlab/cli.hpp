#pragma once

#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace msjlab::cli {

enum class Format { Csv, Svg, Both };

/// One invocation. Overrides are keyed by flag name without dashes
/// ("n", "pn", "alpha-grid", ...) and take precedence over the config file.
struct RunSpec {
    std::string subcommand;
    std::optional<std::string> config_path;
    std::optional<std::string> output_path;  ///< CSV path; stdout when unset
    Format format = Format::Csv;
    std::map<std::string, std::string> overrides;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitCompute = 2;

/// Executes the request and returns the exit status. CSV goes to the output
/// path or `out`; the SVG, when requested, goes next to the CSV with an
/// .svg extension. Errors are reported on `err`.
int run(const RunSpec& spec, std::ostream& out, std::ostream& err);

/// Parses argv-style arguments (program name first) and calls run().
int main_entry(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// "1e2:1e8:log" gives one point per decade; "a,b,c" lists values.
std::vector<long long> parse_n_grid(const std::string& text);

/// "0:3:0.1" gives an inclusive arithmetic grid; "a,b,c" lists values.
std::vector<double> parse_real_grid(const std::string& text);

/// Worker count: the requested value (hardware concurrency when zero),
/// capped by MSJLAB_THREADS when that is set.
int resolve_threads(int requested);

}  // namespace msjlab::cli
