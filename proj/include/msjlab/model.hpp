#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace msjlab {

/// One job class: how many servers a job occupies, how likely an arrival is
/// to belong to the class, and the exponential service rate.
struct JobClass {
    int need = 1;
    double prob = 1.0;
    double rate = 1.0;

    friend bool operator==(const JobClass&, const JobClass&) = default;
};

/// A multiserver-job system: n identical servers and a class mix.
/// Classes are kept ordered by need once validated.
struct SystemConfig {
    int n = 1;
    std::vector<JobClass> classes;

    /// True for exactly two classes with needs {1, n}, n >= 2.
    [[nodiscard]] bool is_canonical_1n() const noexcept;

    friend bool operator==(const SystemConfig&, const SystemConfig&) = default;
};

/// p_n = c * n^(-alpha).
struct PowerLawFamily {
    double c = 1.0;
    double alpha = 1.0;

    /// Large-job probability at server count n. Throws ConfigError when the
    /// value leaves (0, 1].
    [[nodiscard]] double pn(double n) const;
};

/// Throws ConfigError if c <= 0 or alpha < 0.
void validate_family(const PowerLawFamily& family);

/// Builds the canonical 1-and-n configuration. p_n in {0, 1} collapses to
/// a single class.
SystemConfig two_class(int n, double pn, double mu1, double mun);

/// Returns the configuration, sorted by need, when every invariant holds.
/// Otherwise throws ConfigError describing the first violation found.
SystemConfig validate_config(SystemConfig config);

/// Demanded work rate over capacity: lambda * sum(prob * need / rate) / n.
double offered_load_fraction(double lambda, const SystemConfig& config);

/// Mean server-time demanded per job, sum(prob * need / rate).
double mean_work_per_job(const SystemConfig& config);

// JSON document: {"n": int, "classes": [{"need", "prob", "rate"}], "family": {"c", "alpha"}}
// "classes" may be omitted when "family" is present; the caller then derives
// the canonical two-class system from the family and its own rates.
struct ConfigDocument {
    int n = 1;
    std::vector<JobClass> classes;
    std::optional<PowerLawFamily> family;
};

nlohmann::json to_json(const SystemConfig& config);
nlohmann::json to_json(const ConfigDocument& doc);

/// Parses and validates a config document. Malformed JSON is reported with
/// its byte offset.
ConfigDocument parse_config(std::string_view text);
ConfigDocument load_config(const std::string& path);

}  // namespace msjlab
