#pragma once

#include <bit>
#include <cstdint>
#include <iterator>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "msjlab/exact1n.hpp"
#include "msjlab/model.hpp"

// Discrete-event simulation of the open MSJ FCFS queue with head-of-line
// blocking, driven by exponential races over the arrival stream and every
// in-service class.
namespace msjlab::sim {

inline constexpr std::string_view kRngAlgorithm = "mt19937_64/seed_seq(seed,stream)";

struct SimConfig {
    SystemConfig system;
    double lambda = 1.0;
    long long jobs = 1'000'000;  ///< completions simulated, warmup included
    long long warmup_jobs = -1;  ///< negative: 10% of jobs
    int batches = 20;
    std::uint64_t seed = 1;
    std::uint64_t stream = 0;                  ///< independent substream per replication
    long long instability_bound = 10'000'000;  ///< queue length treated as divergence
    std::optional<double> mu;                  ///< stability threshold, when known, to report rho

    [[nodiscard]] long long resolved_warmup() const noexcept { return warmup_jobs < 0 ? jobs / 10 : warmup_jobs; }
};

/// Throws ConfigError on jobs <= warmup, batches < 2 or lambda <= 0.
void validate(const SimConfig& cfg);

struct SimResult {
    double mean_q = 0.0;  ///< time-average number waiting
    double ci_halfwidth = 0.0;
    double mean_n_sys = 0.0;  ///< time-average number in system
    double ci_n_sys = 0.0;
    double util = 0.0;        ///< time-average busy-server fraction
    double throughput = 0.0;  ///< completions per unit time
    double mean_response = 0.0;
    double ci_response = 0.0;
    double rho = 0.0;  ///< lambda / mu; NaN when mu was not supplied
    long long measured_jobs = 0;
    double measured_time = 0.0;

    /// Bitwise comparison, so unset (NaN) rho values compare equal.
    friend bool operator==(const SimResult& a, const SimResult& b) noexcept {
        const double da[] = {a.mean_q, a.ci_halfwidth, a.mean_n_sys, a.ci_n_sys, a.util, a.throughput,
                             a.mean_response, a.ci_response, a.rho, a.measured_time};
        const double db[] = {b.mean_q, b.ci_halfwidth, b.mean_n_sys, b.ci_n_sys, b.util, b.throughput,
                             b.mean_response, b.ci_response, b.rho, b.measured_time};
        for (std::size_t i = 0; i < std::size(da); ++i) {
            if (std::bit_cast<std::uint64_t>(da[i]) != std::bit_cast<std::uint64_t>(db[i])) return false;
        }
        return a.measured_jobs == b.measured_jobs;
    }
};

/// Reported for every job entering service.
struct JobStart {
    std::uint64_t seq = 0;  ///< arrival order
    int cls = 0;
    double arrival = 0.0;
    double start = 0.0;
    int busy_servers = 0;  ///< after admission
};

using StartObserver = std::function<void(const JobStart&)>;

/// 95% confidence intervals come from batch means over the post-warmup
/// completions. Throws InstabilityError when the queue passes the bound.
SimResult simulate(const SimConfig& cfg, const StartObserver& observer = {});

struct SaturatedEstimate {
    double throughput = 0.0;
    double ci_halfwidth = 0.0;
};

/// Same service dynamics with the arrival stream replaced by an infinite
/// backlog. Its throughput estimates the saturated-system mu.
SaturatedEstimate simulate_saturated(const SimConfig& cfg);

/// Stability threshold mu: closed form for 1-and-n configs, the saturated
/// chain otherwise.
double stability_threshold(const SystemConfig& config);

struct HeavyTrafficRow {
    double rho = 0.0;
    double lambda = 0.0;
    double scaled_q = 0.0;  ///< mean waiting * (1 - rho)
    double scaled_q_ci = 0.0;
    double scaled_n_sys = 0.0;  ///< mean in system * (1 - rho)
    double scaled_n_sys_ci = 0.0;
    double limit = 0.0;  ///< E[Delta(Y_d)] + 1
    SimResult result;
};

/// One simulation per rho with lambda = rho * mu; point i uses substream
/// per_point.stream + i.
std::vector<HeavyTrafficRow> heavy_traffic_check(const exact1n::Params& params, const std::vector<double>& rho_grid,
                                                 const SimConfig& per_point);

enum class Setting { Original, DurationScaled, HalfSize, ThreeClass };
enum class LoadMode { StabilityFraction, CapacityFraction };

std::string_view to_string(Setting s) noexcept;
std::string_view to_string(LoadMode m) noexcept;
Setting parse_setting(std::string_view s);
LoadMode parse_load_mode(std::string_view s);

/// System for one point of an alpha sweep with p = n^-alpha:
///   original        needs {1, n},      rates 1, 1
///   duration_scaled needs {1, n},      rates n, 1
///   half_size       needs {1, n/2},    rates 1, 1
///   three_class     needs {1, n/2, n}, rates 1, probs (1 - p, p/2, p/2)
/// Classes with zero probability are dropped.
SystemConfig setting_config(Setting setting, int n, double alpha);

struct SweepRow {
    Setting setting = Setting::Original;
    LoadMode mode = LoadMode::StabilityFraction;
    double alpha = 0.0;
    double p = 0.0;         ///< n^-alpha
    double fraction = 0.0;  ///< requested fraction, interpreted per mode
    double mu = 0.0;
    double lambda = 0.0;
    double rho = 0.0;
    double capacity_fraction = 0.0;  ///< offered load over capacity at lambda
    double max_capacity_fraction = 0.0;
    std::uint64_t stream = 0;
    bool stable = false;
    std::optional<SimResult> result;
    std::string error;  ///< set for unstable or failed points
};

/// Rows in (alpha, fraction) grid order. Points are simulated on up to
/// `threads` workers; each uses substream per_point.stream + row index, so
/// results do not depend on the thread count.
std::vector<SweepRow> alpha_sweep(int n, const std::vector<double>& alpha_grid,
                                  const std::vector<double>& fractions, Setting setting, LoadMode mode,
                                  const SimConfig& per_point, int threads = 1);

/// margin * min over the grid of offered_load_fraction(mu): the capacity
/// fraction at which the most constrained alpha runs at rho = margin.
double near_stability_capacity_fraction(Setting setting, int n, const std::vector<double>& alpha_grid,
                                        double margin);

}  // namespace msjlab::sim
