#pragma once

#include <cstddef>
#include <vector>

#include "msjlab/distribution.hpp"
#include "msjlab/model.hpp"

// Closed-form saturated-system quantities for the 1-and-n system.
//
// Completion states are indexed one-dimensionally by the number i of
// 1-server jobs in service: i = 0 is (a, b) = (1, 0) with the n-server job
// in service, 0 < i < n is (1, i) with the n-server job blocked at the head,
// and i = n is (0, n) with every server busy on 1-server jobs.
namespace msjlab::exact1n {

struct Params {
    int n = 2;
    double pn = 0.5;
    double mu1 = 1.0;
    double mun = 1.0;
};

/// Requires n >= 2, 0 < pn <= 1 and positive rates.
void validate(const Params& p);

/// Extracts the parameters of a canonical 1-and-n config, or of a single
/// class needing all n servers (pn = 1). Throws ConfigError otherwise.
Params params_from_config(const SystemConfig& config);

/// (a, b): a n-server jobs present (0 or 1), b 1-server jobs present.
struct SatState1n {
    int a = 0;
    int b = 0;

    friend bool operator==(const SatState1n&, const SatState1n&) = default;
};

using Distribution = StateDistribution<SatState1n>;

inline constexpr std::size_t kDefaultMaterializationCap = 10'000'000;

[[nodiscard]] SatState1n completion_state(int index, int n) noexcept;
[[nodiscard]] int completion_index(const SatState1n& s, int n) noexcept;

/// Completion rate in completion state i: mun, i*mu1, or n*mu1.
[[nodiscard]] double state_rate(const Params& p, int index) noexcept;

/// Transition-average distribution over arrival and completion states.
Distribution transition_dist(const Params& p, std::size_t cap = kDefaultMaterializationCap);

/// Time-average distribution over completion states.
Distribution time_avg_dist(const Params& p, std::size_t cap = kDefaultMaterializationCap);

/// Completion-average distribution over completion states.
Distribution completion_dist(const Params& p, std::size_t cap = kDefaultMaterializationCap);

struct Throughput {
    double mu = 0.0;       ///< saturated throughput (jobs/time)
    double c_prime = 0.0;  ///< n-server-job completion rate, mu * pn
    // Expected time per n-server-job completion, split by phase; the three
    // terms sum to 1 / c_prime.
    double phase_large = 0.0;     ///< n-server job in service
    double phase_full = 0.0;      ///< all servers busy on 1-server jobs
    double phase_draining = 0.0;  ///< 1-server jobs draining ahead of a blocked n-server job
};

Throughput throughput_exact(const Params& p);

/// Relative completions pinned to zero at state 0, for states 0..n.
std::vector<double> delta_tilde(const Params& p, double mu, std::size_t cap = kDefaultMaterializationCap);

struct ExactResult {
    double mu = 0.0;
    double c_prime = 0.0;
    std::vector<double> delta_tilde;  ///< empty when n + 1 exceeds the cap
    double mean_delta_yd = 0.0;
    double scaled_queue_limit = 0.0;  ///< mean_delta_yd + 1
    /// sum_i (pi^d_i - P_i) * delta_tilde(i), assembled from the two
    /// distributions; agrees with mean_delta_yd to 1e-9 relative.
    double offset_identity = 0.0;
};

/// Streams both O(n) sums; never materializes more than the optional vector.
ExactResult mean_delta_yd(const Params& p, std::size_t cap = kDefaultMaterializationCap);

}  // namespace msjlab::exact1n
