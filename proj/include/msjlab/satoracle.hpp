#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <unordered_map>
#include <utility>
#include <vector>

#include "msjlab/distribution.hpp"
#include "msjlab/exact1n.hpp"
#include "msjlab/model.hpp"

// Brute-force saturated system for arbitrary class mixes. Every stored state
// is a completion state: the chain jumps only when a job finishes, after
// which the freed servers are refilled from the infinite FCFS backlog.
namespace msjlab::satoracle {

inline constexpr int kNoHead = -1;

/// Jobs in service per class (in validated class order) plus the class of
/// the blocked head-of-line job, or kNoHead when every server is busy.
struct SatState {
    std::vector<int> in_service;
    int head = kNoHead;

    friend bool operator==(const SatState&, const SatState&) = default;
};

struct RefillOutcome {
    std::vector<int> admitted;
    int head = kNoHead;
    double prob = 0.0;
};

/// Exact law of the jobs admitted (and the class left blocked) when `free`
/// servers open up while `head` waits at the front of the backlog.
std::vector<RefillOutcome> refill_distribution(int free, int head, const SystemConfig& config);

/// Memoizes refill_distribution on (free, head) for one config.
class RefillTable {
public:
    explicit RefillTable(SystemConfig config);

    const std::vector<RefillOutcome>& get(int free, int head);

private:
    SystemConfig config_;
    std::map<std::pair<int, int>, std::vector<RefillOutcome>> memo_;
};

struct KernelEntry {
    std::size_t to = 0;
    double prob = 0.0;
};

struct SatChain {
    SystemConfig config;
    std::vector<SatState> states;
    std::vector<double> nu;                         ///< total completion rate per state
    std::vector<std::vector<double>> service_rate;  ///< [state][class] completion rate
    std::vector<std::vector<KernelEntry>> kernel;   ///< embedded completion chain, sparse rows

    [[nodiscard]] std::size_t size() const noexcept { return states.size(); }
    [[nodiscard]] std::optional<std::size_t> index_of(const SatState& s) const;
    [[nodiscard]] double kernel_at(std::size_t from, std::size_t to) const;
};

inline constexpr std::size_t kDefaultStateCap = 2'000'000;
inline constexpr std::size_t kDenseSolveLimit = 2000;

/// Upper bound on the number of (in_service, head) combinations.
double estimate_state_count(const SystemConfig& config);

/// Enumerates the closed communicating class of completion states reachable
/// from the most likely refill of an empty system.
SatChain enumerate_chain(const SystemConfig& config, std::size_t cap = kDefaultStateCap);

using Distribution = StateDistribution<SatState>;

struct Stationary {
    Distribution time_avg;    ///< P
    Distribution completion;  ///< pi^d, stationary vector of the kernel
    double mu = 0.0;
    double residual = 0.0;  ///< max |pi^d K - pi^d|
};

/// Throws SolverError when the residual exceeds 1e-12 or a state ends up
/// with no stationary mass.
Stationary solve_stationary(const SatChain& chain);

struct PoissonSolution {
    std::vector<double> delta;  ///< shifted so that sum_y P_y delta(y) = 0
    double mean_delta_yd = 0.0;
    double residual = 0.0;  ///< max per-state Poisson residual
};

PoissonSolution solve_poisson(const SatChain& chain, const Stationary& st);

struct OracleResult {
    SatChain chain;
    Stationary stationary;
    PoissonSolution poisson;
};

/// Enumerate, solve for stationary laws and the Poisson equation.
OracleResult solve(const SystemConfig& config, std::size_t cap = kDefaultStateCap);

/// Maps an oracle state of a canonical 1-and-n config to its (a, b) label.
std::optional<exact1n::SatState1n> to_state_1n(const SatState& s, const SystemConfig& config);

}  // namespace msjlab::satoracle
