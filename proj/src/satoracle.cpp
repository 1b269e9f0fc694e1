#include "msjlab/satoracle.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>

#include "msjlab/errors.hpp"
#include "msjlab/numeric.hpp"

namespace msjlab::satoracle {

namespace {

constexpr double kStationaryTolerance = 1e-12;
constexpr double kPoissonTolerance = 1e-10;
constexpr int kRefinementSteps = 3;

struct KeyHash {
    std::size_t operator()(const std::vector<int>& v) const noexcept {
        std::size_t h = 0x9e3779b97f4a7c15ULL;
        for (int x : v) h ^= std::hash<int>{}(x) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        return h;
    }
};

std::vector<int> key_of(const SatState& s) {
    std::vector<int> k = s.in_service;
    k.push_back(s.head);
    return k;
}

int occupied(const std::vector<int>& counts, const SystemConfig& cfg) {
    int o = 0;
    for (std::size_t c = 0; c < counts.size(); ++c) o += counts[c] * cfg.classes[c].need;
    return o;
}

void merge_into(std::vector<RefillOutcome>& out, RefillOutcome o) {
    for (auto& e : out) {
        if (e.head == o.head && e.admitted == o.admitted) {
            e.prob += o.prob;
            return;
        }
    }
    out.push_back(std::move(o));
}

std::vector<RefillOutcome> refill_impl(int free, int head, const SystemConfig& cfg,
                                       std::map<std::pair<int, int>, std::vector<RefillOutcome>>& memo) {
    if (auto it = memo.find({free, head}); it != memo.end()) return it->second;

    const std::size_t k = cfg.classes.size();
    std::vector<RefillOutcome> out;
    if (head != kNoHead) {
        if (cfg.classes[head].need <= free) {
            for (auto o : refill_impl(free - cfg.classes[head].need, kNoHead, cfg, memo)) {
                o.admitted[head] += 1;
                out.push_back(std::move(o));
            }
        } else {
            out.push_back({std::vector<int>(k, 0), head, 1.0});
        }
    } else if (free == 0) {
        out.push_back({std::vector<int>(k, 0), kNoHead, 1.0});
    } else {
        for (std::size_t c = 0; c < k; ++c) {
            const auto& jc = cfg.classes[c];
            if (jc.prob == 0.0) continue;
            if (jc.need <= free) {
                for (auto o : refill_impl(free - jc.need, kNoHead, cfg, memo)) {
                    o.admitted[c] += 1;
                    o.prob *= jc.prob;
                    merge_into(out, std::move(o));
                }
            } else {
                merge_into(out, {std::vector<int>(k, 0), static_cast<int>(c), jc.prob});
            }
        }
    }
    memo.emplace(std::make_pair(free, head), out);
    return out;
}

struct Graph {
    std::vector<SatState> states;
    std::vector<std::vector<KernelEntry>> rows;
};

// Finds a closed communicating class: follow states from which the current
// candidate is unreachable until every reachable state can return.
std::vector<std::size_t> closed_class(const Graph& g) {
    const std::size_t n = g.states.size();
    std::vector<std::vector<std::size_t>> rev(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (const auto& e : g.rows[i]) rev[e.to].push_back(i);
    }
    std::size_t cand = 0;
    for (;;) {
        std::vector<char> fwd(n, 0), back(n, 0);
        std::vector<std::size_t> stack{cand};
        fwd[cand] = 1;
        while (!stack.empty()) {
            auto s = stack.back();
            stack.pop_back();
            for (const auto& e : g.rows[s]) {
                if (!fwd[e.to]) { fwd[e.to] = 1; stack.push_back(e.to); }
            }
        }
        stack = {cand};
        back[cand] = 1;
        while (!stack.empty()) {
            auto s = stack.back();
            stack.pop_back();
            for (auto p : rev[s]) {
                if (!back[p]) { back[p] = 1; stack.push_back(p); }
            }
        }
        std::optional<std::size_t> escape;
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < n; ++i) {
            if (!fwd[i]) continue;
            if (!back[i]) { escape = i; break; }
            members.push_back(i);
        }
        if (!escape) return members;
        cand = *escape;
    }
}

// Solves A x = b, dense for small systems and sparse LU otherwise, with a
// few rounds of iterative refinement.
Eigen::VectorXd linear_solve(const std::vector<Eigen::Triplet<double>>& triplets, std::size_t n,
                             const Eigen::VectorXd& b, const char* what) {
    const auto dim = static_cast<Eigen::Index>(n);
    Eigen::VectorXd x;
    if (n <= kDenseSolveLimit) {
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(dim, dim);
        for (const auto& t : triplets) a(t.row(), t.col()) += t.value();
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
        x = lu.solve(b);
        for (int step = 0; step < kRefinementSteps; ++step) x += lu.solve(b - a * x);
        if (!x.allFinite()) throw SolverError(std::string(what) + ": dense solve failed", INFINITY);
        return x;
    }
    Eigen::SparseMatrix<double> a(dim, dim);
    a.setFromTriplets(triplets.begin(), triplets.end());
    a.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(a);
    if (lu.info() != Eigen::Success) throw SolverError(std::string(what) + ": sparse factorization failed", INFINITY);
    x = lu.solve(b);
    for (int step = 0; step < kRefinementSteps; ++step) x += lu.solve(b - a * x);
    if (lu.info() != Eigen::Success || !x.allFinite()) {
        throw SolverError(std::string(what) + ": sparse solve failed", INFINITY);
    }
    return x;
}

}  // namespace

std::vector<RefillOutcome> refill_distribution(int free, int head, const SystemConfig& config) {
    if (free < 0 || free > config.n) throw ConfigError("free servers outside [0, n]");
    if (head != kNoHead && (head < 0 || head >= static_cast<int>(config.classes.size()))) {
        throw ConfigError("head class out of range");
    }
    std::map<std::pair<int, int>, std::vector<RefillOutcome>> memo;
    return refill_impl(free, head, config, memo);
}

RefillTable::RefillTable(SystemConfig config) : config_(std::move(config)) {}

const std::vector<RefillOutcome>& RefillTable::get(int free, int head) {
    if (auto it = memo_.find({free, head}); it != memo_.end()) return it->second;
    refill_impl(free, head, config_, memo_);
    return memo_.at({free, head});
}

std::optional<std::size_t> SatChain::index_of(const SatState& s) const {
    for (std::size_t i = 0; i < states.size(); ++i) {
        if (states[i] == s) return i;
    }
    return std::nullopt;
}

double SatChain::kernel_at(std::size_t from, std::size_t to) const {
    double p = 0.0;
    for (const auto& e : kernel.at(from)) {
        if (e.to == to) p += e.prob;
    }
    return p;
}

double estimate_state_count(const SystemConfig& config) {
    // ways[o] = number of in-service count vectors with occupancy exactly o.
    std::vector<double> ways(config.n + 1, 0.0);
    ways[0] = 1.0;
    for (const auto& c : config.classes) {
        for (int o = c.need; o <= config.n; ++o) ways[o] += ways[o - c.need];
    }
    double total = 0.0;
    for (double w : ways) total += w;
    return total * static_cast<double>(config.classes.size() + 1);
}

SatChain enumerate_chain(const SystemConfig& input, std::size_t cap) {
    const SystemConfig cfg = validate_config(input);
    const double estimate = estimate_state_count(cfg);
    if (estimate > static_cast<double>(cap)) {
        throw CapacityError("saturated chain would need up to " + std::to_string(static_cast<long long>(estimate)) +
                            " states, above the cap of " + std::to_string(cap));
    }
    const std::size_t k = cfg.classes.size();
    RefillTable refill(cfg);

    const auto& initial = refill.get(cfg.n, kNoHead);
    const auto best = std::max_element(initial.begin(), initial.end(),
                                       [](const auto& a, const auto& b) { return a.prob < b.prob; });

    Graph g;
    std::unordered_map<std::vector<int>, std::size_t, KeyHash> index;
    auto intern = [&](SatState s) {
        auto key = key_of(s);
        if (auto it = index.find(key); it != index.end()) return it->second;
        const std::size_t id = g.states.size();
        index.emplace(std::move(key), id);
        g.states.push_back(std::move(s));
        return id;
    };
    intern({best->admitted, best->head});

    for (std::size_t i = 0; i < g.states.size(); ++i) {
        const SatState cur = g.states[i];
        double nu = 0.0;
        for (std::size_t c = 0; c < k; ++c) nu += cur.in_service[c] * cfg.classes[c].rate;
        std::vector<KernelEntry> row;
        for (std::size_t c = 0; c < k; ++c) {
            if (cur.in_service[c] == 0) continue;
            const double pick = cur.in_service[c] * cfg.classes[c].rate / nu;
            std::vector<int> after = cur.in_service;
            after[c] -= 1;
            const int free = cfg.n - occupied(after, cfg);
            for (const auto& o : refill.get(free, cur.head)) {
                SatState next{after, o.head};
                for (std::size_t j = 0; j < k; ++j) next.in_service[j] += o.admitted[j];
                const std::size_t to = intern(std::move(next));
                auto it = std::find_if(row.begin(), row.end(), [&](const KernelEntry& e) { return e.to == to; });
                if (it == row.end()) {
                    row.push_back({to, pick * o.prob});
                } else {
                    it->prob += pick * o.prob;
                }
            }
        }
        g.rows.push_back(std::move(row));
        if (g.states.size() > cap) {
            throw CapacityError("saturated chain exceeded the cap of " + std::to_string(cap) + " states");
        }
    }

    const auto members = closed_class(g);
    std::vector<std::size_t> remap(g.states.size(), SIZE_MAX);
    for (std::size_t i = 0; i < members.size(); ++i) remap[members[i]] = i;

    SatChain chain;
    chain.config = cfg;
    for (auto m : members) {
        const SatState& s = g.states[m];
        chain.states.push_back(s);
        std::vector<double> rates(k);
        double nu = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            rates[c] = s.in_service[c] * cfg.classes[c].rate;
            nu += rates[c];
        }
        chain.nu.push_back(nu);
        chain.service_rate.push_back(std::move(rates));
        std::vector<KernelEntry> row;
        for (const auto& e : g.rows[m]) row.push_back({remap[e.to], e.prob});
        std::sort(row.begin(), row.end(), [](const auto& a, const auto& b) { return a.to < b.to; });
        chain.kernel.push_back(std::move(row));
    }
    return chain;
}

Stationary solve_stationary(const SatChain& chain) {
    const std::size_t n = chain.size();
    // (K^T - I) x = 0 with the last equation replaced by sum(x) = 1.
    std::vector<Eigen::Triplet<double>> t;
    const auto last = static_cast<int>(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        for (const auto& e : chain.kernel[i]) {
            if (static_cast<int>(e.to) != last) t.emplace_back(static_cast<int>(e.to), static_cast<int>(i), e.prob);
        }
        if (static_cast<int>(i) != last) t.emplace_back(static_cast<int>(i), static_cast<int>(i), -1.0);
        t.emplace_back(last, static_cast<int>(i), 1.0);
    }
    Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    b(last) = 1.0;
    const Eigen::VectorXd x = linear_solve(t, n, b, "stationary solve");

    Stationary st;
    std::vector<double> pid(x.data(), x.data() + n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(pid[i] > 0.0)) throw SolverError("chain is reducible: reachable state with no stationary mass", pid[i]);
    }
    // Normalize exactly, then measure stationarity.
    CompensatedSum total;
    for (double v : pid) total += v;
    for (double& v : pid) v /= total.value();

    std::vector<CompensatedSum> flow(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (const auto& e : chain.kernel[i]) flow[e.to] += pid[i] * e.prob;
    }
    for (std::size_t i = 0; i < n; ++i) st.residual = std::fmax(st.residual, std::fabs(flow[i].value() - pid[i]));
    if (st.residual > kStationaryTolerance) throw SolverError("stationary solve did not converge", st.residual);

    // P_y is proportional to pi^d_y / nu_y; mu is the reciprocal of the mean holding time.
    CompensatedSum hold;
    for (std::size_t i = 0; i < n; ++i) hold += pid[i] / chain.nu[i];
    st.mu = 1.0 / hold.value();
    st.completion.support = chain.states;
    st.completion.mass = pid;
    st.time_avg.support = chain.states;
    st.time_avg.mass.resize(n);
    for (std::size_t i = 0; i < n; ++i) st.time_avg.mass[i] = st.mu * pid[i] / chain.nu[i];
    st.time_avg.normalize();
    return st;
}

PoissonSolution solve_poisson(const SatChain& chain, const Stationary& st) {
    const std::size_t n = chain.size();
    // (I - K) delta = 1 - mu / nu, with delta(0) pinned to zero.
    std::vector<Eigen::Triplet<double>> t;
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = static_cast<int>(i);
        if (i == 0) {
            t.emplace_back(0, 0, 1.0);
            rhs(0) = 0.0;
            continue;
        }
        t.emplace_back(r, r, 1.0);
        for (const auto& e : chain.kernel[i]) t.emplace_back(r, static_cast<int>(e.to), -e.prob);
        rhs(r) = 1.0 - st.mu / chain.nu[i];
    }
    const Eigen::VectorXd x = linear_solve(t, n, rhs, "Poisson solve");

    PoissonSolution sol;
    sol.delta.assign(x.data(), x.data() + n);
    CompensatedSum offset;
    for (std::size_t i = 0; i < n; ++i) offset += st.time_avg.mass[i] * sol.delta[i];
    for (double& d : sol.delta) d -= offset.value();

    for (std::size_t i = 0; i < n; ++i) {
        CompensatedSum lhs(sol.delta[i]);
        for (const auto& e : chain.kernel[i]) lhs += -e.prob * sol.delta[e.to];
        lhs += -(1.0 - st.mu / chain.nu[i]);
        sol.residual = std::fmax(sol.residual, std::fabs(lhs.value()));
    }
    if (sol.residual > kPoissonTolerance) throw SolverError("Poisson solve did not converge", sol.residual);

    CompensatedSum mean;
    for (std::size_t i = 0; i < n; ++i) mean += st.completion.mass[i] * sol.delta[i];
    sol.mean_delta_yd = mean.value();
    return sol;
}

OracleResult solve(const SystemConfig& config, std::size_t cap) {
    OracleResult r;
    r.chain = enumerate_chain(config, cap);
    r.stationary = solve_stationary(r.chain);
    r.poisson = solve_poisson(r.chain, r.stationary);
    return r;
}

std::optional<exact1n::SatState1n> to_state_1n(const SatState& s, const SystemConfig& config) {
    if (!config.is_canonical_1n() || s.in_service.size() != 2) return std::nullopt;
    const int small = config.classes[0].need == 1 ? 0 : 1;
    const int large = 1 - small;
    const int b = s.in_service[small];
    if (s.in_service[large] == 1 && b == 0 && s.head == kNoHead) return exact1n::SatState1n{1, 0};
    if (s.in_service[large] == 0 && s.head == large && b > 0 && b < config.n) return exact1n::SatState1n{1, b};
    if (s.in_service[large] == 0 && s.head == kNoHead && b == config.n) return exact1n::SatState1n{0, config.n};
    return std::nullopt;
}

}  // namespace msjlab::satoracle
