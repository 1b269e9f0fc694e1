#include "msjlab/sim.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <atomic>
#include <cassert>
#include <cmath>
#include <deque>
#include <limits>
#include <random>
#include <thread>

#include "msjlab/errors.hpp"
#include "msjlab/numeric.hpp"
#include "msjlab/satoracle.hpp"

namespace msjlab::sim {

namespace {

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    return std::mt19937_64(seq);
}

// Batch-means estimate: ratio estimator over the whole window, half-width
// from the spread of per-batch values.
struct BatchStats {
    std::vector<double> values;

    [[nodiscard]] double halfwidth() const {
        const auto b = values.size();
        if (b < 2) return std::numeric_limits<double>::infinity();
        CompensatedSum s;
        for (double v : values) s += v;
        const double mean = s.value() / static_cast<double>(b);
        CompensatedSum ss;
        for (double v : values) ss += (v - mean) * (v - mean);
        const double sd = std::sqrt(ss.value() / static_cast<double>(b - 1));
        const boost::math::students_t dist(static_cast<double>(b - 1));
        return boost::math::quantile(boost::math::complement(dist, 0.025)) * sd / std::sqrt(static_cast<double>(b));
    }
};

struct Window {
    double time = 0.0;
    double area_q = 0.0;
    double area_n = 0.0;
    double area_busy = 0.0;
    double response = 0.0;
    long long done = 0;
};

// Picks index i with probability weights[i] / total.
template <class Weights>
std::size_t pick(const Weights& weights, double total, double u) {
    double target = u * total;
    for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
        if (target < weights[i]) return i;
        target -= weights[i];
    }
    return weights.size() - 1;
}

struct Queued {
    int cls;
    double arrival;
    std::uint64_t seq;
};

}  // namespace

void validate(const SimConfig& cfg) {
    validate_config(cfg.system);
    if (!(cfg.lambda > 0.0) || !std::isfinite(cfg.lambda)) throw ConfigError("arrival rate must be positive");
    if (cfg.jobs <= cfg.resolved_warmup()) throw ConfigError("job budget must exceed the warmup");
    if (cfg.batches < 2) throw ConfigError("at least two batches are needed for a confidence interval");
    if (cfg.jobs - cfg.resolved_warmup() < cfg.batches) throw ConfigError("fewer measured jobs than batches");
}

SimResult simulate(const SimConfig& input, const StartObserver& observer) {
    validate(input);
    const SystemConfig sys = validate_config(input.system);
    const std::size_t k = sys.classes.size();
    const long long warmup = input.resolved_warmup();
    const long long per_batch = (input.jobs - warmup) / input.batches;
    const long long horizon = warmup + per_batch * input.batches;

    auto rng = make_rng(input.seed, input.stream);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::exponential_distribution<double> expo(1.0);

    std::vector<double> probs(k);
    for (std::size_t c = 0; c < k; ++c) probs[c] = sys.classes[c].prob;

    std::deque<Queued> queue;
    std::vector<std::vector<double>> serving(k);  // arrival times of in-service jobs
    std::vector<double> class_rate(k, 0.0);       // count * rate
    double service_total = 0.0;
    int busy = 0;
    int in_service = 0;
    std::uint64_t next_seq = 0;
    double now = 0.0;
    long long completed = 0;

    Window total;
    Window batch;
    BatchStats q_means, n_means, r_means;

    auto admit = [&] {
        while (!queue.empty() && sys.classes[queue.front().cls].need <= sys.n - busy) {
            const Queued job = queue.front();
            queue.pop_front();
            const auto& jc = sys.classes[job.cls];
            serving[job.cls].push_back(job.arrival);
            class_rate[job.cls] += jc.rate;
            service_total += jc.rate;
            busy += jc.need;
            ++in_service;
            if (observer) observer({job.seq, job.cls, job.arrival, now, busy});
        }
#ifndef NDEBUG
        int occupied = 0;
        for (std::size_t c = 0; c < k; ++c) occupied += static_cast<int>(serving[c].size()) * sys.classes[c].need;
        assert(occupied == busy && busy <= sys.n);
#endif
    };

    while (completed < horizon) {
        const double rate = input.lambda + service_total;
        const double dt = expo(rng) / rate;
        if (completed >= warmup) {
            const auto q = static_cast<double>(queue.size());
            const auto nsys = q + in_service;
            for (Window* w : {&total, &batch}) {
                w->time += dt;
                w->area_q += q * dt;
                w->area_n += nsys * dt;
                w->area_busy += busy * dt;
            }
        }
        now += dt;

        if (unif(rng) * rate < input.lambda) {
            const int cls = static_cast<int>(pick(probs, 1.0, unif(rng)));
            queue.push_back({cls, now, next_seq++});
            admit();
            if (static_cast<long long>(queue.size()) > input.instability_bound) {
                throw InstabilityError("apparent instability: queue length passed " +
                                       std::to_string(input.instability_bound));
            }
            continue;
        }

        // Recompute the active total from the per-class rates to keep drift out.
        const auto cls = pick(class_rate, service_total, unif(rng));
        auto& jobs = serving[cls];
        const auto victim = static_cast<std::size_t>(unif(rng) * static_cast<double>(jobs.size()));
        const double arrived = jobs[std::min(victim, jobs.size() - 1)];
        jobs[std::min(victim, jobs.size() - 1)] = jobs.back();
        jobs.pop_back();
        const auto& jc = sys.classes[cls];
        class_rate[cls] = static_cast<double>(jobs.size()) * jc.rate;
        service_total = 0.0;
        for (double r : class_rate) service_total += r;
        busy -= jc.need;
        --in_service;

        if (completed >= warmup) {
            total.response += now - arrived;
            ++total.done;
            batch.response += now - arrived;
            ++batch.done;
            if (batch.done == per_batch) {
                q_means.values.push_back(batch.area_q / batch.time);
                n_means.values.push_back(batch.area_n / batch.time);
                r_means.values.push_back(batch.response / static_cast<double>(batch.done));
                batch = Window{};
            }
        }
        ++completed;
        admit();
    }

    SimResult r;
    r.measured_jobs = total.done;
    r.measured_time = total.time;
    r.mean_q = total.area_q / total.time;
    r.mean_n_sys = total.area_n / total.time;
    r.util = total.area_busy / (total.time * sys.n);
    r.throughput = static_cast<double>(total.done) / total.time;
    r.mean_response = total.response / static_cast<double>(total.done);
    r.ci_halfwidth = q_means.halfwidth();
    r.ci_n_sys = n_means.halfwidth();
    r.ci_response = r_means.halfwidth();
    r.rho = input.mu ? input.lambda / *input.mu : std::numeric_limits<double>::quiet_NaN();
    return r;
}

SaturatedEstimate simulate_saturated(const SimConfig& input) {
    if (input.jobs <= input.resolved_warmup() || input.batches < 2) throw ConfigError("invalid job budget or batches");
    const SystemConfig sys = validate_config(input.system);
    const std::size_t k = sys.classes.size();
    const long long warmup = input.resolved_warmup();
    const long long per_batch = (input.jobs - warmup) / input.batches;
    const long long horizon = warmup + per_batch * input.batches;

    auto rng = make_rng(input.seed, input.stream);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::exponential_distribution<double> expo(1.0);
    std::vector<double> probs(k);
    for (std::size_t c = 0; c < k; ++c) probs[c] = sys.classes[c].prob;

    std::vector<int> count(k, 0);
    std::vector<double> class_rate(k, 0.0);
    int busy = 0;
    int head = -1;
    auto refill = [&] {
        for (;;) {
            if (head < 0) {
                if (busy == sys.n) return;
                head = static_cast<int>(pick(probs, 1.0, unif(rng)));
            }
            if (sys.classes[head].need > sys.n - busy) return;
            ++count[head];
            class_rate[head] += sys.classes[head].rate;
            busy += sys.classes[head].need;
            head = -1;
        }
    };
    refill();

    long long completed = 0;
    double batch_time = 0.0, total_time = 0.0;
    long long batch_done = 0;
    BatchStats rates;
    while (completed < horizon) {
        double service_total = 0.0;
        for (double r : class_rate) service_total += r;
        const double dt = expo(rng) / service_total;
        const auto cls = pick(class_rate, service_total, unif(rng));
        --count[cls];
        class_rate[cls] = count[cls] * sys.classes[cls].rate;
        busy -= sys.classes[cls].need;
        if (completed >= warmup) {
            batch_time += dt;
            total_time += dt;
            if (++batch_done == per_batch) {
                rates.values.push_back(static_cast<double>(batch_done) / batch_time);
                batch_done = 0;
                batch_time = 0.0;
            }
        }
        ++completed;
        refill();
    }
    return {static_cast<double>(horizon - warmup) / total_time, rates.halfwidth()};
}

double stability_threshold(const SystemConfig& config) {
    const SystemConfig cfg = validate_config(config);
    const bool whole = cfg.classes.size() == 1 && cfg.classes[0].need == cfg.n;
    if ((cfg.is_canonical_1n() || whole) && cfg.n >= 2) {
        return exact1n::throughput_exact(exact1n::params_from_config(cfg)).mu;
    }
    return satoracle::solve_stationary(satoracle::enumerate_chain(cfg)).mu;
}

std::vector<HeavyTrafficRow> heavy_traffic_check(const exact1n::Params& params, const std::vector<double>& rho_grid,
                                                 const SimConfig& per_point) {
    const auto exact = exact1n::mean_delta_yd(params, 0);
    const SystemConfig sys = two_class(params.n, params.pn, params.mu1, params.mun);
    std::vector<HeavyTrafficRow> rows;
    for (std::size_t i = 0; i < rho_grid.size(); ++i) {
        const double rho = rho_grid[i];
        if (!(rho > 0.0 && rho < 1.0)) throw ConfigError("rho must lie in (0, 1)");
        SimConfig cfg = per_point;
        cfg.system = sys;
        cfg.lambda = rho * exact.mu;
        cfg.mu = exact.mu;
        cfg.stream = per_point.stream + i;
        HeavyTrafficRow row;
        row.rho = rho;
        row.lambda = cfg.lambda;
        row.limit = exact.scaled_queue_limit;
        row.result = simulate(cfg);
        row.scaled_q = row.result.mean_q * (1.0 - rho);
        row.scaled_q_ci = row.result.ci_halfwidth * (1.0 - rho);
        row.scaled_n_sys = row.result.mean_n_sys * (1.0 - rho);
        row.scaled_n_sys_ci = row.result.ci_n_sys * (1.0 - rho);
        rows.push_back(row);
    }
    return rows;
}

std::string_view to_string(Setting s) noexcept {
    switch (s) {
        case Setting::Original: return "original";
        case Setting::DurationScaled: return "duration_scaled";
        case Setting::HalfSize: return "half_size";
        case Setting::ThreeClass: return "three_class";
    }
    return "unknown";
}

std::string_view to_string(LoadMode m) noexcept {
    return m == LoadMode::StabilityFraction ? "stability" : "capacity";
}

Setting parse_setting(std::string_view s) {
    for (auto v : {Setting::Original, Setting::DurationScaled, Setting::HalfSize, Setting::ThreeClass}) {
        if (s == to_string(v)) return v;
    }
    throw ConfigError("unknown setting '" + std::string(s) + "'");
}

LoadMode parse_load_mode(std::string_view s) {
    if (s == "stability") return LoadMode::StabilityFraction;
    if (s == "capacity") return LoadMode::CapacityFraction;
    throw ConfigError("unknown load mode '" + std::string(s) + "'");
}

SystemConfig setting_config(Setting setting, int n, double alpha) {
    if (!(alpha >= 0.0)) throw ConfigError("alpha must be >= 0");
    const double p = std::pow(static_cast<double>(n), -alpha);
    SystemConfig cfg{n, {}};
    auto add = [&](int need, double prob, double rate) {
        if (prob > 0.0) cfg.classes.push_back({need, prob, rate});
    };
    switch (setting) {
        case Setting::Original:
        case Setting::DurationScaled: {
            if (n < 2) throw ConfigError("1-and-n settings need n >= 2");
            add(1, 1.0 - p, setting == Setting::DurationScaled ? n : 1.0);
            add(n, p, 1.0);
            break;
        }
        case Setting::HalfSize:
        case Setting::ThreeClass: {
            if (n < 4 || n % 2 != 0) throw ConfigError("half-size settings need an even n >= 4");
            add(1, 1.0 - p, 1.0);
            if (setting == Setting::HalfSize) {
                add(n / 2, p, 1.0);
            } else {
                add(n / 2, p / 2.0, 1.0);
                add(n, p / 2.0, 1.0);
            }
            break;
        }
    }
    return validate_config(cfg);
}

double near_stability_capacity_fraction(Setting setting, int n, const std::vector<double>& alpha_grid,
                                        double margin) {
    if (alpha_grid.empty()) throw ConfigError("empty alpha grid");
    double lowest = std::numeric_limits<double>::infinity();
    for (double a : alpha_grid) {
        const auto cfg = setting_config(setting, n, a);
        lowest = std::min(lowest, offered_load_fraction(stability_threshold(cfg), cfg));
    }
    return margin * lowest;
}

std::vector<SweepRow> alpha_sweep(int n, const std::vector<double>& alpha_grid,
                                  const std::vector<double>& fractions, Setting setting, LoadMode mode,
                                  const SimConfig& per_point, int threads) {
    if (!std::is_sorted(alpha_grid.begin(), alpha_grid.end())) throw ConfigError("alpha grid must be ascending");
    for (double f : fractions) {
        if (!(f > 0.0 && f < 1.0)) throw ConfigError("load fractions must lie in (0, 1)");
    }

    std::vector<SweepRow> rows;
    std::vector<SystemConfig> systems;
    for (double a : alpha_grid) {
        const auto cfg = setting_config(setting, n, a);
        const double mu = stability_threshold(cfg);
        const double max_frac = offered_load_fraction(mu, cfg);
        for (double f : fractions) {
            SweepRow row;
            row.setting = setting;
            row.mode = mode;
            row.alpha = a;
            row.p = std::pow(static_cast<double>(n), -a);
            row.fraction = f;
            row.mu = mu;
            row.lambda = mode == LoadMode::StabilityFraction ? f * mu : f * n / mean_work_per_job(cfg);
            row.rho = row.lambda / mu;
            row.capacity_fraction = offered_load_fraction(row.lambda, cfg);
            row.max_capacity_fraction = max_frac;
            row.stream = per_point.stream + rows.size();
            row.stable = row.rho < 1.0;
            if (!row.stable) row.error = "unstable: lambda >= mu";
            rows.push_back(row);
            systems.push_back(cfg);
        }
    }

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < rows.size(); i = next++) {
            auto& row = rows[i];
            if (!row.stable) continue;
            SimConfig cfg = per_point;
            cfg.system = systems[i];
            cfg.lambda = row.lambda;
            cfg.mu = row.mu;
            cfg.stream = row.stream;
            try {
                row.result = simulate(cfg);
            } catch (const InstabilityError& e) {
                row.error = e.what();
            }
        }
    };
    const int workers = std::max(1, std::min<int>(threads, static_cast<int>(rows.size())));
    std::vector<std::thread> pool;
    for (int t = 1; t < workers; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    return rows;
}

}  // namespace msjlab::sim
