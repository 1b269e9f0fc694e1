#include <doctest.h>

#include <cmath>
#include <map>
#include <vector>

#include "msjlab/errors.hpp"
#include "msjlab/exact1n.hpp"
#include "msjlab/sim.hpp"

using namespace msjlab;
using namespace msjlab::sim;

namespace {

// Mean number in system of an M/M/c queue from the Erlang C formula.
double erlang_c_mean_in_system(int c, double lambda, double mu) {
    const double a = lambda / mu;
    const double rho = a / c;
    double term = 1.0, sum = 0.0;
    for (int k = 0; k < c; ++k) {
        sum += term;
        term *= a / (k + 1);
    }
    const double tail = term / (1.0 - rho);
    const double wait_prob = tail / (sum + tail);
    return wait_prob * rho / (1.0 - rho) + a;
}

SimConfig base(const SystemConfig& sys, double lambda, long long jobs) {
    SimConfig c;
    c.system = sys;
    c.lambda = lambda;
    c.jobs = jobs;
    c.seed = 7;
    return c;
}

bool within_ci(double est, double half, double target, double slack = 1.5) {
    return std::fabs(est - target) <= slack * half;
}

}  // namespace

TEST_CASE("whole-system class behaves as M/M/1") {
    const auto r = simulate(base(two_class(5, 1.0, 1.0, 1.0), 0.5, 400000));
    CHECK(within_ci(r.mean_n_sys, r.ci_n_sys, 1.0));
    CHECK(r.ci_n_sys < 0.1);
    CHECK(r.util == doctest::Approx(0.5).epsilon(0.03));
}

TEST_CASE("unit-need class on two servers matches Erlang C") {
    const auto sys = validate_config({2, {{1, 1.0, 1.0}}});
    const double target = erlang_c_mean_in_system(2, 1.0, 1.0);
    CHECK(target == doctest::Approx(4.0 / 3.0));
    const auto r = simulate(base(sys, 1.0, 400000));
    CHECK(within_ci(r.mean_n_sys, r.ci_n_sys, target));
}

TEST_CASE("Little's law") {
    const auto r = simulate(base(two_class(4, 0.3, 1.0, 2.0), 0.8, 300000));
    const double lhs = r.mean_n_sys;
    const double rhs = r.throughput * r.mean_response;
    const double half = r.ci_n_sys + r.throughput * r.ci_response;
    CHECK(std::fabs(lhs - rhs) <= half);
    CHECK(r.throughput == doctest::Approx(0.8).epsilon(0.02));
}

TEST_CASE("admission is FCFS with head-of-line blocking") {
    const auto sys = two_class(4, 0.4, 1.0, 1.0);
    std::vector<JobStart> starts;
    auto cfg = base(sys, 1.0, 20000);
    simulate(cfg, [&](const JobStart& s) { starts.push_back(s); });
    REQUIRE(starts.size() > 15000);
    for (std::size_t i = 0; i < starts.size(); ++i) {
        CHECK(starts[i].seq == i);
        CHECK(starts[i].busy_servers <= 4);
        CHECK(starts[i].start >= starts[i].arrival);
        if (i > 0) CHECK(starts[i].start >= starts[i - 1].start);
    }
}

TEST_CASE("fixed seeds reproduce results bit for bit") {
    const auto cfg = base(two_class(3, 0.4, 1.0, 1.0), 0.7, 50000);
    const auto a = simulate(cfg);
    const auto b = simulate(cfg);
    CHECK(a == b);
    auto other = cfg;
    other.stream = 1;
    CHECK_FALSE(simulate(other) == a);
}

TEST_CASE("saturated simulation estimates the stability threshold") {
    for (const auto& sys : {two_class(5, 0.3, 1.0, 1.0), setting_config(Setting::ThreeClass, 10, 0.7)}) {
        auto cfg = base(sys, 1.0, 400000);
        const auto est = simulate_saturated(cfg);
        CHECK(within_ci(est.throughput, est.ci_halfwidth, stability_threshold(sys), 2.0));
    }
}

TEST_CASE("near-critical queue tracks the heavy-traffic limit") {
    const exact1n::Params p{2, 0.5, 1.0, 1.0};
    auto cfg = base(two_class(2, 0.5, 1.0, 1.0), 1.0, 10000000);
    const auto rows = heavy_traffic_check(p, {0.98}, cfg);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].limit == doctest::Approx(53.0 / 49.0).epsilon(1e-14));
    CHECK(std::fabs(rows[0].scaled_n_sys / rows[0].limit - 1.0) < 0.15);
    CHECK(heavy_traffic_check(p, {}, cfg).empty());
}

TEST_CASE("whole-system heavy traffic is M/M/1") {
    // E[N](1 - rho) = rho exactly, tending to the limit 1.
    const exact1n::Params p{3, 1.0, 1.0, 1.0};
    auto cfg = base(two_class(3, 1.0, 1.0, 1.0), 1.0, 1000000);
    const auto rows = heavy_traffic_check(p, {0.9, 0.99}, cfg);
    CHECK(rows[0].limit == 1.0);
    CHECK(within_ci(rows[0].scaled_n_sys, rows[0].scaled_n_sys_ci, 0.9, 2.0));
    CHECK(within_ci(rows[1].scaled_n_sys, rows[1].scaled_n_sys_ci, 0.99, 2.0));
}

TEST_CASE("instability is reported") {
    auto cfg = base(two_class(2, 0.5, 1.0, 1.0), 3.0, 1000000);
    cfg.instability_bound = 1000;
    CHECK_THROWS_AS(simulate(cfg), InstabilityError);
}

TEST_CASE("simulation config checks") {
    auto cfg = base(two_class(2, 0.5, 1.0, 1.0), 1.0, 100);
    cfg.warmup_jobs = 200;
    CHECK_THROWS_AS(validate(cfg), ConfigError);
    cfg.warmup_jobs = 10;
    cfg.batches = 1;
    CHECK_THROWS_AS(validate(cfg), ConfigError);
    cfg.batches = 5;
    cfg.lambda = 0.0;
    CHECK_THROWS_AS(validate(cfg), ConfigError);
}

TEST_CASE("sweep settings") {
    const auto dur = setting_config(Setting::DurationScaled, 10, 1.0);
    REQUIRE(dur.classes.size() == 2);
    CHECK(dur.classes[0].rate == 10.0);
    CHECK(dur.classes[1].rate == 1.0);

    const auto half = setting_config(Setting::HalfSize, 10, 1.0);
    CHECK(half.classes[1].need == 5);

    const auto three = setting_config(Setting::ThreeClass, 10, 1.0);
    REQUIRE(three.classes.size() == 3);
    CHECK(three.classes[0].prob == doctest::Approx(0.9));
    CHECK(three.classes[1].prob == doctest::Approx(0.05));
    CHECK(three.classes[2].prob == doctest::Approx(0.05));

    CHECK(setting_config(Setting::Original, 10, 0.0).classes.size() == 1);
    CHECK_THROWS_AS(setting_config(Setting::HalfSize, 5, 1.0), ConfigError);
    CHECK(parse_setting("duration_scaled") == Setting::DurationScaled);
    CHECK_THROWS_AS(parse_setting("bogus"), ConfigError);
    CHECK(parse_load_mode("capacity") == LoadMode::CapacityFraction);
}

TEST_CASE("sweep results do not depend on the worker count") {
    auto cfg = base(SystemConfig{}, 1.0, 20000);
    const std::vector<double> alphas = {0.5, 1.0, 1.5};
    const auto one = alpha_sweep(10, alphas, {0.5, 0.8}, Setting::Original, LoadMode::StabilityFraction, cfg, 1);
    const auto three = alpha_sweep(10, alphas, {0.5, 0.8}, Setting::Original, LoadMode::StabilityFraction, cfg, 3);
    REQUIRE(one.size() == 6);
    REQUIRE(three.size() == 6);
    for (std::size_t i = 0; i < one.size(); ++i) {
        CHECK(one[i].stream == i);
        REQUIRE(one[i].result.has_value());
        CHECK(*one[i].result == *three[i].result);
        CHECK(one[i].rho == doctest::Approx(one[i].fraction));
    }
}

TEST_CASE("capacity-fraction sweeps flag points beyond the stability threshold") {
    auto cfg = base(SystemConfig{}, 1.0, 5000);
    const auto rows = alpha_sweep(10, {0.8}, {0.9}, Setting::Original, LoadMode::CapacityFraction, cfg, 1);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].max_capacity_fraction < 0.9);
    CHECK_FALSE(rows[0].stable);
    CHECK_FALSE(rows[0].result.has_value());

    const double f = near_stability_capacity_fraction(Setting::Original, 10, {0.0, 0.8, 2.0}, 0.95);
    CHECK(f == doctest::Approx(0.95 * rows[0].max_capacity_fraction));
}
