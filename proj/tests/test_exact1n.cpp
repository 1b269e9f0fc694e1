#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "msjlab/errors.hpp"
#include "msjlab/exact1n.hpp"
#include "msjlab/numeric.hpp"

using namespace msjlab;
using namespace msjlab::exact1n;

namespace {

const Params kTwo{2, 0.5, 1.0, 1.0};

double mass(const Distribution& d, int a, int b) { return d.at(SatState1n{a, b}); }

}  // namespace

TEST_CASE("transition-average distribution, n = 2") {
    const auto d = transition_dist(kTwo);
    CHECK(d.size() == 5);
    CHECK(mass(d, 0, 0) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(mass(d, 0, 1) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(mass(d, 0, 2) == doctest::Approx(0.125).epsilon(1e-15));
    CHECK(mass(d, 1, 0) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(mass(d, 1, 1) == doctest::Approx(0.125).epsilon(1e-15));

    const auto all_large = transition_dist({5, 1.0, 1.0, 2.0});
    CHECK(all_large.size() == 2);
    CHECK(mass(all_large, 0, 0) == doctest::Approx(0.5));
    CHECK(mass(all_large, 1, 0) == doctest::Approx(0.5));
}

TEST_CASE("time- and completion-average distributions, n = 2") {
    const auto p = time_avg_dist(kTwo);
    CHECK(mass(p, 1, 0) == doctest::Approx(4.0 / 7.0).epsilon(1e-14));
    CHECK(mass(p, 1, 1) == doctest::Approx(2.0 / 7.0).epsilon(1e-14));
    CHECK(mass(p, 0, 2) == doctest::Approx(1.0 / 7.0).epsilon(1e-14));

    const auto pd = completion_dist(kTwo);
    CHECK(mass(pd, 1, 0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(mass(pd, 1, 1) == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(mass(pd, 0, 2) == doctest::Approx(0.25).epsilon(1e-14));

    for (const Params& q : {Params{2, 1.0, 1.0, 1.0}, Params{4, 1.0, 2.0, 3.0}}) {
        const auto t = time_avg_dist(q);
        CHECK(t.size() == 1);
        CHECK(mass(t, 1, 0) == 1.0);
        CHECK(mass(completion_dist(q), 1, 0) == 1.0);
    }
}

TEST_CASE("distributions are normalized") {
    for (const Params& q : {Params{2, 0.5, 1, 1}, Params{7, 0.1, 10, 1}, Params{50, 0.9, 1, 10}, Params{1000, 1e-4, 1, 1}}) {
        CHECK(std::fabs(transition_dist(q).total() - 1.0) <= 1e-12);
        CHECK(std::fabs(time_avg_dist(q).total() - 1.0) <= 1e-12);
        CHECK(std::fabs(completion_dist(q).total() - 1.0) <= 1e-12);
    }
}

TEST_CASE("throughput spot values") {
    CHECK(std::fabs(throughput_exact(kTwo).mu - 8.0 / 7.0) <= 1e-12);
    CHECK(throughput_exact({9, 1.0, 1.0, 3.0}).mu == doctest::Approx(3.0).epsilon(1e-15));

    const double n = 1e6;
    const auto t = throughput_exact({int(n), 1.0 / (n * n), 1.0, 1.0});
    CHECK(std::fabs(t.mu / n - (1.0 - std::log(n) / n)) <= 1e-4);
}

TEST_CASE("three-phase split of the large-job cycle") {
    for (const Params& q : {Params{2, 0.5, 1, 1}, Params{8, 0.1, 10, 1}, Params{30, 0.9, 1, 10}, Params{10000, 1e-6, 1, 1}}) {
        const auto t = throughput_exact(q);
        CHECK(t.c_prime == doctest::Approx(t.mu * q.pn).epsilon(1e-14));
        const double sum = t.phase_large + t.phase_full + t.phase_draining;
        CHECK(std::fabs(sum * t.c_prime - 1.0) <= 1e-12);
        // The n-server job is in service a P(1,0) share of the time, so C' = P(1,0) mun.
        const double p10 = time_avg_dist(q).at(SatState1n{1, 0});
        CHECK(std::fabs(p10 * q.mun / t.c_prime - 1.0) <= 1e-12);
    }
}

TEST_CASE("relative completions, n = 2") {
    const double mu = throughput_exact(kTwo).mu;
    const auto d = delta_tilde(kTwo, mu);
    REQUIRE(d.size() == 3);
    CHECK(d[0] == 0.0);
    CHECK(d[1] == doctest::Approx(-1.0 / 7.0).epsilon(1e-14));
    CHECK(d[2] == doctest::Approx(5.0 / 7.0).epsilon(1e-14));

    const auto single = delta_tilde({6, 1.0, 1.0, 1.0}, 1.0);
    CHECK(single.size() == 1);
}

TEST_CASE("relative completions at state 1") {
    for (const Params& q : {Params{3, 0.2, 1, 1}, Params{12, 0.05, 4, 1}}) {
        const double mu = throughput_exact(q).mu;
        CHECK(delta_tilde(q, mu)[1] == doctest::Approx(1.0 - mu / q.mu1).epsilon(1e-13));
    }
}

TEST_CASE("relative completions satisfy the completion-chain Poisson equation") {
    for (const Params& q : {Params{2, 0.5, 1, 1}, Params{6, 0.3, 10, 1}, Params{25, 0.05, 1, 10}}) {
        const double mu = throughput_exact(q).mu;
        const auto d = delta_tilde(q, mu);
        const int n = q.n;
        const double p1 = 1.0 - q.pn;
        // From state i a completion either frees one server (i-1 jobs left) or all of them; the refill
        // then admits 1-server jobs until a large job is drawn or the system is full.
        for (int i = 0; i <= n; ++i) {
            const int left = i == 0 ? 0 : (i == n ? n - 1 : i - 1);
            double expect = 0.0;
            // Refill from `left` busy servers with no head job; when i < n the large job is waiting.
            if (i > 0 && i < n) {
                expect = left == 0 ? d[0] : d[left];
            } else {
                double stay = 1.0;
                for (int j = left; j < n; ++j) {
                    expect += stay * q.pn * (j == 0 ? d[0] : d[j]);
                    stay *= p1;
                }
                expect += stay * d[n];
            }
            const double reward = 1.0 - mu / state_rate(q, i);
            CHECK(std::fabs(d[i] - expect - reward) <= 1e-10 * std::max(1.0, std::fabs(d[i])));
        }
    }
}

TEST_CASE("completion average times the rate matches the time average") {
    for (const Params& q : {Params{2, 0.5, 1, 1}, Params{9, 0.2, 10, 1}, Params{40, 0.7, 1, 10}}) {
        const double mu = throughput_exact(q).mu;
        const auto p = time_avg_dist(q);
        const auto pd = completion_dist(q);
        for (int i = 0; i <= q.n; ++i) {
            const auto s = completion_state(i, q.n);
            const double lhs = pd.at(s) * mu;
            const double rhs = p.at(s) * state_rate(q, i);
            CHECK(std::fabs(lhs - rhs) <= 1e-12 * std::max(std::fabs(rhs), 1e-300));
        }
    }
}

TEST_CASE("mean relative completions") {
    const auto r = mean_delta_yd(kTwo);
    CHECK(std::fabs(r.mean_delta_yd - 4.0 / 49.0) <= 1e-12);
    CHECK(r.scaled_queue_limit == doctest::Approx(53.0 / 49.0).epsilon(1e-14));
    CHECK(r.offset_identity == doctest::Approx(r.mean_delta_yd).epsilon(1e-9));

    CHECK(mean_delta_yd({5, 1.0, 1.0, 2.0}).mean_delta_yd == 0.0);

    const double n = 1e6;
    const auto bal = mean_delta_yd({int(n), 1.0 / n, 1.0, 1.0}, 0);
    const double scaled = 2.0 * (1.0 / n) * bal.mean_delta_yd;
    CHECK(scaled > 0.8);
    CHECK(scaled < 1.2);
    CHECK(bal.delta_tilde.empty());
}

TEST_CASE("throughput grows with alpha") {
    const int n = 10000;
    double prev = 0.0;
    for (double alpha = 0.2; alpha <= 3.0 + 1e-9; alpha += 0.2) {
        const double mu = throughput_exact({n, std::pow(double(n), -alpha), 1.0, 1.0}).mu;
        CHECK(mu > prev);
        prev = mu;
    }
}

TEST_CASE("materialization caps and parameter checks") {
    CHECK_THROWS_AS(time_avg_dist({100, 0.5, 1, 1}, 50), CapacityError);
    CHECK_THROWS_AS(transition_dist({100, 0.5, 1, 1}, 50), CapacityError);
    CHECK_THROWS_AS(validate({1, 0.5, 1, 1}), ConfigError);
    CHECK_THROWS_AS(validate({4, 0.0, 1, 1}), ConfigError);
    CHECK_THROWS_AS(validate({4, 0.5, -1, 1}), ConfigError);

    const auto p = params_from_config(two_class(6, 0.25, 3.0, 2.0));
    CHECK(p.n == 6);
    CHECK(p.pn == 0.25);
    CHECK(p.mu1 == 3.0);
    CHECK(p.mun == 2.0);
    CHECK(params_from_config(two_class(6, 1.0, 3.0, 2.0)).pn == 1.0);
    CHECK_THROWS_AS(params_from_config(two_class(6, 0.0, 3.0, 2.0)), ConfigError);
}

TEST_CASE("compensated summation") {
    CompensatedSum s;
    s += 1.0;
    for (int i = 0; i < 1000; ++i) s += 1e-16;
    s += -1.0;
    CHECK(s.value() == doctest::Approx(1e-13).epsilon(1e-6));
}
