#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "msjlab/errors.hpp"
#include "msjlab/exact1n.hpp"
#include "msjlab/satoracle.hpp"
#include "msjlab/sim.hpp"

using namespace msjlab;
using namespace msjlab::satoracle;

namespace {

using Key = std::pair<std::vector<int>, int>;

// Lists every draw sequence explicitly and only then groups them by outcome.
void draw_sequences(int free, std::vector<int> admitted, double prob, const SystemConfig& cfg,
                    std::map<Key, double>& out) {
    if (free == 0) {
        out[{admitted, kNoHead}] += prob;
        return;
    }
    for (std::size_t k = 0; k < cfg.classes.size(); ++k) {
        const auto& c = cfg.classes[k];
        if (c.prob == 0.0) continue;
        if (c.need <= free) {
            auto next = admitted;
            ++next[k];
            draw_sequences(free - c.need, next, prob * c.prob, cfg, out);
        } else {
            out[{admitted, int(k)}] += prob * c.prob;
        }
    }
}

std::map<Key, double> as_map(const std::vector<RefillOutcome>& v) {
    std::map<Key, double> m;
    for (const auto& o : v) m[{o.admitted, o.head}] += o.prob;
    return m;
}

void check_same(const std::map<Key, double>& a, const std::map<Key, double>& b) {
    REQUIRE(a.size() == b.size());
    for (const auto& [k, v] : a) {
        REQUIRE(b.count(k) == 1);
        CHECK(std::fabs(b.at(k) - v) <= 1e-14);
    }
}

}  // namespace

TEST_CASE("refill law for two free servers") {
    const auto cfg = two_class(2, 0.5, 1.0, 1.0);
    const auto m = as_map(refill_distribution(2, kNoHead, cfg));
    REQUIRE(m.size() == 3);
    CHECK(m.at({{0, 1}, kNoHead}) == doctest::Approx(0.5));
    CHECK(m.at({{2, 0}, kNoHead}) == doctest::Approx(0.25));
    CHECK(m.at({{1, 0}, 1}) == doctest::Approx(0.25));
}

TEST_CASE("refill law edge cases") {
    const auto cfg = two_class(4, 0.3, 1.0, 1.0);
    const auto none = refill_distribution(0, 1, cfg);
    REQUIRE(none.size() == 1);
    CHECK(none[0].head == 1);
    CHECK(none[0].prob == 1.0);
    CHECK(none[0].admitted == std::vector<int>{0, 0});

    const auto whole = two_class(6, 1.0, 1.0, 1.0);
    const auto one = refill_distribution(6, kNoHead, whole);
    REQUIRE(one.size() == 1);
    CHECK(one[0].admitted == std::vector<int>{1});
    CHECK(one[0].head == kNoHead);
    CHECK(one[0].prob == 1.0);
}

TEST_CASE("refill law matches explicit draw sequences") {
    const std::vector<SystemConfig> configs = {
        two_class(5, 0.3, 1.0, 1.0),
        validate_config({10, {{1, 0.5, 1.0}, {5, 0.25, 1.0}, {10, 0.25, 1.0}}}),
        validate_config({7, {{2, 0.4, 1.0}, {3, 0.6, 2.0}}}),
    };
    for (const auto& cfg : configs) {
        for (int free = 1; free <= cfg.n; ++free) {
            std::map<Key, double> brute;
            draw_sequences(free, std::vector<int>(cfg.classes.size(), 0), 1.0, cfg, brute);
            check_same(as_map(refill_distribution(free, kNoHead, cfg)), brute);
        }
    }
}

TEST_CASE("completion-state enumeration") {
    const auto cfg = two_class(2, 0.5, 1.0, 1.0);
    const auto chain = enumerate_chain(cfg);
    REQUIRE(chain.size() == 3);
    std::vector<std::pair<int, int>> labels;
    for (const auto& s : chain.states) {
        const auto ab = to_state_1n(s, cfg);
        REQUIRE(ab.has_value());
        labels.emplace_back(ab->a, ab->b);
    }
    std::sort(labels.begin(), labels.end());
    CHECK(labels == std::vector<std::pair<int, int>>{{0, 2}, {1, 0}, {1, 1}});

    CHECK(enumerate_chain(two_class(8, 1.0, 1.0, 3.0)).size() == 1);
}

TEST_CASE("kernel rows are stochastic") {
    const std::vector<SystemConfig> configs = {
        validate_config({10, {{1, 0.5, 1.0}, {5, 0.25, 1.0}, {10, 0.25, 1.0}}}),
        sim::setting_config(sim::Setting::HalfSize, 10, 0.7),
        two_class(9, 0.2, 10.0, 1.0),
    };
    for (const auto& cfg : configs) {
        const auto chain = enumerate_chain(cfg);
        CHECK(chain.size() > 1);
        for (const auto& row : chain.kernel) {
            double sum = 0.0;
            for (const auto& e : row) sum += e.prob;
            CHECK(std::fabs(sum - 1.0) <= 1e-12);
        }
    }
}

TEST_CASE("stationary solve, n = 2") {
    const auto cfg = two_class(2, 0.5, 1.0, 1.0);
    const auto r = solve(cfg);
    CHECK(std::fabs(r.stationary.mu - 8.0 / 7.0) <= 1e-12);
    CHECK(std::fabs(r.poisson.mean_delta_yd - 4.0 / 49.0) <= 1e-12);
    const std::map<std::pair<int, int>, double> expect = {{{1, 0}, 4.0 / 7.0}, {{1, 1}, 2.0 / 7.0}, {{0, 2}, 1.0 / 7.0}};
    for (std::size_t i = 0; i < r.chain.size(); ++i) {
        const auto ab = *to_state_1n(r.chain.states[i], cfg);
        CHECK(std::fabs(r.stationary.time_avg.mass[i] - expect.at({ab.a, ab.b})) <= 1e-12);
    }
    CHECK(r.stationary.residual <= 1e-12);
    CHECK(r.poisson.residual <= 1e-10);
}

TEST_CASE("constant-rate systems") {
    const auto whole = solve(two_class(5, 1.0, 1.0, 3.0));
    CHECK(whole.stationary.mu == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(whole.poisson.mean_delta_yd == 0.0);

    const auto pairs = solve(validate_config({4, {{2, 1.0, 1.0}}}));
    REQUIRE(pairs.chain.size() == 1);
    CHECK(pairs.chain.states[0].in_service == std::vector<int>{2});
    CHECK(pairs.stationary.mu == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(std::fabs(pairs.poisson.mean_delta_yd) <= 1e-14);
}

TEST_CASE("agreement with the closed forms") {
    for (int n = 2; n <= 8; ++n) {
        for (double pn : {0.1, 0.5, 0.9}) {
            for (auto [mu1, mun] : {std::pair{1.0, 1.0}, {10.0, 1.0}, {1.0, 10.0}}) {
                const exact1n::Params p{n, pn, mu1, mun};
                const auto cfg = two_class(n, pn, mu1, mun);
                const auto oracle = solve(cfg);
                const auto exact = exact1n::mean_delta_yd(p);
                CHECK(std::fabs(oracle.stationary.mu / exact.mu - 1.0) <= 1e-9);
                CHECK(std::fabs(oracle.poisson.mean_delta_yd - exact.mean_delta_yd) <=
                      1e-9 * std::fabs(exact.mean_delta_yd));
                const auto P = exact1n::time_avg_dist(p);
                const auto pd = exact1n::completion_dist(p);
                for (std::size_t i = 0; i < oracle.chain.size(); ++i) {
                    const auto ab = *to_state_1n(oracle.chain.states[i], cfg);
                    CHECK(std::fabs(oracle.stationary.time_avg.mass[i] - P.at(ab)) <= 1e-10);
                    CHECK(std::fabs(oracle.stationary.completion.mass[i] - pd.at(ab)) <= 1e-10);
                }
            }
        }
    }
}

TEST_CASE("half-size throughput grows with alpha") {
    double prev = 0.0;
    for (double a = 0.0; a <= 3.0 + 1e-9; a += 0.5) {
        const double mu = sim::stability_threshold(sim::setting_config(sim::Setting::HalfSize, 10, a));
        CHECK(mu > prev);
        prev = mu;
    }
}

TEST_CASE("state cap") {
    const auto cfg = validate_config({40, {{1, 0.4, 1.0}, {3, 0.3, 1.0}, {7, 0.3, 1.0}}});
    CHECK(estimate_state_count(cfg) > 100);
    CHECK_THROWS_AS(enumerate_chain(cfg, 100), CapacityError);
}
