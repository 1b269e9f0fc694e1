#include "msjlab/exact1n.hpp"

#include <cmath>
#include <string>

#include "msjlab/errors.hpp"
#include "msjlab/numeric.hpp"

namespace msjlab::exact1n {

namespace {

constexpr double kFlushToZero = 1e-320;
constexpr double kIdentityTolerance = 1e-9;

// Successive powers p1^i. Multiplies incrementally and resynchronizes from
// exp(i * log1p(-pn)) every 1024 steps so the relative drift stays near
// 1e-13 even for pn close to the double epsilon.
class PowerSeries {
public:
    explicit PowerSeries(double pn) : log_p1_(std::log1p(-pn)), p1_(std::exp(log_p1_)) {}

    // Returns p1^i for i = 1, 2, ... on successive calls.
    double next() noexcept {
        ++i_;
        if (w_ == 0.0) return 0.0;
        w_ = (i_ % 1024 == 0) ? std::exp(static_cast<double>(i_) * log_p1_) : w_ * p1_;
        if (w_ < kFlushToZero) w_ = 0.0;
        return w_;
    }

    [[nodiscard]] double pow(double k) const noexcept {
        const double v = std::exp(k * log_p1_);
        return v < kFlushToZero ? 0.0 : v;
    }

    [[nodiscard]] double log_p1() const noexcept { return log_p1_; }

private:
    double log_p1_;
    double p1_;
    double w_ = 1.0;
    long long i_ = 0;
};

void check_cap(std::size_t needed, std::size_t cap, const char* what) {
    if (needed > cap) {
        throw CapacityError(std::string(what) + " needs " + std::to_string(needed) +
                            " entries, above the materialization cap " + std::to_string(cap) +
                            "; use the streaming mean_delta_yd instead");
    }
}

struct CycleSums {
    double draining_sum = 0.0;  // sum_{b=1}^{n-1} p1^b / b
    double p1n = 0.0;           // p1^n
    double gap = 0.0;           // x - 1 where x = pn * n * mu1 / C'
};

CycleSums cycle_sums(const Params& p) {
    PowerSeries pw(p.pn);
    CompensatedSum s;
    for (int b = 1; b < p.n; ++b) {
        const double w = pw.next();
        if (w == 0.0) break;
        s += w / b;
    }
    CycleSums out;
    out.draining_sum = s.value();
    out.p1n = pw.pow(p.n);
    // 1 - mu / (n mu1) = gap / (1 + gap), with p1^n - 1 taken through expm1
    // so the 1-server-dominated cancellation stays exact.
    CompensatedSum gap(std::expm1(p.n * pw.log_p1()));
    gap += p.pn * p.n * (p.mu1 / p.mun + out.draining_sum);
    out.gap = gap.value();
    return out;
}

}  // namespace

void validate(const Params& p) {
    if (p.n < 2) throw ConfigError("1-and-n formulas need n >= 2");
    if (!(p.pn > 0.0 && p.pn <= 1.0)) {
        throw ConfigError("1-and-n formulas need 0 < p_n <= 1 (p_n = 0 is the M/M/n limit)");
    }
    if (!(p.mu1 > 0.0) || !(p.mun > 0.0)) throw ConfigError("service rates must be positive");
}

Params params_from_config(const SystemConfig& config) {
    if (config.classes.size() == 1 && config.classes[0].need == config.n) {
        return {config.n, 1.0, config.classes[0].rate, config.classes[0].rate};
    }
    if (!config.is_canonical_1n()) throw ConfigError("config is not a canonical 1-and-n system");
    const auto& small = config.classes[0].need == 1 ? config.classes[0] : config.classes[1];
    const auto& large = config.classes[0].need == 1 ? config.classes[1] : config.classes[0];
    return {config.n, large.prob, small.rate, large.rate};
}

SatState1n completion_state(int index, int n) noexcept {
    if (index == 0) return {1, 0};
    if (index < n) return {1, index};
    return {0, n};
}

int completion_index(const SatState1n& s, int n) noexcept { return s.a == 1 ? s.b : n; }

double state_rate(const Params& p, int index) noexcept {
    if (index == 0) return p.mun;
    return index * p.mu1;
}

Distribution transition_dist(const Params& p, std::size_t cap) {
    validate(p);
    if (p.pn == 1.0) return {{{0, 0}, {1, 0}}, {0.5, 0.5}};
    check_cap(2 * static_cast<std::size_t>(p.n) + 1, cap, "transition distribution");

    Distribution d;
    const int n = p.n;
    PowerSeries pw(p.pn);
    std::vector<double> pow_b(n + 1);
    pow_b[0] = 1.0;
    for (int b = 1; b <= n; ++b) pow_b[b] = pw.next();

    for (int b = 0; b <= n; ++b) {
        double m = pow_b[b];
        if (b >= n - 1) m /= p.pn;
        d.support.push_back({0, b});
        d.mass.push_back(m);
    }
    for (int b = 0; b < n; ++b) {
        d.support.push_back({1, b});
        d.mass.push_back(pow_b[b]);
    }
    d.normalize();
    return d;
}

Distribution time_avg_dist(const Params& p, std::size_t cap) {
    validate(p);
    if (p.pn == 1.0) return {{{1, 0}}, {1.0}};
    check_cap(static_cast<std::size_t>(p.n) + 1, cap, "time-average distribution");

    const auto tp = throughput_exact(p);
    Distribution d;
    PowerSeries pw(p.pn);
    d.support.push_back(completion_state(0, p.n));
    d.mass.push_back(tp.c_prime / p.mun);
    for (int b = 1; b < p.n; ++b) {
        d.support.push_back(completion_state(b, p.n));
        d.mass.push_back(tp.c_prime * pw.next() / (b * p.mu1));
    }
    d.support.push_back(completion_state(p.n, p.n));
    d.mass.push_back(tp.c_prime * pw.pow(p.n) / (p.n * p.mu1 * p.pn));
    d.normalize();
    return d;
}

Distribution completion_dist(const Params& p, std::size_t cap) {
    validate(p);
    if (p.pn == 1.0) return {{{1, 0}}, {1.0}};
    check_cap(static_cast<std::size_t>(p.n) + 1, cap, "completion distribution");

    Distribution d;
    PowerSeries pw(p.pn);
    d.support.push_back(completion_state(0, p.n));
    d.mass.push_back(p.pn);
    for (int b = 1; b < p.n; ++b) {
        d.support.push_back(completion_state(b, p.n));
        d.mass.push_back(pw.next() * p.pn);
    }
    d.support.push_back(completion_state(p.n, p.n));
    d.mass.push_back(pw.pow(p.n));
    return d;
}

Throughput throughput_exact(const Params& p) {
    validate(p);
    Throughput t;
    t.phase_large = 1.0 / p.mun;
    if (p.pn == 1.0) {
        t.c_prime = p.mun;
        t.mu = p.mun;
        return t;
    }
    const auto sums = cycle_sums(p);
    t.phase_full = sums.p1n / (p.n * p.mu1 * p.pn);
    t.phase_draining = sums.draining_sum / p.mu1;
    CompensatedSum inv_c;
    inv_c += t.phase_large;
    inv_c += t.phase_full;
    inv_c += t.phase_draining;
    t.c_prime = 1.0 / inv_c.value();
    t.mu = t.c_prime / p.pn;
    return t;
}

std::vector<double> delta_tilde(const Params& p, double mu, std::size_t cap) {
    validate(p);
    if (p.pn == 1.0) return {0.0};
    check_cap(static_cast<std::size_t>(p.n) + 1, cap, "relative-completions vector");

    const double ratio = mu / p.mu1;
    std::vector<double> d(p.n + 1);
    CompensatedSum harmonic;
    d[0] = 0.0;
    for (int i = 1; i < p.n; ++i) {
        harmonic += 1.0 / i;
        d[i] = i - ratio * harmonic.value();
    }
    d[p.n] = p.n - 1 + 1.0 / p.pn - ratio * harmonic.value() - mu / (p.n * p.pn * p.mu1);
    return d;
}

ExactResult mean_delta_yd(const Params& p, std::size_t cap) {
    validate(p);
    ExactResult r;
    if (p.pn == 1.0) {
        r.mu = p.mun;
        r.c_prime = p.mun;
        r.delta_tilde = {0.0};
        r.scaled_queue_limit = 1.0;
        return r;
    }

    const auto tp = throughput_exact(p);
    const auto sums = cycle_sums(p);
    r.mu = tp.mu;
    r.c_prime = tp.c_prime;
    const double ratio = r.mu / p.mu1;
    const bool keep = static_cast<std::size_t>(p.n) + 1 <= cap;
    if (keep) {
        r.delta_tilde.assign(p.n + 1, 0.0);
    }

    CompensatedSum direct;    // pi^d_i (1 - mu / mu_i) * delta_tilde(i)
    CompensatedSum identity;  // (pi^d_i - P_i) * delta_tilde(i)
    CompensatedSum magnitude;
    CompensatedSum harmonic;
    PowerSeries pw(p.pn);
    bool exhausted = false;
    for (int i = 1; i < p.n; ++i) {
        harmonic += 1.0 / i;
        const double dt = i - ratio * harmonic.value();
        if (keep) r.delta_tilde[i] = dt;
        if (exhausted) continue;
        const double w = pw.next();
        if (w == 0.0) {
            // Remaining masses underflow; only the vector still needs filling.
            exhausted = true;
            if (!keep) break;
            continue;
        }
        const double term = w * p.pn * (1.0 - ratio / i) * dt;
        direct += term;
        magnitude += std::fabs(term);
        identity += (w * p.pn - r.c_prime * w / (i * p.mu1)) * dt;
    }

    // Boundary state n; harmonic holds H_{n-1} whenever p1^n is nonzero.
    const double one_minus = sums.gap / (1.0 + sums.gap);  // 1 - mu / (n mu1)
    const double dt_n = (p.n - 1) - ratio * harmonic.value() + one_minus / p.pn;
    if (keep) r.delta_tilde[p.n] = dt_n;
    if (sums.p1n > 0.0) {
        const double term = sums.p1n * one_minus * dt_n;
        direct += term;
        magnitude += std::fabs(term);
        identity += (sums.p1n - r.c_prime * sums.p1n / (p.n * p.mu1 * p.pn)) * dt_n;
    }

    r.mean_delta_yd = direct.value();
    r.offset_identity = identity.value();
    r.scaled_queue_limit = r.mean_delta_yd + 1.0;

    const double diff = std::fabs(r.mean_delta_yd - r.offset_identity);
    const double scale = std::fmax(std::fabs(r.mean_delta_yd), 1e-3 * magnitude.value());
    if (diff > kIdentityTolerance * scale) {
        throw SolverError("relative-completions offset identity violated", diff / scale);
    }
    return r;
}

}  // namespace msjlab::exact1n
