#include "msjlab/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "msjlab/asymptotics.hpp"
#include "msjlab/errors.hpp"
#include "msjlab/exact1n.hpp"
#include "msjlab/model.hpp"
#include "msjlab/report.hpp"
#include "msjlab/satoracle.hpp"
#include "msjlab/sim.hpp"

namespace msjlab::cli {

namespace {

using nlohmann::json;
using report::CsvRow;

const std::vector<std::string> kSubcommands = {"exact", "asymptotic", "saturated-solve", "simulate", "sweep", "compare"};

const std::vector<std::string> kSystemFlags = {"n", "pn", "mu1", "mun", "alpha", "c", "setting"};
const std::vector<std::string> kSimFlags = {"jobs", "warmup", "batches", "seed", "stream"};

std::vector<std::string> allowed_flags(const std::string& sub) {
    std::vector<std::string> f;
    auto add = [&f](const std::vector<std::string>& more) { f.insert(f.end(), more.begin(), more.end()); };
    if (sub == "exact") {
        add(kSystemFlags);
        add({"cap"});
    } else if (sub == "asymptotic") {
        add({"n", "n-grid", "alpha", "c", "beta", "mu1", "mun"});
    } else if (sub == "saturated-solve") {
        add(kSystemFlags);
        add({"cap"});
    } else if (sub == "simulate") {
        add(kSystemFlags);
        add(kSimFlags);
        add({"lambda", "rho", "rho-grid"});
    } else if (sub == "sweep") {
        add({"n", "setting", "alpha-grid", "fractions", "mode", "near-stability", "threads"});
        add(kSimFlags);
    } else if (sub == "compare") {
        add({"n-grid", "alpha", "c", "mu1", "mun"});
    }
    return f;
}

const char* flag_help(const std::string& name) {
    static const std::map<std::string, const char*> help = {
        {"n", "server count"},
        {"pn", "probability of an n-server job"},
        {"mu1", "1-server job service rate"},
        {"mun", "n-server job service rate"},
        {"alpha", "power-law exponent, p_n = c n^-alpha"},
        {"c", "power-law prefactor"},
        {"beta", "log-correction exponent, p_n = c n^-alpha (ln n)^-beta"},
        {"setting", "original | duration_scaled | half_size | three_class"},
        {"cap", "largest state space or vector to materialize"},
        {"jobs", "completions per simulated point, warmup included"},
        {"warmup", "completions discarded before measuring"},
        {"batches", "batch count for confidence intervals"},
        {"seed", "RNG seed"},
        {"stream", "first RNG substream"},
        {"lambda", "arrival rate"},
        {"rho", "arrival rate as a fraction of the stability threshold"},
        {"rho-grid", "list of rho values, a,b,c or start:stop:step"},
        {"n-grid", "server counts, start:stop:log or a,b,c"},
        {"alpha-grid", "alpha values, start:stop:step or a,b,c"},
        {"fractions", "load fractions, interpreted per --mode"},
        {"mode", "stability (lambda = f mu) | capacity (offered load f)"},
        {"near-stability", "capacity mode at margin * the smallest max load over the grid"},
        {"threads", "simulation workers (capped by MSJLAB_THREADS)"},
    };
    auto it = help.find(name);
    return it == help.end() ? "" : it->second;
}

const char* subcommand_help(const std::string& name) {
    static const std::map<std::string, const char*> help = {
        {"exact", "closed-form saturated metrics of a 1-and-n system"},
        {"asymptotic", "leading-order throughput and relative completions"},
        {"saturated-solve", "enumerate and solve the saturated chain of any class mix"},
        {"simulate", "simulate the open queue at one load or a rho grid"},
        {"sweep", "simulated mean queue length across an alpha grid"},
        {"compare", "exact values against the leading-order formulas over an n grid"},
    };
    return help.at(name);
}

double parse_double(const std::string& flag, const std::string& text) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (text.empty() || end != text.c_str() + text.size() || errno == ERANGE || !std::isfinite(v)) {
        throw ConfigError("invalid value for --" + flag + ": '" + text + "'");
    }
    return v;
}

long long parse_count(const std::string& flag, const std::string& text) {
    const double v = parse_double(flag, text);
    if (v != std::floor(v) || std::fabs(v) > 9.0e18) {
        throw ConfigError("--" + flag + " must be an integer, got '" + text + "'");
    }
    return static_cast<long long>(v);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) parts.push_back(cur);
    if (!s.empty() && s.back() == sep) parts.emplace_back();
    return parts;
}

class Overrides {
public:
    explicit Overrides(const std::map<std::string, std::string>& m) : m_(m) {}

    [[nodiscard]] bool has(const std::string& k) const { return m_.count(k) > 0; }
    [[nodiscard]] const std::string& str(const std::string& k) const { return m_.at(k); }

    [[nodiscard]] std::optional<double> real(const std::string& k) const {
        if (!has(k)) return std::nullopt;
        return parse_double(k, str(k));
    }
    [[nodiscard]] std::optional<long long> count(const std::string& k) const {
        if (!has(k)) return std::nullopt;
        return parse_count(k, str(k));
    }

private:
    const std::map<std::string, std::string>& m_;
};

int as_int(const std::string& flag, long long v) {
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
        throw ConfigError("--" + flag + " out of range");
    }
    return static_cast<int>(v);
}

// The system under study plus the labels that go into every CSV row.
struct Resolved {
    SystemConfig system;
    std::string setting = "custom";
    std::optional<double> alpha;
    std::optional<double> pn;
    std::optional<double> mu1;
    std::optional<double> mun;
    std::optional<PowerLawFamily> family;
};

Resolved resolve_system(const Overrides& ov, const std::optional<ConfigDocument>& doc) {
    Resolved r;
    std::optional<int> n;
    if (auto v = ov.count("n")) n = as_int("n", *v);
    else if (doc) n = doc->n;

    if (ov.has("setting")) {
        if (!n) throw ConfigError("--setting requires --n");
        auto a = ov.real("alpha");
        if (!a) throw ConfigError("--setting requires --alpha");
        const sim::Setting s = sim::parse_setting(ov.str("setting"));
        r.system = sim::setting_config(s, *n, *a);
        r.setting = std::string(sim::to_string(s));
        r.alpha = a;
        r.pn = std::pow(static_cast<double>(*n), -*a);
        r.mu1 = r.system.classes.front().rate;
        r.mun = r.system.classes.back().rate;
        return r;
    }

    std::optional<double> pn = ov.real("pn");
    std::optional<double> mu1 = ov.real("mu1");
    std::optional<double> mun = ov.real("mun");

    std::optional<PowerLawFamily> family;
    if (doc && doc->family) family = doc->family;
    if (ov.has("alpha") || ov.has("c")) {
        PowerLawFamily f = family.value_or(PowerLawFamily{});
        if (auto a = ov.real("alpha")) f.alpha = *a;
        else if (!family) throw ConfigError("--c requires --alpha");
        if (auto c = ov.real("c")) f.c = *c;
        validate_family(f);
        family = f;
    }

    // A canonical config file contributes defaults for every flag.
    std::optional<SystemConfig> from_doc;
    if (doc && !doc->classes.empty()) from_doc = validate_config(SystemConfig{doc->n, doc->classes});
    if (from_doc && from_doc->is_canonical_1n()) {
        const auto p = exact1n::params_from_config(*from_doc);
        if (!pn && !family) pn = p.pn;
        if (!mu1) mu1 = p.mu1;
        if (!mun) mun = p.mun;
    }

    if (!n) throw ConfigError("no server count: give --n or a config file");
    if (!pn && family) {
        pn = family->pn(*n);
        r.alpha = family->alpha;
        r.family = family;
    }
    if (pn) {
        r.system = validate_config(two_class(*n, *pn, mu1.value_or(1.0), mun.value_or(1.0)));
        r.setting = "canonical";
        r.pn = pn;
        r.mu1 = mu1.value_or(1.0);
        r.mun = mun.value_or(1.0);
        return r;
    }
    if (!from_doc) throw ConfigError("no system given: use --pn, --alpha, --setting or a config with classes");
    if (from_doc->n != *n) throw ConfigError("--n conflicts with the config's class needs");
    if (mu1 || mun) throw ConfigError("--mu1/--mun only apply to 1-and-n systems");
    r.system = *from_doc;
    return r;
}

CsvRow base_row(const Resolved& r) {
    CsvRow row;
    row.setting = r.setting;
    row.n = r.system.n;
    row.alpha = r.alpha;
    row.p_n = r.pn;
    row.mu1 = r.mu1;
    row.mun = r.mun;
    return row;
}

CsvRow metric(CsvRow row, const std::string& name, double value, const std::string& method) {
    row.metric = name;
    row.value = value;
    row.method = method;
    return row;
}

CsvRow with_ci(CsvRow row, double half) {
    row.ci_low = row.value - half;
    row.ci_high = row.value + half;
    return row;
}

json resolved_json(const Resolved& r) {
    json j = to_json(r.system);
    j["setting"] = r.setting;
    if (r.alpha) j["alpha"] = *r.alpha;
    if (r.family) j["family"] = {{"c", r.family->c}, {"alpha", r.family->alpha}};
    return j;
}

struct Output {
    std::vector<std::string> provenance;
    std::vector<CsvRow> rows;
    std::vector<report::Panel> panels;
};

std::size_t cap_from(const Overrides& ov, std::size_t fallback) {
    if (auto c = ov.count("cap")) {
        if (*c < 1) throw ConfigError("--cap must be positive");
        return static_cast<std::size_t>(*c);
    }
    return fallback;
}

sim::SimConfig sim_config(const Overrides& ov, const SystemConfig& system) {
    sim::SimConfig cfg;
    cfg.system = system;
    if (auto v = ov.count("jobs")) cfg.jobs = *v;
    if (auto v = ov.count("warmup")) cfg.warmup_jobs = *v;
    if (auto v = ov.count("batches")) cfg.batches = as_int("batches", *v);
    if (auto v = ov.count("seed")) {
        if (*v < 0) throw ConfigError("--seed must be non-negative");
        cfg.seed = static_cast<std::uint64_t>(*v);
    }
    if (auto v = ov.count("stream")) {
        if (*v < 0) throw ConfigError("--stream must be non-negative");
        cfg.stream = static_cast<std::uint64_t>(*v);
    }
    return cfg;
}

json sim_json(const sim::SimConfig& cfg) {
    return {{"jobs", cfg.jobs},           {"warmup", cfg.resolved_warmup()}, {"batches", cfg.batches},
            {"seed", cfg.seed},           {"stream", cfg.stream},            {"rng", std::string(sim::kRngAlgorithm)},
            {"instability_bound", cfg.instability_bound}};
}

const std::vector<std::string> kColors = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
const std::vector<report::Marker> kMarkers = {report::Marker::Square, report::Marker::TriangleUp,
                                              report::Marker::TriangleDown, report::Marker::Circle};

report::Series series(std::string label, std::size_t k) {
    report::Series s;
    s.label = std::move(label);
    s.color = kColors[k % kColors.size()];
    s.marker = kMarkers[k % kMarkers.size()];
    return s;
}

Output cmd_exact(const Overrides& ov, const std::optional<ConfigDocument>& doc) {
    const Resolved r = resolve_system(ov, doc);
    const auto p = exact1n::params_from_config(r.system);
    const auto res = exact1n::mean_delta_yd(p, cap_from(ov, exact1n::kDefaultMaterializationCap));
    const auto tp = exact1n::throughput_exact(p);

    Output o;
    json j = resolved_json(r);
    j["params"] = {{"n", p.n}, {"pn", p.pn}, {"mu1", p.mu1}, {"mun", p.mun}};
    o.provenance = {"msjlab exact", "config: " + j.dump()};
    const CsvRow b = base_row(r);
    const std::string m = "exact1n";
    o.rows = {metric(b, "mu", res.mu, m),
              metric(b, "c_prime", res.c_prime, m),
              metric(b, "phase_large", tp.phase_large, m),
              metric(b, "phase_full", tp.phase_full, m),
              metric(b, "phase_draining", tp.phase_draining, m),
              metric(b, "mean_delta_yd", res.mean_delta_yd, m),
              metric(b, "scaled_queue_limit", res.scaled_queue_limit, m)};

    if (!res.delta_tilde.empty()) {
        report::Panel panel;
        panel.title = "relative completions, n = " + std::to_string(p.n);
        panel.x_label = "1-server jobs in service";
        panel.y_label = "delta tilde";
        auto s = series("delta tilde", 0);
        for (std::size_t i = 0; i < res.delta_tilde.size(); ++i) s.points.emplace_back(double(i), res.delta_tilde[i]);
        panel.series.push_back(std::move(s));
        o.panels.push_back(std::move(panel));
    }
    return o;
}

std::vector<double> n_values(const Overrides& ov) {
    std::vector<double> ns;
    if (ov.has("n-grid")) {
        for (long long v : parse_n_grid(ov.str("n-grid"))) ns.push_back(double(v));
    }
    if (auto n = ov.count("n")) ns.push_back(double(*n));
    if (ns.empty()) throw ConfigError("give --n or --n-grid");
    return ns;
}

Output cmd_asymptotic(const Overrides& ov) {
    auto alpha = ov.real("alpha");
    if (!alpha) throw ConfigError("asymptotic requires --alpha");
    asymptotics::LogCorrectedFamily lf{ov.real("c").value_or(1.0), *alpha, ov.real("beta").value_or(0.0)};
    const asymptotics::Family fam = lf.beta == 0.0
                                        ? asymptotics::Family{PowerLawFamily{lf.c, lf.alpha}}
                                        : asymptotics::Family{lf};
    if (const auto* pl = std::get_if<PowerLawFamily>(&fam)) validate_family(*pl);
    const double mu1 = ov.real("mu1").value_or(1.0);
    const double mun = ov.real("mun").value_or(1.0);
    const auto cls = asymptotics::classify_regime(fam);
    const std::string method = "asymptotic:" + std::string(asymptotics::to_string(cls.regime));

    Output o;
    json j = {{"family", {{"c", lf.c}, {"alpha", lf.alpha}, {"beta", lf.beta}}},
              {"mu1", mu1},
              {"mun", mun},
              {"regime", std::string(asymptotics::to_string(cls.regime))},
              {"below_log_boundary", cls.below_log_boundary}};
    o.provenance = {"msjlab asymptotic", "config: " + j.dump()};

    report::Panel panel;
    panel.title = "leading-order throughput";
    panel.x_label = "n";
    panel.y_label = "mu";
    panel.log_x = panel.log_y = true;
    auto s = series("asymptotic mu", 0);
    for (double n : n_values(ov)) {
        CsvRow b;
        b.setting = "canonical";
        b.n = n;
        b.alpha = lf.alpha;
        b.p_n = asymptotics::family_pn(fam, n);
        b.mu1 = mu1;
        b.mun = mun;
        const auto mu = asymptotics::throughput_asym(n, fam, mu1, mun);
        o.rows.push_back(metric(b, "mu_asym", mu.value, method));
        if (mu.alternate) o.rows.push_back(metric(b, "mu_asym_alternate", *mu.alternate, method));
        s.points.emplace_back(n, mu.value);
        try {
            o.rows.push_back(metric(b, "delta_asym", asymptotics::delta_asym(n, fam), method));
        } catch (const UnsupportedError&) {
            // Only throughput is available in this regime.
        }
    }
    panel.series.push_back(std::move(s));
    o.panels.push_back(std::move(panel));
    return o;
}

std::string state_label(const satoracle::SatState& s) {
    std::string out = "(";
    for (std::size_t k = 0; k < s.in_service.size(); ++k) out += (k ? " " : "") + std::to_string(s.in_service[k]);
    out += s.head == satoracle::kNoHead ? "|-)" : "|" + std::to_string(s.head) + ")";
    return out;
}

Output cmd_saturated(const Overrides& ov, const std::optional<ConfigDocument>& doc) {
    const Resolved r = resolve_system(ov, doc);
    const auto res = satoracle::solve(r.system, cap_from(ov, satoracle::kDefaultStateCap));

    Output o;
    o.provenance = {"msjlab saturated-solve", "config: " + resolved_json(r).dump(),
                    "states are (in service per class by need | blocked head class)"};
    const CsvRow b = base_row(r);
    const std::string m = "satoracle";
    o.rows = {metric(b, "mu", res.stationary.mu, m),
              metric(b, "mean_delta_yd", res.poisson.mean_delta_yd, m),
              metric(b, "scaled_queue_limit", res.poisson.mean_delta_yd + 1.0, m),
              metric(b, "state_count", double(res.chain.size()), m),
              metric(b, "stationary_residual", res.stationary.residual, m),
              metric(b, "poisson_residual", res.poisson.residual, m)};
    const auto& st = res.stationary;
    auto sp = series("time average P", 0);
    auto sd = series("completion average", 1);
    for (std::size_t i = 0; i < res.chain.size(); ++i) {
        const std::string label = state_label(res.chain.states[i]);
        o.rows.push_back(metric(b, "P" + label, st.time_avg.mass[i], m));
        o.rows.push_back(metric(b, "pi_d" + label, st.completion.mass[i], m));
        o.rows.push_back(metric(b, "delta" + label, res.poisson.delta[i], m));
        sp.points.emplace_back(double(i), st.time_avg.mass[i]);
        sd.points.emplace_back(double(i), st.completion.mass[i]);
    }
    report::Panel panel;
    panel.title = "saturated-system distributions";
    panel.x_label = "state index";
    panel.y_label = "probability";
    panel.log_y = true;
    panel.series = {std::move(sp), std::move(sd)};
    o.panels.push_back(std::move(panel));
    return o;
}

void push_sim_rows(std::vector<CsvRow>& rows, CsvRow b, const sim::SimResult& res, std::uint64_t seed) {
    b.seed = seed;
    const std::string m = "simulation";
    rows.push_back(with_ci(metric(b, "mean_q", res.mean_q, m), res.ci_halfwidth));
    rows.push_back(with_ci(metric(b, "mean_n_sys", res.mean_n_sys, m), res.ci_n_sys));
    rows.push_back(with_ci(metric(b, "mean_response", res.mean_response, m), res.ci_response));
    rows.push_back(metric(b, "util", res.util, m));
    rows.push_back(metric(b, "throughput", res.throughput, m));
}

Output cmd_simulate(const Overrides& ov, const std::optional<ConfigDocument>& doc) {
    const Resolved r = resolve_system(ov, doc);
    sim::SimConfig cfg = sim_config(ov, r.system);
    const double mu = sim::stability_threshold(r.system);
    cfg.mu = mu;

    Output o;
    json j = resolved_json(r);
    j["sim"] = sim_json(cfg);
    j["mu"] = mu;

    if (ov.has("rho-grid")) {
        if (ov.has("lambda") || ov.has("rho")) throw ConfigError("--rho-grid excludes --lambda and --rho");
        const auto grid = parse_real_grid(ov.str("rho-grid"));
        const auto p = exact1n::params_from_config(r.system);
        j["rho_grid"] = grid;
        o.provenance = {"msjlab simulate", "config: " + j.dump(),
                        "point i uses substream stream + i; scaled = mean * (1 - rho)"};
        const auto table = sim::heavy_traffic_check(p, grid, cfg);
        auto sq = series("waiting (1 - rho)", 0);
        auto sn = series("in system (1 - rho)", 1);
        auto sl = series("limit", 2);
        for (std::size_t i = 0; i < table.size(); ++i) {
            const auto& t = table[i];
            CsvRow b = base_row(r);
            b.lambda = t.lambda;
            b.rho = t.rho;
            push_sim_rows(o.rows, b, t.result, cfg.seed);
            b.seed = cfg.seed;
            o.rows.push_back(with_ci(metric(b, "scaled_q", t.scaled_q, "simulation"), t.scaled_q_ci));
            o.rows.push_back(with_ci(metric(b, "scaled_n_sys", t.scaled_n_sys, "simulation"), t.scaled_n_sys_ci));
            o.rows.push_back(metric(b, "scaled_queue_limit", t.limit, "exact1n"));
            sq.points.emplace_back(t.rho, t.scaled_q);
            sn.points.emplace_back(t.rho, t.scaled_n_sys);
            sl.points.emplace_back(t.rho, t.limit);
        }
        report::Panel panel;
        panel.title = "heavy-traffic scaling";
        panel.x_label = "rho";
        panel.y_label = "scaled mean";
        panel.series = {std::move(sq), std::move(sn), std::move(sl)};
        o.panels.push_back(std::move(panel));
        return o;
    }

    if (ov.has("lambda") == ov.has("rho")) throw ConfigError("give exactly one of --lambda, --rho, --rho-grid");
    cfg.lambda = ov.has("lambda") ? *ov.real("lambda") : *ov.real("rho") * mu;
    j["lambda"] = cfg.lambda;
    o.provenance = {"msjlab simulate", "config: " + j.dump()};
    const auto res = sim::simulate(cfg);
    CsvRow b = base_row(r);
    b.lambda = cfg.lambda;
    b.rho = cfg.lambda / mu;
    push_sim_rows(o.rows, b, res, cfg.seed);
    o.rows.push_back(metric(b, "capacity_fraction", offered_load_fraction(cfg.lambda, r.system), "model"));
    o.rows.push_back(metric(b, "mu", mu, r.system.is_canonical_1n() ? "exact1n" : "satoracle"));
    return o;
}

Output cmd_sweep(const Overrides& ov) {
    if (!ov.has("setting")) throw ConfigError("sweep requires --setting");
    const sim::Setting setting = sim::parse_setting(ov.str("setting"));
    const int n = as_int("n", ov.count("n").value_or(10));
    const auto alphas = parse_real_grid(ov.has("alpha-grid") ? ov.str("alpha-grid") : "0:3:0.1");
    sim::LoadMode mode = ov.has("mode") ? sim::parse_load_mode(ov.str("mode")) : sim::LoadMode::StabilityFraction;
    std::vector<double> fractions;
    if (ov.has("near-stability")) {
        if (ov.has("fractions") || ov.has("mode")) throw ConfigError("--near-stability excludes --fractions and --mode");
        const double margin = *ov.real("near-stability");
        mode = sim::LoadMode::CapacityFraction;
        fractions = {sim::near_stability_capacity_fraction(setting, n, alphas, margin)};
    } else {
        fractions = parse_real_grid(ov.has("fractions") ? ov.str("fractions") : "0.95");
    }
    const sim::SimConfig cfg = sim_config(ov, SystemConfig{});
    const int threads = resolve_threads(as_int("threads", ov.count("threads").value_or(0)));
    const auto rows = sim::alpha_sweep(n, alphas, fractions, setting, mode, cfg, threads);

    Output o;
    json j = {{"setting", std::string(sim::to_string(setting))},
              {"n", n},
              {"alpha_grid", alphas},
              {"fractions", fractions},
              {"mode", std::string(sim::to_string(mode))},
              {"sim", sim_json(cfg)}};
    if (ov.has("near-stability")) j["near_stability_margin"] = *ov.real("near-stability");
    o.provenance = {"msjlab sweep", "config: " + j.dump(), "row k uses substream stream + k"};

    std::vector<report::Series> curves;
    for (std::size_t k = 0; k < fractions.size(); ++k) {
        char label[64];
        std::snprintf(label, sizeof label, "%s %.4g", std::string(sim::to_string(mode)).c_str(), fractions[k]);
        curves.push_back(series(label, k));
    }
    for (const auto& row : rows) {
        const SystemConfig sys = sim::setting_config(setting, n, row.alpha);
        CsvRow b;
        b.setting = std::string(sim::to_string(setting));
        b.n = n;
        b.alpha = row.alpha;
        b.p_n = row.p;
        b.mu1 = sys.classes.front().rate;
        b.mun = sys.classes.back().rate;
        b.lambda = row.lambda;
        b.rho = row.rho;
        b.seed = cfg.seed;
        o.rows.push_back(metric(b, "mu", row.mu, "model"));
        o.rows.push_back(metric(b, "capacity_fraction", row.capacity_fraction, "model"));
        o.rows.push_back(metric(b, "max_capacity_fraction", row.max_capacity_fraction, "model"));
        o.rows.push_back(metric(b, "stable", row.stable ? 1.0 : 0.0, "model"));
        if (row.result) {
            push_sim_rows(o.rows, b, *row.result, cfg.seed);
            const auto k = static_cast<std::size_t>(std::find(fractions.begin(), fractions.end(), row.fraction) -
                                                    fractions.begin());
            if (k < curves.size()) curves[k].points.emplace_back(row.alpha, row.result->mean_q);
        }
    }
    report::Panel panel;
    panel.title = std::string(sim::to_string(setting)) + ", n = " + std::to_string(n);
    panel.x_label = "alpha";
    panel.y_label = "mean queue length";
    panel.log_y = true;
    panel.series = std::move(curves);
    o.panels.push_back(std::move(panel));
    return o;
}

Output cmd_compare(const Overrides& ov) {
    auto alpha = ov.real("alpha");
    if (!alpha) throw ConfigError("compare requires --alpha");
    const PowerLawFamily fam{ov.real("c").value_or(1.0), *alpha};
    validate_family(fam);
    const double mu1 = ov.real("mu1").value_or(1.0);
    const double mun = ov.real("mun").value_or(1.0);
    const auto grid = parse_n_grid(ov.has("n-grid") ? ov.str("n-grid") : "1e2:1e6:log");
    const auto table = asymptotics::convergence_table(fam, grid, mu1, mun);
    const auto cls = asymptotics::classify_regime(asymptotics::Family{fam});
    const std::string asym = "asymptotic:" + std::string(asymptotics::to_string(cls.regime));

    Output o;
    json j = {{"family", {{"c", fam.c}, {"alpha", fam.alpha}}}, {"mu1", mu1}, {"mun", mun}, {"n_grid", grid}};
    o.provenance = {"msjlab compare", "config: " + j.dump(), "other_* columns hold the competing regime's formulas"};

    report::Panel pm, pd;
    pm.title = "throughput";
    pd.title = "mean relative completions";
    pm.x_label = pd.x_label = "n";
    pm.y_label = "mu";
    pd.y_label = "E[delta(Y_d)]";
    pm.log_x = pm.log_y = pd.log_x = pd.log_y = true;
    auto me = series("exact", 0), ma = series("asymptotic", 1), mo = series("other regime", 2);
    auto de = series("exact", 0), da = series("asymptotic", 1), dq = series("other regime", 2);
    for (const auto& row : table) {
        CsvRow b;
        b.setting = "canonical";
        b.n = double(row.n);
        b.alpha = fam.alpha;
        b.p_n = row.p_n;
        b.mu1 = mu1;
        b.mun = mun;
        o.rows.push_back(metric(b, "exact_mu", row.exact_mu, "exact1n"));
        o.rows.push_back(metric(b, "asym_mu", row.asym_mu, asym));
        o.rows.push_back(metric(b, "mu_ratio", row.mu_ratio, "ratio"));
        o.rows.push_back(metric(b, "exact_delta", row.exact_delta, "exact1n"));
        o.rows.push_back(metric(b, "asym_delta", row.asym_delta, asym));
        o.rows.push_back(metric(b, "delta_ratio", row.delta_ratio, "ratio"));
        o.rows.push_back(metric(b, "other_mu", row.other_mu, "asymptotic:other"));
        o.rows.push_back(metric(b, "other_delta", row.other_delta, "asymptotic:other"));
        const double n = double(row.n);
        me.points.emplace_back(n, row.exact_mu);
        ma.points.emplace_back(n, row.asym_mu);
        mo.points.emplace_back(n, row.other_mu);
        de.points.emplace_back(n, row.exact_delta);
        da.points.emplace_back(n, row.asym_delta);
        dq.points.emplace_back(n, row.other_delta);
    }
    pm.series = {std::move(me), std::move(ma), std::move(mo)};
    pd.series = {std::move(de), std::move(da), std::move(dq)};
    o.panels = {std::move(pm), std::move(pd)};
    return o;
}

std::string svg_path_for(const std::string& csv_path) {
    const auto slash = csv_path.find_last_of('/');
    const auto dot = csv_path.find_last_of('.');
    if (dot != std::string::npos && (slash == std::string::npos || dot > slash)) return csv_path.substr(0, dot) + ".svg";
    return csv_path + ".svg";
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot write output file '" + path + "'");
    f << content;
    if (!f) throw ConfigError("failed writing output file '" + path + "'");
}

}  // namespace

std::vector<long long> parse_n_grid(const std::string& text) {
    std::vector<long long> out;
    const auto parts = split(text, ':');
    if (parts.size() == 3) {
        if (parts[2] != "log") throw ConfigError("n-grid step must be 'log', got '" + parts[2] + "'");
        const double lo = parse_double("n-grid", parts[0]);
        const double hi = parse_double("n-grid", parts[1]);
        if (!(lo >= 1.0) || hi < lo) throw ConfigError("n-grid needs 1 <= start <= stop");
        for (double v = lo; v <= hi * (1.0 + 1e-12); v *= 10.0) out.push_back(std::llround(v));
        return out;
    }
    if (parts.size() != 1) throw ConfigError("malformed n-grid '" + text + "'");
    for (const auto& s : split(text, ',')) {
        const long long v = parse_count("n-grid", s);
        if (v < 1) throw ConfigError("n-grid values must be positive");
        out.push_back(v);
    }
    return out;
}

std::vector<double> parse_real_grid(const std::string& text) {
    std::vector<double> out;
    const auto parts = split(text, ':');
    if (parts.size() == 3) {
        const double lo = parse_double("grid", parts[0]);
        const double hi = parse_double("grid", parts[1]);
        const double step = parse_double("grid", parts[2]);
        if (!(step > 0.0) || hi < lo) throw ConfigError("grid needs start <= stop and a positive step");
        const auto count = static_cast<long long>(std::floor((hi - lo) / step + 1e-9)) + 1;
        if (count > 1'000'000) throw ConfigError("grid has too many points");
        for (long long i = 0; i < count; ++i) {
            // Round to 12 decimals so 0.1-steps print as 0.3, not 0.30000000000000004.
            out.push_back(std::round((lo + double(i) * step) * 1e12) / 1e12);
        }
        return out;
    }
    if (parts.size() != 1) throw ConfigError("malformed grid '" + text + "'");
    for (const auto& s : split(text, ',')) out.push_back(parse_double("grid", s));
    return out;
}

int resolve_threads(int requested) {
    int t = requested > 0 ? requested : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    if (const char* env = std::getenv("MSJLAB_THREADS")) {
        char* end = nullptr;
        const long cap = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && cap >= 1) t = std::min<int>(t, static_cast<int>(cap));
    }
    return t;
}

int run(const RunSpec& spec, std::ostream& out, std::ostream& err) {
    try {
        if (std::find(kSubcommands.begin(), kSubcommands.end(), spec.subcommand) == kSubcommands.end()) {
            throw ConfigError("unknown subcommand '" + spec.subcommand + "'");
        }
        const auto allowed = allowed_flags(spec.subcommand);
        for (const auto& [k, v] : spec.overrides) {
            if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) {
                throw ConfigError("option --" + k + " does not apply to " + spec.subcommand);
            }
        }
        if (spec.format != Format::Csv && !spec.output_path) throw ConfigError("SVG output requires --out");

        const bool takes_config = spec.subcommand == "exact" || spec.subcommand == "saturated-solve" ||
                                  spec.subcommand == "simulate";
        if (spec.config_path && !takes_config) throw ConfigError(spec.subcommand + " takes no config file");
        std::optional<ConfigDocument> doc;
        if (spec.config_path) doc = load_config(*spec.config_path);
        const Overrides ov(spec.overrides);

        Output o;
        const auto& sub = spec.subcommand;
        if (sub == "exact") o = cmd_exact(ov, doc);
        else if (sub == "asymptotic") o = cmd_asymptotic(ov);
        else if (sub == "saturated-solve") o = cmd_saturated(ov, doc);
        else if (sub == "simulate") o = cmd_simulate(ov, doc);
        else if (sub == "sweep") o = cmd_sweep(ov);
        else o = cmd_compare(ov);

        std::ostringstream csv;
        report::write_csv(csv, o.provenance, o.rows);
        if (spec.output_path) write_file(*spec.output_path, csv.str());
        else out << csv.str();
        if (spec.format != Format::Csv) {
            std::string prov;
            for (const auto& line : o.provenance) prov += line + "\n";
            write_file(svg_path_for(*spec.output_path), report::render_svg(o.panels, prov));
        }
        return kExitOk;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const ComputeError& e) {
        err << "compute error: " << e.what() << '\n';
        return kExitCompute;
    } catch (const nlohmann::json::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "compute error: " << e.what() << '\n';
        return kExitCompute;
    }
}

int main_entry(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Multiserver-job FCFS queue metrics: exact, asymptotic, oracle and simulated"};
    app.name("msjlab");
    app.require_subcommand(1);
    std::optional<std::string> config;
    std::optional<std::string> output;
    std::string format = "csv";
    std::map<CLI::App*, std::vector<std::string>> flags;
    for (const auto& name : kSubcommands) {
        CLI::App* sub = app.add_subcommand(name, subcommand_help(name));
        if (name == "exact" || name == "saturated-solve" || name == "simulate") {
            sub->add_option("--config", config, "JSON config file");
        }
        sub->add_option("--out", output, "CSV output path (stdout when omitted)");
        sub->add_option("--format", format, "csv | svg | both")->check(CLI::IsMember({"csv", "svg", "both"}));
        for (const auto& f : allowed_flags(name)) sub->add_option("--" + f)->description(flag_help(f));
        flags[sub] = allowed_flags(name);
    }

    std::vector<std::string> rev(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
    try {
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
            return kExitOk;
        }
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    }

    CLI::App* sub = app.get_subcommands().front();
    RunSpec spec;
    spec.subcommand = sub->get_name();
    spec.config_path = config;
    spec.output_path = output;
    spec.format = format == "csv" ? Format::Csv : format == "svg" ? Format::Svg : Format::Both;
    for (const auto& f : flags[sub]) {
        const CLI::Option* opt = sub->get_option("--" + f);
        if (opt->count() > 0) spec.overrides[f] = opt->as<std::string>();
    }
    return run(spec, out, err);
}

}  // namespace msjlab::cli
