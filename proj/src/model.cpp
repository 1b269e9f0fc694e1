#include "msjlab/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "msjlab/errors.hpp"
#include "msjlab/numeric.hpp"

namespace msjlab {

namespace {

std::string fmt_g(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

constexpr double kProbSumTolerance = 1e-12;

}  // namespace

bool SystemConfig::is_canonical_1n() const noexcept {
    if (n < 2 || classes.size() != 2) return false;
    const auto [lo, hi] = std::minmax(classes[0].need, classes[1].need);
    return lo == 1 && hi == n;
}

double PowerLawFamily::pn(double n) const {
    const double p = c * std::pow(n, -alpha);
    if (!(p > 0.0) || p > 1.0) {
        throw ConfigError("power-law family gives p_n = " + fmt_g(p) + " outside (0, 1] at n = " + fmt_g(n));
    }
    return p;
}

void validate_family(const PowerLawFamily& family) {
    if (!(family.c > 0.0) || !std::isfinite(family.c)) throw ConfigError("family coefficient c must be positive");
    if (!(family.alpha >= 0.0) || !std::isfinite(family.alpha)) throw ConfigError("family exponent alpha must be >= 0");
}

SystemConfig two_class(int n, double pn, double mu1, double mun) {
    if (n < 1) throw ConfigError("server count must be >= 1");
    if (!(pn >= 0.0 && pn <= 1.0)) throw ConfigError("p_n = " + fmt_g(pn) + " outside [0, 1]");
    if (!(mu1 > 0.0) || !(mun > 0.0)) throw ConfigError("service rates must be positive");

    SystemConfig cfg{n, {}};
    if (pn == 0.0) {
        cfg.classes.push_back({1, 1.0, mu1});
    } else if (pn == 1.0) {
        cfg.classes.push_back({n, 1.0, mun});
    } else {
        if (n == 1) throw ConfigError("1-and-n classes coincide at n = 1; use a single class");
        cfg.classes.push_back({1, 1.0 - pn, mu1});
        cfg.classes.push_back({n, pn, mun});
    }
    return cfg;
}

SystemConfig validate_config(SystemConfig config) {
    if (config.n < 1) throw ConfigError("server count must be >= 1");
    if (config.classes.empty()) throw ConfigError("at least one job class is required");

    std::set<int> needs;
    CompensatedSum total;
    for (const auto& c : config.classes) {
        if (c.need < 1) throw ConfigError("need must be >= 1");
        if (c.need > config.n) {
            throw ConfigError("need exceeds server count (need " + std::to_string(c.need) + ", n " +
                              std::to_string(config.n) + ")");
        }
        if (!needs.insert(c.need).second) throw ConfigError("duplicate need " + std::to_string(c.need));
        if (!(c.rate > 0.0) || !std::isfinite(c.rate)) throw ConfigError("non-positive service rate");
        if (!(c.prob >= 0.0 && c.prob <= 1.0)) throw ConfigError("class probability " + fmt_g(c.prob) + " outside [0, 1]");
        total += c.prob;
    }
    if (std::fabs(total.value() - 1.0) > kProbSumTolerance) {
        throw ConfigError("probabilities sum to " + fmt_g(total.value()));
    }
    std::sort(config.classes.begin(), config.classes.end(),
              [](const JobClass& a, const JobClass& b) { return a.need < b.need; });
    return config;
}

double mean_work_per_job(const SystemConfig& config) {
    CompensatedSum work;
    for (const auto& c : config.classes) work += c.prob * c.need / c.rate;
    return work.value();
}

double offered_load_fraction(double lambda, const SystemConfig& config) {
    if (!(lambda >= 0.0)) throw ConfigError("arrival rate must be >= 0");
    return lambda * mean_work_per_job(config) / config.n;
}

nlohmann::json to_json(const SystemConfig& config) {
    nlohmann::json classes = nlohmann::json::array();
    for (const auto& c : config.classes) classes.push_back({{"need", c.need}, {"prob", c.prob}, {"rate", c.rate}});
    return {{"n", config.n}, {"classes", classes}};
}

nlohmann::json to_json(const ConfigDocument& doc) {
    nlohmann::json j = to_json(SystemConfig{doc.n, doc.classes});
    if (doc.family) j["family"] = {{"c", doc.family->c}, {"alpha", doc.family->alpha}};
    return j;
}

ConfigDocument parse_config(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text.begin(), text.end());
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config parse error at byte " + std::to_string(e.byte) + ": " + e.what());
    }

    ConfigDocument doc;
    try {
        if (!j.is_object()) throw ConfigError("config must be a JSON object");
        if (!j.contains("n")) throw ConfigError("config is missing \"n\"");
        doc.n = j.at("n").get<int>();
        if (j.contains("family")) {
            const auto& f = j.at("family");
            PowerLawFamily fam;
            fam.c = f.value("c", 1.0);
            fam.alpha = f.at("alpha").get<double>();
            validate_family(fam);
            doc.family = fam;
        }
        if (j.contains("classes")) {
            for (const auto& c : j.at("classes")) {
                doc.classes.push_back({c.at("need").get<int>(), c.at("prob").get<double>(), c.at("rate").get<double>()});
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("invalid config document: ") + e.what());
    }

    if (doc.classes.empty()) {
        if (!doc.family) throw ConfigError("config needs \"classes\" or \"family\"");
        if (doc.n < 1) throw ConfigError("server count must be >= 1");
    } else {
        doc.classes = validate_config(SystemConfig{doc.n, doc.classes}).classes;
    }
    return doc;
}

ConfigDocument load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

}  // namespace msjlab
