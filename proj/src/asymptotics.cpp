#include "msjlab/asymptotics.hpp"

#include <cmath>

#include "msjlab/errors.hpp"
#include "msjlab/exact1n.hpp"

namespace msjlab::asymptotics {

std::string_view to_string(Regime r) noexcept {
    switch (r) {
        case Regime::NServerDominated: return "n-server-dominated";
        case Regime::Balanced: return "balanced";
        case Regime::OneServerDominatedPolynomial: return "1-server-dominated-polynomial";
        case Regime::OneServerDominatedLogBoundary: return "1-server-dominated-log-boundary";
        case Regime::OneServerDominatedGeneral: return "1-server-dominated-general";
    }
    return "unknown";
}

double LogCorrectedFamily::pn(double n) const {
    const double p = c * std::pow(n, -alpha) * std::pow(std::log(n), -beta);
    if (!(p > 0.0) || p > 1.0) throw ConfigError("family gives p_n outside (0, 1]");
    return p;
}

double family_pn(const Family& f, double n) {
    return std::visit([n](const auto& fam) { return fam.pn(n); }, f);
}

Classification classify_regime(const Family& family) {
    if (const auto* pl = std::get_if<PowerLawFamily>(&family)) {
        validate_family(*pl);
        if (pl->alpha < 1.0) return {Regime::NServerDominated, false};
        if (pl->alpha == 1.0) return {Regime::Balanced, false};
        return {Regime::OneServerDominatedPolynomial, true};
    }
    const auto& lc = std::get<LogCorrectedFamily>(family);
    if (!(lc.c > 0.0) || !(lc.alpha >= 0.0)) throw ConfigError("family needs c > 0 and alpha >= 0");
    if (lc.alpha < 1.0) return {Regime::NServerDominated, false};
    if (lc.alpha > 1.0) {
        return {lc.beta == 0.0 ? Regime::OneServerDominatedPolynomial : Regime::OneServerDominatedGeneral, true};
    }
    // alpha == 1: the log factor decides.
    if (lc.beta < 0.0) return {Regime::NServerDominated, false};
    if (lc.beta == 0.0) return {Regime::Balanced, false};
    if (lc.beta < 1.0) return {Regime::OneServerDominatedGeneral, false};
    if (lc.beta == 1.0) return {Regime::OneServerDominatedLogBoundary, false};
    return {Regime::OneServerDominatedGeneral, true};
}

double mu_nserver_formula(double pn, double mu1) noexcept { return mu1 / (pn * std::log(1.0 / pn)); }

double mu_oneserver_formula(double n, double pn, double mu1, double mun) noexcept {
    // mu1 (n - n^2 p_n (ln n + mu1/mun - 1)); with p_n = n^-alpha this is
    // mu1 (n - n^(2-alpha) (ln n + mu1/mun - 1)).
    return mu1 * (n - n * n * pn * (std::log(n) + mu1 / mun - 1.0));
}

double delta_nserver_formula(double pn) noexcept { return 1.0 / (2.0 * pn); }

double delta_oneserver_formula(double n, double pn) noexcept {
    const double ln = std::log(n);
    return 0.5 * n * n * pn * ln * ln;
}

AsymptoticValue throughput_asym(double n, const Family& family, double mu1, double mun) {
    const auto cls = classify_regime(family);
    const double pn = family_pn(family, n);
    switch (cls.regime) {
        case Regime::NServerDominated:
        case Regime::Balanced:
            return {mu_nserver_formula(pn, mu1), std::nullopt};
        case Regime::OneServerDominatedPolynomial:
            return {mu_oneserver_formula(n, pn, mu1, mun), std::nullopt};
        case Regime::OneServerDominatedLogBoundary:
            return {mu1 / (pn * std::log(n)), n * mu1};
        case Regime::OneServerDominatedGeneral:
            return {cls.below_log_boundary ? n * mu1 : mu1 / (pn * std::log(n)), std::nullopt};
    }
    throw UnsupportedError("unclassified regime");
}

double delta_asym(double n, const Family& family) {
    const auto cls = classify_regime(family);
    const double pn = family_pn(family, n);
    switch (cls.regime) {
        case Regime::NServerDominated:
        case Regime::Balanced:
            return delta_nserver_formula(pn);
        case Regime::OneServerDominatedPolynomial:
            return delta_oneserver_formula(n, pn);
        default:
            throw UnsupportedError("no leading-order E[Delta(Y_d)] formula for regime " +
                                   std::string(to_string(cls.regime)));
    }
}

std::vector<ConvergenceRow> convergence_table(const PowerLawFamily& family, const std::vector<long long>& n_grid,
                                              double mu1, double mun) {
    const Family fam = family;
    const auto cls = classify_regime(fam);
    const bool one_server = cls.regime == Regime::OneServerDominatedPolynomial;
    std::vector<ConvergenceRow> rows;
    rows.reserve(n_grid.size());
    for (long long n : n_grid) {
        if (n < 2 || n > 2'000'000'000LL) throw ConfigError("grid point n = " + std::to_string(n) + " out of range");
        const double nd = static_cast<double>(n);
        ConvergenceRow row;
        row.n = n;
        row.p_n = family.pn(nd);
        // Streaming evaluation only; the relative-completions vector is not needed here.
        const auto ex = exact1n::mean_delta_yd({static_cast<int>(n), row.p_n, mu1, mun}, 0);
        row.exact_mu = ex.mu;
        row.exact_delta = ex.mean_delta_yd;
        row.asym_mu = throughput_asym(nd, fam, mu1, mun).value;
        row.asym_delta = delta_asym(nd, fam);
        row.mu_ratio = row.exact_mu / row.asym_mu;
        row.delta_ratio = row.exact_delta / row.asym_delta;
        row.other_mu = one_server ? mu_nserver_formula(row.p_n, mu1) : nd * mu1;
        row.other_delta = one_server ? delta_nserver_formula(row.p_n) : delta_oneserver_formula(nd, row.p_n);
        rows.push_back(row);
    }
    return rows;
}

}  // namespace msjlab::asymptotics
