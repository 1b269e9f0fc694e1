#pragma once

#include <optional>
#include <string_view>
#include <variant>
#include <vector>

#include "msjlab/model.hpp"

// Leading-order growth of throughput and relative completions as n grows
// with p_n -> 0, and tables comparing them against the exact 1-and-n sums.
namespace msjlab::asymptotics {

enum class Regime {
    NServerDominated,             ///< p_n = omega(1/n)
    Balanced,                     ///< p_n = c/n
    OneServerDominatedPolynomial, ///< p_n = c n^-alpha, alpha > 1
    OneServerDominatedLogBoundary,///< p_n = theta(1/(n ln n))
    OneServerDominatedGeneral,    ///< any other p_n = o(1/n)
};

std::string_view to_string(Regime r) noexcept;

/// p_n = c * n^-alpha * (ln n)^-beta. Declares a sequence whose regime is
/// not captured by a pure power law; beta = 0 is a plain power law.
struct LogCorrectedFamily {
    double c = 1.0;
    double alpha = 1.0;
    double beta = 0.0;

    [[nodiscard]] double pn(double n) const;
};

using Family = std::variant<PowerLawFamily, LogCorrectedFamily>;

[[nodiscard]] double family_pn(const Family& f, double n);

struct Classification {
    Regime regime = Regime::Balanced;
    /// True when p_n = o(1/(n ln n)), the condition under which mu ~ n mu1.
    bool below_log_boundary = false;
};

Classification classify_regime(const Family& family);

/// Leading-order throughput. `alternate` is set only on the log boundary,
/// where both candidate growth rates contribute.
struct AsymptoticValue {
    double value = 0.0;
    std::optional<double> alternate;
};

AsymptoticValue throughput_asym(double n, const Family& family, double mu1, double mun);

/// Leading-order E[Delta(Y_d)]. Throws UnsupportedError outside the
/// n-server-dominated, balanced and polynomial regimes.
double delta_asym(double n, const Family& family);

// The two competing formula sets, as functions of p_n.
[[nodiscard]] double mu_nserver_formula(double pn, double mu1) noexcept;  // mu1 / (p_n ln(1/p_n))
[[nodiscard]] double mu_oneserver_formula(double n, double pn, double mu1, double mun) noexcept;
[[nodiscard]] double delta_nserver_formula(double pn) noexcept;             // 1 / (2 p_n)
[[nodiscard]] double delta_oneserver_formula(double n, double pn) noexcept; // n^2 p_n ln^2(n) / 2

struct ConvergenceRow {
    long long n = 0;
    double p_n = 0.0;
    double exact_mu = 0.0;
    double asym_mu = 0.0;
    double mu_ratio = 0.0;  ///< exact / asym
    double exact_delta = 0.0;
    double asym_delta = 0.0;
    double delta_ratio = 0.0;
    // The competing regime's formulas: n mu1 and n^2 p_n ln^2(n)/2 for the
    // n-server and balanced regimes, mu1/(p_n ln(1/p_n)) and 1/(2 p_n) otherwise.
    double other_mu = 0.0;
    double other_delta = 0.0;
};

std::vector<ConvergenceRow> convergence_table(const PowerLawFamily& family, const std::vector<long long>& n_grid,
                                              double mu1, double mun);

}  // namespace msjlab::asymptotics
