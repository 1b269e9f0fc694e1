#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "msjlab/numeric.hpp"

namespace msjlab {

/// Probability mass over an explicit list of states.
template <class State>
struct StateDistribution {
    std::vector<State> support;
    std::vector<double> mass;

    [[nodiscard]] std::size_t size() const noexcept { return support.size(); }

    [[nodiscard]] double total() const noexcept {
        CompensatedSum s;
        for (double m : mass) s += m;
        return s.value();
    }

    /// Mass of a state; zero when the state is not in the support.
    [[nodiscard]] double at(const State& s) const noexcept {
        for (std::size_t i = 0; i < support.size(); ++i) {
            if (support[i] == s) return mass[i];
        }
        return 0.0;
    }

    void normalize() {
        const double t = total();
        if (!(t > 0.0)) throw std::logic_error("cannot normalize an empty distribution");
        for (double& m : mass) m /= t;
    }
};

}  // namespace msjlab
