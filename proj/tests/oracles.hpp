// Shared Monte-Carlo reference implementations for the test suite. These
// deliberately avoid the library's closed forms so that agreement between
// the two is evidence, not tautology.
#ifndef WNCS_TESTS_ORACLES_HPP
#define WNCS_TESTS_ORACLES_HPP

#include <cmath>
#include <cstdint>

#include "wncs/rng.hpp"

namespace oracles {

struct LossEstimate {
    double p;      // fraction of draws exceeding the threshold
    double sigma;  // binomial standard error
};

inline LossEstimate mc_loss_rate(double mu_u, double mu_d, double d, long n,
                                 std::uint64_t seed) {
    wncs::Stream rng(seed);
    long over = 0;
    for (long i = 0; i < n; ++i) {
        const double s = -std::log(rng.uniform()) / mu_u - std::log(rng.uniform()) / mu_d;
        if (s > d) ++over;
    }
    LossEstimate est;
    est.p = static_cast<double>(over) / static_cast<double>(n);
    est.sigma = std::sqrt(std::max(est.p * (1.0 - est.p), 1e-12) / static_cast<double>(n));
    return est;
}

inline double mc_conditional_delay(double mu_u, double mu_d, double d, long n,
                                   std::uint64_t seed) {
    wncs::Stream rng(seed);
    double sum = 0.0;
    long below = 0;
    for (long i = 0; i < n; ++i) {
        const double s = -std::log(rng.uniform()) / mu_u - std::log(rng.uniform()) / mu_d;
        if (s < d) {
            sum += s;
            ++below;
        }
    }
    return below > 0 ? sum / static_cast<double>(below) : 0.0;
}

} // namespace oracles

#endif
