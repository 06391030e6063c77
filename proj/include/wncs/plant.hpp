#ifndef WNCS_PLANT_HPP
#define WNCS_PLANT_HPP

#include "wncs/config.hpp"

namespace wncs {

/// One step of the lossy true-state update: X_{t+1} = A~ X_t + eta B~ K X^_applied.
/// eta = 0 leaves the plant drifting open loop.
inline Vec step_true_state(const PlantModel& pm, const Vec& x_t, const RowVec& k,
                           const Vec& x_hat_applied, int eta) {
    const double u = k.dot(x_hat_applied);
    return pm.a_tilde * x_t + static_cast<double>(eta) * pm.b_tilde * u;
}

/// Expected closed-loop matrix A_K = A~ + (1 - eps_c) B~ K used by the
/// controller-side predictor and the MPC rollout.
inline Mat closed_loop_matrix(const PlantModel& pm, const RowVec& k, double epsilon_c) {
    return pm.a_tilde + (1.0 - epsilon_c) * pm.b_tilde * k;
}

} // namespace wncs

#endif
