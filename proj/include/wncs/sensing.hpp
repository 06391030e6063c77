#ifndef WNCS_SENSING_HPP
#define WNCS_SENSING_HPP

#include <cmath>
#include <vector>

#include "wncs/config.hpp"

namespace wncs {

/// Midpoint uniform quantizer over [x_l, x_u] with 2^r bins per component.
struct Quantizer {
    Vec x_l, x_u;
    int r;

    Quantizer(Vec lo, Vec hi, int bits) : x_l(std::move(lo)), x_u(std::move(hi)), r(bits) {
        if (!(x_l.array() < x_u.array()).all()) throw ValidationError("quantizer: x_l < x_u");
        if (r < 1) throw ValidationError("quantizer: r >= 1");
    }
};

/// Out-of-range components are clamped into the detection area before
/// binning; clamp_count (if given) accumulates how many components hit it.
inline Vec quantize(const Quantizer& q, const Vec& x, long* clamp_count = nullptr) {
    const double bins = std::exp2(q.r);
    Vec out(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double lo = q.x_l[i], hi = q.x_u[i];
        const double width = (hi - lo) / bins;
        double xi = x[i];
        if (xi < lo || xi > hi) {
            if (clamp_count) ++*clamp_count;
            xi = std::clamp(xi, lo, hi);
        }
        double j = std::floor((xi - lo) / width);
        j = std::clamp(j, 0.0, bins - 1.0);
        out[i] = lo + (j + 0.5) * width;
    }
    return out;
}

/// lambda_u = r / T_d (bits/s): one r-bit sample per sensing interval.
inline double uplink_arrival_rate(int r, double t_d) {
    return static_cast<double>(r) / t_d;
}

/// As above but counting r bits per state component instead of per vector.
/// Off the default path; see the scenario docs.
inline double uplink_arrival_rate_per_component(int r, int n, double t_d) {
    return static_cast<double>(r) * n / t_d;
}

/// Predicted trajectory [x0, A_K x0, ..., A_K^{n-1} x0].
inline std::vector<Vec> predict_states(const Mat& a_k, const Vec& x_hat_0, int n) {
    std::vector<Vec> out;
    out.reserve(static_cast<std::size_t>(n));
    Vec x = x_hat_0;
    for (int i = 0; i < n; ++i) {
        out.push_back(x);
        if (i + 1 < n) x = a_k * x;
    }
    return out;
}

/// Uniform-input mean squared quantization error:
/// (1/12) 4^{-r} (x_l - x_u)^T (x_l - x_u).
inline double quantization_mse(const Quantizer& q) {
    const Vec d = q.x_l - q.x_u;
    return d.squaredNorm() / (12.0 * std::exp2(2.0 * q.r));
}

struct ErrorBoundInputs {
    int r;
    double epsilon_c;
    double d_c_max;
    double t_d;
    const PlantModel* plant;
    RowVec k;
};

/// Common upper bound on E[e_tau^T e_tau] for every tau up to
/// floor(d_c_max / t_d). Three branches keyed on Tr(A~^T A~) relative to 1.
inline double estimation_error_bound(const ErrorBoundInputs& in) {
    const PlantModel& pm = *in.plant;
    const double tr = (pm.a_tilde.transpose() * pm.a_tilde).trace();
    // the epsilon keeps exact multiples like 0.3/0.1 from flooring to 2
    const double tau_star = std::floor(in.d_c_max / in.t_d + 1e-9);
    const Vec d = pm.x_l - pm.x_u;
    const double q0 = d.squaredNorm() / (12.0 * std::exp2(2.0 * in.r));
    const Mat bk = pm.b_tilde * in.k;
    const double loss = (in.epsilon_c - in.epsilon_c * in.epsilon_c) * bk.squaredNorm() *
                        pm.x_m.squaredNorm();
    if (std::abs(tr - 1.0) < 1e-12) return q0 + loss * tau_star;
    if (tr > 1.0) {
        const double g = std::pow(tr, tau_star);
        return q0 * g + loss * (1.0 - g) / (1.0 - tr);
    }
    return q0 + loss / (1.0 - tr);
}

} // namespace wncs

#endif
