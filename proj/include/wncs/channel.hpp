#ifndef WNCS_CHANNEL_HPP
#define WNCS_CHANNEL_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>

#include "wncs/config.hpp"
#include "wncs/rng.hpp"

namespace wncs {

inline constexpr double kLn2 = std::numbers::ln2;

/// Effective capacity of a Rayleigh link under QoS exponent theta (bits/s).
/// Valid for W*theta/ln2 > 1; the closed form is
///   (1/theta) * ln[ SNR*beta * (W*theta/ln2 - 1) ] - 1/(SNR*beta).
inline double effective_capacity(double theta, double w, double snr, double beta) {
    const double a = w * theta / kLn2;
    if (a <= 1.0)
        throw std::domain_error("effective_capacity: W*theta/ln2 must exceed 1");
    const double sb = snr * beta;
    return std::log(sb * (a - 1.0)) / theta - 1.0 / sb;
}

/// Log-MGF based oracle for the effective capacity: numerically evaluates
/// -(1/theta) * ln E[exp(-theta*W*log2(1+SNR*g))], g ~ Exp(beta).
/// Test-only reference for the closed form above.
inline double effective_capacity_oracle(double theta, double w, double snr, double beta,
                                        double tol = 1e-12) {
    const double a = w * theta / kLn2; // exponent weight on ln(1+SNR x)
    // integrand in log space to survive extreme peaking near 0
    auto f = [&](double x) { return beta * std::exp(-a * std::log1p(snr * x) - beta * x); };

    // adaptive Simpson
    std::function<double(double, double, double, double, double, double, int)> rec =
        [&](double lo, double hi, double flo, double fmid, double fhi, double whole,
            int depth) -> double {
        const double mid = 0.5 * (lo + hi);
        const double lm = 0.5 * (lo + mid), rm = 0.5 * (mid + hi);
        const double flm = f(lm), frm = f(rm);
        const double left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid);
        const double right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi);
        if (depth > 60) throw std::runtime_error("effective_capacity_oracle: no convergence");
        if (depth > 8 && std::abs(left + right - whole) < 15.0 * tol * (1.0 + std::abs(whole)))
            return left + right + (left + right - whole) / 15.0;
        return rec(lo, mid, flo, flm, fmid, left, depth + 1) +
               rec(mid, hi, fmid, frm, fhi, right, depth + 1);
    };
    auto integrate = [&](double lo, double hi) {
        const double mid = 0.5 * (lo + hi);
        const double flo = f(lo), fmid = f(mid), fhi = f(hi);
        const double whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
        return rec(lo, hi, flo, fmid, fhi, whole, 0);
    };

    // the integrand decays on scale 1/(snr*a) near zero and e^{-beta x} after
    const double cut = std::min(200.0 / (snr * std::max(a, 1.0)), 1.0 / beta);
    const double tail_end = cut + 60.0 / beta;
    const double e = integrate(0.0, cut) + integrate(cut, tail_end);
    return -std::log(e) / theta;
}

/// Ergodic capacity E[W log2(1+SNR*g)], g ~ Exp(beta) (bits/s); upper bound
/// on any effective capacity of the same link.
inline double ergodic_capacity_oracle(double w, double snr, double beta) {
    // E[ln(1+SNR g)] = e^{beta/SNR} E1(beta/SNR); evaluate via quadrature for
    // simplicity and independence from special functions
    auto f = [&](double x) { return std::log1p(snr * x) * beta * std::exp(-beta * x); };
    double acc = 0.0;
    const int n = 200000;
    const double hi = 60.0 / beta;
    const double h = hi / n;
    for (int i = 0; i < n; ++i) {
        const double x0 = i * h, x1 = x0 + h;
        acc += h / 6.0 * (f(x0) + 4.0 * f(0.5 * (x0 + x1)) + f(x1));
    }
    return w / kLn2 * acc;
}

/// mu_i = theta_i * C_i, the rate parameter of the fitted exponential
/// per-link delay (1/s).
inline double service_rate_mu(double theta, double w, double snr, double beta) {
    return theta * effective_capacity(theta, w, snr, beta);
}

/// P(D_c > d_c_max) for D_c = Exp(mu_u) + Exp(mu_d). Erlang-2 limit is
/// substituted when the rates are relatively closer than 1e-9; the result
/// is clamped to [0,1] against cancellation drift.
inline double packet_loss_rate(double mu_u, double mu_d, double d_c_max) {
    if (mu_u <= 0 || mu_d <= 0) throw std::domain_error("packet_loss_rate: rates must be > 0");
    if (d_c_max < 0) throw std::domain_error("packet_loss_rate: d_c_max >= 0");
    if (d_c_max == 0.0) return 1.0;
    double p;
    if (std::abs(mu_u - mu_d) < 1e-9 * std::max(mu_u, mu_d)) {
        const double mu = 0.5 * (mu_u + mu_d);
        const double a = mu * d_c_max;
        p = (1.0 + a) * std::exp(-a);
    } else {
        p = (std::exp(-d_c_max * mu_d) * mu_u - std::exp(-d_c_max * mu_u) * mu_d) /
            (mu_u - mu_d);
    }
    return std::clamp(p, 0.0, 1.0);
}

/// E[D_c | D_c < d_c_max] for the hypoexponential closed-loop delay (s).
inline double expected_conditional_delay(double mu_u, double mu_d, double d_c_max) {
    if (mu_u <= 0 || mu_d <= 0 || d_c_max <= 0)
        throw std::domain_error("expected_conditional_delay: positive inputs required");
    const double p_below = 1.0 - packet_loss_rate(mu_u, mu_d, d_c_max);
    if (p_below < 1e-12)
        throw std::domain_error("expected_conditional_delay: conditioning event has ~zero mass");
    double partial; // E[D_c * 1{D_c < d_c_max}]
    if (std::abs(mu_u - mu_d) < 1e-9 * std::max(mu_u, mu_d)) {
        const double mu = 0.5 * (mu_u + mu_d);
        const double a = mu * d_c_max;
        partial = 2.0 / mu * (1.0 - std::exp(-a) * (1.0 + a + 0.5 * a * a));
    } else {
        auto ramp = [&](double mu) {
            const double a = mu * d_c_max;
            return (1.0 - std::exp(-a) * (1.0 + a)) / (mu * mu);
        };
        partial = mu_u * mu_d / (mu_d - mu_u) * (ramp(mu_u) - ramp(mu_d));
    }
    return partial / p_below;
}

/// Maximum sustainable uplink arrival rate (bits/s). The theta_u >= theta_d
/// branch is min{C_u, C_d/c_d}; the theta_u < theta_d branch couples the
/// links logarithmically through the uplink departure process.
inline double max_arrival_rate(const SystemParams& sp, double w_u, double w_d) {
    const double c_u = effective_capacity(sp.theta_u, w_u, sp.snr_u, sp.beta_u);
    if (sp.theta_u >= sp.theta_d) {
        const double c_dn = effective_capacity(sp.theta_d, w_d, sp.snr_d, sp.beta_d);
        return std::min(c_u, c_dn / sp.c_d);
    }
    const double log_arg = std::log(sp.snr_d * sp.beta_d) + std::log(w_d * sp.theta_d / kLn2) +
                           sp.c_d * std::log(sp.snr_u * sp.beta_u) +
                           sp.c_d * std::log(w_u * (sp.theta_d - sp.theta_u) / kLn2);
    return std::min(c_u, log_arg / (sp.c_d * sp.theta_u));
}

/// One closed-loop delay draw Exp(mu_u) + Exp(mu_d) via inverse-CDF sampling.
inline double sample_closed_loop_delay(double mu_u, double mu_d, Stream& rng) {
    return rng.exponential(mu_u) + rng.exponential(mu_d);
}

/// All derived link quantities for one bandwidth split. The delay-side
/// rates mu_* carry the scenario's delay_scale multiplier; capacities and
/// lambda_max are raw closed-form values.
struct LinkMetrics {
    double c_u = 0, c_d = 0;
    double mu_u = 0, mu_d = 0;
    double epsilon_c = 0;
    double e_dc_cond = 0;
    double lambda_max = 0;
};

inline LinkMetrics link_metrics(const SystemParams& sp, double w_u, double w_d) {
    LinkMetrics lm;
    lm.c_u = effective_capacity(sp.theta_u, w_u, sp.snr_u, sp.beta_u);
    lm.c_d = effective_capacity(sp.theta_d, w_d, sp.snr_d, sp.beta_d);
    lm.mu_u = sp.theta_u * lm.c_u / sp.delay_scale;
    lm.mu_d = sp.theta_d * lm.c_d / sp.delay_scale;
    lm.epsilon_c = packet_loss_rate(lm.mu_u, lm.mu_d, sp.d_c_max);
    lm.e_dc_cond = lm.epsilon_c < 1.0 - 1e-12
                       ? expected_conditional_delay(lm.mu_u, lm.mu_d, sp.d_c_max)
                       : 0.0;
    lm.lambda_max = max_arrival_rate(sp, w_u, w_d);
    return lm;
}

} // namespace wncs

#endif
