#ifndef WNCS_OPTIMIZER_HPP
#define WNCS_OPTIMIZER_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "wncs/channel.hpp"
#include "wncs/config.hpp"
#include "wncs/plant.hpp"
#include "wncs/rng.hpp"
#include "wncs/sensing.hpp"
#include "wncs/stability.hpp"

namespace wncs {

struct Candidate {
    RowVec k;
    double w_u = 0;
    double w_d = 0;
};

/// Fixed-point solution of the discrete Riccati recursion
/// P = Q + A~^T P A~ - A~^T P B~ (R + B~^T P B~)^{-1} B~^T P A~.
inline Mat solve_riccati(const PlantModel& pm, const Mat& q, double r_weight,
                         double tol = 1e-10, int max_iter = 100000) {
    const Mat& a = pm.a_tilde;
    const Mat& b = pm.b_tilde;
    Mat p = q;
    for (int it = 0; it < max_iter; ++it) {
        const Mat pb = p * b;
        const double denom = r_weight + (b.transpose() * pb)(0, 0);
        Mat next = q + a.transpose() * p * a;
        if (denom != 0.0)
            next -= a.transpose() * pb * pb.transpose() * a / denom;
        next = 0.5 * (next + next.transpose());
        const double resid = (next - p).cwiseAbs().maxCoeff();
        p = next;
        if (resid < tol) return p;
    }
    throw std::runtime_error("solve_riccati: no convergence within iteration budget");
}

/// Riccati residual at a given P, for self-checks.
inline double riccati_residual(const PlantModel& pm, const Mat& q, double r_weight,
                               const Mat& p) {
    const Mat& a = pm.a_tilde;
    const Mat& b = pm.b_tilde;
    const Mat pb = p * b;
    const double denom = r_weight + (b.transpose() * pb)(0, 0);
    Mat rhs = q + a.transpose() * p * a - a.transpose() * pb * pb.transpose() * a / denom;
    return (rhs - p).cwiseAbs().maxCoeff();
}

/// Finite-horizon cost J: expected trajectory rolled with A_K, stage cost
/// X^T Q X + (KX)^T R (KX), terminal cost (1/2) X_N^T P_f X_N.
inline double mpc_cost(const Candidate& cand, const Vec& x_hat_0, const PlantModel& pm,
                       const SystemParams& sp, const Mat& p_f) {
    const LinkMetrics lm = link_metrics(sp, cand.w_u, cand.w_d);
    const Mat a_k = closed_loop_matrix(pm, cand.k, lm.epsilon_c);
    Vec x = x_hat_0;
    double j = 0.0;
    for (int t = 0; t < sp.horizon_n; ++t) {
        const double u = cand.k.dot(x);
        j += x.dot(pm.q * x) + pm.r_weight * u * u;
        x = a_k * x;
    }
    j += 0.5 * x.dot(p_f * x);
    return j;
}

struct ConstraintReport {
    bool precondition_ok = true; // channel domain (W theta / ln2 > 1) held
    bool p1b = false;            // lambda_u <= lambda_max
    bool p1c = false;            // convergence-rate inequality
    bool p1d = false;            // w_u + w_d <= w0 (and both nonnegative)
    bool p1e = false;            // 0 <= eps_c <= 1
    double slack_p1b = 0;        // lambda_max - lambda_u
    double slack_p1c = 0;        // rho - rho_required
    double slack_p1d = 0;        // w0 - w_u - w_d
    double slack_p1e = 0;        // min(eps_c, 1 - eps_c)
    double epsilon_c = 0;
    double j_cost = std::numeric_limits<double>::infinity();

    bool feasible() const { return precondition_ok && p1b && p1c && p1d && p1e; }
};

/// Total evaluation of the P1 constraint set at the current estimated
/// state. Channel precondition failures are reported, never thrown.
inline ConstraintReport check_feasibility(const Candidate& cand, const SystemParams& sp,
                                          const PlantModel& pm, const Vec& x_hat_t) {
    ConstraintReport rep;
    rep.slack_p1d = sp.w0 - cand.w_u - cand.w_d;
    rep.p1d = cand.w_u >= 0 && cand.w_d >= 0 && rep.slack_p1d >= -1e-9 * sp.w0;
    const bool pre_u = cand.w_u * sp.theta_u / kLn2 > 1.0;
    const bool pre_d = cand.w_d * sp.theta_d / kLn2 > 1.0;
    if (!pre_u || !pre_d) {
        rep.precondition_ok = false;
        rep.slack_p1b = -std::numeric_limits<double>::infinity();
        return rep;
    }
    const LinkMetrics lm = link_metrics(sp, cand.w_u, cand.w_d);
    rep.epsilon_c = lm.epsilon_c;
    const double lambda_u = uplink_arrival_rate(sp.r, sp.t_d);
    rep.slack_p1b = lm.lambda_max - lambda_u;
    rep.p1b = rep.slack_p1b >= 0;
    const ErrorBoundInputs in{sp.r, lm.epsilon_c, sp.d_c_max, sp.t_d, &pm, cand.k};
    const ConvergenceCheck cc = convergence_terms(pm, cand.k, lm.epsilon_c,
                                                  estimation_error_bound(in), x_hat_t, sp.rho);
    rep.slack_p1c = sp.rho - cc.rho_required;
    rep.p1c = cc.feasible;
    rep.slack_p1e = std::min(lm.epsilon_c, 1.0 - lm.epsilon_c);
    rep.p1e = std::isfinite(lm.epsilon_c) && lm.epsilon_c >= 0 && lm.epsilon_c <= 1;
    return rep;
}

struct SolveReport {
    bool success = false;
    Candidate best;
    double j_best = std::numeric_limits<double>::infinity();
    int generations = 0;
    std::vector<double> j_history; // best feasible J per generation (inf before one exists)
    ConstraintReport best_constraints;
    std::string message;
};

namespace detail {

inline void clip_candidate(Candidate& c, const DeConfig& de, double w0) {
    for (Eigen::Index i = 0; i < c.k.size(); ++i)
        c.k[i] = std::clamp(c.k[i], -de.k_max, de.k_max);
    c.w_u = std::max(c.w_u, 0.0);
    c.w_d = std::max(c.w_d, 0.0);
    const double s = c.w_u + c.w_d;
    if (s > w0 && s > 0.0) {
        c.w_u *= w0 / s;
        c.w_d *= w0 / s;
    }
}

inline double infeasibility(const ConstraintReport& rep) {
    if (!rep.precondition_ok) return std::numeric_limits<double>::infinity();
    double v = 0.0;
    v += std::max(0.0, -rep.slack_p1b);
    v += std::max(0.0, -rep.slack_p1c);
    v += std::max(0.0, -rep.slack_p1d);
    v += std::max(0.0, -rep.slack_p1e);
    return v;
}

} // namespace detail

/// Differential evolution over (K, W_u, W_d): difference mutation, whole-
/// vector crossover, selection by feasibility then cost. Terminates on the
/// stall counter once a feasible best stops improving by more than tol.
/// The evaluator maps a candidate to a ConstraintReport with j_cost filled
/// in; the joint problem's evaluator lives in de_optimize below.
template <typename Evaluator>
SolveReport de_engine(const Evaluator& evaluate, const DeConfig& de, int n, double w0,
                      Stream& rng) {
    std::vector<Candidate> pop(static_cast<std::size_t>(de.n_p));
    std::vector<ConstraintReport> reps(pop.size());
    for (auto& c : pop) {
        c.k = RowVec(n);
        for (int i = 0; i < n; ++i) c.k[i] = (2.0 * rng.uniform() - 1.0) * de.k_max;
        double u1 = rng.uniform(), u2 = rng.uniform();
        if (u1 + u2 > 1.0) {
            u1 = 1.0 - u1;
            u2 = 1.0 - u2;
        }
        c.w_u = u1 * w0;
        c.w_d = u2 * w0;
    }
    for (std::size_t i = 0; i < pop.size(); ++i) reps[i] = evaluate(pop[i]);

    SolveReport out;
    auto track_best = [&]() {
        for (std::size_t i = 0; i < pop.size(); ++i) {
            if (reps[i].feasible() && reps[i].j_cost < out.j_best) {
                out.j_best = reps[i].j_cost;
                out.best = pop[i];
                out.best_constraints = reps[i];
                out.success = true;
            }
        }
    };
    track_best();

    int stall = 0;
    Stream pick = Stream::derive(rng.next_u64(), 7);
    for (int gen = 0; gen < de.n_m; ++gen) {
        const double j_before = out.j_best;
        for (std::size_t kidx = 0; kidx < pop.size(); ++kidx) {
            std::size_t r1, r2, r3;
            do r1 = pick.next_u64() % pop.size(); while (r1 == kidx);
            do r2 = pick.next_u64() % pop.size(); while (r2 == kidx || r2 == r1);
            do r3 = pick.next_u64() % pop.size(); while (r3 == kidx || r3 == r1 || r3 == r2);
            Candidate mutant;
            mutant.k = pop[r1].k + de.f_d * (pop[r2].k - pop[r3].k);
            mutant.w_u = pop[r1].w_u + de.f_d * (pop[r2].w_u - pop[r3].w_u);
            mutant.w_d = pop[r1].w_d + de.f_d * (pop[r2].w_d - pop[r3].w_d);
            Candidate trial;
            if (de.binomial_crossover) {
                trial = pop[kidx];
                const int dims = n + 2;
                const int forced = static_cast<int>(rng.next_u64() % dims);
                for (int d = 0; d < dims; ++d) {
                    if (d != forced && rng.uniform() >= de.p_cr) continue;
                    if (d < n) trial.k[d] = mutant.k[d];
                    else if (d == n) trial.w_u = mutant.w_u;
                    else trial.w_d = mutant.w_d;
                }
                detail::clip_candidate(trial, de, w0);
            } else if (rng.uniform() < de.p_cr) {
                trial = mutant;
                detail::clip_candidate(trial, de, w0);
            } else {
                trial = pop[kidx];
            }
            const ConstraintReport trep = evaluate(trial);
            const bool improve = trep.feasible() && trep.j_cost < reps[kidx].j_cost;
            if (improve || !reps[kidx].feasible()) {
                pop[kidx] = trial;
                reps[kidx] = trep;
            }
        }
        track_best();
        out.generations = gen + 1;
        out.j_history.push_back(out.j_best);
        if (out.success) {
            if (std::abs(j_before - out.j_best) < de.tol) ++stall;
            else stall = 0;
            if (stall >= de.stall_n) break;
        }
    }

    if (!out.success) {
        double best_viol = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < pop.size(); ++i) {
            const double v = detail::infeasibility(reps[i]);
            if (v < best_viol) {
                best_viol = v;
                out.best = pop[i];
                out.best_constraints = reps[i];
            }
        }
        out.message = "no feasible candidate found within the iteration budget";
    } else {
        out.message = "converged";
    }
    return out;
}

/// The joint gain/bandwidth problem: P1 feasibility plus the finite-horizon
/// cost J, both evaluated at the current estimated state.
inline SolveReport de_optimize(const SystemParams& sp, const PlantModel& pm,
                               const DeConfig& de, const Vec& x_hat_0, Stream& rng) {
    const Mat p_f = solve_riccati(pm, pm.q, pm.r_weight);
    auto evaluate = [&](const Candidate& c) {
        ConstraintReport rep = check_feasibility(c, sp, pm, x_hat_0);
        if (rep.precondition_ok) rep.j_cost = mpc_cost(c, x_hat_0, pm, sp, p_f);
        return rep;
    };
    return de_engine(evaluate, de, pm.dim(), sp.w0, rng);
}

struct GridSpec {
    std::vector<double> k1, k2, k3; // gain component grids
    std::vector<double> w_u_fracs;  // w_u = frac * w0, w_d = w0 - w_u
};

struct GridResult {
    bool any_feasible = false;
    Candidate best;
    double j_best = std::numeric_limits<double>::infinity();
    long feasible_count = 0;
};

/// Exhaustive feasibility + cost scan; deterministic oracle for the DE.
inline GridResult grid_oracle(const SystemParams& sp, const PlantModel& pm,
                              const GridSpec& grid, const Vec& x_hat_0) {
    const Mat p_f = solve_riccati(pm, pm.q, pm.r_weight);
    GridResult out;
    for (double a : grid.k1)
        for (double b : grid.k2)
            for (double c : grid.k3)
                for (double f : grid.w_u_fracs) {
                    Candidate cand;
                    cand.k = RowVec(3);
                    cand.k << a, b, c;
                    cand.w_u = f * sp.w0;
                    cand.w_d = sp.w0 - cand.w_u;
                    const ConstraintReport rep = check_feasibility(cand, sp, pm, x_hat_0);
                    if (!rep.feasible()) continue;
                    ++out.feasible_count;
                    const double j = mpc_cost(cand, x_hat_0, pm, sp, p_f);
                    if (j < out.j_best) {
                        out.j_best = j;
                        out.best = cand;
                        out.any_feasible = true;
                    }
                }
    return out;
}

inline nlohmann::json solve_report_to_json(const SolveReport& rep) {
    nlohmann::json j;
    j["success"] = rep.success;
    j["message"] = rep.message;
    j["generations"] = rep.generations;
    j["j_best"] = rep.j_best;
    j["best"] = {
        {"k", std::vector<double>(rep.best.k.data(), rep.best.k.data() + rep.best.k.size())},
        {"w_u", rep.best.w_u},
        {"w_d", rep.best.w_d},
    };
    const ConstraintReport& c = rep.best_constraints;
    j["constraints"] = {
        {"precondition_ok", c.precondition_ok},
        {"p1b", c.p1b}, {"slack_p1b", c.slack_p1b},
        {"p1c", c.p1c}, {"slack_p1c", c.slack_p1c},
        {"p1d", c.p1d}, {"slack_p1d", c.slack_p1d},
        {"p1e", c.p1e}, {"slack_p1e", c.slack_p1e},
        {"epsilon_c", c.epsilon_c},
    };
    j["j_history"] = rep.j_history;
    return j;
}

} // namespace wncs

#endif
