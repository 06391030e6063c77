#ifndef WNCS_SIMULATOR_HPP
#define WNCS_SIMULATOR_HPP

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "wncs/channel.hpp"
#include "wncs/config.hpp"
#include "wncs/optimizer.hpp"
#include "wncs/plant.hpp"
#include "wncs/rng.hpp"
#include "wncs/sensing.hpp"

namespace wncs {

/// One closed-loop trajectory. Metrics are recorded at the pre-update state
/// of each step; acc_* series are running sums.
struct TrialRecord {
    std::vector<double> state_distance; // X_t^T Q X_t
    std::vector<double> acc_energy;     // sum of (K X_t)^T R (K X_t)
    std::vector<double> acc_cost;       // sum of both
    std::vector<int> applied_index;     // delay slot used, -1 on loss
    std::vector<std::uint8_t> eta;
    std::vector<double> delay_s;
    bool diverged = false;
    long clamp_events = 0;
    long loss_count = 0;
};

/// Delay-compensated loop of one trial: quantize, predict the horizon,
/// draw the closed-loop delay, apply the command slot matching the realized
/// delay (or drift on loss), step the true state.
inline TrialRecord run_trial(const SystemParams& sp, const PlantModel& pm,
                             const Candidate& cand, int steps, Stream& rng) {
    const LinkMetrics lm = link_metrics(sp, cand.w_u, cand.w_d);
    const Quantizer q{pm.x_l, pm.x_u, sp.r};
    const Mat a_k = closed_loop_matrix(pm, cand.k, lm.epsilon_c);

    TrialRecord rec;
    rec.state_distance.reserve(static_cast<std::size_t>(steps));
    rec.acc_energy.reserve(static_cast<std::size_t>(steps));
    rec.acc_cost.reserve(static_cast<std::size_t>(steps));

    Vec x = pm.x0;
    double acc_e = 0.0, acc_c = 0.0;
    for (int t = 0; t < steps; ++t) {
        const double sd = x.dot(pm.q * x);
        const double u_true = cand.k.dot(x);
        const double energy = pm.r_weight * u_true * u_true;
        acc_e += energy;
        acc_c += sd + energy;
        rec.state_distance.push_back(sd);
        rec.acc_energy.push_back(acc_e);
        rec.acc_cost.push_back(acc_c);

        const Vec x_hat = quantize(q, x, &rec.clamp_events);
        const auto preds = predict_states(a_k, x_hat, sp.horizon_n);
        const double d_c = sample_closed_loop_delay(lm.mu_u, lm.mu_d, rng);
        rec.delay_s.push_back(d_c);
        int eta = d_c <= sp.d_c_max ? 1 : 0;
        int idx = -1;
        if (eta) {
            idx = static_cast<int>(std::floor(d_c / sp.t_d));
            idx = std::min(idx, sp.horizon_n - 1);
        } else {
            ++rec.loss_count;
        }
        rec.eta.push_back(static_cast<std::uint8_t>(eta));
        rec.applied_index.push_back(idx);

        const Vec& applied = eta ? preds[static_cast<std::size_t>(idx)] : x_hat;
        x = step_true_state(pm, x, cand.k, applied, eta);
        if (!x.allFinite() || x.norm() > 1e12) {
            rec.diverged = true;
            // freeze the series at the divergence point so aggregation stays total
            for (int rest = t + 1; rest < steps; ++rest) {
                rec.state_distance.push_back(sd);
                rec.acc_energy.push_back(acc_e);
                rec.acc_cost.push_back(acc_c);
                rec.eta.push_back(0);
                rec.applied_index.push_back(-1);
                rec.delay_s.push_back(0.0);
            }
            break;
        }
    }
    return rec;
}

struct McSummary {
    int steps = 0;
    int trials = 0;
    double t_d = 0;
    std::vector<double> sd_mean, sd_std;
    std::vector<double> energy_mean, energy_std;
    std::vector<double> cost_mean, cost_std;
    std::vector<double> loss_frac;
    long diverged_trials = 0;
};

/// Seeded Monte-Carlo aggregation; trial i uses a stream derived from the
/// master seed and i, so results do not depend on evaluation order.
inline McSummary run_monte_carlo(const SystemParams& sp, const PlantModel& pm,
                                 const Candidate& cand, int steps, int trials,
                                 std::uint64_t master_seed) {
    McSummary s;
    s.steps = steps;
    s.trials = trials;
    s.t_d = sp.t_d;
    const std::size_t n = static_cast<std::size_t>(steps);
    std::vector<double> sd_sum(n, 0.0), sd_sq(n, 0.0);
    std::vector<double> en_sum(n, 0.0), en_sq(n, 0.0);
    std::vector<double> co_sum(n, 0.0), co_sq(n, 0.0);
    std::vector<double> loss(n, 0.0);
    for (int i = 0; i < trials; ++i) {
        Stream rng = Stream::derive(master_seed, static_cast<std::uint64_t>(i) + 1);
        const TrialRecord rec = run_trial(sp, pm, cand, steps, rng);
        if (rec.diverged) ++s.diverged_trials;
        for (std::size_t t = 0; t < n; ++t) {
            sd_sum[t] += rec.state_distance[t];
            sd_sq[t] += rec.state_distance[t] * rec.state_distance[t];
            en_sum[t] += rec.acc_energy[t];
            en_sq[t] += rec.acc_energy[t] * rec.acc_energy[t];
            co_sum[t] += rec.acc_cost[t];
            co_sq[t] += rec.acc_cost[t] * rec.acc_cost[t];
            if (!rec.eta[t]) loss[t] += 1.0;
        }
    }
    auto finish = [&](const std::vector<double>& sum, const std::vector<double>& sq,
                      std::vector<double>& mean, std::vector<double>& stdev) {
        mean.resize(n);
        stdev.resize(n);
        for (std::size_t t = 0; t < n; ++t) {
            mean[t] = sum[t] / trials;
            const double var = std::max(0.0, sq[t] / trials - mean[t] * mean[t]);
            stdev[t] = std::sqrt(var);
        }
    };
    finish(sd_sum, sd_sq, s.sd_mean, s.sd_std);
    finish(en_sum, en_sq, s.energy_mean, s.energy_std);
    finish(co_sum, co_sq, s.cost_mean, s.cost_std);
    s.loss_frac.resize(n);
    for (std::size_t t = 0; t < n; ++t) s.loss_frac[t] = loss[t] / trials;
    return s;
}

/// Fixed CSV schema; %.17g keeps the round trip byte-stable across runs.
inline void write_csv(const McSummary& s, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write CSV file: " + path);
    out << "step,time_s,state_distance_mean,state_distance_std,acc_energy_mean,"
           "acc_energy_std,acc_cost_mean,acc_cost_std,loss_frac\n";
    char buf[512];
    for (int t = 0; t < s.steps; ++t) {
        const std::size_t i = static_cast<std::size_t>(t);
        std::snprintf(buf, sizeof(buf),
                      "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", t,
                      t * s.t_d, s.sd_mean[i], s.sd_std[i], s.energy_mean[i],
                      s.energy_std[i], s.cost_mean[i], s.cost_std[i], s.loss_frac[i]);
        out << buf;
    }
}

struct SweepSpec {
    std::string param; // one of: d_c_max, rho, r
    std::vector<double> values;
};

inline void apply_sweep_value(SystemParams& sp, const std::string& param, double value) {
    if (param == "d_c_max") sp.d_c_max = value;
    else if (param == "rho") sp.rho = value;
    else if (param == "r") sp.r = static_cast<int>(std::lround(value));
    else throw ValidationError("unknown sweep parameter: " + param);
}

struct SweepResult {
    nlohmann::json summary;
};

/// Runs the sweep values one by one; per-value failures are recorded in the
/// summary without aborting the remaining values. When no fixed candidate
/// is supplied, the DE is re-solved for every value.
inline SweepResult run_sweep(const Scenario& base, const SweepSpec& spec, int steps,
                             int trials, std::uint64_t master_seed,
                             const std::string& out_dir,
                             const std::optional<Candidate>& fixed = std::nullopt) {
    std::filesystem::create_directories(out_dir);
    SweepResult res;
    res.summary["param"] = spec.param;
    res.summary["values"] = nlohmann::json::array();
    for (double v : spec.values) {
        nlohmann::json entry;
        entry["value"] = v;
        try {
            SystemParams sp = base.params;
            apply_sweep_value(sp, spec.param, v);
            validate(sp);
            Candidate cand;
            if (fixed) {
                cand = *fixed;
            } else {
                Stream de_rng = Stream::derive(master_seed, 0);
                const Quantizer q{base.plant.x_l, base.plant.x_u, sp.r};
                const Vec x_hat_0 = quantize(q, base.plant.x0);
                const SolveReport rep = de_optimize(sp, base.plant, base.de, x_hat_0, de_rng);
                if (!rep.success) {
                    entry["error"] = "optimization infeasible: " + rep.message;
                    res.summary["values"].push_back(entry);
                    continue;
                }
                cand = rep.best;
                entry["optimizer"] = solve_report_to_json(rep);
            }
            const McSummary mc = run_monte_carlo(sp, base.plant, cand, steps, trials,
                                                 master_seed);
            char name[128];
            std::snprintf(name, sizeof(name), "%s_%g.csv", spec.param.c_str(), v);
            const std::string csv_path = (std::filesystem::path(out_dir) / name).string();
            write_csv(mc, csv_path);
            entry["csv"] = csv_path;
            const std::size_t last = static_cast<std::size_t>(mc.steps - 1);
            entry["final"] = {
                {"state_distance_mean", mc.sd_mean[last]},
                {"acc_energy_mean", mc.energy_mean[last]},
                {"acc_cost_mean", mc.cost_mean[last]},
                {"loss_frac", mc.loss_frac[last]},
            };
            entry["diverged_trials"] = mc.diverged_trials;
        } catch (const std::exception& e) {
            entry["error"] = e.what();
        }
        res.summary["values"].push_back(entry);
    }
    std::ofstream out(std::filesystem::path(out_dir) / "sweep_summary.json");
    out << res.summary.dump(2) << '\n';
    return res;
}

} // namespace wncs

#endif
