// wncs: run / sweep / optimize front end for the wireless closed-loop
// control simulator. Exit codes: 0 success, 2 validation error,
// 3 infeasible optimization.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wncs/config.hpp"
#include "wncs/optimizer.hpp"
#include "wncs/simulator.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitInfeasible = 3;

std::optional<wncs::Candidate> parse_candidate(const std::string& gain, double w_u,
                                               double w_d) {
    if (gain.empty()) return std::nullopt;
    std::vector<double> ks;
    std::stringstream ss(gain);
    std::string tok;
    while (std::getline(ss, tok, ',')) ks.push_back(std::stod(tok));
    wncs::Candidate c;
    c.k = wncs::RowVec(static_cast<Eigen::Index>(ks.size()));
    for (std::size_t i = 0; i < ks.size(); ++i) c.k[static_cast<Eigen::Index>(i)] = ks[i];
    c.w_u = w_u;
    c.w_d = w_d;
    return c;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"wireless closed-loop control: simulate and optimize"};
    app.require_subcommand(1);

    std::string config_path, out_path = "out";
    int steps = 1000;
    int trials = -1;
    std::uint64_t seed = 0;
    bool seed_set = false, trials_set = false;
    bool allow_infeasible = false;
    std::string gain;
    double w_u = -1, w_d = -1;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "scenario file")->required();
        cmd->add_option("--seed", seed, "master RNG seed (default: scenario seed)")
            ->each([&](const std::string&) { seed_set = true; });
        cmd->add_option("--out", out_path, "output directory or file");
    };

    CLI::App* run = app.add_subcommand("run", "optimize, then Monte-Carlo simulate");
    add_common(run);
    run->add_option("--steps", steps, "steps per trial");
    run->add_option("--trials", trials, "trial count (default: scenario trials)")
        ->each([&](const std::string&) { trials_set = true; });
    run->add_option("--gain", gain, "fixed gain k1,k2,k3 (skips the optimizer)");
    run->add_option("--wu", w_u, "fixed uplink bandwidth, Hz (with --gain)");
    run->add_option("--wd", w_d, "fixed downlink bandwidth, Hz (with --gain)");
    run->add_flag("--allow-infeasible", allow_infeasible,
                  "simulate even if the candidate fails the P1 constraints");

    std::string sweep_param, sweep_values;
    bool fixed_candidate = false;
    CLI::App* sweep = app.add_subcommand("sweep", "re-run across one parameter's values");
    add_common(sweep);
    sweep->add_option("--param", sweep_param, "one of: d_c_max, rho, r")->required();
    sweep->add_option("--values", sweep_values, "comma-separated value list")->required();
    sweep->add_option("--steps", steps, "steps per trial");
    sweep->add_option("--trials", trials, "trial count (default: scenario trials)")
        ->each([&](const std::string&) { trials_set = true; });
    sweep->add_flag("--fixed-candidate", fixed_candidate,
                    "solve the DE once on the base scenario and reuse the candidate");

    CLI::App* optimize = app.add_subcommand("optimize", "solve the joint gain/bandwidth problem");
    add_common(optimize);

    CLI11_PARSE(app, argc, argv);

    try {
        const wncs::Scenario sc = wncs::load_scenario(config_path);
        const std::uint64_t master_seed = seed_set ? seed : sc.params.seed;
        const int n_trials = trials_set ? trials : sc.params.trials;
        const wncs::Quantizer q{sc.plant.x_l, sc.plant.x_u, sc.params.r};
        const wncs::Vec x_hat_0 = wncs::quantize(q, sc.plant.x0);

        if (*optimize) {
            wncs::Stream rng = wncs::Stream::derive(master_seed, 0);
            const wncs::SolveReport rep =
                wncs::de_optimize(sc.params, sc.plant, sc.de, x_hat_0, rng);
            std::filesystem::path out_file(out_path);
            if (!out_file.has_extension()) {
                std::filesystem::create_directories(out_file);
                out_file /= "report.json";
            } else if (out_file.has_parent_path()) {
                std::filesystem::create_directories(out_file.parent_path());
            }
            std::ofstream out(out_file);
            out << wncs::solve_report_to_json(rep).dump(2) << '\n';
            std::printf("%s: J = %.6g after %d generations -> %s\n",
                        rep.success ? "feasible" : "infeasible", rep.j_best,
                        rep.generations, out_file.string().c_str());
            return rep.success ? kExitOk : kExitInfeasible;
        }

        if (*run) {
            wncs::Candidate cand;
            std::optional<wncs::Candidate> fixed = parse_candidate(gain, w_u, w_d);
            std::filesystem::create_directories(out_path);
            if (fixed) {
                if (w_u < 0 || w_d < 0)
                    throw wncs::ValidationError("--gain requires --wu and --wd");
                cand = *fixed;
                const wncs::ConstraintReport rep =
                    wncs::check_feasibility(cand, sc.params, sc.plant, x_hat_0);
                if (!rep.feasible() && !allow_infeasible) {
                    std::fprintf(stderr,
                                 "candidate fails P1 constraints "
                                 "(use --allow-infeasible to force)\n");
                    return kExitInfeasible;
                }
            } else {
                wncs::Stream rng = wncs::Stream::derive(master_seed, 0);
                const wncs::SolveReport rep =
                    wncs::de_optimize(sc.params, sc.plant, sc.de, x_hat_0, rng);
                std::ofstream rep_out(std::filesystem::path(out_path) / "optimize_report.json");
                rep_out << wncs::solve_report_to_json(rep).dump(2) << '\n';
                if (!rep.success) {
                    std::fprintf(stderr, "optimization found no feasible candidate\n");
                    return kExitInfeasible;
                }
                cand = rep.best;
            }
            const wncs::McSummary mc = wncs::run_monte_carlo(sc.params, sc.plant, cand,
                                                             steps, n_trials, master_seed);
            const std::string csv_path =
                (std::filesystem::path(out_path) / "metrics.csv").string();
            wncs::write_csv(mc, csv_path);
            const std::size_t last = static_cast<std::size_t>(mc.steps - 1);
            nlohmann::json summary = {
                {"steps", mc.steps},
                {"trials", mc.trials},
                {"seed", master_seed},
                {"diverged_trials", mc.diverged_trials},
                {"candidate",
                 {{"k", std::vector<double>(cand.k.data(), cand.k.data() + cand.k.size())},
                  {"w_u", cand.w_u},
                  {"w_d", cand.w_d}}},
                {"final",
                 {{"state_distance_mean", mc.sd_mean[last]},
                  {"acc_energy_mean", mc.energy_mean[last]},
                  {"acc_cost_mean", mc.cost_mean[last]},
                  {"loss_frac", mc.loss_frac[last]}}},
            };
            std::ofstream sum_out(std::filesystem::path(out_path) / "run_summary.json");
            sum_out << summary.dump(2) << '\n';
            std::printf("wrote %s (%d steps x %d trials)\n", csv_path.c_str(), mc.steps,
                        mc.trials);
            return kExitOk;
        }

        if (*sweep) {
            wncs::SweepSpec spec;
            spec.param = sweep_param;
            std::stringstream ss(sweep_values);
            std::string tok;
            while (std::getline(ss, tok, ',')) spec.values.push_back(std::stod(tok));
            std::optional<wncs::Candidate> fixed;
            if (fixed_candidate) {
                wncs::Stream rng = wncs::Stream::derive(master_seed, 0);
                const wncs::SolveReport rep =
                    wncs::de_optimize(sc.params, sc.plant, sc.de, x_hat_0, rng);
                if (!rep.success) {
                    std::fprintf(stderr, "base-scenario optimization infeasible\n");
                    return kExitInfeasible;
                }
                fixed = rep.best;
            }
            wncs::run_sweep(sc, spec, steps, trials_set ? trials : sc.params.trials,
                            master_seed, out_path, fixed);
            std::printf("wrote sweep results under %s\n", out_path.c_str());
            return kExitOk;
        }
    } catch (const wncs::ValidationError& e) {
        std::fprintf(stderr, "validation error: %s\n", e.what());
        return kExitValidation;
    } catch (const wncs::ParseError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitValidation;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitValidation;
    }
    return kExitOk;
}
