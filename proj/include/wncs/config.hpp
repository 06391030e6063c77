#ifndef WNCS_CONFIG_HPP
#define WNCS_CONFIG_HPP

#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <json.hpp>

namespace wncs {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using RowVec = Eigen::RowVectorXd;

struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Physical and communication constants of a scenario. SNRs are stored
/// linear; config files may give *_db keys instead. Units: theta in 1/bit,
/// w0 in Hz, t_d and d_c_max in s, rates in bits/s.
struct SystemParams {
    double snr_u = 1000.0;
    double snr_d = 1995.262314968879; // 33 dB
    double beta_u = 1.0;
    double beta_d = 1.0;
    double theta_u = 0.02;
    double theta_d = 0.04;
    double w0 = 1.5e6;
    double c_d = 0.1;
    double t_d = 0.1;
    double d_c_max = 0.1;
    double rho = 0.999;
    int r = 6;
    int horizon_n = 10;
    int trials = 500;
    std::uint64_t seed = 42;
    // exploratory multiplier on the closed-loop delay scale (divides the
    // service rates mu_i); 1.0 reproduces the closed forms as printed
    double delay_scale = 1.0;
};

struct PlantModel {
    Mat a, b;             // continuous (n x n, n x 1)
    Mat a_tilde, b_tilde; // Euler-discretized
    Vec x_l, x_u, x_m;    // state bounds, x_m[i] = max(|x_u[i]|, |x_l[i]|)
    Mat p, q;             // Lyapunov / stage-cost weights
    double r_weight = 1.0;
    Vec x0;

    int dim() const { return static_cast<int>(a.rows()); }
};

/// Differential-evolution knobs (Algorithm Parameters of the scenario).
struct DeConfig {
    int n_p = 15;
    double p_cr = 0.7;
    double f_d = 0.5;
    int n_m = 1000;
    int stall_n = 5;
    double tol = 0.01;
    double k_max = 50.0;
    // default crossover keeps or takes the whole mutant vector; the binomial
    // mode mixes per dimension (classical DE) and resists population collapse
    bool binomial_crossover = false;
};

struct Scenario {
    SystemParams params;
    PlantModel plant;
    DeConfig de;
    double varsigma = 0.125;
};

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

inline void validate(const SystemParams& sp) {
    auto need = [](bool ok, const char* what) {
        if (!ok) throw ValidationError(what);
    };
    need(sp.snr_u > 0 && sp.snr_d > 0, "snr_u, snr_d > 0");
    need(sp.beta_u > 0 && sp.beta_d > 0, "beta_u, beta_d > 0");
    need(sp.theta_u > 0 && sp.theta_d > 0, "theta_u, theta_d > 0");
    need(sp.w0 > 0, "w0 > 0");
    need(sp.t_d > 0, "t_d > 0");
    need(sp.d_c_max > 0, "d_c_max > 0");
    need(sp.rho > 0, "rho > 0");
    need(sp.c_d > 0, "c_d > 0");
    need(sp.r >= 1, "r >= 1");
    need(sp.horizon_n >= 1, "horizon_n >= 1");
    need(sp.trials >= 1, "trials >= 1");
    need(sp.delay_scale > 0, "delay_scale > 0");
}

inline void validate(const PlantModel& pm, double t_d) {
    const int n = pm.dim();
    auto need = [](bool ok, const char* what) {
        if (!ok) throw ValidationError(what);
    };
    need(pm.b.rows() == n && pm.b.cols() == 1, "b is n x 1");
    need((pm.a_tilde - (Mat::Identity(n, n) + t_d * pm.a)).cwiseAbs().maxCoeff() < 1e-12,
         "a_tilde = I + t_d * a");
    need((pm.b_tilde - t_d * pm.b).cwiseAbs().maxCoeff() < 1e-12, "b_tilde = t_d * b");
    need(pm.x_l.size() == n && pm.x_u.size() == n, "bounds dimension");
    need((pm.x_l.array() < pm.x_u.array()).all(), "x_l < x_u componentwise");
    need((pm.x_m.array() >= 0).all(), "x_m >= 0");
    need((pm.p - pm.p.transpose()).cwiseAbs().maxCoeff() < 1e-9, "p symmetric");
    need((pm.q - pm.q.transpose()).cwiseAbs().maxCoeff() < 1e-9, "q symmetric");
    Eigen::SelfAdjointEigenSolver<Mat> ep(pm.p), eq(pm.q);
    need(ep.eigenvalues().minCoeff() > -1e-9, "p positive semidefinite");
    need(eq.eigenvalues().minCoeff() > -1e-9, "q positive semidefinite");
    need(pm.r_weight >= 0, "r_weight >= 0");
    need(pm.x0.size() == n, "x0 dimension");
}

inline void validate(const DeConfig& de) {
    auto need = [](bool ok, const char* what) {
        if (!ok) throw ValidationError(what);
    };
    need(de.n_p >= 4, "n_p >= 4");
    need(de.p_cr >= 0 && de.p_cr <= 1, "0 <= p_cr <= 1");
    need(de.f_d > 0, "f_d > 0");
    need(de.n_m >= 1, "n_m >= 1");
    need(de.stall_n >= 1, "stall_n >= 1");
    need(de.tol > 0, "tol > 0");
    need(de.k_max > 0, "k_max > 0");
}

/// AGV model: triple integrator with engine time constant varsigma,
/// discretized by the forward Euler rule.
inline PlantModel agv_plant(double varsigma, double t_d, const Mat& p, const Mat& q,
                            double r_weight, const Vec& x_l, const Vec& x_u, const Vec& x0) {
    if (varsigma == 0.0) throw ValidationError("varsigma must be nonzero");
    if (t_d <= 0.0) throw ValidationError("t_d > 0");
    PlantModel pm;
    pm.a = Mat::Zero(3, 3);
    pm.a(0, 1) = 1.0;
    pm.a(1, 2) = 1.0;
    pm.a(2, 2) = -1.0 / varsigma;
    pm.b = Mat::Zero(3, 1);
    pm.b(2, 0) = -1.0 / varsigma;
    pm.a_tilde = Mat::Identity(3, 3) + t_d * pm.a;
    pm.b_tilde = t_d * pm.b;
    pm.x_l = x_l;
    pm.x_u = x_u;
    pm.x_m = x_l.cwiseAbs().cwiseMax(x_u.cwiseAbs());
    pm.p = p;
    pm.q = q;
    pm.r_weight = r_weight;
    pm.x0 = x0;
    validate(pm, t_d);
    return pm;
}

namespace detail {

inline Vec json_vec(const nlohmann::json& j) {
    Vec v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
    return v;
}

inline Mat diag_from(const Vec& d) {
    Mat m = Mat::Zero(d.size(), d.size());
    m.diagonal() = d;
    return m;
}

} // namespace detail

inline Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open scenario file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed scenario file: ") + e.what());
    }

    Scenario sc;
    try {
        const auto& s = j.at("system");
        SystemParams& sp = sc.params;
        if (s.contains("snr_u_db")) sp.snr_u = db_to_linear(s["snr_u_db"].get<double>());
        else if (s.contains("snr_u")) sp.snr_u = s["snr_u"].get<double>();
        if (s.contains("snr_d_db")) sp.snr_d = db_to_linear(s["snr_d_db"].get<double>());
        else if (s.contains("snr_d")) sp.snr_d = s["snr_d"].get<double>();
        sp.beta_u = s.value("beta_u", sp.beta_u);
        sp.beta_d = s.value("beta_d", sp.beta_d);
        sp.theta_u = s.value("theta_u", sp.theta_u);
        sp.theta_d = s.value("theta_d", sp.theta_d);
        sp.w0 = s.value("w0_hz", sp.w0);
        sp.c_d = s.value("c_d", sp.c_d);
        sp.t_d = s.value("t_d", sp.t_d);
        sp.d_c_max = s.value("d_c_max", sp.d_c_max);
        sp.rho = s.value("rho", sp.rho);
        sp.r = s.value("r", sp.r);
        sp.horizon_n = s.value("horizon_n", sp.horizon_n);
        sp.trials = s.value("trials", sp.trials);
        sp.seed = s.value("seed", sp.seed);
        sp.delay_scale = s.value("delay_scale", sp.delay_scale);

        const auto& p = j.at("plant");
        sc.varsigma = p.value("varsigma", 0.125);
        Vec x_l = p.contains("x_l") ? detail::json_vec(p["x_l"])
                                    : (Vec(3) << -150.0, -10.0, -10.0).finished();
        Vec x_u = p.contains("x_u") ? detail::json_vec(p["x_u"])
                                    : (Vec(3) << 50.0, 10.0, 10.0).finished();
        Vec x0 = p.contains("x0") ? detail::json_vec(p["x0"])
                                  : (Vec(3) << -100.0, 1.0, 1.0).finished();
        Vec pd = p.contains("p_diag") ? detail::json_vec(p["p_diag"])
                                      : (Vec(3) << 10.0, 10.0, 1.0).finished();
        Vec qd = p.contains("q_diag") ? detail::json_vec(p["q_diag"])
                                      : (Vec(3) << 10.0, 10.0, 1.0).finished();
        double r_weight = p.value("r_weight", 1.0);
        sc.plant = agv_plant(sc.varsigma, sp.t_d, detail::diag_from(pd), detail::diag_from(qd),
                             r_weight, x_l, x_u, x0);

        if (j.contains("de")) {
            const auto& d = j["de"];
            sc.de.n_p = d.value("n_p", sc.de.n_p);
            sc.de.p_cr = d.value("p_cr", sc.de.p_cr);
            sc.de.f_d = d.value("f_d", sc.de.f_d);
            sc.de.n_m = d.value("n_m", sc.de.n_m);
            sc.de.stall_n = d.value("stall_n", sc.de.stall_n);
            sc.de.tol = d.value("tol", sc.de.tol);
            sc.de.k_max = d.value("k_max", sc.de.k_max);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("scenario schema error: ") + e.what());
    }

    validate(sc.params);
    validate(sc.plant, sc.params.t_d);
    validate(sc.de);
    return sc;
}

inline nlohmann::json scenario_to_json(const Scenario& sc) {
    nlohmann::json j;
    const SystemParams& sp = sc.params;
    j["system"] = {
        {"snr_u", sp.snr_u},       {"snr_d", sp.snr_d},
        {"beta_u", sp.beta_u},     {"beta_d", sp.beta_d},
        {"theta_u", sp.theta_u},   {"theta_d", sp.theta_d},
        {"w0_hz", sp.w0},          {"c_d", sp.c_d},
        {"t_d", sp.t_d},           {"d_c_max", sp.d_c_max},
        {"rho", sp.rho},           {"r", sp.r},
        {"horizon_n", sp.horizon_n}, {"trials", sp.trials},
        {"seed", sp.seed},         {"delay_scale", sp.delay_scale},
    };
    auto vec_json = [](const Vec& v) {
        std::vector<double> out(v.data(), v.data() + v.size());
        return nlohmann::json(out);
    };
    const PlantModel& pm = sc.plant;
    j["plant"] = {
        {"varsigma", sc.varsigma},
        {"x_l", vec_json(pm.x_l)},
        {"x_u", vec_json(pm.x_u)},
        {"x0", vec_json(pm.x0)},
        {"p_diag", vec_json(pm.p.diagonal())},
        {"q_diag", vec_json(pm.q.diagonal())},
        {"r_weight", pm.r_weight},
    };
    j["de"] = {
        {"n_p", sc.de.n_p}, {"p_cr", sc.de.p_cr}, {"f_d", sc.de.f_d},
        {"n_m", sc.de.n_m}, {"stall_n", sc.de.stall_n}, {"tol", sc.de.tol},
        {"k_max", sc.de.k_max},
    };
    return j;
}

inline void save_scenario(const Scenario& sc, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write scenario file: " + path);
    out << scenario_to_json(sc).dump(2) << '\n';
}

} // namespace wncs

#endif
