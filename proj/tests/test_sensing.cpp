#include <doctest.h>

#include <cmath>

#include "wncs/config.hpp"
#include "wncs/plant.hpp"
#include "wncs/rng.hpp"
#include "wncs/sensing.hpp"

namespace {

wncs::PlantModel make_agv() {
    const wncs::Vec lo = (wncs::Vec(3) << -150, -10, -10).finished();
    const wncs::Vec hi = (wncs::Vec(3) << 50, 10, 10).finished();
    const wncs::Vec x0 = (wncs::Vec(3) << -100, 1, 1).finished();
    wncs::Mat w = wncs::Mat::Zero(3, 3);
    w.diagonal() << 10, 10, 1;
    return wncs::agv_plant(0.125, 0.1, w, w, 1.0, lo, hi, x0);
}

} // namespace

TEST_CASE("midpoint quantizer basics") {
    const wncs::Quantizer q{wncs::Vec::Zero(1), wncs::Vec::Ones(1), 1};
    wncs::Vec x(1);
    x << 0.3;
    CHECK(wncs::quantize(q, x)[0] == doctest::Approx(0.25));
    x << 1.0; // exact upper bound lands in the top bin
    CHECK(wncs::quantize(q, x)[0] == doctest::Approx(0.75));
    // quantization is idempotent
    x << 0.6187;
    const wncs::Vec once = wncs::quantize(q, x);
    CHECK(wncs::quantize(q, once) == once);
}

TEST_CASE("quantizer clamps out-of-range inputs and counts them") {
    const wncs::Quantizer q{wncs::Vec::Zero(2), wncs::Vec::Ones(2), 2};
    wncs::Vec x(2);
    x << -3.0, 0.4;
    long clamps = 0;
    const wncs::Vec out = wncs::quantize(q, x, &clamps);
    CHECK(clamps == 1);
    CHECK(out[0] == doctest::Approx(0.125)); // bottom-bin midpoint
}

TEST_CASE("quantization error stays within the half-bin bound") {
    const wncs::PlantModel pm = make_agv();
    for (int r : {1, 4, 8}) {
        const wncs::Quantizer q{pm.x_l, pm.x_u, r};
        wncs::Stream rng(100 + r);
        double max_err = 0.0, mean_err = 0.0;
        const int n = 100000;
        for (int i = 0; i < n; ++i) {
            wncs::Vec x(3);
            for (int c = 0; c < 3; ++c)
                x[c] = pm.x_l[c] + rng.uniform() * (pm.x_u[c] - pm.x_l[c]);
            const wncs::Vec e = wncs::quantize(q, x) - x;
            for (int c = 0; c < 3; ++c) {
                const double bound = (pm.x_u[c] - pm.x_l[c]) / std::exp2(r + 1);
                CHECK(std::abs(e[c]) <= bound * (1.0 + 1e-12));
                max_err = std::max(max_err, std::abs(e[c]));
            }
            mean_err += e[0];
        }
        // unbiasedness of the midpoint rule under uniform inputs
        const double sigma = (pm.x_u[0] - pm.x_l[0]) / std::exp2(r) / std::sqrt(12.0 * n);
        CHECK(std::abs(mean_err / n) < 3.0 * sigma);
    }
}

TEST_CASE("uniform-input quantization MSE matches the closed form") {
    wncs::Stream rng(55);
    for (int r : {1, 4, 8}) {
        const wncs::Quantizer q{wncs::Vec::Zero(1), wncs::Vec::Ones(1), r};
        double acc = 0.0;
        const int n = 2000000;
        for (int i = 0; i < n; ++i) {
            wncs::Vec x(1);
            x << rng.uniform();
            const double e = wncs::quantize(q, x)[0] - x[0];
            acc += e * e;
        }
        CHECK(acc / n == doctest::Approx(wncs::quantization_mse(q)).epsilon(0.005));
    }
    // r=1 on [0,1] is 1/48 exactly
    const wncs::Quantizer q1{wncs::Vec::Zero(1), wncs::Vec::Ones(1), 1};
    CHECK(wncs::quantization_mse(q1) == doctest::Approx(1.0 / 48.0));
}

TEST_CASE("MSE scales by 4 per bit and quadratically in the range") {
    const wncs::Vec lo = wncs::Vec::Zero(2);
    const wncs::Vec hi = 10.0 * wncs::Vec::Ones(2);
    const wncs::Quantizer a{lo, hi, 3}, b{lo, hi, 4};
    CHECK(wncs::quantization_mse(a) == doctest::Approx(4.0 * wncs::quantization_mse(b)));
    const wncs::Quantizer c{lo, 1.0 * wncs::Vec::Ones(2), 3};
    CHECK(wncs::quantization_mse(a) == doctest::Approx(100.0 * wncs::quantization_mse(c)));
}

TEST_CASE("uplink arrival rate") {
    CHECK(wncs::uplink_arrival_rate(6, 0.1) == doctest::Approx(60.0));
    CHECK(wncs::uplink_arrival_rate(12, 0.1) == doctest::Approx(120.0));
    CHECK(wncs::uplink_arrival_rate(6, 0.05) == doctest::Approx(120.0));
    CHECK(wncs::uplink_arrival_rate_per_component(6, 3, 0.1) == doctest::Approx(180.0));
}

TEST_CASE("predicted trajectory follows the closed-loop recurrence") {
    const wncs::PlantModel pm = make_agv();
    wncs::RowVec k(3);
    k << 0.4, 0.8, 0.1;
    const wncs::Mat a_k = wncs::closed_loop_matrix(pm, k, 0.3);
    const wncs::Vec x0 = (wncs::Vec(3) << -20, 1, 0.5).finished();
    const auto seq = wncs::predict_states(a_k, x0, 6);
    REQUIRE(seq.size() == 6);
    CHECK(seq[0] == x0);
    for (int i = 1; i < 6; ++i)
        CHECK((seq[static_cast<std::size_t>(i)] - a_k * seq[static_cast<std::size_t>(i - 1)])
                  .cwiseAbs()
                  .maxCoeff() < 1e-12);
    CHECK(wncs::predict_states(a_k, wncs::Vec::Zero(3), 4)[3].cwiseAbs().maxCoeff() ==
          doctest::Approx(0.0));
    CHECK(wncs::predict_states(a_k, x0, 1).size() == 1);
}

TEST_CASE("estimation error bound reduces to the quantization term at eps in {0,1}") {
    const wncs::PlantModel pm = make_agv();
    wncs::RowVec k(3);
    k << 0.5, 0.3, 0.1;
    // shrink A~ so that Tr(A~^T A~) < 1 and the loss term is the only extra
    wncs::PlantModel small = pm;
    small.a_tilde *= 0.3;
    const double q0 = (small.x_l - small.x_u).squaredNorm() / (12.0 * std::exp2(12));
    for (double eps : {0.0, 1.0}) {
        const wncs::ErrorBoundInputs in{6, eps, 0.1, 0.1, &small, k};
        CHECK(wncs::estimation_error_bound(in) == doctest::Approx(q0));
    }
}

TEST_CASE("equality branch grows linearly in the delay horizon") {
    wncs::PlantModel pm = make_agv();
    // orthogonal-like A~ with Tr(A~^T A~) = 1
    pm.a_tilde = wncs::Mat::Identity(3, 3) / std::sqrt(3.0);
    wncs::RowVec k(3);
    k << 0.5, 0.3, 0.1;
    const wncs::ErrorBoundInputs one{6, 0.2, 0.1, 0.1, &pm, k};
    const wncs::ErrorBoundInputs three{6, 0.2, 0.3, 0.1, &pm, k};
    const double q0 = (pm.x_l - pm.x_u).squaredNorm() / (12.0 * std::exp2(12));
    const double slope1 = wncs::estimation_error_bound(one) - q0;
    const double slope3 = wncs::estimation_error_bound(three) - q0;
    CHECK(slope3 == doctest::Approx(3.0 * slope1));
}

TEST_CASE("bound is monotone in r and in eps on [0, 1/2]") {
    const wncs::PlantModel pm = make_agv();
    wncs::RowVec k(3);
    k << 0.5, 0.3, 0.1;
    double prev = 1e300;
    for (int r = 1; r <= 8; ++r) {
        const wncs::ErrorBoundInputs in{r, 0.2, 0.1, 0.1, &pm, k};
        const double b = wncs::estimation_error_bound(in);
        CHECK(b <= prev);
        prev = b;
    }
    prev = 0.0;
    for (double eps : {0.0, 0.1, 0.2, 0.3, 0.4, 0.5}) {
        const wncs::ErrorBoundInputs in{6, eps, 0.1, 0.1, &pm, k};
        const double b = wncs::estimation_error_bound(in);
        CHECK(b >= prev);
        prev = b;
    }
}

TEST_CASE("bound dominates a simulated one-step estimation error") {
    const wncs::PlantModel pm = make_agv();
    wncs::RowVec k(3);
    k << 0.634, 1.009, 0.136;
    const double eps = 0.1;
    const wncs::Quantizer q{pm.x_l, pm.x_u, 6};
    const wncs::Mat a_k = wncs::closed_loop_matrix(pm, k, eps);
    wncs::Stream rng(2024);
    double acc = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        wncs::Vec x(3);
        for (int c = 0; c < 3; ++c)
            x[c] = pm.x_l[c] + rng.uniform() * (pm.x_u[c] - pm.x_l[c]);
        const wncs::Vec x_hat = wncs::quantize(q, x);
        const int eta = rng.uniform() < 1.0 - eps ? 1 : 0;
        const wncs::Vec truth = wncs::step_true_state(pm, x, k, x_hat, eta);
        const wncs::Vec e1 = a_k * x_hat - truth;
        acc += e1.squaredNorm();
    }
    const wncs::ErrorBoundInputs in{6, eps, 0.1, 0.1, &pm, k};
    CHECK(acc / n <= wncs::estimation_error_bound(in));
}
