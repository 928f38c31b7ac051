#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "dbaguard/attack.hpp"
#include "dbaguard/estimator.hpp"
#include "dbaguard/gains.hpp"

using namespace dbaguard;

namespace {

constexpr double kQEve = 0.27091149368349132;

// Argmin of f over the grid {step, 2 step, ..., 1}.
template <typename F>
double grid_argmin(F f, double step = 1e-4) {
    double best = step;
    double best_value = f(step);
    const int n = static_cast<int>(std::lround(1.0 / step));
    for (int k = 2; k <= n; ++k) {
        const double a = k * step;
        const double v = f(a);
        if (v < best_value) {
            best_value = v;
            best = a;
        }
    }
    return best;
}

}  // namespace

TEST_CASE("Eve click estimators, examples") {
    // 0.5 (0.5 * 1000 + 4 * 10 / 0.5) = 290
    CHECK(eve_clicked_2spad(0.5, 1000.0, 10.0) == doctest::Approx(290.0));
    // 0.5 * 1000 / 4 + 2 * 10 * 1.5 / 0.5 = 185
    CHECK(eve_clicked_1spad(0.5, 1000.0, 10.0) == doctest::Approx(185.0));
    CHECK(success_1spad(0.5, 1000.0, 10.0) == doctest::Approx(165.0));

    const Tally t{1e6, 1000.0, 400.0, 10.0, 10.0};
    CHECK(key_bits_2spad(t, 0.5).n_key == doctest::Approx(110.0));
    CHECK(key_bits_1spad(t, 0.5).n_key == doctest::Approx(215.0));

    const Tally low{1e6, 1000.0, 100.0, 10.0, 10.0};
    const KeyEstimate k = key_bits_2spad(low, 0.5);
    CHECK(k.clamped);
    CHECK(k.n_key == 0.0);
    CHECK(k.raw == doctest::Approx(-190.0));

    CHECK_THROWS_AS(eve_clicked_2spad(0.0, 1000.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(eve_clicked_1spad(-0.1, 1000.0, 1.0), std::invalid_argument);
}

TEST_CASE("Eve click estimate equals the expected imposed clicks") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.01, 1.0);
    for (int i = 0; i < 300; ++i) {
        const double alpha = u(rng);
        const double beta = u(rng);
        const double n = 1e6 * u(rng);
        // sifted double clicks n alpha beta / 4
        const double nd = n * imposition_stats_2spad(alpha, beta).p_double / 2.0;
        CHECK(eve_clicked_2spad(alpha, n, nd) == doctest::Approx(n * (alpha + beta) / 2.0).epsilon(1e-12));
        // success + both error arms of the single detector
        const double ne = n * imposition_stats_1spad(alpha, beta).p_error / 2.0;
        CHECK(success_1spad(alpha, n, ne) ==
              doctest::Approx(n * (alpha + beta) / 4.0).epsilon(1e-12));
    }
}

TEST_CASE("optimal alpha examples") {
    const AlphaChoice a = optimal_alpha(ReceiverMode::two_spad, 25.0, 1e6, 1e-2);
    CHECK(a.alpha == doctest::Approx(0.1));
    CHECK_FALSE(a.clamped);

    const AlphaChoice b = optimal_alpha(ReceiverMode::one_spad, 25.0, 1e6, 1e-2);
    CHECK(b.alpha == doctest::Approx(2.0 * std::sqrt(0.005)));

    const AlphaChoice c = optimal_alpha(ReceiverMode::two_spad, 1e6, 1e6, 0.5);
    CHECK(c.clamped);
    CHECK(c.alpha == 1.0);
    CHECK(c.raw > 1.0);

    const AlphaChoice z = optimal_alpha(ReceiverMode::two_spad, 0.0, 1e6, 0.5);
    CHECK(z.alpha == 0.0);
    CHECK_FALSE(z.clamped);

    CHECK_THROWS_AS(optimal_alpha(ReceiverMode::two_spad, 1.0, 0.0, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(optimal_alpha(ReceiverMode::two_spad, 1.0, 1e6, 0.0), std::invalid_argument);
}

TEST_CASE("optimal alpha agrees with a grid search") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int compared = 0;
    for (int i = 0; i < 200; ++i) {
        const double n_alice = std::pow(10.0, 5.0 + 4.0 * u(rng));
        const double q_eve = 0.05 + 0.9 * u(rng);
        const double n_sent = n_alice * q_eve;
        const double fp = n_sent * 0.25 * u(rng) * u(rng) * 0.5;
        for (ReceiverMode mode : {ReceiverMode::two_spad, ReceiverMode::one_spad}) {
            const AlphaChoice best = optimal_alpha(mode, fp, n_alice, q_eve);
            if (best.raw < 2e-3 || best.raw > 0.999) continue;
            const double grid = mode == ReceiverMode::two_spad
                                    ? grid_argmin([&](double a) { return eve_clicked_2spad(a, n_sent, fp); })
                                    : grid_argmin([&](double a) { return eve_clicked_1spad(a, n_sent, fp); });
            CHECK(std::abs(grid - best.alpha) <= 1e-4);
            ++compared;
        }
    }
    CHECK(compared >= 100);
}

TEST_CASE("Eve terms are convex in alpha") {
    const double n = 1e6;
    const double fp = 400.0;
    const double h = 0.01;
    for (double a = 0.02; a < 0.98; a += 0.01) {
        CHECK(eve_clicked_2spad(a + h, n, fp) - 2.0 * eve_clicked_2spad(a, n, fp) +
                  eve_clicked_2spad(a - h, n, fp) >= 0.0);
        CHECK(eve_clicked_1spad(a + h, n, fp) - 2.0 * eve_clicked_1spad(a, n, fp) +
                  eve_clicked_1spad(a - h, n, fp) >= 0.0);
    }
}

TEST_CASE("closed forms at the optimum") {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        const double n_alice = 1e9;
        const double n_sent = n_alice * kQEve;
        const double fp = n_sent * 1e-3 * u(rng);
        const double n_clicked = n_sent * (0.2 + 0.5 * u(rng));
        const Tally t{n_alice, n_sent, n_clicked, fp, fp};

        const double a2 = optimal_alpha(ReceiverMode::two_spad, fp, n_alice, kQEve).alpha;
        CHECK(key_bits_optimal_2spad(t, kQEve).raw ==
              doctest::Approx(key_bits_2spad(t, a2).raw).epsilon(1e-9));

        const double a1 = optimal_alpha(ReceiverMode::one_spad, fp, n_alice, kQEve).alpha;
        CHECK(eve_bits_1spad_optimal(t, kQEve) ==
              doctest::Approx(eve_clicked_1spad(a1, n_sent, fp)).epsilon(1e-9));
    }
}

TEST_CASE("key bits decrease with the fingerprint count") {
    Tally t{1e9, 1e9 * kQEve, 1e7, 0.0, 0.0};
    double previous = key_bits_optimal_2spad(t, kQEve).raw;
    CHECK(previous == doctest::Approx(1e7));
    for (double nd = 1.0; nd < 1e6; nd *= 3.0) {
        t.n_double = nd;
        const double k = key_bits_optimal_2spad(t, kQEve).raw;
        CHECK(k < previous);
        previous = k;
    }
}

TEST_CASE("leakage estimate bundles the pieces") {
    const Tally t{1e6, 1e6 * kQEve, 1e5, 1e2, 0.0};
    const LeakageEstimate e = estimate_leakage(ReceiverMode::two_spad, t, 0.5, kQEve);
    CHECK(e.eve_clicked == doctest::Approx(eve_clicked_2spad(0.5, t.n_sent, t.n_double)));
    CHECK(e.key_bits == doctest::Approx(key_bits_2spad(t, 0.5).n_key));
    CHECK(e.beta_hat == doctest::Approx(infer_beta(ReceiverMode::two_spad, 1e2, t.n_sent, 0.5).beta_hat));
    CHECK(e.secure_fraction == doctest::Approx(e.key_bits / 1e5));
    CHECK(e.alpha_opt == doctest::Approx(optimal_alpha(ReceiverMode::two_spad, 1e2, 1e6, kQEve).alpha));
    CHECK(e.key_bits_sigma > 0.0);
    CHECK(e.flags.empty());

    Tally no_sent = t;
    no_sent.n_sent = 0.0;
    const LeakageEstimate d = estimate_leakage(ReceiverMode::two_spad, no_sent, 0.5, kQEve);
    CHECK(d.has_flag(flag::n_sent_default));
    CHECK(d.eve_clicked == doctest::Approx(e.eve_clicked));

    const Tally heavy{1e6, 1e6 * kQEve, 2e4, 1e5, 1e5};
    const LeakageEstimate h = estimate_leakage(ReceiverMode::one_spad, heavy, 0.5, kQEve);
    CHECK(h.has_flag(flag::clamped));
    CHECK(h.has_flag(flag::beta_exceeds_one));
    CHECK(h.has_flag(flag::alpha_clamped));
    CHECK(h.secure_fraction == 0.0);

    const Tally silent{1e6, 0.0, 0.0, 0.0, 0.0};
    CHECK(estimate_leakage(ReceiverMode::two_spad, silent, 0.5, kQEve).secure_fraction == 0.0);
}

TEST_CASE("sweep parameter names") {
    CHECK(parse_sweep_parameter("eta_low") == SweepParameter::eta_low);
    CHECK(parse_sweep_parameter(to_string(SweepParameter::transmittance)) == SweepParameter::transmittance);
    CHECK_THROWS_AS(parse_sweep_parameter("alpha"), ValidationError);
}

TEST_CASE("a perfect system leaks nothing") {
    DetectorConfig d = standard_detectors(0.06, 0.5);
    d.transmittance = 1.0;
    d.dark_count = 0.0;
    for (ReceiverMode mode : {ReceiverMode::two_spad, ReceiverMode::one_spad}) {
        for (double length : {0.0, 50.0, 150.0}) {
            const CurvePoint p = secure_fraction_point(standard_decoy_protocol(), d, {length, 0.02}, mode);
            CHECK(p.secure_fraction == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(p.alpha_opt == 0.0);
        }
    }
}

TEST_CASE("self-consistent alpha is a fixed point") {
    const DecoyProtocol protocol = standard_decoy_protocol();
    const double q_eve = eve_gain(protocol);
    for (ReceiverMode mode : {ReceiverMode::two_spad, ReceiverMode::one_spad}) {
        for (double eta_low : {0.02, 0.06, 0.12}) {
            for (double length : {0.0, 40.0, 100.0, 150.0}) {
                const ChannelConfig ch{length, 0.02};
                DetectorConfig d = standard_detectors(eta_low, 0.5);
                const AlphaChoice a = self_consistent_alpha(protocol, d, ch, mode);
                if (a.clamped) continue;
                d.alpha = a.alpha;
                const Tally t = expected_counts(protocol, d, ch, 1e12, mode);
                const double fp = mode == ReceiverMode::two_spad ? t.n_double : t.n_error;
                const AlphaChoice again = optimal_alpha(mode, fp, 1e12, q_eve);
                CHECK(again.alpha == doctest::Approx(a.alpha).epsilon(1e-9));
            }
        }
    }
}

TEST_CASE("secure fraction curve at the reference scenario") {
    CurveRequest req;
    req.protocol = standard_decoy_protocol();
    req.detectors = standard_detectors(0.06, 0.5);
    req.sweep = {0.02, 0.06, 0.12};
    req.lengths_km = {0.0, 50.0, 100.0, 120.0, 150.0};
    const auto points = secure_fraction_curve(req);
    REQUIRE(points.size() == 15);

    // sweep-major order
    CHECK(points[0].sweep_value == 0.02);
    CHECK(points[4].length_km == 150.0);
    CHECK(points[5].sweep_value == 0.06);

    for (const CurvePoint& p : points) {
        CHECK(p.secure_fraction >= 0.0);
        CHECK(p.secure_fraction <= 1.0);
        CHECK(p.alpha_opt >= 0.0);
        CHECK(p.alpha_opt <= 1.0);
    }
    // Closer gate efficiencies cost fewer honest clicks than they save in
    // fingerprints: S grows with eta_low at fixed length.
    for (std::size_t k = 0; k < 5; ++k) {
        CHECK(points[k].secure_fraction <= points[5 + k].secure_fraction + 1e-12);
        CHECK(points[5 + k].secure_fraction <= points[10 + k].secure_fraction + 1e-12);
    }
    // Hand estimate: about 0.71 at 100 km with eta_low = 0.12.
    CHECK(points[12].secure_fraction == doctest::Approx(0.714).epsilon(0.03));
}

TEST_CASE("two detectors leak less than one") {
    for (double eta_low : {0.02, 0.06, 0.12}) {
        for (double length = 0.0; length <= 150.0; length += 10.0) {
            const DetectorConfig d = standard_detectors(eta_low, 0.5);
            const ChannelConfig ch{length, 0.02};
            const double two = secure_fraction_point(standard_decoy_protocol(), d, ch, ReceiverMode::two_spad)
                                   .secure_fraction;
            const double one = secure_fraction_point(standard_decoy_protocol(), d, ch, ReceiverMode::one_spad)
                                   .secure_fraction;
            CHECK(two >= one);
        }
    }
}

TEST_CASE("curve requests are validated") {
    CurveRequest req;
    req.protocol = standard_decoy_protocol();
    req.detectors = standard_detectors(0.06, 0.5);
    req.lengths_km = {0.0};
    CHECK_THROWS_AS(secure_fraction_curve(req), ValidationError);
    req.sweep = {0.5};  // eta_low above eta_high
    CHECK_THROWS_AS(secure_fraction_curve(req), ValidationError);
    req.sweep = {0.06};
    req.lengths_km = {-5.0};
    CHECK_THROWS_AS(secure_fraction_curve(req), ValidationError);
}
