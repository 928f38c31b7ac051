#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "dbaguard/attack.hpp"
#include "dbaguard/simulator.hpp"

using namespace dbaguard;

namespace {

// Imposition probabilities recomputed directly from the click table:
// gate high w.p. alpha, pulse high w.p. beta, bases match w.p. 1/2. A
// mismatched firing entry hits both arms.
struct TableSums {
    double double_2spad = 0.0;
    double success_2spad = 0.0;
    double error_1spad = 0.0;
    double success_1spad = 0.0;
};

TableSums sum_table(double alpha, double beta) {
    TableSums s;
    for (const ClickRule& r : click_rule_table()) {
        const double pg = r.gate == GateLevel::high ? alpha : 1.0 - alpha;
        const double pp = r.pulse == PulseClass::high_energy ? beta : 1.0 - beta;
        const double w = pg * pp * 0.5 * r.click;
        if (r.basis == BasisMatch::matched) {
            s.success_2spad += w;
            s.success_1spad += 0.5 * w;  // detector accepts the slot w.p. 1/2
        } else {
            s.double_2spad += w;
            s.error_1spad += 0.5 * w;
            s.success_1spad += 0.5 * w;
        }
    }
    return s;
}

}  // namespace

TEST_CASE("click table") {
    using G = GateLevel;
    using P = PulseClass;
    using B = BasisMatch;
    CHECK(click_outcome(G::high, P::high_energy, B::matched) == 1.0);
    CHECK(click_outcome(G::high, P::high_energy, B::mismatched) == 1.0);
    CHECK(click_outcome(G::high, P::low_energy, B::matched) == 1.0);
    CHECK(click_outcome(G::high, P::low_energy, B::mismatched) == 0.0);
    CHECK(click_outcome(G::low, P::high_energy, B::matched) == 1.0);
    CHECK(click_outcome(G::low, P::high_energy, B::mismatched) == 0.0);
    CHECK(click_outcome(G::low, P::low_energy, B::matched) == 0.0);
    CHECK(click_outcome(G::low, P::low_energy, B::mismatched) == 0.0);

    int fired = 0;
    for (const ClickRule& r : click_rule_table()) {
        CHECK(r.click == click_outcome(r.gate, r.pulse, r.basis));
        fired += r.click == 1.0;
    }
    CHECK(fired == 4);
}

TEST_CASE("imposition statistics examples") {
    const auto a = imposition_stats_2spad(0.5, 0.5);
    CHECK(a.p_double == 0.125);
    CHECK(a.p_success == 0.375);

    const auto one = imposition_stats_2spad(1.0, 1.0);
    CHECK(one.p_double == 0.5);
    CHECK(one.p_success == 0.5);

    const auto zero = imposition_stats_2spad(0.3, 0.0);
    CHECK(zero.p_double == 0.0);
    CHECK(zero.p_success == doctest::Approx(0.15).epsilon(1e-15));

    const auto b = imposition_stats_1spad(0.5, 0.5);
    CHECK(b.p_error == 0.0625);
    CHECK(b.p_success == 0.25);
}

TEST_CASE("imposition identities and table sums") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 250; ++i) {
        const double alpha = u(rng);
        const double beta = u(rng);
        const auto two = imposition_stats_2spad(alpha, beta);
        const auto one = imposition_stats_1spad(alpha, beta);
        const TableSums s = sum_table(alpha, beta);
        CHECK(std::abs(two.p_double - s.double_2spad) <= 1e-15);
        CHECK(std::abs(two.p_success - s.success_2spad) <= 1e-15);
        CHECK(std::abs(one.p_error - s.error_1spad) <= 1e-15);
        CHECK(std::abs(one.p_success - s.success_1spad) <= 1e-15);

        CHECK(two.p_success + two.p_double == doctest::Approx((alpha + beta) / 2.0).epsilon(1e-14));
        CHECK(one.p_error == doctest::Approx(two.p_double / 2.0).epsilon(1e-14));
        CHECK(two.p_double <= two.p_success + 1e-15);
        CHECK(one.p_error <= one.p_success + 1e-15);
    }
}

TEST_CASE("infer_beta examples") {
    const BetaEstimate a = infer_beta(ReceiverMode::two_spad, 12'500.0, 1e5, 0.5);
    CHECK(a.beta_hat == doctest::Approx(1.0));
    CHECK(a.flags.empty());

    const BetaEstimate b = infer_beta(ReceiverMode::two_spad, 6'250.0, 1e5, 0.5);
    CHECK(b.beta_hat == doctest::Approx(0.5));
    // sigma = (4 / alpha) sqrt(p (1 - p) / n) with p = 0.0625
    CHECK(b.beta_sigma == doctest::Approx(8.0 * std::sqrt(0.0625 * 0.9375 / 1e5)).epsilon(1e-12));

    const BetaEstimate c = infer_beta(ReceiverMode::one_spad, 3'125.0, 1e5, 0.5);
    CHECK(c.beta_hat == doctest::Approx(0.5));

    const BetaEstimate d = infer_beta(ReceiverMode::two_spad, 0.0, 1e5, 0.5);
    CHECK(d.beta_hat == 0.0);
    CHECK(d.beta_sigma == 0.0);

    const SessionCounts counts{400'000, 100'000, 40'000, 6'250, 3'125};
    CHECK(infer_beta(ReceiverMode::two_spad, counts, 0.5).beta_hat == doctest::Approx(0.5));
    CHECK(infer_beta(ReceiverMode::one_spad, counts, 0.5).beta_hat == doctest::Approx(0.5));
}

TEST_CASE("infer_beta flags values above one") {
    const BetaEstimate e = infer_beta(ReceiverMode::two_spad, 20'000.0, 1e5, 0.5);
    CHECK(e.beta_hat == doctest::Approx(1.6));
    REQUIRE(e.flags.size() == 1);
    CHECK(e.flags[0] == flag::beta_exceeds_one);
}

TEST_CASE("infer_beta rejects impossible inputs") {
    CHECK_THROWS_AS(infer_beta(ReceiverMode::two_spad, 10.0, 1e5, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(infer_beta(ReceiverMode::two_spad, 10.0, 0.0, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(infer_beta(ReceiverMode::one_spad, -1.0, 1e5, 0.5), std::invalid_argument);
}

TEST_CASE("infer_beta inverts the expected fingerprint count") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(0.01, 1.0);
    for (int i = 0; i < 200; ++i) {
        const double alpha = u(rng);
        const double beta = u(rng);
        const double n = 1e6;
        const double fp2 = n * imposition_stats_2spad(alpha, beta).p_double / 2.0;
        const double fp1 = n * imposition_stats_1spad(alpha, beta).p_error / 2.0;
        CHECK(infer_beta(ReceiverMode::two_spad, fp2, n, alpha).beta_hat ==
              doctest::Approx(beta).epsilon(1e-12));
        CHECK(infer_beta(ReceiverMode::one_spad, fp1, n, alpha).beta_hat ==
              doctest::Approx(beta).epsilon(1e-12));
    }
}

TEST_CASE("simulated attack matches the imposition probabilities") {
    for (ReceiverMode mode : {ReceiverMode::two_spad, ReceiverMode::one_spad}) {
        SimConfig sc;
        sc.mode = mode;
        sc.detectors = standard_detectors(0.06, 0.3);
        sc.eve = {true, 0.7, 1.0};
        sc.n_pulses = 1'000'000;
        sc.seed = 5;
        const AttackResult r = simulate_attack(sc);
        const auto expectations = attack_expectations(sc, r);
        const ValidationReport report = validate_against_analytics(expectations);
        for (const TallyCheck& c : report.checks) {
            INFO(to_string(mode), " ", c.name, " z=", c.z);
            CHECK_FALSE(c.flagged);
        }

        const BetaEstimate est = infer_beta(mode, r.counts, 0.3);
        CHECK(std::abs(est.beta_hat - 0.7) <= 4.0 * est.beta_sigma);
    }
}
