#include <doctest.h>

#include <random>
#include <string>

#include "dbaguard/config.hpp"

using namespace dbaguard;
using nlohmann::json;

namespace {

const std::string kData = DBAGUARD_DATA_DIR;

}  // namespace

TEST_CASE("length ranges") {
    const LengthRange r = parse_length_range("0:200:5");
    CHECK(r == LengthRange{0.0, 200.0, 5.0});
    CHECK(to_string(r) == "0:200:5");
    const auto xs = expand(r);
    REQUIRE(xs.size() == 41);
    CHECK(xs.front() == 0.0);
    CHECK(xs.back() == 200.0);

    CHECK(expand(parse_length_range("100:120:2.5")).size() == 9);
    CHECK(expand(parse_length_range("0:0.3:0.1")).size() == 4);  // tolerant of rounding
    CHECK(expand(parse_length_range("50:50:1")) == std::vector<double>{50.0});

    for (const char* bad : {"", "0:10", "0:10:0", "10:0:1", "-5:10:1", "0;10;1", "0:10:1:2", "a:b:c"})
        CHECK_THROWS_AS(parse_length_range(bad), ValidationError);
}

TEST_CASE("defaults reproduce the reference scenario") {
    const RunConfig rc;
    CHECK(rc.protocol == DecoyProtocol{{0.6, 0.2, 0.0}, {0.5, 0.25, 0.25}});
    CHECK(rc.detectors.eta_high == 0.12);
    CHECK(rc.detectors.dark_count == 1e-5);
    CHECK(rc.detectors.transmittance == 0.99);
    CHECK(rc.channel.loss_exponent_per_km == 0.02);
    CHECK_NOTHROW(validate(rc));
}

TEST_CASE("bundled configs load") {
    const RunConfig ref = load_run_config(kData + "/config/reference.json");
    CHECK(ref == RunConfig{});

    const RunConfig eta_sweep = load_run_config(kData + "/config/eta_low_sweep.json");
    CHECK(eta_sweep.sweep_param == SweepParameter::eta_low);
    CHECK(eta_sweep.sweep.size() == 6);
    CHECK(eta_sweep.lengths == LengthRange{0.0, 200.0, 5.0});

    const RunConfig t_sweep = load_run_config(kData + "/config/transmittance_sweep.json");
    CHECK(t_sweep.mode == ReceiverMode::one_spad);
    CHECK(t_sweep.sweep_param == SweepParameter::transmittance);
    CHECK(t_sweep.detectors.eta_low == 0.08);
    CHECK(t_sweep.sweep.back() == 0.99999);
}

TEST_CASE("JSON round trip") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 100; ++i) {
        RunConfig rc;
        rc.detectors.eta_high = 0.05 + 0.9 * u(rng);
        rc.detectors.eta_low = rc.detectors.eta_high * u(rng) + 1e-6;
        rc.detectors.dark_count = 1e-4 * u(rng);
        rc.detectors.transmittance = 0.9 + 0.1 * u(rng);
        rc.detectors.alpha = 0.01 + 0.99 * u(rng);
        rc.channel = {300.0 * u(rng), 0.01 + 0.02 * u(rng)};
        rc.eve = {u(rng) < 0.5, u(rng), 1.0};
        rc.mode = u(rng) < 0.5 ? ReceiverMode::two_spad : ReceiverMode::one_spad;
        rc.pulses = 1 + static_cast<std::uint64_t>(1e9 * u(rng));
        rc.seed = rng();
        rc.sweep = {u(rng) + 1e-9, 0.5};
        rc.sweep_param = u(rng) < 0.5 ? SweepParameter::eta_low : SweepParameter::transmittance;
        rc.lengths = {0.0, 10.0 + 100.0 * u(rng), 2.5};

        const json j = to_json(rc);
        const RunConfig back = run_config_from_json(json::parse(j.dump()));
        CHECK(back == rc);
        CHECK(to_json(back) == j);
    }
}

TEST_CASE("strict parsing") {
    auto issues_of = [](const json& j) -> std::vector<FieldError> {
        try {
            run_config_from_json(j);
        } catch (const ValidationError& e) {
            return e.issues();
        }
        return {};
    };
    auto has = [](const std::vector<FieldError>& v, const std::string& field) {
        for (const auto& e : v)
            if (e.field == field) return true;
        return false;
    };

    CHECK(has(issues_of(json{{"detectors", json::object()}}), "detectors"));
    CHECK(has(issues_of(json{{"detector", {{"eta_hi", 0.1}}}}), "detector.eta_hi"));
    CHECK(has(issues_of(json{{"detector", {{"alpha", "half"}}}}), "detector.alpha"));
    CHECK(has(issues_of(json{{"run", {{"pulses", -3}}}}), "run.pulses"));
    CHECK(has(issues_of(json{{"run", {{"pulses", 1.5}}}}), "run.pulses"));
    CHECK(has(issues_of(json{{"run", {{"mode", "two"}}}}), "run.mode"));
    CHECK(has(issues_of(json{{"curve", {{"sweep", {0.1, "x"}}}}}), "curve.sweep"));
    CHECK(has(issues_of(json{{"curve", {{"length_range", "1:2"}}}}), "curve.length_range"));
    CHECK(has(issues_of(json{{"eve", {{"active", 1}}}}), "eve.active"));
    CHECK(has(issues_of(json::array()), "config"));

    // Several problems are reported together.
    const auto many = issues_of(json{{"detector", {{"eta_hi", 0.1}}}, {"extra", 1}});
    CHECK(many.size() == 2);

    // Integral floats are accepted as counts.
    CHECK(run_config_from_json(json{{"run", {{"pulses", 1e9}}}}).pulses == 1'000'000'000);
    // Absent keys keep defaults.
    CHECK(run_config_from_json(json::object()) == RunConfig{});
}

TEST_CASE("semantic validation prefixes sections") {
    RunConfig rc;
    rc.detectors.alpha = 0.0;
    rc.channel.length_km = -1.0;
    rc.pulses = 0;
    rc.sweep = {};
    try {
        validate(rc);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(e.mentions("detector.alpha"));
        CHECK(e.mentions("channel.length_km"));
        CHECK(e.mentions("run.pulses"));
        CHECK(e.mentions("curve.sweep"));
    }
    CHECK_THROWS_AS(load_run_config(kData + "/config/missing.json"), ValidationError);
}

TEST_CASE("counts from JSON") {
    const SessionCounts c = counts_from_json(
        json{{"n_alice", 1000}, {"n_sent", 270}, {"n_clicked", 15}, {"n_double", 1}, {"n_error", 0}});
    CHECK(c == SessionCounts{1000, 270, 15, 1, 0});
    CHECK(counts_from_json(to_json(c)) == c);
    CHECK_THROWS_AS(counts_from_json(json{{"n_alice", 10}, {"n_clicks", 3}}), ValidationError);
}
