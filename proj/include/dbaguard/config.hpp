#ifndef DBAGUARD_CONFIG_HPP
#define DBAGUARD_CONFIG_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "dbaguard/estimator.hpp"
#include "dbaguard/model.hpp"

namespace dbaguard {

struct LengthRange {
    double start_km = 0.0;
    double stop_km = 150.0;
    double step_km = 5.0;

    bool operator==(const LengthRange&) const = default;
};

/// Parses "a:b:step" (inclusive of b).
LengthRange parse_length_range(const std::string& text);
std::string to_string(const LengthRange& range);
std::vector<double> expand(const LengthRange& range);

/// Everything a CLI run needs. Defaults reproduce the reference scenario:
/// {0.6, 0.2, 0} decoys with {0.5, 0.25, 0.25}, eta_high 0.12, Y0 1e-5,
/// 1 - T = 0.01, 0.2 dB/km fiber.
struct RunConfig {
    DecoyProtocol protocol = standard_decoy_protocol();
    DetectorConfig detectors = standard_detectors(0.06, 0.5);
    ChannelConfig channel{100.0, 0.02};
    EveStrategy eve{false, 0.5, 1.0};

    ReceiverMode mode = ReceiverMode::two_spad;
    std::uint64_t pulses = 1'000'000;
    std::uint64_t seed = 42;

    SweepParameter sweep_param = SweepParameter::eta_low;
    std::vector<double> sweep{0.02, 0.04, 0.06, 0.08, 0.10, 0.12};
    LengthRange lengths;

    bool operator==(const RunConfig&) const = default;
};

/// Throws ValidationError listing every invalid field.
RunConfig validate(const RunConfig& config);

// JSON mapping. Parsing is strict: unknown keys and wrong types are
// reported as ValidationError; absent keys keep their defaults.
nlohmann::json to_json(const DecoyProtocol& v);
nlohmann::json to_json(const DetectorConfig& v);
nlohmann::json to_json(const ChannelConfig& v);
nlohmann::json to_json(const EveStrategy& v);
nlohmann::json to_json(const SessionCounts& v);
nlohmann::json to_json(const RunConfig& v);

DecoyProtocol protocol_from_json(const nlohmann::json& j, DecoyProtocol base = {});
DetectorConfig detectors_from_json(const nlohmann::json& j, DetectorConfig base = {});
ChannelConfig channel_from_json(const nlohmann::json& j, ChannelConfig base = {});
EveStrategy eve_from_json(const nlohmann::json& j, EveStrategy base = {});
SessionCounts counts_from_json(const nlohmann::json& j);
RunConfig run_config_from_json(const nlohmann::json& j, RunConfig base = {});

RunConfig load_run_config(const std::string& path);

}  // namespace dbaguard

#endif  // DBAGUARD_CONFIG_HPP
