#include "dbaguard/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dbaguard {

namespace {

constexpr double kNormalizationTolerance = 1e-12;

class Checker {
public:
    // True when value is finite; records an error otherwise.
    bool finite(const std::string& field, double value) {
        if (std::isfinite(value)) return true;
        fail(field, "must be finite");
        return false;
    }

    void in_closed(const std::string& field, double value, double lo, double hi) {
        if (!finite(field, value)) return;
        if (value < lo || value > hi) fail(field, "must lie in [" + num(lo) + ", " + num(hi) + "]");
    }

    // (lo, hi]
    void in_left_open(const std::string& field, double value, double lo, double hi) {
        if (!finite(field, value)) return;
        if (value <= lo || value > hi) fail(field, "must lie in (" + num(lo) + ", " + num(hi) + "]");
    }

    // [lo, hi)
    void in_right_open(const std::string& field, double value, double lo, double hi) {
        if (!finite(field, value)) return;
        if (value < lo || value >= hi) fail(field, "must lie in [" + num(lo) + ", " + num(hi) + ")");
    }

    void fail(std::string field, std::string message) {
        issues_.push_back({std::move(field), std::move(message)});
    }

    std::vector<FieldError> take() { return std::move(issues_); }

private:
    static std::string num(double v) {
        std::ostringstream os;
        os << v;
        return os.str();
    }

    std::vector<FieldError> issues_;
};

template <typename T>
T validated(const T& value) {
    auto issues = check(value);
    if (!issues.empty()) throw ValidationError(std::move(issues));
    return value;
}

std::string describe(const std::vector<FieldError>& issues) {
    std::string out = "invalid configuration:";
    for (const auto& issue : issues) out += " " + issue.field + " " + issue.message + ";";
    return out;
}

}  // namespace

std::string_view to_string(ReceiverMode mode) {
    return mode == ReceiverMode::two_spad ? "two_spad" : "one_spad";
}

ReceiverMode parse_receiver_mode(std::string_view text) {
    if (text == "two_spad") return ReceiverMode::two_spad;
    if (text == "one_spad") return ReceiverMode::one_spad;
    throw ValidationError("mode", "must be two_spad or one_spad, got '" + std::string(text) + "'");
}

Tally to_tally(const SessionCounts& counts) {
    return {static_cast<double>(counts.n_alice), static_cast<double>(counts.n_sent),
            static_cast<double>(counts.n_clicked), static_cast<double>(counts.n_double),
            static_cast<double>(counts.n_error)};
}

bool LeakageEstimate::has_flag(std::string_view name) const {
    return std::find(flags.begin(), flags.end(), name) != flags.end();
}

ValidationError::ValidationError(std::vector<FieldError> issues)
    : std::invalid_argument(describe(issues)), issues_(std::move(issues)) {}

ValidationError::ValidationError(std::string field, std::string message)
    : ValidationError(std::vector<FieldError>{FieldError{std::move(field), std::move(message)}}) {}

bool ValidationError::mentions(std::string_view field) const {
    return std::any_of(issues_.begin(), issues_.end(),
                       [&](const FieldError& e) { return e.field == field; });
}

std::vector<FieldError> check(const DecoyProtocol& protocol) {
    Checker c;
    if (protocol.intensities.empty()) c.fail("intensities", "must not be empty");
    if (protocol.intensities.size() != protocol.prep_probs.size())
        c.fail("prep_probs", "must have the same length as intensities");

    for (std::size_t i = 0; i < protocol.intensities.size(); ++i) {
        const auto field = "intensities[" + std::to_string(i) + "]";
        if (c.finite(field, protocol.intensities[i]) && protocol.intensities[i] < 0.0)
            c.fail(field, "must be >= 0");
    }
    double sum = 0.0;
    bool sum_ok = !protocol.prep_probs.empty();
    for (std::size_t i = 0; i < protocol.prep_probs.size(); ++i) {
        const double p = protocol.prep_probs[i];
        c.in_closed("prep_probs[" + std::to_string(i) + "]", p, 0.0, 1.0);
        if (!std::isfinite(p)) sum_ok = false;
        sum += p;
    }
    if (sum_ok && std::abs(sum - 1.0) > kNormalizationTolerance)
        c.fail("prep_probs", "must sum to 1");
    return c.take();
}

std::vector<FieldError> check(const DetectorConfig& d) {
    Checker c;
    c.in_left_open("eta_high", d.eta_high, 0.0, 1.0);
    c.in_left_open("eta_low", d.eta_low, 0.0, 1.0);
    c.in_right_open("dark_count", d.dark_count, 0.0, 1.0);
    c.in_left_open("transmittance", d.transmittance, 0.0, 1.0);
    c.in_left_open("alpha", d.alpha, 0.0, 1.0);
    if (std::isfinite(d.eta_low) && std::isfinite(d.eta_high) && d.eta_low > d.eta_high)
        c.fail("eta_low", "must be <= eta_high");
    return c.take();
}

std::vector<FieldError> check(const ChannelConfig& channel) {
    Checker c;
    if (c.finite("length_km", channel.length_km) && channel.length_km < 0.0)
        c.fail("length_km", "must be >= 0");
    if (c.finite("loss_exponent_per_km", channel.loss_exponent_per_km) &&
        channel.loss_exponent_per_km <= 0.0)
        c.fail("loss_exponent_per_km", "must be > 0");
    return c.take();
}

std::vector<FieldError> check(const EveStrategy& eve) {
    Checker c;
    c.in_closed("beta", eve.beta, 0.0, 1.0);
    // Only perfect interception is modeled.
    if (c.finite("detection_eff", eve.detection_eff) && eve.detection_eff != 1.0)
        c.fail("detection_eff", "must be 1");
    return c.take();
}

std::vector<FieldError> check(const SessionCounts& counts) {
    Checker c;
    if (counts.n_double > counts.n_clicked) c.fail("n_double", "must be <= n_clicked");
    if (counts.n_error > counts.n_clicked) c.fail("n_error", "must be <= n_clicked");
    if (counts.n_sent > counts.n_alice) c.fail("n_sent", "must be <= n_alice");
    return c.take();
}

DecoyProtocol validate(const DecoyProtocol& protocol) { return validated(protocol); }
DetectorConfig validate(const DetectorConfig& detectors) { return validated(detectors); }
ChannelConfig validate(const ChannelConfig& channel) { return validated(channel); }
EveStrategy validate(const EveStrategy& eve) { return validated(eve); }
SessionCounts validate(const SessionCounts& counts) { return validated(counts); }

DecoyProtocol standard_decoy_protocol() {
    return {{0.6, 0.2, 0.0}, {0.5, 0.25, 0.25}};
}

DetectorConfig standard_detectors(double eta_low, double alpha) {
    return {0.12, eta_low, 1e-5, 0.99, alpha};
}

}  // namespace dbaguard
