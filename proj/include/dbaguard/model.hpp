#ifndef DBAGUARD_MODEL_HPP
#define DBAGUARD_MODEL_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dbaguard {

enum class ReceiverMode { two_spad, one_spad };

std::string_view to_string(ReceiverMode mode);
ReceiverMode parse_receiver_mode(std::string_view text);

// Diagnostic flags attached to estimates and curve points.
namespace flag {
inline constexpr std::string_view clamped = "clamped";
inline constexpr std::string_view beta_exceeds_one = "beta-exceeds-one";
inline constexpr std::string_view alpha_clamped = "alpha-clamped";
inline constexpr std::string_view n_sent_default = "n-sent-default";
}  // namespace flag

/// Decoy-state intensities (mean photon numbers) and the probability of
/// preparing each one.
struct DecoyProtocol {
    std::vector<double> intensities;
    std::vector<double> prep_probs;

    bool operator==(const DecoyProtocol&) const = default;
};

/// Bob's gated detectors. The high gate (efficiency eta_high) is chosen with
/// probability alpha, the low gate (eta_low) otherwise. transmittance is the
/// optical alignment T; 1 - T of each pulse lands in the wrong arm.
struct DetectorConfig {
    double eta_high = 0.12;
    double eta_low = 0.06;
    double dark_count = 1e-5;
    double transmittance = 0.99;
    double alpha = 0.5;

    bool operator==(const DetectorConfig&) const = default;
};

struct ChannelConfig {
    double length_km = 0.0;
    // eta_ch = 10^(-loss_exponent_per_km * L); 0.02 corresponds to 0.2 dB/km.
    double loss_exponent_per_km = 0.02;

    bool operator==(const ChannelConfig&) const = default;
};

struct EveStrategy {
    bool active = false;
    // Probability of the high-energy trigger pulse (E_always of the low gate).
    double beta = 0.0;
    double detection_eff = 1.0;

    bool operator==(const EveStrategy&) const = default;
};

/// Integer tallies from a session.
struct SessionCounts {
    std::uint64_t n_alice = 0;
    std::uint64_t n_sent = 0;
    std::uint64_t n_clicked = 0;
    std::uint64_t n_double = 0;
    std::uint64_t n_error = 0;

    bool operator==(const SessionCounts&) const = default;
};

/// Real-valued counterpart of SessionCounts. Used for expectations and as the
/// input to every estimator (the closed forms mix observations with
/// expectations).
struct Tally {
    double n_alice = 0.0;
    double n_sent = 0.0;
    double n_clicked = 0.0;
    double n_double = 0.0;
    double n_error = 0.0;

    bool operator==(const Tally&) const = default;
};

Tally to_tally(const SessionCounts& counts);

struct LeakageEstimate {
    double eve_clicked = 0.0;
    double key_bits = 0.0;
    double key_bits_sigma = 0.0;
    double secure_fraction = 0.0;
    double alpha_opt = 0.0;
    double beta_hat = 0.0;
    double beta_sigma = 0.0;
    std::vector<std::string> flags;

    bool has_flag(std::string_view name) const;
};

struct FieldError {
    std::string field;
    std::string message;

    bool operator==(const FieldError&) const = default;
};

/// Thrown by validate(); carries every violated invariant, not just the first.
class ValidationError : public std::invalid_argument {
public:
    explicit ValidationError(std::vector<FieldError> issues);
    ValidationError(std::string field, std::string message);

    const std::vector<FieldError>& issues() const noexcept { return issues_; }
    bool mentions(std::string_view field) const;

private:
    std::vector<FieldError> issues_;
};

std::vector<FieldError> check(const DecoyProtocol& protocol);
std::vector<FieldError> check(const DetectorConfig& detectors);
std::vector<FieldError> check(const ChannelConfig& channel);
std::vector<FieldError> check(const EveStrategy& eve);
std::vector<FieldError> check(const SessionCounts& counts);

// validate() returns its argument unchanged or throws ValidationError.
DecoyProtocol validate(const DecoyProtocol& protocol);
DetectorConfig validate(const DetectorConfig& detectors);
ChannelConfig validate(const ChannelConfig& channel);
EveStrategy validate(const EveStrategy& eve);
SessionCounts validate(const SessionCounts& counts);

/// {0.6, 0.2, 0} decoy-state BB84 with preparation probabilities
/// {0.5, 0.25, 0.25}.
DecoyProtocol standard_decoy_protocol();

/// eta_high = 0.12, dark count 1e-5, misalignment 1 - T = 0.01.
DetectorConfig standard_detectors(double eta_low, double alpha);

}  // namespace dbaguard

#endif  // DBAGUARD_MODEL_HPP
