#ifndef DBAGUARD_ESTIMATOR_HPP
#define DBAGUARD_ESTIMATOR_HPP

#include <string>
#include <vector>

#include "dbaguard/model.hpp"

namespace dbaguard {

// The estimators see only session tallies ("black box" counts). They never
// consult simulator ground truth.

/// Clicks attributed to Eve in a two-detector receiver:
/// N_success + 2 N_double = (alpha n_sent + 4 n_double / alpha) / 2.
double eve_clicked_2spad(double alpha, double n_sent, double n_double);

/// Clicks attributed to Eve in a one-detector receiver:
/// N_success^one + 2 n_error = alpha n_sent / 4 + 2 n_error (1 + alpha) / alpha.
double eve_clicked_1spad(double alpha, double n_sent, double n_error);

/// N_success^one = alpha n_sent / 4 + 2 n_error / alpha.
double success_1spad(double alpha, double n_sent, double n_error);

struct KeyEstimate {
    double n_key = 0.0;  // clamped at 0
    double raw = 0.0;    // before clamping
    bool clamped = false;
};

/// n_clicked - eve_clicked_2spad(alpha, n_sent, n_double).
KeyEstimate key_bits_2spad(const Tally& counts, double alpha);

/// n_clicked - eve_clicked_1spad(alpha, n_sent, n_error).
KeyEstimate key_bits_1spad(const Tally& counts, double alpha);

struct AlphaChoice {
    double alpha = 0.0;  // clamped to [0, 1]
    double raw = 0.0;
    bool clamped = false;
};

/// Gate probability minimizing the Eve term for a fixed fingerprint count:
///   two_spad: 2 sqrt(n_double / (n_alice q_eve))
///   one_spad: 2 sqrt(2 n_error / (n_alice q_eve))
/// A raw value above 1 is clamped to 1. A zero fingerprint count gives 0, the
/// limit where the Eve term vanishes. Throws when n_alice q_eve <= 0.
AlphaChoice optimal_alpha(ReceiverMode mode, double fingerprint_count, double n_alice,
                          double q_eve);

/// n_clicked - 2 sqrt(n_double n_alice q_eve), i.e. the key at optimal alpha.
KeyEstimate key_bits_optimal_2spad(const Tally& counts, double q_eve);

/// sqrt(2 n_error n_alice q_eve) + 2 n_error, Eve's share at optimal alpha.
double eve_bits_1spad_optimal(const Tally& counts, double q_eve);

/// Full leakage assessment of a session run at gate probability alpha.
/// n_sent falls back to n_alice q_eve when the tally leaves it at zero.
LeakageEstimate estimate_leakage(ReceiverMode mode, const Tally& counts, double alpha,
                                 double q_eve);

enum class SweepParameter { eta_low, transmittance };

std::string_view to_string(SweepParameter parameter);
SweepParameter parse_sweep_parameter(std::string_view text);

struct CurvePoint {
    double length_km = 0.0;
    double sweep_value = 0.0;
    double secure_fraction = 0.0;
    double alpha_opt = 0.0;
    std::vector<std::string> flags;
};

/// Gate probability that is optimal for the fingerprint count it produces
/// itself. Gains are affine in alpha, so the fixed point of
/// alpha = optimal_alpha(expected fingerprints at alpha) is a quadratic root.
AlphaChoice self_consistent_alpha(const DecoyProtocol& protocol, const DetectorConfig& detectors,
                                  const ChannelConfig& channel, ReceiverMode mode);

/// Secure fraction when Eve reproduces the honest click and fingerprint gains.
/// detectors.alpha is ignored; the self-consistent optimum is used instead.
CurvePoint secure_fraction_point(const DecoyProtocol& protocol, const DetectorConfig& detectors,
                                 const ChannelConfig& channel, ReceiverMode mode);

struct CurveRequest {
    DecoyProtocol protocol;
    DetectorConfig detectors;
    double loss_exponent_per_km = 0.02;
    ReceiverMode mode = ReceiverMode::two_spad;
    SweepParameter parameter = SweepParameter::eta_low;
    std::vector<double> sweep;
    std::vector<double> lengths_km;
};

/// One point per (sweep value, length), sweep-major. Each point is validated
/// and computed independently.
std::vector<CurvePoint> secure_fraction_curve(const CurveRequest& request);

}  // namespace dbaguard

#endif  // DBAGUARD_ESTIMATOR_HPP
