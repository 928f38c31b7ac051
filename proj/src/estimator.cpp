#include "dbaguard/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dbaguard/attack.hpp"
#include "dbaguard/gains.hpp"

namespace dbaguard {

namespace {

void require_alpha(double alpha, const char* where) {
    if (!(alpha > 0.0)) throw std::invalid_argument(std::string(where) + ": alpha must be > 0");
}

KeyEstimate clamp_key(double raw) {
    return {std::max(raw, 0.0), raw, raw < 0.0};
}

// Multiplier k in alpha* = 2 sqrt(k N_fp / (N_Alice Q^Eve)).
double fingerprint_weight(ReceiverMode mode) {
    return mode == ReceiverMode::two_spad ? 1.0 : 2.0;
}

double fingerprints(ReceiverMode mode, const Tally& counts) {
    return mode == ReceiverMode::two_spad ? counts.n_double : counts.n_error;
}

double secure_fraction(double n_key, double n_clicked) {
    if (!(n_clicked > 0.0)) return 0.0;
    return std::clamp(n_key / n_clicked, 0.0, 1.0);
}

}  // namespace

double eve_clicked_2spad(double alpha, double n_sent, double n_double) {
    require_alpha(alpha, "eve_clicked_2spad");
    return 0.5 * (alpha * n_sent + 4.0 * n_double / alpha);
}

double success_1spad(double alpha, double n_sent, double n_error) {
    require_alpha(alpha, "success_1spad");
    return alpha * n_sent / 4.0 + 2.0 * n_error / alpha;
}

double eve_clicked_1spad(double alpha, double n_sent, double n_error) {
    require_alpha(alpha, "eve_clicked_1spad");
    return alpha * n_sent / 4.0 + 2.0 * n_error * (1.0 + alpha) / alpha;
}

KeyEstimate key_bits_2spad(const Tally& counts, double alpha) {
    return clamp_key(counts.n_clicked - eve_clicked_2spad(alpha, counts.n_sent, counts.n_double));
}

KeyEstimate key_bits_1spad(const Tally& counts, double alpha) {
    return clamp_key(counts.n_clicked - eve_clicked_1spad(alpha, counts.n_sent, counts.n_error));
}

AlphaChoice optimal_alpha(ReceiverMode mode, double fingerprint_count, double n_alice,
                          double q_eve) {
    const double sent_bound = n_alice * q_eve;
    if (!(sent_bound > 0.0))
        throw std::invalid_argument("optimal_alpha: n_alice * q_eve must be > 0");
    if (!(fingerprint_count >= 0.0))
        throw std::invalid_argument("optimal_alpha: fingerprint count must be >= 0");

    AlphaChoice choice;
    choice.raw = 2.0 * std::sqrt(fingerprint_weight(mode) * fingerprint_count / sent_bound);
    choice.clamped = choice.raw > 1.0;
    choice.alpha = std::min(choice.raw, 1.0);
    return choice;
}

KeyEstimate key_bits_optimal_2spad(const Tally& counts, double q_eve) {
    if (!(counts.n_alice * q_eve > 0.0))
        throw std::invalid_argument("key_bits_optimal_2spad: n_alice * q_eve must be > 0");
    return clamp_key(counts.n_clicked - 2.0 * std::sqrt(counts.n_double * counts.n_alice * q_eve));
}

double eve_bits_1spad_optimal(const Tally& counts, double q_eve) {
    if (!(counts.n_alice * q_eve > 0.0))
        throw std::invalid_argument("eve_bits_1spad_optimal: n_alice * q_eve must be > 0");
    return std::sqrt(2.0 * counts.n_error * counts.n_alice * q_eve) + 2.0 * counts.n_error;
}

LeakageEstimate estimate_leakage(ReceiverMode mode, const Tally& counts, double alpha,
                                 double q_eve) {
    require_alpha(alpha, "estimate_leakage");
    LeakageEstimate est;

    Tally t = counts;
    if (!(t.n_sent > 0.0)) {
        t.n_sent = t.n_alice * q_eve;
        est.flags.emplace_back(flag::n_sent_default);
    }

    const double fp = fingerprints(mode, t);
    const BetaEstimate beta = infer_beta(mode, fp, t.n_sent, alpha);
    est.beta_hat = beta.beta_hat;
    est.beta_sigma = beta.beta_sigma;
    est.flags.insert(est.flags.end(), beta.flags.begin(), beta.flags.end());

    KeyEstimate key;
    if (mode == ReceiverMode::two_spad) {
        est.eve_clicked = eve_clicked_2spad(alpha, t.n_sent, t.n_double);
        key = key_bits_2spad(t, alpha);
        // N_key = n_clicked - n_sent (alpha + beta) / 2
        est.key_bits_sigma = 0.5 * t.n_sent * beta.beta_sigma;
    } else {
        est.eve_clicked = eve_clicked_1spad(alpha, t.n_sent, t.n_error);
        key = key_bits_1spad(t, alpha);
        // N_key = n_clicked - n_sent (alpha + beta) / 4 - n_sent alpha beta / 4
        est.key_bits_sigma = 0.25 * t.n_sent * (1.0 + alpha) * beta.beta_sigma;
    }
    est.key_bits = key.n_key;
    if (key.clamped) est.flags.emplace_back(flag::clamped);
    est.secure_fraction = secure_fraction(key.n_key, t.n_clicked);

    const AlphaChoice best = optimal_alpha(mode, fp, t.n_alice, q_eve);
    est.alpha_opt = best.alpha;
    if (best.clamped) est.flags.emplace_back(flag::alpha_clamped);
    return est;
}

std::string_view to_string(SweepParameter parameter) {
    return parameter == SweepParameter::eta_low ? "eta_low" : "transmittance";
}

SweepParameter parse_sweep_parameter(std::string_view text) {
    if (text == "eta_low") return SweepParameter::eta_low;
    if (text == "transmittance") return SweepParameter::transmittance;
    throw ValidationError("sweep_param", "must be eta_low or transmittance, got '" +
                                               std::string(text) + "'");
}

AlphaChoice self_consistent_alpha(const DecoyProtocol& protocol, const DetectorConfig& detectors,
                                  const ChannelConfig& channel, ReceiverMode mode) {
    auto fingerprint_gain = [&](double alpha) {
        DetectorConfig d = detectors;
        d.alpha = alpha;
        return mode == ReceiverMode::two_spad ? double_gain(protocol, d, channel)
                                              : qber_gain(protocol, d, channel);
    };
    const double q_eve = eve_gain(protocol);
    if (!(q_eve > 0.0)) throw std::invalid_argument("self_consistent_alpha: Q^Eve must be > 0");

    // F(alpha) = F0 + alpha * slope; solve a alpha^2 - slope alpha - F0 = 0
    // with a = Q^Eve / (4k).
    const double f0 = fingerprint_gain(0.0);
    const double slope = fingerprint_gain(1.0) - f0;
    const double a = q_eve / (4.0 * fingerprint_weight(mode));
    const double disc = std::sqrt(slope * slope + 4.0 * a * f0);

    double root = 0.0;
    if (slope >= 0.0)
        root = (slope + disc) / (2.0 * a);
    else if (disc - slope > 0.0)
        root = 2.0 * f0 / (disc - slope);

    AlphaChoice choice;
    choice.raw = root;
    choice.clamped = root > 1.0;
    choice.alpha = std::min(root, 1.0);
    return choice;
}

CurvePoint secure_fraction_point(const DecoyProtocol& protocol, const DetectorConfig& detectors,
                                 const ChannelConfig& channel, ReceiverMode mode) {
    // S_key is a ratio of gains, so any positive pulse count gives the same value.
    constexpr double kPulses = 1e12;

    const AlphaChoice alpha = self_consistent_alpha(protocol, detectors, channel, mode);
    DetectorConfig d = detectors;
    d.alpha = alpha.alpha;
    const double q_eve = eve_gain(protocol);
    const Tally counts = expected_counts(protocol, d, channel, kPulses, mode);

    CurvePoint point;
    point.length_km = channel.length_km;
    point.alpha_opt = alpha.alpha;

    KeyEstimate key;
    if (alpha.clamped) {
        point.flags.emplace_back(flag::alpha_clamped);
        key = mode == ReceiverMode::two_spad ? key_bits_2spad(counts, alpha.alpha)
                                             : key_bits_1spad(counts, alpha.alpha);
    } else if (mode == ReceiverMode::two_spad) {
        key = key_bits_optimal_2spad(counts, q_eve);
    } else {
        key = clamp_key(counts.n_clicked - eve_bits_1spad_optimal(counts, q_eve));
    }
    if (key.clamped) point.flags.emplace_back(flag::clamped);
    point.secure_fraction = secure_fraction(key.n_key, counts.n_clicked);
    return point;
}

std::vector<CurvePoint> secure_fraction_curve(const CurveRequest& request) {
    const DecoyProtocol protocol = validate(request.protocol);
    if (request.sweep.empty()) throw ValidationError("sweep", "must not be empty");
    if (request.lengths_km.empty()) throw ValidationError("length_range", "must not be empty");

    std::vector<CurvePoint> points;
    points.reserve(request.sweep.size() * request.lengths_km.size());
    for (double value : request.sweep) {
        DetectorConfig d = request.detectors;
        if (request.parameter == SweepParameter::eta_low)
            d.eta_low = value;
        else
            d.transmittance = value;
        validate(d);
        for (double length : request.lengths_km) {
            const ChannelConfig channel = validate(ChannelConfig{length, request.loss_exponent_per_km});
            CurvePoint point = secure_fraction_point(protocol, d, channel, request.mode);
            point.sweep_value = value;
            points.push_back(std::move(point));
        }
    }
    return points;
}

}  // namespace dbaguard
