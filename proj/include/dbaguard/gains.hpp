#ifndef DBAGUARD_GAINS_HPP
#define DBAGUARD_GAINS_HPP

#include "dbaguard/model.hpp"

namespace dbaguard {

struct GainSet {
    double q_eve = 0.0;
    double q_pass = 0.0;
    double q_double = 0.0;
    double qber = 0.0;
    double eta_ch = 0.0;
};

/// eta_ch = 10^(-coefficient * L).
double channel_transmittance(const ChannelConfig& channel);

/// Probability that a detector with end-to-end efficiency eta_eff clicks on a
/// coherent pulse of mean photon number mu: 1 - (1 - y0) exp(-mu eta_eff).
double single_gain(double mu, double eta_eff, double y0);

/// Eve's gain over an ideal lossless channel: sum_i n_i (1 - exp(-mu_i)).
double eve_gain(const DecoyProtocol& protocol);

/// Sifted click gain mixing the two gate efficiencies.
double pass_gain(const DecoyProtocol& protocol, const DetectorConfig& detectors,
                 const ChannelConfig& channel);

/// Sifted double-click gain: both arms fire, the wrong arm seeing mu (1 - T).
double double_gain(const DecoyProtocol& protocol, const DetectorConfig& detectors,
                   const ChannelConfig& channel);

/// Sifted wrong-arm click gain from misalignment and dark counts.
double qber_gain(const DecoyProtocol& protocol, const DetectorConfig& detectors,
                 const ChannelConfig& channel);

GainSet gain_set(const DecoyProtocol& protocol, const DetectorConfig& detectors,
                 const ChannelConfig& channel);

/// Expected tallies for n_alice pulses. two_spad fills n_clicked and n_double;
/// one_spad fills n_clicked (half of the two-detector gain) and n_error.
/// n_sent is Eve's upper bound n_alice * Q^Eve in both modes.
Tally expected_counts(const DecoyProtocol& protocol, const DetectorConfig& detectors,
                      const ChannelConfig& channel, double n_alice, ReceiverMode mode);

}  // namespace dbaguard

#endif  // DBAGUARD_GAINS_HPP
