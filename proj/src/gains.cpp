#include "dbaguard/gains.hpp"

#include <cmath>

namespace dbaguard {

namespace {

// 1/2 * (alpha * sum_i n_i term(mu_i, eta_1) + (1 - alpha) * sum_i n_i term(mu_i, eta_2))
template <typename Term>
double sifted_mixture(const DecoyProtocol& protocol, const DetectorConfig& detectors,
                      double eta_ch, Term term) {
    double high = 0.0;
    double low = 0.0;
    for (std::size_t i = 0; i < protocol.intensities.size(); ++i) {
        const double mu = protocol.intensities[i];
        const double n = protocol.prep_probs[i];
        high += n * term(mu, eta_ch * detectors.eta_high);
        low += n * term(mu, eta_ch * detectors.eta_low);
    }
    return 0.5 * (detectors.alpha * high + (1.0 - detectors.alpha) * low);
}

}  // namespace

double channel_transmittance(const ChannelConfig& channel) {
    return std::pow(10.0, -channel.loss_exponent_per_km * channel.length_km);
}

double single_gain(double mu, double eta_eff, double y0) {
    // -expm1 keeps precision when mu * eta_eff is tiny and y0 = 0.
    return y0 - (1.0 - y0) * std::expm1(-mu * eta_eff);
}

double eve_gain(const DecoyProtocol& protocol) {
    double q = 0.0;
    for (std::size_t i = 0; i < protocol.intensities.size(); ++i)
        q += protocol.prep_probs[i] * -std::expm1(-protocol.intensities[i]);
    return q;
}

double pass_gain(const DecoyProtocol& protocol, const DetectorConfig& detectors,
                 const ChannelConfig& channel) {
    const double y0 = detectors.dark_count;
    return sifted_mixture(protocol, detectors, channel_transmittance(channel),
                          [y0](double mu, double eta) { return single_gain(mu, eta, y0); });
}

double double_gain(const DecoyProtocol& protocol, const DetectorConfig& detectors,
                   const ChannelConfig& channel) {
    const double y0 = detectors.dark_count;
    const double t = detectors.transmittance;
    return sifted_mixture(protocol, detectors, channel_transmittance(channel),
                          [y0, t](double mu, double eta) {
                              return single_gain(mu * (1.0 - t), eta, y0) *
                                     single_gain(mu * t, eta, y0);
                          });
}

double qber_gain(const DecoyProtocol& protocol, const DetectorConfig& detectors,
                 const ChannelConfig& channel) {
    const double y0 = detectors.dark_count;
    const double t = detectors.transmittance;
    return sifted_mixture(protocol, detectors, channel_transmittance(channel),
                          [y0, t](double mu, double eta) {
                              return single_gain(mu * (1.0 - t), eta, y0);
                          });
}

GainSet gain_set(const DecoyProtocol& protocol, const DetectorConfig& detectors,
                 const ChannelConfig& channel) {
    return {eve_gain(protocol), pass_gain(protocol, detectors, channel),
            double_gain(protocol, detectors, channel), qber_gain(protocol, detectors, channel),
            channel_transmittance(channel)};
}

Tally expected_counts(const DecoyProtocol& protocol, const DetectorConfig& detectors,
                      const ChannelConfig& channel, double n_alice, ReceiverMode mode) {
    const GainSet g = gain_set(protocol, detectors, channel);
    Tally t;
    t.n_alice = n_alice;
    t.n_sent = n_alice * g.q_eve;
    if (mode == ReceiverMode::two_spad) {
        t.n_clicked = g.q_pass * n_alice;
        t.n_double = g.q_double * n_alice;
    } else {
        t.n_clicked = 0.5 * g.q_pass * n_alice;
        t.n_error = g.qber * n_alice;
    }
    return t;
}

}  // namespace dbaguard
