#include "dbaguard/attack.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dbaguard {

double click_outcome(GateLevel gate, PulseClass pulse, BasisMatch basis) {
    const bool high_gate = gate == GateLevel::high;
    const bool strong = pulse == PulseClass::high_energy;
    if (basis == BasisMatch::matched) return (high_gate || strong) ? 1.0 : 0.0;
    // Half energy only fires the more sensitive high gate, and only if the
    // full pulse was already the low-gate E_always.
    return (high_gate && strong) ? 1.0 : 0.0;
}

std::array<ClickRule, 8> click_rule_table() {
    std::array<ClickRule, 8> table{};
    std::size_t k = 0;
    for (GateLevel g : {GateLevel::high, GateLevel::low})
        for (PulseClass p : {PulseClass::high_energy, PulseClass::low_energy})
            for (BasisMatch b : {BasisMatch::matched, BasisMatch::mismatched})
                table[k++] = {g, p, b, click_outcome(g, p, b)};
    return table;
}

TwoSpadImposition imposition_stats_2spad(double alpha, double beta) {
    return {alpha * beta / 2.0, (alpha + beta - alpha * beta) / 2.0};
}

OneSpadImposition imposition_stats_1spad(double alpha, double beta) {
    return {alpha * beta / 4.0, (alpha + beta) / 4.0};
}

BetaEstimate infer_beta(ReceiverMode mode, double fingerprints, double n_sent, double alpha) {
    if (!(alpha > 0.0)) throw std::invalid_argument("infer_beta: alpha must be > 0");
    if (!(n_sent > 0.0)) throw std::invalid_argument("infer_beta: n_sent must be > 0");
    if (!(fingerprints >= 0.0)) throw std::invalid_argument("infer_beta: negative fingerprint count");

    // Observed (sifted) fingerprint probability per fake state is
    // alpha beta / 4 for two detectors and alpha beta / 8 for one.
    const double scale = mode == ReceiverMode::two_spad ? 4.0 : 8.0;
    const double p = fingerprints / n_sent;

    BetaEstimate est;
    est.beta_hat = scale * p / alpha;
    est.beta_sigma = scale / alpha * std::sqrt(p * (1.0 - std::min(p, 1.0)) / n_sent);
    if (est.beta_hat > 1.0) est.flags.emplace_back(flag::beta_exceeds_one);
    return est;
}

BetaEstimate infer_beta(ReceiverMode mode, const SessionCounts& counts, double alpha) {
    const double fingerprints = static_cast<double>(
        mode == ReceiverMode::two_spad ? counts.n_double : counts.n_error);
    return infer_beta(mode, fingerprints, static_cast<double>(counts.n_sent), alpha);
}

}  // namespace dbaguard
