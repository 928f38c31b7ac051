#ifndef DBAGUARD_ATTACK_HPP
#define DBAGUARD_ATTACK_HPP

#include <array>
#include <string>
#include <vector>

#include "dbaguard/model.hpp"

namespace dbaguard {

enum class GateLevel { high, low };
enum class PulseClass { high_energy, low_energy };
enum class BasisMatch { matched, mismatched };

/// Conditional click probability of a blinded detector for a trigger pulse.
///
/// A high-energy pulse is E_always of the low gate; a low-energy pulse is
/// E_always of the high gate. On a basis mismatch each arm receives half the
/// pulse energy. Because the measured gap satisfies 2 E_always^high <=
/// E_never^low, every entry is exactly 0 or 1:
///
///   gate  pulse        basis       click
///   high  high_energy  matched     1
///   high  high_energy  mismatched  1
///   high  low_energy   matched     1
///   high  low_energy   mismatched  0
///   low   high_energy  matched     1
///   low   high_energy  mismatched  0
///   low   low_energy   matched     0
///   low   low_energy   mismatched  0
double click_outcome(GateLevel gate, PulseClass pulse, BasisMatch basis);

struct ClickRule {
    GateLevel gate;
    PulseClass pulse;
    BasisMatch basis;
    double click;
};

/// All eight entries of the table, in the order listed above.
std::array<ClickRule, 8> click_rule_table();

struct TwoSpadImposition {
    double p_double = 0.0;   // double clicks per fake state, before sifting
    double p_success = 0.0;  // imposed clicks in the matched basis per fake state
};

struct OneSpadImposition {
    double p_error = 0.0;
    double p_success = 0.0;
};

/// (alpha beta / 2, (alpha + beta - alpha beta) / 2)
TwoSpadImposition imposition_stats_2spad(double alpha, double beta);

/// (alpha beta / 4, (alpha + beta) / 4)
OneSpadImposition imposition_stats_1spad(double alpha, double beta);

struct BetaEstimate {
    double beta_hat = 0.0;
    double beta_sigma = 0.0;
    std::vector<std::string> flags;
};

/// Infers Eve's high-energy pulse probability from the sifted fingerprint
/// count (double clicks for two_spad, error clicks for one_spad).
///
/// two_spad: beta = 4 n_double / (alpha n_sent)
/// one_spad: beta = 8 n_error / (alpha n_sent)
///
/// beta_sigma is the Gaussian approximation of the binomial fingerprint count
/// and scales as 1/sqrt(n_sent). beta_hat > 1 is returned unclamped with the
/// "beta-exceeds-one" flag. Throws std::invalid_argument when alpha <= 0 or
/// n_sent <= 0.
BetaEstimate infer_beta(ReceiverMode mode, double fingerprints, double n_sent, double alpha);
BetaEstimate infer_beta(ReceiverMode mode, const SessionCounts& counts, double alpha);

}  // namespace dbaguard

#endif  // DBAGUARD_ATTACK_HPP
