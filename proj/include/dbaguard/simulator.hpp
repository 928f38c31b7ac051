#ifndef DBAGUARD_SIMULATOR_HPP
#define DBAGUARD_SIMULATOR_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dbaguard/model.hpp"

namespace dbaguard {

struct SimConfig {
    DecoyProtocol protocol = standard_decoy_protocol();
    DetectorConfig detectors;
    ChannelConfig channel;
    EveStrategy eve;
    std::uint64_t n_pulses = 1'000'000;
    std::uint64_t seed = 42;
    ReceiverMode mode = ReceiverMode::two_spad;
    // Worker threads; 0 picks std::thread::hardware_concurrency(). Results do
    // not depend on this value.
    unsigned threads = 0;
};

std::vector<FieldError> check(const SimConfig& config);
SimConfig validate(const SimConfig& config);

/// Pulses per generator stream.
inline constexpr std::uint64_t kBatchPulses = 1u << 16;

/// Ground-truth tallies that the legitimate users cannot observe.
struct AttackTruth {
    // two_spad: Eve-Bob bases matched and the intended arm clicked.
    // one_spad: any click in a slot the single detector accepted.
    std::uint64_t imposed_success = 0;
    // Every Bob click caused by a fake state, before sifting.
    std::uint64_t imposed_clicks = 0;
    std::uint64_t imposed_double = 0;  // before sifting, two_spad
    std::uint64_t imposed_error = 0;   // before sifting, one_spad
    std::uint64_t high_energy_sent = 0;

    bool operator==(const AttackTruth&) const = default;
};

struct AttackResult {
    SessionCounts counts;
    AttackTruth truth;

    bool operator==(const AttackResult&) const = default;
};

/// Per-pulse Monte Carlo of an honest session. For every pulse a decoy class,
/// a gate level and an Alice-Bob basis match are drawn; only matched slots
/// are tallied. The correct arm sees mu T and the wrong arm mu (1 - T), each
/// clicking independently with single_gain. two_spad counts clicks (either
/// arm), double clicks and errors (wrong arm). one_spad watches one port per
/// slot, chosen uniformly, and counts its clicks and wrong-port errors.
SessionCounts simulate_honest(const SimConfig& config);

/// Per-pulse Monte Carlo of a pulsed blinding attack. Eve resends a fake
/// state for every non-vacuum pulse. Her basis matches Bob's with
/// probability 1/2, her pulse is high-energy with probability beta, Bob's gate
/// is high with probability alpha, and each arm clicks per click_outcome().
/// A matched basis routes the pulse to one arm; a mismatch splits it between
/// both arms, so a firing table entry means a double click (two_spad) or an
/// error click (one_spad, in slots the detector accepts with probability 1/2).
/// Observed tallies are sifted with an independent Alice-Bob basis draw.
AttackResult simulate_attack(const SimConfig& config);

/// Exact per-pulse probabilities of the honest tallies under the simulated
/// model (which differs from the closed-form click gain at O(Y0)).
struct HonestProbabilities {
    double clicked = 0.0;
    double doubled = 0.0;
    double error = 0.0;
};

HonestProbabilities honest_tally_probabilities(const DecoyProtocol& protocol,
                                               const DetectorConfig& detectors,
                                               const ChannelConfig& channel, ReceiverMode mode);

inline constexpr double kZLimit = 4.0;

struct TallyExpectation {
    std::string name;
    std::uint64_t observed = 0;
    std::uint64_t trials = 0;
    double probability = 0.0;
    // Known per-trial difference between the closed form and the simulated
    // model; widens the tolerance by model_slack * trials.
    double model_slack = 0.0;
};

struct TallyCheck {
    std::string name;
    std::uint64_t observed = 0;
    std::uint64_t trials = 0;
    double expected = 0.0;
    double sigma = 0.0;
    double slack = 0.0;
    double z = 0.0;
    bool flagged = false;
};

struct ValidationReport {
    std::vector<TallyCheck> checks;

    bool passed() const;
    std::size_t flagged_count() const;
};

/// Binomial z-score per tally: z = (observed - n p) / sqrt(n p (1 - p)).
/// A tally is flagged when |observed - n p| > 4 sigma + slack * n.
ValidationReport validate_against_analytics(std::span<const TallyExpectation> tallies);

/// Honest tallies against the closed-form gains.
std::vector<TallyExpectation> honest_expectations(const SimConfig& config,
                                                  const SessionCounts& counts);

/// Attack tallies against the imposition probabilities, per fake state sent.
std::vector<TallyExpectation> attack_expectations(const SimConfig& config,
                                                  const AttackResult& result);

}  // namespace dbaguard

#endif  // DBAGUARD_SIMULATOR_HPP
