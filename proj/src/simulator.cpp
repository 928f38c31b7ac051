#include "dbaguard/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "dbaguard/attack.hpp"
#include "dbaguard/gains.hpp"
#include "dbaguard/rng.hpp"

namespace dbaguard {

namespace {

struct HonestTally {
    std::uint64_t sifted = 0;
    std::uint64_t clicked = 0;
    std::uint64_t doubled = 0;
    std::uint64_t error = 0;

    HonestTally& operator+=(const HonestTally& o) {
        sifted += o.sifted;
        clicked += o.clicked;
        doubled += o.doubled;
        error += o.error;
        return *this;
    }
};

struct AttackTally {
    std::uint64_t sent = 0;
    std::uint64_t clicked = 0;
    std::uint64_t doubled = 0;
    std::uint64_t error = 0;
    AttackTruth truth;

    AttackTally& operator+=(const AttackTally& o) {
        sent += o.sent;
        clicked += o.clicked;
        doubled += o.doubled;
        error += o.error;
        truth.imposed_success += o.truth.imposed_success;
        truth.imposed_clicks += o.truth.imposed_clicks;
        truth.imposed_double += o.truth.imposed_double;
        truth.imposed_error += o.truth.imposed_error;
        truth.high_energy_sent += o.truth.high_energy_sent;
        return *this;
    }
};

// Runs fn(rng, pulses) over fixed-size batches and sums the partial tallies
// in batch order.
template <typename Tally, typename BatchFn>
Tally run_batches(const SimConfig& config, BatchFn fn) {
    const std::uint64_t n = config.n_pulses;
    const std::uint64_t batches = (n + kBatchPulses - 1) / kBatchPulses;
    std::vector<Tally> partial(batches);

    std::atomic<std::uint64_t> next{0};
    auto worker = [&] {
        for (std::uint64_t b = next++; b < batches; b = next++) {
            const std::uint64_t begin = b * kBatchPulses;
            BatchRng rng(config.seed, b);
            partial[b] = fn(rng, std::min(kBatchPulses, n - begin));
        }
    };

    unsigned threads = config.threads != 0 ? config.threads : std::thread::hardware_concurrency();
    threads = static_cast<unsigned>(std::clamp<std::uint64_t>(threads, 1, std::max<std::uint64_t>(batches, 1)));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    }

    Tally total{};
    for (const Tally& p : partial) total += p;
    return total;
}

std::vector<double> cumulative(const std::vector<double>& probs) {
    std::vector<double> out(probs.size());
    double running = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) out[i] = running += probs[i];
    return out;
}

// Click probabilities of the correct and wrong arm for each (class, gate).
struct ArmGains {
    double correct[2];
    double wrong[2];
};

std::vector<ArmGains> arm_gains(const DecoyProtocol& protocol, const DetectorConfig& d,
                                const ChannelConfig& channel) {
    const double eta_ch = channel_transmittance(channel);
    const double t = d.transmittance;
    std::vector<ArmGains> out;
    for (double mu : protocol.intensities) {
        ArmGains g{};
        const double eta[2] = {eta_ch * d.eta_high, eta_ch * d.eta_low};
        for (int j = 0; j < 2; ++j) {
            g.correct[j] = single_gain(mu * t, eta[j], d.dark_count);
            g.wrong[j] = single_gain(mu * (1.0 - t), eta[j], d.dark_count);
        }
        out.push_back(g);
    }
    return out;
}

}  // namespace

std::vector<FieldError> check(const SimConfig& config) {
    std::vector<FieldError> issues = check(config.protocol);
    for (auto&& more : {check(config.detectors), check(config.channel), check(config.eve)})
        issues.insert(issues.end(), more.begin(), more.end());
    if (config.n_pulses < 1) issues.push_back({"n_pulses", "must be >= 1"});
    return issues;
}

SimConfig validate(const SimConfig& config) {
    auto issues = check(config);
    if (!issues.empty()) throw ValidationError(std::move(issues));
    return config;
}

SessionCounts simulate_honest(const SimConfig& raw) {
    const SimConfig config = validate(raw);
    if (config.eve.active) throw std::invalid_argument("simulate_honest: eve must be inactive");

    const std::vector<double> classes = cumulative(config.protocol.prep_probs);
    const std::vector<ArmGains> gains = arm_gains(config.protocol, config.detectors, config.channel);
    const double alpha = config.detectors.alpha;
    const bool two_spad = config.mode == ReceiverMode::two_spad;

    const HonestTally total = run_batches<HonestTally>(config, [&](BatchRng& rng, std::uint64_t pulses) {
        HonestTally t;
        for (std::uint64_t k = 0; k < pulses; ++k) {
            const std::size_t i = rng.categorical(classes);
            const int gate = rng.bernoulli(alpha) ? 0 : 1;
            if (!rng.bernoulli(0.5)) continue;  // bases differ, sifted out
            ++t.sifted;
            if (two_spad) {
                const bool right = rng.bernoulli(gains[i].correct[gate]);
                const bool wrong = rng.bernoulli(gains[i].wrong[gate]);
                t.clicked += (right || wrong);
                t.doubled += (right && wrong);
                t.error += wrong;
            } else {
                const bool on_correct_port = rng.bernoulli(0.5);
                if (on_correct_port) {
                    t.clicked += rng.bernoulli(gains[i].correct[gate]);
                } else {
                    const bool wrong = rng.bernoulli(gains[i].wrong[gate]);
                    t.clicked += wrong;
                    t.error += wrong;
                }
            }
        }
        return t;
    });

    SessionCounts counts;
    counts.n_alice = config.n_pulses;
    counts.n_sent = 0;
    counts.n_clicked = total.clicked;
    counts.n_double = total.doubled;
    counts.n_error = total.error;
    return counts;
}

AttackResult simulate_attack(const SimConfig& raw) {
    const SimConfig config = validate(raw);
    if (!config.eve.active) throw std::invalid_argument("simulate_attack: eve must be active");

    const std::vector<double> classes = cumulative(config.protocol.prep_probs);
    std::vector<double> non_vacuum;
    for (double mu : config.protocol.intensities) non_vacuum.push_back(-std::expm1(-mu));
    const double alpha = config.detectors.alpha;
    const double beta = config.eve.beta;
    const bool two_spad = config.mode == ReceiverMode::two_spad;

    const AttackTally total = run_batches<AttackTally>(config, [&](BatchRng& rng, std::uint64_t pulses) {
        AttackTally t;
        for (std::uint64_t k = 0; k < pulses; ++k) {
            const std::size_t i = rng.categorical(classes);
            if (!rng.bernoulli(non_vacuum[i])) continue;  // nothing for Eve to resend
            ++t.sent;

            const BasisMatch basis = rng.bernoulli(0.5) ? BasisMatch::matched : BasisMatch::mismatched;
            const PulseClass pulse = rng.bernoulli(beta) ? PulseClass::high_energy : PulseClass::low_energy;
            const GateLevel gate = rng.bernoulli(alpha) ? GateLevel::high : GateLevel::low;
            const bool sifted = rng.bernoulli(0.5);
            t.truth.high_energy_sent += pulse == PulseClass::high_energy;

            if (!two_spad && !rng.bernoulli(0.5)) continue;  // single detector not watching
            if (click_outcome(gate, pulse, basis) == 0.0) continue;

            ++t.truth.imposed_clicks;
            t.clicked += sifted;
            if (basis == BasisMatch::matched) {
                ++t.truth.imposed_success;
            } else if (two_spad) {
                // Half energy in each arm: both fire together.
                ++t.truth.imposed_double;
                t.doubled += sifted;
            } else {
                ++t.truth.imposed_success;
                ++t.truth.imposed_error;
                t.error += sifted;
            }
        }
        return t;
    });

    AttackResult result;
    result.counts.n_alice = config.n_pulses;
    result.counts.n_sent = total.sent;
    result.counts.n_clicked = total.clicked;
    result.counts.n_double = total.doubled;
    result.counts.n_error = total.error;
    result.truth = total.truth;
    return result;
}

HonestProbabilities honest_tally_probabilities(const DecoyProtocol& protocol,
                                               const DetectorConfig& detectors,
                                               const ChannelConfig& channel, ReceiverMode mode) {
    const std::vector<ArmGains> gains = arm_gains(protocol, detectors, channel);
    const double gate_weight[2] = {detectors.alpha, 1.0 - detectors.alpha};
    HonestProbabilities p;
    for (std::size_t i = 0; i < gains.size(); ++i) {
        for (int j = 0; j < 2; ++j) {
            const double w = 0.5 * protocol.prep_probs[i] * gate_weight[j];
            const double c = gains[i].correct[j];
            const double e = gains[i].wrong[j];
            if (mode == ReceiverMode::two_spad) {
                p.clicked += w * (1.0 - (1.0 - c) * (1.0 - e));
                p.doubled += w * c * e;
                p.error += w * e;
            } else {
                p.clicked += w * 0.5 * (c + e);
                p.error += w * 0.5 * e;
            }
        }
    }
    return p;
}

bool ValidationReport::passed() const { return flagged_count() == 0; }

std::size_t ValidationReport::flagged_count() const {
    return static_cast<std::size_t>(
        std::count_if(checks.begin(), checks.end(), [](const TallyCheck& c) { return c.flagged; }));
}

ValidationReport validate_against_analytics(std::span<const TallyExpectation> tallies) {
    ValidationReport report;
    for (const TallyExpectation& t : tallies) {
        TallyCheck c;
        c.name = t.name;
        c.observed = t.observed;
        c.trials = t.trials;
        const double n = static_cast<double>(t.trials);
        c.expected = n * t.probability;
        c.sigma = std::sqrt(n * t.probability * (1.0 - t.probability));
        c.slack = t.model_slack * n;
        const double diff = static_cast<double>(t.observed) - c.expected;
        if (c.sigma > 0.0)
            c.z = diff / c.sigma;
        else
            c.z = diff == 0.0 ? 0.0 : std::copysign(INFINITY, diff);
        c.flagged = std::abs(diff) > kZLimit * c.sigma + c.slack;
        report.checks.push_back(std::move(c));
    }
    return report;
}

std::vector<TallyExpectation> honest_expectations(const SimConfig& config,
                                                  const SessionCounts& counts) {
    const GainSet g = gain_set(config.protocol, config.detectors, config.channel);
    const HonestProbabilities model =
        honest_tally_probabilities(config.protocol, config.detectors, config.channel, config.mode);
    const std::uint64_t n = counts.n_alice;

    if (config.mode == ReceiverMode::two_spad) {
        return {
            {"honest.clicked~Q_pass", counts.n_clicked, n, g.q_pass, std::abs(model.clicked - g.q_pass)},
            {"honest.double~Q_double", counts.n_double, n, g.q_double, 0.0},
            {"honest.error~QBER", counts.n_error, n, g.qber, 0.0},
        };
    }
    const double half_pass = 0.5 * g.q_pass;
    return {
        {"honest.clicked~Q_pass/2", counts.n_clicked, n, half_pass, std::abs(model.clicked - half_pass)},
        {"honest.error~QBER/2", counts.n_error, n, 0.5 * g.qber, 0.0},
    };
}

std::vector<TallyExpectation> attack_expectations(const SimConfig& config,
                                                  const AttackResult& result) {
    const double a = config.detectors.alpha;
    const double b = config.eve.beta;
    const std::uint64_t sent = result.counts.n_sent;
    std::vector<TallyExpectation> out;
    out.push_back({"attack.sent~Q_Eve", sent, result.counts.n_alice, eve_gain(config.protocol), 0.0});
    out.push_back({"attack.high_energy~beta", result.truth.high_energy_sent, sent, b, 0.0});

    if (config.mode == ReceiverMode::two_spad) {
        const TwoSpadImposition p = imposition_stats_2spad(a, b);
        out.push_back({"attack.double_raw~P_double", result.truth.imposed_double, sent, p.p_double, 0.0});
        out.push_back({"attack.double_sifted~P_double/2", result.counts.n_double, sent, p.p_double / 2.0, 0.0});
        out.push_back({"attack.success~P_success", result.truth.imposed_success, sent, p.p_success, 0.0});
        out.push_back({"attack.eve_clicked~(a+b)/2", result.truth.imposed_clicks, sent, (a + b) / 2.0, 0.0});
    } else {
        const OneSpadImposition p = imposition_stats_1spad(a, b);
        out.push_back({"attack.error_raw~P_error", result.truth.imposed_error, sent, p.p_error, 0.0});
        out.push_back({"attack.error_sifted~P_error/2", result.counts.n_error, sent, p.p_error / 2.0, 0.0});
        out.push_back({"attack.success~P_success", result.truth.imposed_success, sent, p.p_success, 0.0});
    }
    return out;
}

}  // namespace dbaguard
