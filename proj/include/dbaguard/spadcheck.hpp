#ifndef DBAGUARD_SPADCHECK_HPP
#define DBAGUARD_SPADCHECK_HPP

#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dbaguard/model.hpp"

namespace dbaguard {

// Energies are relative dB throughout; nothing here is calibrated to watts.

enum class GateLabel { high, low, standard };  // standard is written "default"
enum class BlindingMode { cw, pulsed };

std::string_view to_string(GateLabel label);
std::string_view to_string(BlindingMode mode);

struct EnergyPoint {
    double energy_db = 0.0;
    double p_det = 0.0;
};

/// Detection probability of a blinded detector versus trigger pulse energy.
struct DetectionCurve {
    std::string name;
    std::vector<EnergyPoint> points;
    GateLabel gate = GateLabel::standard;
    BlindingMode blinding = BlindingMode::pulsed;
    std::optional<double> repetition_rate_mhz;
    std::optional<double> avg_blinding_power;
};

class CurveFormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NoThresholdError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::vector<FieldError> check(const DetectionCurve& curve);

/// Reads the line-oriented curve format:
///
///   # gate_label: high|low|default
///   # blinding_mode: pulsed|cw
///   # repetition_rate_mhz: 10        (optional)
///   # avg_blinding_power: 0.35       (optional)
///   energy_db,p_det
///   -40.0,0.0
///   ...
///
/// Other '#' lines are comments. Throws CurveFormatError with the line number
/// on malformed input and ValidationError when the parsed curve is invalid.
DetectionCurve parse_detection_curve(std::istream& in, std::string name);
DetectionCurve load_detection_curve(const std::string& path);

struct EnergyGap {
    double e_always_db = 0.0;  // first energy where p_det reaches 1 - epsilon
    double e_never_db = 0.0;   // last energy before p_det first exceeds epsilon
    double epsilon = 0.01;
};

inline constexpr double kDefaultEpsilon = 0.01;

/// Scans the curve upward and linearly interpolates each threshold crossing.
/// Throws NoThresholdError when the curve never reaches 1 - epsilon or starts
/// above epsilon.
EnergyGap extract_gap(const DetectionCurve& curve, double epsilon = kDefaultEpsilon);

struct FingerprintVerdict {
    bool holds = false;
    double margin_db = 0.0;  // e_never_low - (e_always_high + 10 log10 2)
};

/// Tests 2 E_always^high <= E_never^low on linear energies.
FingerprintVerdict fingerprint_condition(double e_always_high_db, double e_never_low_db);

/// (E_never - E_always) / E_always on linear energies.
double energy_gap_ratio(double e_always_db, double e_never_db);

/// One blinding configuration (mode and repetition rate) with its reference
/// gate curve (default, or high when no default is given) and low gate curve.
struct GapAssessment {
    BlindingMode blinding = BlindingMode::pulsed;
    std::optional<double> repetition_rate_mhz;
    std::optional<double> avg_blinding_power;
    double e_always_ref_db = 0.0;
    double e_never_low_db = 0.0;
    double margin_linear = 0.0;  // E_never^low - 2 E_always^ref
    FingerprintVerdict verdict;
    double ratio = 0.0;
    bool positive = false;
};

/// Groups curves by blinding mode and repetition rate and evaluates the
/// fingerprint margin of each group, ordered by rate with CW last. Throws
/// std::invalid_argument when a group lacks its reference or low curve.
std::vector<GapAssessment> gap_margin_series(std::span<const DetectionCurve> curves,
                                             double epsilon = kDefaultEpsilon);

/// Supply-voltage setting with its Geiger-mode detection probability.
struct SupplySetting {
    std::string label;
    double bias_v = 0.0;
    double gate_v = 0.0;
    double p_det = 0.0;  // probability, converted from percent on load
};

/// Reads `label,bias_v,gate_v,p_det_percent` rows (header and '#' lines skipped).
std::vector<SupplySetting> parse_supply_table(std::istream& in);
std::vector<SupplySetting> load_supply_table(const std::string& path);

/// Passive-quenching bias network.
struct CircuitParams {
    double r_bias = 400e3;
    double r_spad = 4e3;
    double r_0 = 10.0;
    double delta_v = 1.0;
};

std::vector<FieldError> check(const CircuitParams& params);
CircuitParams validate(const CircuitParams& params);

struct BiasDrop {
    double delta_i = 0.0;        // amperes
    double delta_v_spad = 0.0;   // volts across the SPAD
    double attenuation = 0.0;    // delta_v / delta_v_spad
};

/// Current and SPAD voltage change when the bias supply drops by delta_v.
BiasDrop bias_drop(const CircuitParams& params);

}  // namespace dbaguard

#endif  // DBAGUARD_SPADCHECK_HPP
