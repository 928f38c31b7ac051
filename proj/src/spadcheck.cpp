#include "dbaguard/spadcheck.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <tuple>

namespace dbaguard {

namespace {

const double kLog10Two = 10.0 * std::log10(2.0);

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::optional<double> to_number(std::string_view s) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
    return value;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        out.push_back(trim(line.substr(start, pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

[[noreturn]] void format_error(const std::string& name, std::size_t line, const std::string& what) {
    throw CurveFormatError(name + ":" + std::to_string(line) + ": " + what);
}

double linear(double db) { return std::pow(10.0, db / 10.0); }

// Energy where the segment (a, b) crosses level.
double crossing(const EnergyPoint& a, const EnergyPoint& b, double level) {
    if (b.p_det == a.p_det) return a.energy_db;
    return a.energy_db + (level - a.p_det) / (b.p_det - a.p_det) * (b.energy_db - a.energy_db);
}

}  // namespace

std::string_view to_string(GateLabel label) {
    switch (label) {
        case GateLabel::high: return "high";
        case GateLabel::low: return "low";
        case GateLabel::standard: return "default";
    }
    return "default";
}

std::string_view to_string(BlindingMode mode) {
    return mode == BlindingMode::cw ? "cw" : "pulsed";
}

std::vector<FieldError> check(const DetectionCurve& curve) {
    std::vector<FieldError> issues;
    if (curve.points.size() < 2) issues.push_back({"points", "need at least two points"});
    for (std::size_t i = 0; i < curve.points.size(); ++i) {
        const auto& p = curve.points[i];
        const auto field = "points[" + std::to_string(i) + "]";
        if (!std::isfinite(p.energy_db)) issues.push_back({field, "energy must be finite"});
        if (!(p.p_det >= 0.0 && p.p_det <= 1.0)) issues.push_back({field, "p_det must lie in [0, 1]"});
        // equal energies are allowed: a vertical step
        if (i > 0 && !(p.energy_db >= curve.points[i - 1].energy_db))
            issues.push_back({field, "energies must be non-decreasing"});
    }
    if (curve.repetition_rate_mhz && !(*curve.repetition_rate_mhz > 0.0))
        issues.push_back({"repetition_rate_mhz", "must be > 0"});
    return issues;
}

DetectionCurve parse_detection_curve(std::istream& in, std::string name) {
    DetectionCurve curve;
    curve.name = std::move(name);
    bool have_gate = false;
    bool have_mode = false;

    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string_view line = trim(raw);
        if (line.empty()) continue;

        if (line.front() == '#') {
            const std::string_view body = trim(line.substr(1));
            const auto colon = body.find(':');
            if (colon == std::string_view::npos) continue;
            const std::string_view key = trim(body.substr(0, colon));
            const std::string_view value = trim(body.substr(colon + 1));
            if (key == "gate_label") {
                if (value == "high") curve.gate = GateLabel::high;
                else if (value == "low") curve.gate = GateLabel::low;
                else if (value == "default") curve.gate = GateLabel::standard;
                else format_error(curve.name, line_no, "unknown gate_label '" + std::string(value) + "'");
                have_gate = true;
            } else if (key == "blinding_mode") {
                if (value == "pulsed") curve.blinding = BlindingMode::pulsed;
                else if (value == "cw") curve.blinding = BlindingMode::cw;
                else format_error(curve.name, line_no, "unknown blinding_mode '" + std::string(value) + "'");
                have_mode = true;
            } else if (key == "repetition_rate_mhz" || key == "avg_blinding_power") {
                const auto number = to_number(value);
                if (!number) format_error(curve.name, line_no, "bad number for " + std::string(key));
                (key == "repetition_rate_mhz" ? curve.repetition_rate_mhz : curve.avg_blinding_power) = *number;
            }
            continue;
        }

        const auto fields = split(line, ',');
        if (fields.size() != 2) format_error(curve.name, line_no, "expected 'energy_db, p_det'");
        const auto energy = to_number(fields[0]);
        const auto p = to_number(fields[1]);
        if (!energy || !p) {
            if (curve.points.empty() && fields[0] == "energy_db") continue;  // column header
            format_error(curve.name, line_no, "non-numeric value");
        }
        curve.points.push_back({*energy, *p});
    }

    if (!have_gate) format_error(curve.name, line_no, "missing '# gate_label:' header");
    if (!have_mode) format_error(curve.name, line_no, "missing '# blinding_mode:' header");
    if (auto issues = check(curve); !issues.empty()) throw ValidationError(std::move(issues));
    return curve;
}

DetectionCurve load_detection_curve(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CurveFormatError("cannot open " + path);
    return parse_detection_curve(in, path);
}

EnergyGap extract_gap(const DetectionCurve& curve, double epsilon) {
    if (!(epsilon > 0.0 && epsilon < 0.5))
        throw std::invalid_argument("extract_gap: epsilon must lie in (0, 0.5)");
    const auto& pts = curve.points;

    const auto above_never = std::find_if(pts.begin(), pts.end(),
                                          [&](const EnergyPoint& p) { return p.p_det > epsilon; });
    const auto always = std::find_if(pts.begin(), pts.end(),
                                     [&](const EnergyPoint& p) { return p.p_det >= 1.0 - epsilon; });
    if (always == pts.end())
        throw NoThresholdError(curve.name + ": no-threshold: detection never reaches 1 - epsilon");
    if (above_never == pts.begin())
        throw NoThresholdError(curve.name + ": no-threshold: detection already above epsilon at the lowest energy");

    EnergyGap gap;
    gap.epsilon = epsilon;
    gap.e_never_db = crossing(*(above_never - 1), *above_never, epsilon);
    gap.e_always_db = always == pts.begin() ? always->energy_db
                                            : crossing(*(always - 1), *always, 1.0 - epsilon);
    return gap;
}

FingerprintVerdict fingerprint_condition(double e_always_high_db, double e_never_low_db) {
    FingerprintVerdict v;
    v.holds = 2.0 * linear(e_always_high_db) <= linear(e_never_low_db);
    v.margin_db = e_never_low_db - (e_always_high_db + kLog10Two);
    return v;
}

double energy_gap_ratio(double e_always_db, double e_never_db) {
    return std::expm1((e_never_db - e_always_db) * std::log(10.0) / 10.0);
}

std::vector<GapAssessment> gap_margin_series(std::span<const DetectionCurve> curves, double epsilon) {
    // Key orders pulsed before CW, then by rate.
    using Key = std::tuple<int, double>;
    struct Group {
        const DetectionCurve* reference = nullptr;
        const DetectionCurve* low = nullptr;
        std::optional<double> rate;
    };
    std::map<Key, Group> groups;

    for (const DetectionCurve& c : curves) {
        const Key key{c.blinding == BlindingMode::cw ? 1 : 0, c.repetition_rate_mhz.value_or(0.0)};
        Group& g = groups[key];
        g.rate = c.repetition_rate_mhz;
        if (c.gate == GateLabel::low) {
            g.low = &c;
        } else if (c.gate == GateLabel::standard || g.reference == nullptr) {
            g.reference = &c;
        }
    }

    std::vector<GapAssessment> out;
    for (const auto& [key, g] : groups) {
        const std::string where = std::get<0>(key) == 1 ? std::string("cw")
                                                         : "pulsed " + std::to_string(std::get<1>(key)) + " MHz";
        if (!g.reference || !g.low)
            throw std::invalid_argument("gap_margin_series: missing " +
                                        std::string(g.low ? "default/high" : "low") +
                                        " gate curve for " + where);
        const EnergyGap ref = extract_gap(*g.reference, epsilon);
        const EnergyGap low = extract_gap(*g.low, epsilon);

        GapAssessment a;
        a.blinding = g.reference->blinding;
        a.repetition_rate_mhz = g.rate;
        a.avg_blinding_power = g.reference->avg_blinding_power ? g.reference->avg_blinding_power
                                                               : g.low->avg_blinding_power;
        a.e_always_ref_db = ref.e_always_db;
        a.e_never_low_db = low.e_never_db;
        a.margin_linear = linear(low.e_never_db) - 2.0 * linear(ref.e_always_db);
        a.verdict = fingerprint_condition(ref.e_always_db, low.e_never_db);
        a.ratio = energy_gap_ratio(ref.e_always_db, low.e_never_db);
        a.positive = a.margin_linear > 0.0;
        out.push_back(a);
    }
    return out;
}

std::vector<SupplySetting> parse_supply_table(std::istream& in) {
    std::vector<SupplySetting> rows;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string_view line = trim(raw);
        if (line.empty() || line.front() == '#') continue;
        const auto fields = split(line, ',');
        if (fields.size() != 4) format_error("supply table", line_no, "expected 4 columns");
        const auto bias = to_number(fields[1]);
        const auto gate = to_number(fields[2]);
        const auto percent = to_number(fields[3]);
        if (!bias || !gate || !percent) {
            if (rows.empty() && fields[0] == "label") continue;
            format_error("supply table", line_no, "non-numeric value");
        }
        if (*percent < 0.0 || *percent > 100.0) format_error("supply table", line_no, "percent out of range");
        rows.push_back({std::string(fields[0]), *bias, *gate, *percent / 100.0});
    }
    return rows;
}

std::vector<SupplySetting> load_supply_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CurveFormatError("cannot open " + path);
    return parse_supply_table(in);
}

std::vector<FieldError> check(const CircuitParams& p) {
    std::vector<FieldError> issues;
    auto positive = [&](const char* field, double v) {
        if (!(std::isfinite(v) && v > 0.0)) {
            issues.push_back({field, "must be finite and > 0"});
            return false;
        }
        return true;
    };
    const bool ok_bias = positive("r_bias", p.r_bias);
    const bool ok_spad = positive("r_spad", p.r_spad);
    const bool ok_0 = positive("r_0", p.r_0);
    if (!std::isfinite(p.delta_v)) issues.push_back({"delta_v", "must be finite"});
    if (ok_bias && ok_0 && p.r_bias / p.r_0 < 100.0)
        issues.push_back({"r_bias", "must be >= 100 r_0"});
    if (ok_spad && ok_0 && p.r_spad / p.r_0 < 100.0)
        issues.push_back({"r_spad", "must be >= 100 r_0"});
    return issues;
}

CircuitParams validate(const CircuitParams& params) {
    auto issues = check(params);
    if (!issues.empty()) throw ValidationError(std::move(issues));
    return params;
}

BiasDrop bias_drop(const CircuitParams& raw) {
    const CircuitParams p = validate(raw);
    const double series = p.r_bias + p.r_spad;
    BiasDrop d;
    d.delta_i = p.delta_v / series;
    d.delta_v_spad = p.delta_v * p.r_spad / series;
    d.attenuation = series / p.r_spad;
    return d;
}

}  // namespace dbaguard
