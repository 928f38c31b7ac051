#include "dbaguard/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace dbaguard {

using nlohmann::json;

namespace {

// Reads one JSON object, remembering which keys were consumed so leftovers
// can be reported.
class Section {
public:
    Section(const json& j, std::string path, std::vector<FieldError>& issues)
        : json_(j), path_(std::move(path)), issues_(issues) {
        if (!j.is_object()) fail(path_.empty() ? "config" : path_, "must be an object");
    }

    ~Section() {
        if (!json_.is_object()) return;
        for (const auto& [key, value] : json_.items())
            if (!seen_.count(key)) fail(name(key), "unknown key");
    }

    void read(const char* key, double& out) {
        if (const json* v = find(key)) {
            if (v->is_number()) out = v->get<double>();
            else fail(name(key), "must be a number");
        }
    }

    void read(const char* key, bool& out) {
        if (const json* v = find(key)) {
            if (v->is_boolean()) out = v->get<bool>();
            else fail(name(key), "must be true or false");
        }
    }

    void read(const char* key, std::string& out) {
        if (const json* v = find(key)) {
            if (v->is_string()) out = v->get<std::string>();
            else fail(name(key), "must be a string");
        }
    }

    void read(const char* key, std::uint64_t& out) {
        if (const json* v = find(key)) {
            if (v->is_number_unsigned()) {
                out = v->get<std::uint64_t>();
            } else if (v->is_number_integer() && v->get<std::int64_t>() >= 0) {
                out = static_cast<std::uint64_t>(v->get<std::int64_t>());
            } else if (v->is_number_float() && v->get<double>() >= 0.0 &&
                       v->get<double>() < 1.8e19 && std::floor(v->get<double>()) == v->get<double>()) {
                out = static_cast<std::uint64_t>(v->get<double>());  // allows 1e9
            } else {
                fail(name(key), "must be a nonnegative integer");
            }
        }
    }

    void read(const char* key, std::vector<double>& out) {
        if (const json* v = find(key)) {
            if (!v->is_array()) {
                fail(name(key), "must be an array of numbers");
                return;
            }
            std::vector<double> values;
            for (const auto& x : *v) {
                if (!x.is_number()) {
                    fail(name(key), "must be an array of numbers");
                    return;
                }
                values.push_back(x.get<double>());
            }
            out = std::move(values);
        }
    }

    const json* find(const char* key) {
        seen_.insert(key);
        if (!json_.is_object()) return nullptr;
        const auto it = json_.find(key);
        return it == json_.end() ? nullptr : &*it;
    }

    std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
    void fail(std::string field, std::string message) { issues_.push_back({std::move(field), std::move(message)}); }

private:
    const json& json_;
    std::string path_;
    std::vector<FieldError>& issues_;
    std::set<std::string> seen_;
};

void throw_if(std::vector<FieldError>& issues) {
    if (!issues.empty()) throw ValidationError(std::move(issues));
}

void read_protocol(Section& s, DecoyProtocol& v) {
    s.read("intensities", v.intensities);
    s.read("prep_probs", v.prep_probs);
}

void read_detectors(Section& s, DetectorConfig& v) {
    s.read("eta_high", v.eta_high);
    s.read("eta_low", v.eta_low);
    s.read("dark_count", v.dark_count);
    s.read("transmittance", v.transmittance);
    s.read("alpha", v.alpha);
}

void read_channel(Section& s, ChannelConfig& v) {
    s.read("length_km", v.length_km);
    s.read("loss_exponent_per_km", v.loss_exponent_per_km);
}

void read_eve(Section& s, EveStrategy& v) {
    s.read("active", v.active);
    s.read("beta", v.beta);
    s.read("detection_eff", v.detection_eff);
}

template <typename T, typename Reader>
T read_top(const json& j, T base, Reader reader) {
    std::vector<FieldError> issues;
    {
        Section s(j, "", issues);
        reader(s, base);
    }
    throw_if(issues);
    return base;
}

}  // namespace

LengthRange parse_length_range(const std::string& text) {
    LengthRange r;
    char c1 = 0;
    char c2 = 0;
    std::istringstream in(text);
    in.imbue(std::locale::classic());
    if (!(in >> r.start_km >> c1 >> r.stop_km >> c2 >> r.step_km) || c1 != ':' || c2 != ':' ||
        !(in >> std::ws).eof())
        throw ValidationError("length_range", "expected a:b:step, got '" + text + "'");
    if (!(std::isfinite(r.start_km) && std::isfinite(r.stop_km) && std::isfinite(r.step_km)) ||
        r.start_km < 0.0 || r.stop_km < r.start_km || !(r.step_km > 0.0))
        throw ValidationError("length_range", "need 0 <= a <= b and step > 0, got '" + text + "'");
    return r;
}

std::string to_string(const LengthRange& range) {
    // shortest round-trip form so the text parses back to the same range
    auto text = [](double v) {
        char buf[32];
        return std::string(buf, std::to_chars(buf, buf + sizeof buf, v).ptr);
    };
    return text(range.start_km) + ':' + text(range.stop_km) + ':' + text(range.step_km);
}

std::vector<double> expand(const LengthRange& range) {
    std::vector<double> out;
    const double span = range.stop_km - range.start_km;
    const auto steps = static_cast<std::uint64_t>(std::floor(span / range.step_km + 1e-9));
    for (std::uint64_t k = 0; k <= steps; ++k)
        out.push_back(range.start_km + static_cast<double>(k) * range.step_km);
    return out;
}

RunConfig validate(const RunConfig& config) {
    std::vector<FieldError> issues;
    auto add = [&](const std::string& prefix, std::vector<FieldError> more) {
        for (auto& e : more) issues.push_back({prefix + "." + e.field, std::move(e.message)});
    };
    add("protocol", check(config.protocol));
    add("detector", check(config.detectors));
    add("channel", check(config.channel));
    add("eve", check(config.eve));
    if (config.pulses < 1) issues.push_back({"run.pulses", "must be >= 1"});
    if (config.sweep.empty()) issues.push_back({"curve.sweep", "must not be empty"});
    for (double v : config.sweep)
        if (!(std::isfinite(v) && v > 0.0 && v <= 1.0))
            issues.push_back({"curve.sweep", "values must lie in (0, 1]"});
    throw_if(issues);
    return config;
}

json to_json(const DecoyProtocol& v) {
    return {{"intensities", v.intensities}, {"prep_probs", v.prep_probs}};
}

json to_json(const DetectorConfig& v) {
    return {{"eta_high", v.eta_high}, {"eta_low", v.eta_low}, {"dark_count", v.dark_count},
            {"transmittance", v.transmittance}, {"alpha", v.alpha}};
}

json to_json(const ChannelConfig& v) {
    return {{"length_km", v.length_km}, {"loss_exponent_per_km", v.loss_exponent_per_km}};
}

json to_json(const EveStrategy& v) {
    return {{"active", v.active}, {"beta", v.beta}, {"detection_eff", v.detection_eff}};
}

json to_json(const SessionCounts& v) {
    return {{"n_alice", v.n_alice}, {"n_sent", v.n_sent}, {"n_clicked", v.n_clicked},
            {"n_double", v.n_double}, {"n_error", v.n_error}};
}

json to_json(const RunConfig& v) {
    return {{"protocol", to_json(v.protocol)},
            {"detector", to_json(v.detectors)},
            {"channel", to_json(v.channel)},
            {"eve", to_json(v.eve)},
            {"run", {{"mode", std::string(to_string(v.mode))}, {"pulses", v.pulses}, {"seed", v.seed}}},
            {"curve",
             {{"sweep_param", std::string(to_string(v.sweep_param))},
              {"sweep", v.sweep},
              {"length_range", to_string(v.lengths)}}}};
}

DecoyProtocol protocol_from_json(const json& j, DecoyProtocol base) {
    return read_top(j, std::move(base), read_protocol);
}

DetectorConfig detectors_from_json(const json& j, DetectorConfig base) {
    return read_top(j, base, read_detectors);
}

ChannelConfig channel_from_json(const json& j, ChannelConfig base) {
    return read_top(j, base, read_channel);
}

EveStrategy eve_from_json(const json& j, EveStrategy base) {
    return read_top(j, base, read_eve);
}

SessionCounts counts_from_json(const json& j) {
    return read_top(j, SessionCounts{}, [](Section& s, SessionCounts& c) {
        s.read("n_alice", c.n_alice);
        s.read("n_sent", c.n_sent);
        s.read("n_clicked", c.n_clicked);
        s.read("n_double", c.n_double);
        s.read("n_error", c.n_error);
    });
}

RunConfig run_config_from_json(const json& j, RunConfig base) {
    std::vector<FieldError> issues;
    {
        Section top(j, "", issues);
        if (const json* p = top.find("protocol")) {
            Section s(*p, "protocol", issues);
            read_protocol(s, base.protocol);
        }
        if (const json* p = top.find("detector")) {
            Section s(*p, "detector", issues);
            read_detectors(s, base.detectors);
        }
        if (const json* p = top.find("channel")) {
            Section s(*p, "channel", issues);
            read_channel(s, base.channel);
        }
        if (const json* p = top.find("eve")) {
            Section s(*p, "eve", issues);
            read_eve(s, base.eve);
        }
        if (const json* p = top.find("run")) {
            Section s(*p, "run", issues);
            std::string mode(to_string(base.mode));
            s.read("mode", mode);
            s.read("pulses", base.pulses);
            s.read("seed", base.seed);
            try {
                base.mode = parse_receiver_mode(mode);
            } catch (const ValidationError& e) {
                for (const auto& issue : e.issues()) issues.push_back({"run." + issue.field, issue.message});
            }
        }
        if (const json* p = top.find("curve")) {
            Section s(*p, "curve", issues);
            std::string param(to_string(base.sweep_param));
            std::string range = to_string(base.lengths);
            s.read("sweep_param", param);
            s.read("sweep", base.sweep);
            s.read("length_range", range);
            try {
                base.sweep_param = parse_sweep_parameter(param);
                base.lengths = parse_length_range(range);
            } catch (const ValidationError& e) {
                for (const auto& issue : e.issues()) issues.push_back({"curve." + issue.field, issue.message});
            }
        }
    }
    throw_if(issues);
    return base;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("config", "cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ValidationError("config", path + ": " + e.what());
    }
    return validate(run_config_from_json(j));
}

}  // namespace dbaguard
