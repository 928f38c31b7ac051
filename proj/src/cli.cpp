#include "dbaguard/cli.hpp"

#include <charconv>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "dbaguard/attack.hpp"
#include "dbaguard/estimator.hpp"
#include "dbaguard/gains.hpp"
#include "dbaguard/rng.hpp"
#include "dbaguard/spadcheck.hpp"

namespace dbaguard::cli {

using nlohmann::json;

namespace {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string join_flags(const std::vector<std::string>& flags) {
    std::string out;
    for (const auto& f : flags) {
        if (!out.empty()) out += ';';
        out += f;
    }
    return out;
}

std::string_view to_string(OutputFormat f) {
    return f == OutputFormat::delimited ? "delimited" : "structured";
}

json manifest_json(const RunManifest& m) {
    return {{"subcommand", m.subcommand}, {"config_path", m.config_path},
            {"output_path", m.output_path}, {"seed", m.seed},
            {"format", std::string(to_string(m.format))}};
}

// CSV writer with a reproducibility header of '#' lines.
class Table {
public:
    explicit Table(std::vector<std::string> columns) : columns_(std::move(columns)) {}

    void add(std::vector<std::string> cells) { rows_.push_back(std::move(cells)); }

    void write_csv(std::ostream& os) const {
        for (std::size_t i = 0; i < columns_.size(); ++i) os << (i ? "," : "") << columns_[i];
        os << '\n';
        for (const auto& row : rows_) {
            for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
            os << '\n';
        }
    }

    // Structured rows keep numbers as numbers where the cell parses as one.
    json to_json() const {
        json rows = json::array();
        for (const auto& row : rows_) {
            json obj = json::object();
            for (std::size_t i = 0; i < row.size(); ++i) {
                double v = 0.0;
                const auto& cell = row[i];
                const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
                if (!cell.empty() && ec == std::errc() && ptr == cell.data() + cell.size())
                    obj[columns_[i]] = v;
                else
                    obj[columns_[i]] = cell;
            }
            rows.push_back(std::move(obj));
        }
        return rows;
    }

private:
    std::vector<std::string> columns_;
    std::vector<std::vector<std::string>> rows_;
};

struct Section {
    std::string name;
    Table table;
};

void emit(std::ostream& os, const RunManifest& manifest, const RunConfig& config,
          const std::vector<std::string>& notes, const std::vector<Section>& sections) {
    if (manifest.format == OutputFormat::structured) {
        json doc = {{"manifest", manifest_json(manifest)}, {"config", to_json(config)}};
        if (!notes.empty()) doc["notes"] = notes;
        for (const auto& s : sections) doc[s.name] = s.table.to_json();
        os << doc.dump(2) << '\n';
        return;
    }
    os << "# dbaguard " << manifest.subcommand << '\n';
    os << "# seed: " << manifest.seed << '\n';
    os << "# manifest: " << manifest_json(manifest).dump() << '\n';
    os << "# config: " << to_json(config).dump() << '\n';
    for (const auto& n : notes) os << "# " << n << '\n';
    for (std::size_t i = 0; i < sections.size(); ++i) {
        if (i) os << '\n';
        sections[i].table.write_csv(os);
    }
}

std::string u64(std::uint64_t v) { return std::to_string(v); }

// Options shared by every subcommand; optionals override the config file.
struct CommonOptions {
    std::string config_path;
    std::string out_path;
    std::string format = "delimited";
    std::optional<std::uint64_t> seed;
    std::optional<std::string> mode;
    std::optional<std::uint64_t> pulses;
    std::optional<double> length;
    std::optional<double> alpha;
    std::optional<double> beta;
    std::optional<double> eta_low;
    std::optional<double> transmittance;
    bool attack = false;

    void attach(CLI::App& app, bool simulation_flags) {
        app.add_option("--config", config_path, "JSON configuration file");
        app.add_option("--out", out_path, "Output file (default: stdout)");
        app.add_option("--format", format, "delimited or structured")
            ->check(CLI::IsMember({"delimited", "structured"}));
        app.add_option("--seed", seed, "64-bit seed");
        app.add_option("--mode", mode, "two_spad or one_spad")
            ->check(CLI::IsMember({"two_spad", "one_spad"}));
        app.add_option("--alpha", alpha, "High-gate probability");
        app.add_option("--eta-low", eta_low, "Low-gate detection efficiency");
        app.add_option("--transmittance", transmittance, "Optical alignment T");
        if (simulation_flags) {
            app.add_option("--pulses", pulses, "Pulses per simulated session");
            app.add_option("--length", length, "Channel length in km");
            app.add_option("--beta", beta, "Eve's high-energy pulse probability");
            app.add_flag("--attack", attack, "Simulate the blinding attack");
        }
    }

    RunConfig resolve() const {
        RunConfig rc = config_path.empty() ? RunConfig{} : load_run_config(config_path);
        if (seed) rc.seed = *seed;
        if (mode) rc.mode = parse_receiver_mode(*mode);
        if (pulses) rc.pulses = *pulses;
        if (length) rc.channel.length_km = *length;
        if (alpha) rc.detectors.alpha = *alpha;
        if (beta) rc.eve.beta = *beta;
        if (eta_low) rc.detectors.eta_low = *eta_low;
        if (transmittance) rc.detectors.transmittance = *transmittance;
        if (attack) rc.eve.active = true;
        return validate(rc);
    }

    RunManifest manifest(const std::string& subcommand, const RunConfig& rc) const {
        return {subcommand, config_path, out_path, rc.seed,
                format == "structured" ? OutputFormat::structured : OutputFormat::delimited};
    }
};

// Opens --out or falls back to the caller's stream.
class Sink {
public:
    Sink(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
        if (path.empty()) return;
        file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
        if (!*file_) throw ConfigError("cannot write " + path);
        stream_ = file_.get();
    }
    std::ostream& get() { return *stream_; }

private:
    std::unique_ptr<std::ofstream> file_;
    std::ostream* stream_;
};

SimConfig sim_config(const RunConfig& rc) {
    SimConfig sc;
    sc.protocol = rc.protocol;
    sc.detectors = rc.detectors;
    sc.channel = rc.channel;
    sc.eve = rc.eve;
    sc.n_pulses = rc.pulses;
    sc.seed = rc.seed;
    sc.mode = rc.mode;
    return sc;
}

int cmd_simulate(const CommonOptions& opts, std::ostream& out) {
    const RunConfig rc = opts.resolve();
    const SimConfig sc = sim_config(rc);
    const RunManifest manifest = opts.manifest("simulate", rc);

    std::vector<std::string> columns{"n_alice", "n_sent", "n_clicked", "n_double", "n_error"};
    std::vector<std::string> row;
    SessionCounts counts;
    std::optional<AttackTruth> truth;
    if (rc.eve.active) {
        const AttackResult r = simulate_attack(sc);
        counts = r.counts;
        truth = r.truth;
    } else {
        counts = simulate_honest(sc);
    }
    row = {u64(counts.n_alice), u64(counts.n_sent), u64(counts.n_clicked), u64(counts.n_double),
           u64(counts.n_error)};
    if (truth) {
        columns.insert(columns.end(), {"imposed_success", "imposed_clicks", "imposed_double",
                                       "imposed_error", "high_energy_sent"});
        row.insert(row.end(), {u64(truth->imposed_success), u64(truth->imposed_clicks),
                               u64(truth->imposed_double), u64(truth->imposed_error),
                               u64(truth->high_energy_sent)});
    }
    Table table(columns);
    table.add(row);

    Sink sink(opts.out_path, out);
    if (manifest.format == OutputFormat::structured) {
        json doc = {{"manifest", manifest_json(manifest)}, {"config", to_json(rc)},
                    {"counts", to_json(counts)}};
        if (truth)
            doc["truth"] = {{"imposed_success", truth->imposed_success},
                            {"imposed_clicks", truth->imposed_clicks},
                            {"imposed_double", truth->imposed_double},
                            {"imposed_error", truth->imposed_error},
                            {"high_energy_sent", truth->high_energy_sent}};
        sink.get() << doc.dump(2) << '\n';
    } else {
        emit(sink.get(), manifest, rc, {}, {{"counts", table}});
    }
    return kExitOk;
}

// Reads counts written by `simulate` (either format) or a bare JSON object.
SessionCounts read_counts(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string text = buffer.str();

    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') {
        json j;
        try {
            j = json::parse(text);
        } catch (const json::parse_error& e) {
            throw ConfigError(path + ": " + e.what());
        }
        return counts_from_json(j.contains("counts") ? j["counts"] : j);
    }

    std::istringstream lines(text);
    std::string line;
    std::vector<std::string> header;
    while (std::getline(lines, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
        if (header.empty()) {
            header = cells;
            continue;
        }
        if (cells.size() != header.size()) throw ConfigError(path + ": row width differs from header");
        json obj = json::object();
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (header[i].rfind("n_", 0) != 0) continue;
            std::uint64_t v = 0;
            const auto [ptr, ec] = std::from_chars(cells[i].data(), cells[i].data() + cells[i].size(), v);
            if (ec != std::errc() || ptr != cells[i].data() + cells[i].size())
                throw ConfigError(path + ": bad count '" + cells[i] + "'");
            obj[header[i]] = v;
        }
        return counts_from_json(obj);
    }
    throw ConfigError(path + ": no counts row");
}

struct EstimateOptions {
    std::string counts_path;
    std::optional<std::uint64_t> n_alice, n_sent, n_clicked, n_double, n_error;

    void attach(CLI::App& app) {
        app.add_option("--counts", counts_path, "Counts file written by simulate");
        app.add_option("--n-alice", n_alice, "Pulses emitted by Alice");
        app.add_option("--n-sent", n_sent, "Fake states sent (0: n_alice * Q^Eve)");
        app.add_option("--n-clicked", n_clicked, "Observed clicks");
        app.add_option("--n-double", n_double, "Observed double clicks");
        app.add_option("--n-error", n_error, "Observed error clicks");
    }

    SessionCounts resolve() const {
        SessionCounts c = counts_path.empty() ? SessionCounts{} : read_counts(counts_path);
        if (n_alice) c.n_alice = *n_alice;
        if (n_sent) c.n_sent = *n_sent;
        if (n_clicked) c.n_clicked = *n_clicked;
        if (n_double) c.n_double = *n_double;
        if (n_error) c.n_error = *n_error;
        validate(c);
        if (c.n_alice == 0) throw ValidationError("n_alice", "must be > 0");
        return c;
    }
};

int cmd_estimate(const CommonOptions& opts, const EstimateOptions& est_opts, std::ostream& out) {
    const RunConfig rc = opts.resolve();
    const SessionCounts counts = est_opts.resolve();
    const double q_eve = eve_gain(rc.protocol);
    const LeakageEstimate est = estimate_leakage(rc.mode, to_tally(counts), rc.detectors.alpha, q_eve);

    Table input({"n_alice", "n_sent", "n_clicked", "n_double", "n_error"});
    input.add({u64(counts.n_alice), u64(counts.n_sent), u64(counts.n_clicked), u64(counts.n_double),
               u64(counts.n_error)});
    Table table({"eve_clicked", "key_bits", "key_bits_sigma", "secure_fraction", "alpha_opt",
                 "beta_hat", "beta_sigma", "flags"});
    table.add({format_number(est.eve_clicked), format_number(est.key_bits),
               format_number(est.key_bits_sigma), format_number(est.secure_fraction),
               format_number(est.alpha_opt), format_number(est.beta_hat),
               format_number(est.beta_sigma), join_flags(est.flags)});

    Sink sink(opts.out_path, out);
    emit(sink.get(), opts.manifest("estimate", rc), rc,
         {"mode: " + std::string(to_string(rc.mode)), "q_eve: " + format_number(q_eve)},
         {{"counts", input}, {"estimate", table}});
    return kExitOk;
}

struct CurveOptions {
    std::optional<std::vector<double>> sweep;
    std::optional<std::string> sweep_param;
    std::optional<std::string> length_range;

    void attach(CLI::App& app) {
        app.add_option("--sweep", sweep, "Comma-separated eta_low or T values")->delimiter(',');
        app.add_option("--sweep-param", sweep_param, "eta_low or transmittance")
            ->check(CLI::IsMember({"eta_low", "transmittance"}));
        app.add_option("--length-range", length_range, "a:b:step in km");
    }
};

int cmd_curve(const CommonOptions& opts, const CurveOptions& curve_opts, std::ostream& out) {
    RunConfig rc = opts.resolve();
    if (curve_opts.sweep) rc.sweep = *curve_opts.sweep;
    if (curve_opts.sweep_param) rc.sweep_param = parse_sweep_parameter(*curve_opts.sweep_param);
    if (curve_opts.length_range) rc.lengths = parse_length_range(*curve_opts.length_range);
    rc = validate(rc);

    CurveRequest req;
    req.protocol = rc.protocol;
    req.detectors = rc.detectors;
    req.loss_exponent_per_km = rc.channel.loss_exponent_per_km;
    req.mode = rc.mode;
    req.parameter = rc.sweep_param;
    req.sweep = rc.sweep;
    req.lengths_km = expand(rc.lengths);
    const std::vector<CurvePoint> points = secure_fraction_curve(req);

    Table table({"L_km", "sweep_value", "s_key", "alpha_opt", "flags"});
    for (const auto& p : points)
        table.add({format_number(p.length_km), format_number(p.sweep_value),
                   format_number(p.secure_fraction), format_number(p.alpha_opt), join_flags(p.flags)});

    Sink sink(opts.out_path, out);
    emit(sink.get(), opts.manifest("curve", rc), rc,
         {"mode: " + std::string(to_string(rc.mode)),
          "sweep_param: " + std::string(to_string(rc.sweep_param))},
         {{"points", table}});
    return kExitOk;
}

struct GapOptions {
    std::vector<std::string> files;
    std::string table_path;
    double epsilon = kDefaultEpsilon;

    void attach(CLI::App& app) {
        app.add_option("files", files, "Detection-curve files")->required();
        app.add_option("--table", table_path, "Supply-voltage table (label,bias_v,gate_v,p_det_percent)");
        app.add_option("--epsilon", epsilon, "Threshold tolerance for always/never")
            ->check(CLI::Range(1e-9, 0.499999));
    }
};

int cmd_gapcheck(const CommonOptions& opts, const GapOptions& gap, std::ostream& out) {
    const RunConfig rc = opts.resolve();
    std::vector<DetectionCurve> curves;
    for (const auto& f : gap.files) curves.push_back(load_detection_curve(f));

    Table per_curve({"file", "gate_label", "blinding_mode", "rate_mhz", "e_never_db", "e_always_db"});
    for (const auto& c : curves) {
        const EnergyGap g = extract_gap(c, gap.epsilon);
        per_curve.add({c.name, std::string(to_string(c.gate)), std::string(to_string(c.blinding)),
                       c.repetition_rate_mhz ? format_number(*c.repetition_rate_mhz) : "",
                       format_number(g.e_never_db), format_number(g.e_always_db)});
    }

    const std::vector<GapAssessment> series = gap_margin_series(curves, gap.epsilon);
    Table verdicts({"blinding_mode", "rate_mhz", "avg_blinding_power", "e_always_ref_db",
                    "e_never_low_db", "margin_db", "margin_linear", "ratio", "holds"});
    for (const auto& a : series)
        verdicts.add({std::string(to_string(a.blinding)),
                      a.repetition_rate_mhz ? format_number(*a.repetition_rate_mhz) : "",
                      a.avg_blinding_power ? format_number(*a.avg_blinding_power) : "",
                      format_number(a.e_always_ref_db), format_number(a.e_never_low_db),
                      format_number(a.verdict.margin_db), format_number(a.margin_linear),
                      format_number(a.ratio), a.verdict.holds ? "true" : "false"});

    std::vector<Section> sections{{"curves", per_curve}, {"verdicts", verdicts}};
    if (!gap.table_path.empty()) {
        Table supply({"label", "bias_v", "gate_v", "p_det"});
        for (const auto& s : load_supply_table(gap.table_path))
            supply.add({s.label, format_number(s.bias_v), format_number(s.gate_v), format_number(s.p_det)});
        sections.push_back({"supply", supply});
    }

    Sink sink(opts.out_path, out);
    emit(sink.get(), opts.manifest("gapcheck", rc), rc, {"epsilon: " + format_number(gap.epsilon)},
         sections);
    return kExitOk;
}

int cmd_validate(const CommonOptions& opts, std::ostream& out) {
    const RunConfig rc = opts.resolve();
    const ValidationReport report = run_validation_suite(rc);

    Table table({"check", "observed", "trials", "expected", "sigma", "slack", "z", "flagged"});
    for (const auto& c : report.checks)
        table.add({c.name, u64(c.observed), u64(c.trials), format_number(c.expected),
                   format_number(c.sigma), format_number(c.slack), format_number(c.z),
                   c.flagged ? "true" : "false"});

    Sink sink(opts.out_path, out);
    emit(sink.get(), opts.manifest("validate", rc), rc,
         {"flagged: " + std::to_string(report.flagged_count()) + " of " +
          std::to_string(report.checks.size()) + " (|z| limit " + format_number(kZLimit) + ")"},
         {{"checks", table}});
    return report.passed() ? kExitOk : kExitValidationFailure;
}

}  // namespace

std::string format_number(double value) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    if (ec != std::errc()) return "nan";
    return std::string(buf, ptr);
}

ValidationReport run_validation_suite(const RunConfig& config) {
    ValidationReport report;
    std::uint64_t scenario = 0;
    auto append = [&](const std::string& prefix, const std::vector<TallyExpectation>& tallies) {
        std::vector<TallyExpectation> named = tallies;
        for (auto& t : named) t.name = prefix + "/" + t.name;
        const ValidationReport part = validate_against_analytics(named);
        report.checks.insert(report.checks.end(), part.checks.begin(), part.checks.end());
    };

    SimConfig base = sim_config(config);
    for (const ReceiverMode mode : {ReceiverMode::two_spad, ReceiverMode::one_spad}) {
        for (const double length : {0.0, 50.0, 100.0}) {
            SimConfig sc = base;
            sc.mode = mode;
            sc.eve = {};
            sc.channel.length_km = length;
            sc.seed = splitmix64(config.seed + scenario++);
            append(std::string(to_string(mode)) + "/honest/L=" + format_number(length),
                   honest_expectations(sc, simulate_honest(sc)));
        }
        for (const auto& [alpha, beta] : {std::pair{0.5, 0.5}, std::pair{0.3, 0.7}, std::pair{0.8, 0.2}}) {
            SimConfig sc = base;
            sc.mode = mode;
            sc.detectors.alpha = alpha;
            sc.eve = {true, beta, 1.0};
            sc.seed = splitmix64(config.seed + scenario++);
            append(std::string(to_string(mode)) + "/attack/a=" + format_number(alpha) +
                       ",b=" + format_number(beta),
                   attack_expectations(sc, simulate_attack(sc)));
        }
    }
    return report;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Leakage estimation and Monte Carlo validation for gate-randomized SPAD receivers"};
    app.require_subcommand(1);

    EstimateOptions estimate;
    CurveOptions curve;
    GapOptions gap;

    auto* sim = app.add_subcommand("simulate", "Run a Monte Carlo session and write its counts");
    CommonOptions sim_opts;
    sim_opts.attach(*sim, true);
    auto* est = app.add_subcommand("estimate", "Estimate leakage from session counts");
    CommonOptions est_common;
    est_common.attach(*est, false);
    estimate.attach(*est);
    auto* crv = app.add_subcommand("curve", "Secure-fraction curves versus channel length");
    CommonOptions crv_common;
    crv_common.attach(*crv, false);
    curve.attach(*crv);
    auto* gp = app.add_subcommand("gapcheck", "Check the fingerprint condition on detection curves");
    CommonOptions gp_common;
    gp_common.attach(*gp, false);
    gap.attach(*gp);
    auto* val = app.add_subcommand("validate", "Compare Monte Carlo tallies with the closed forms");
    CommonOptions val_common;
    val_common.attach(*val, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfigError;
    }

    try {
        if (*sim) return cmd_simulate(sim_opts, out);
        if (*est) return cmd_estimate(est_common, estimate, out);
        if (*crv) return cmd_curve(crv_common, curve, out);
        if (*gp) return cmd_gapcheck(gp_common, gap, out);
        if (*val) return cmd_validate(val_common, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfigError;
    }
    return kExitConfigError;
}

}  // namespace dbaguard::cli
