#include "ffscale/cli.hpp"

#include "ffscale/errors.hpp"
#include "ffscale/version.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace ffscale {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void apply_config_json(const std::string& text, RunConfig& cfg) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw UsageError(std::string("config file is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw UsageError("config file must hold a flat JSON object");
    try {
        for (const auto& [key, value] : j.items()) {
            if (key == "scenario") cfg.scenario = value.get<std::string>();
            else if (key == "alpha_bar") cfg.alpha_bar = value.get<double>();
            else if (key == "t0") cfg.t0 = value.get<double>();
            else if (key == "omega") cfg.omega = value.get<double>();
            else if (key == "dt") cfg.dt = value.get<double>();
            else if (key == "gauge_eliminate_v0") cfg.gauge_eliminate_v0 = value.get<bool>();
            else if (key == "field_rate") cfg.field_rate = value.get<double>();
            else if (key == "output_dir") cfg.output_dir = value.get<std::string>();
            else if (key == "format") cfg.format = value.get<std::string>();
            else throw UsageError("unknown config key: " + key);
        }
    } catch (const json::exception& e) {
        throw UsageError(std::string("config value has the wrong type: ") + e.what());
    }
}

void validate_config(const RunConfig& cfg) {
    static const std::vector<std::string> scenarios = {
        "two-level", "two-spin", "decreasing-field", "cd-check", "invariant-check"};
    if (std::find(scenarios.begin(), scenarios.end(), cfg.scenario) == scenarios.end()) {
        throw UsageError("unknown scenario: " + cfg.scenario);
    }
    if (!(cfg.alpha_bar >= 1.0)) throw UsageError("alpha-bar must be >= 1");
    if (!(cfg.t0 > 0.0)) throw UsageError("t0 must be positive");
    if (!(cfg.omega > 0.0)) throw UsageError("omega must be positive");
    if (!(cfg.dt > 0.0)) throw UsageError("dt must be positive");
    if (cfg.format != "csv" && cfg.format != "json") {
        throw UsageError("format must be csv or json");
    }
    if (cfg.dt > cfg.t0 / 1000.0) {
        std::cerr << "warning: dt = " << cfg.dt << " is coarse for t0 = " << cfg.t0
                  << " (recommended dt <= t0/1000)\n";
    }
}

RunConfig parse_config(const std::vector<std::string>& args) {
    RunConfig cfg;

    // the config file forms the base layer under the flags
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config") {
            if (i + 1 >= args.size()) throw UsageError("--config requires a path");
            std::ifstream in(args[i + 1]);
            if (!in) throw IoError("cannot read config file: " + args[i + 1]);
            std::stringstream ss;
            ss << in.rdbuf();
            apply_config_json(ss.str(), cfg);
        }
    }

    CLI::App app{"fast-forward scaling scenarios"};
    app.add_option("--scenario", cfg.scenario,
                   "two-level | two-spin | decreasing-field | cd-check | invariant-check");
    app.add_option("--alpha-bar", cfg.alpha_bar, "peak magnification parameter (>= 1)");
    app.add_option("--t0", cfg.t0, "magnification ramp duration");
    app.add_option("--omega", cfg.omega, "drive frequency");
    app.add_option("--dt", cfg.dt, "integration step");
    bool no_gauge = false;
    app.add_flag("--no-gauge", no_gauge, "keep the identity part v0 in the reported potential");
    app.add_option("--field-rate", cfg.field_rate,
                   "decreasing-field envelope rate: h(t) = exp(-rate t)");
    app.add_option("--out", cfg.output_dir, "output directory");
    app.add_option("--format", cfg.format, "csv | json");
    std::string config_path;
    app.add_option("--config", config_path, "JSON config file (flags take precedence)");

    std::vector<const char*> argv;
    argv.push_back("ffscale");
    for (const std::string& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        std::cout << app.help();
        throw HelpRequested{};
    } catch (const CLI::ParseError& e) {
        throw UsageError(e.what());
    }
    if (no_gauge) cfg.gauge_eliminate_v0 = false;
    validate_config(cfg);
    return cfg;
}

namespace {

void write_csv(const fs::path& path, const ScenarioResult& r) {
    std::ofstream out(path, std::ios::binary); // binary: LF line endings everywhere
    if (!out) throw IoError("cannot write " + path.string());
    for (std::size_t c = 0; c < r.columns.size(); ++c) {
        out << (c ? "," : "") << r.columns[c];
    }
    out << "\n";
    for (std::size_t row = 0; row < r.rows(); ++row) {
        for (std::size_t c = 0; c < r.series.size(); ++c) {
            out << (c ? "," : "") << format_number(r.series[c][row]);
        }
        out << "\n";
    }
}

json metadata_json(const RunConfig& cfg, double wall_seconds) {
    json m;
    m["scenario"] = cfg.scenario;
    m["alpha_bar"] = cfg.alpha_bar;
    m["t0"] = cfg.t0;
    m["omega"] = cfg.omega;
    m["dt"] = cfg.dt;
    m["gauge_eliminate_v0"] = cfg.gauge_eliminate_v0;
    m["field_rate"] = cfg.field_rate;
    m["output_dir"] = cfg.output_dir;
    m["format"] = cfg.format;
    m["library_version"] = kVersion;
    m["wall_time_seconds"] = wall_seconds;
    return m;
}

json events_json(const ScenarioResult& r) {
    json evs = json::array();
    for (const NodeEvent& ev : r.events) {
        evs.push_back({{"type", "node_singularity"},
                       {"time", ev.time},
                       {"component", ev.component},
                       {"left_sign", ev.left_sign},
                       {"right_sign", ev.right_sign}});
    }
    if (r.infeasible) {
        evs.push_back({{"type", "infeasible"},
                       {"first_time", r.first_infeasible_time}});
    }
    return evs;
}

ScenarioResult dispatch(const RunConfig& cfg) {
    if (cfg.scenario == "two-level") {
        return run_two_level({cfg.omega, cfg.alpha_bar, cfg.t0, cfg.dt, cfg.gauge_eliminate_v0});
    }
    if (cfg.scenario == "two-spin") {
        return run_two_spin({cfg.omega, cfg.alpha_bar, cfg.t0, cfg.dt, cfg.gauge_eliminate_v0});
    }
    if (cfg.scenario == "decreasing-field") {
        DecreasingFieldScenario s;
        const double rate = cfg.field_rate;
        s.envelope = [rate](double t) { return std::exp(-rate * t); };
        s.omega = cfg.omega;
        s.t_end = cfg.t0;
        s.dt = cfg.dt;
        return run_decreasing_field(s, {cfg.alpha_bar, cfg.t0});
    }
    if (cfg.scenario == "cd-check") {
        return run_cd_check({cfg.omega, cfg.alpha_bar, cfg.t0, cfg.dt, cfg.gauge_eliminate_v0});
    }
    return run_invariant_check({cfg.omega, cfg.alpha_bar, cfg.t0, cfg.dt,
                                cfg.gauge_eliminate_v0});
}

} // namespace

int execute(const RunConfig& cfg) {
    const auto start = std::chrono::steady_clock::now();
    fs::create_directories(cfg.output_dir);

    ScenarioResult result;
    bool solver_infeasible = false;
    double solver_infeasible_time = 0.0;
    try {
        result = dispatch(cfg);
    } catch (const InfeasibleError& e) {
        solver_infeasible = true;
        solver_infeasible_time = e.time;
    } catch (const NormDriftError& e) {
        std::cerr << "integration quality gate failed (norm drift " << e.drift
                  << "); a node crossing at this step size is not resolvable - reduce dt\n";
        return 1;
    }
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    json doc;
    doc["metadata"] = metadata_json(cfg, wall);
    if (solver_infeasible) {
        result.infeasible = true;
        result.first_infeasible_time = solver_infeasible_time;
        result.verdict = "infeasible";
    }
    doc["events"] = events_json(result);
    if (!result.verdict.empty()) doc["verdict"] = result.verdict;
    if (result.infeasible) doc["first_infeasible_time"] = result.first_infeasible_time;
    doc["max_pop_deviation"] = result.max_pop_deviation;

    {
        std::ofstream out(fs::path(cfg.output_dir) / "events.json", std::ios::binary);
        if (!out) throw IoError("cannot write events.json");
        out << doc.dump(2) << "\n";
    }

    if (!solver_infeasible) {
        if (cfg.format == "csv") {
            write_csv(fs::path(cfg.output_dir) / (cfg.scenario + ".csv"), result);
        } else {
            json series = json::object();
            for (std::size_t c = 0; c < result.columns.size(); ++c) {
                series[result.columns[c]] = result.series[c];
            }
            json full;
            full["metadata"] = doc["metadata"];
            full["series"] = series;
            full["events"] = doc["events"];
            std::ofstream out(fs::path(cfg.output_dir) / (cfg.scenario + ".json"),
                              std::ios::binary);
            if (!out) throw IoError("cannot write scenario json");
            out << full.dump(2) << "\n";
        }
    }

    if (result.infeasible) return kExitInfeasible;
    if (result.any_clamped) return kExitClamped;
    return kExitOk;
}

// ---------------------------------------------------------------------------
// regression comparison
// ---------------------------------------------------------------------------
namespace {

struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

CsvTable read_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    CsvTable table;
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty csv: " + path.string());
    std::stringstream header(line);
    std::string cell;
    while (std::getline(header, cell, ',')) table.columns.push_back(cell);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream row(line);
        std::vector<double> vals;
        while (std::getline(row, cell, ',')) vals.push_back(std::stod(cell));
        if (vals.size() != table.columns.size()) {
            throw IoError("ragged csv row in " + path.string());
        }
        table.rows.push_back(std::move(vals));
    }
    return table;
}

} // namespace

int regress(const std::string& golden_dir, const std::string& fresh_dir, double tol,
            std::ostream& report) {
    std::vector<fs::path> files;
    if (!fs::is_directory(golden_dir)) throw IoError("not a directory: " + golden_dir);
    for (const auto& entry : fs::directory_iterator(golden_dir)) {
        if (entry.path().extension() == ".csv") files.push_back(entry.path().filename());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw IoError("no csv files in " + golden_dir);

    bool pass = true;
    for (const fs::path& name : files) {
        const fs::path fresh_path = fs::path(fresh_dir) / name;
        if (!fs::exists(fresh_path)) {
            report << name.string() << ": missing in fresh dir\n";
            return kExitData;
        }
        const CsvTable golden = read_csv(fs::path(golden_dir) / name);
        const CsvTable fresh = read_csv(fresh_path);
        if (golden.columns != fresh.columns) {
            report << name.string() << ": column schema mismatch\n";
            return kExitData;
        }
        const auto t_it = std::find(golden.columns.begin(), golden.columns.end(), "t");
        if (t_it == golden.columns.end()) {
            report << name.string() << ": no t column\n";
            return kExitData;
        }
        const std::size_t t_idx = static_cast<std::size_t>(t_it - golden.columns.begin());
        const auto flag_it =
            std::find(golden.columns.begin(), golden.columns.end(), "singular_flag");
        const std::size_t flag_idx =
            flag_it == golden.columns.end()
                ? golden.columns.size()
                : static_cast<std::size_t>(flag_it - golden.columns.begin());

        // index fresh rows by quantized t
        std::map<long long, std::size_t> fresh_by_t;
        for (std::size_t i = 0; i < fresh.rows.size(); ++i) {
            fresh_by_t[std::llround(fresh.rows[i][t_idx] * 1e9)] = i;
        }
        std::vector<double> maxdiff(golden.columns.size(), 0.0);
        std::size_t matched = 0;
        for (const auto& grow : golden.rows) {
            const auto it = fresh_by_t.find(std::llround(grow[t_idx] * 1e9));
            if (it == fresh_by_t.end()) continue;
            const auto& frow = fresh.rows[it->second];
            if (flag_idx < golden.columns.size() &&
                (grow[flag_idx] != 0.0 || frow[flag_idx] != 0.0)) {
                continue;
            }
            ++matched;
            for (std::size_t c = 0; c < golden.columns.size(); ++c) {
                maxdiff[c] = std::max(maxdiff[c], std::abs(grow[c] - frow[c]));
            }
        }
        if (matched == 0) {
            report << name.string() << ": no common rows\n";
            return kExitData;
        }
        for (std::size_t c = 0; c < golden.columns.size(); ++c) {
            const bool ok = maxdiff[c] <= tol;
            if (!ok) pass = false;
            report << name.string() << " " << golden.columns[c] << " max|diff| = "
                   << format_number(maxdiff[c]) << (ok ? "" : "  EXCEEDS") << "\n";
        }
    }
    report << (pass ? "PASS" : "FAIL") << " (tol " << format_number(tol) << ")\n";
    return pass ? 0 : 1;
}

} // namespace ffscale
