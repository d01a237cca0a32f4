#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Core>

#include "commands.hpp"
#include "output.hpp"
#include "schema.hpp"

namespace fraclap::cli {

enum ExitCode { Ok = 0, SchemaViolation = 2, ComputeFailure = 3, ThresholdRefusal = 4 };

struct RunOptions {
    std::string out;     ///< overrides the config's output directory when nonempty
    int threads = 1;
    long long seed = 0;
    bool seed_given = false;
};

struct RunOutcome {
    int code = Ok;
    std::string message;
    Summary summary;
    fs::path dir;
};

inline ojson versions() {
    ojson v;
    v["fraclap"] = fraclap::version;
    v["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." + std::to_string(EIGEN_MINOR_VERSION);
#if defined(__VERSION__)
    v["compiler"] = __VERSION__;
#else
    v["compiler"] = "unknown";
#endif
    v["json"] = std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." + std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                std::to_string(NLOHMANN_JSON_VERSION_PATCH);
    return v;
}

/// Maps an in-flight exception to an exit code and message.
inline RunOutcome classify(std::exception_ptr e) {
    RunOutcome o;
    try {
        std::rethrow_exception(e);
    } catch (const SchemaError& x) {
        o = {SchemaViolation, std::string("schema violation: ") + x.what(), {}, {}};
    } catch (const json::exception& x) {
        o = {SchemaViolation, std::string("invalid JSON: ") + x.what(), {}, {}};
    } catch (const InvalidArgument& x) {
        o = {SchemaViolation, std::string("invalid parameters: ") + x.what(), {}, {}};
    } catch (const ThresholdGuardError& x) {
        o = {ThresholdRefusal, std::string("threshold guard: ") + x.what(), {}, {}};
    } catch (const std::exception& x) {
        o = {ComputeFailure, std::string("compute failure: ") + x.what(), {}, {}};
    }
    return o;
}

/// Validates and executes one config; writes outputs then the manifest.
inline RunOutcome run_config(const json& config, const RunOptions& opt) {
    const auto t0 = std::chrono::steady_clock::now();
    RunOutcome outcome;
    try {
        validate(config, "config");
        const std::string cmd = config["command"].get<std::string>();
        validate(config["params"], "params_" + cmd, "$.params");
        outcome.dir = !opt.out.empty() ? fs::path(opt.out) : fs::path(config.value("output", std::string("out")));
        ArtifactSet art(outcome.dir);
        CommandResult res = command_table().at(cmd)(config["params"], art);
        ojson doc;
        doc["command"] = cmd;
        doc["params"] = ojson::parse(config["params"].dump());
        doc["results"] = res.results;
        validate(doc, "output_" + cmd);
        art.write_json(cmd + ".json", doc);
        ojson man;
        man["config"] = ojson::parse(config.dump());
        man["artifacts"] = art.list();
        man["versions"] = versions();
        man["threads"] = std::max(1, opt.threads);
        man["seed"] = opt.seed_given ? opt.seed : config.value("seed", 0LL);
        man["wall_time_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        validate(man, "manifest");
        write_atomic(outcome.dir / "manifest.json", man.dump(2) + "\n");
        outcome.summary = std::move(res.summary);
    } catch (...) {
        const fs::path dir = outcome.dir;
        outcome = classify(std::current_exception());
        outcome.dir = dir;
    }
    return outcome;
}

/// Values of the swept parameter: an explicit list or lo..hi in steps.
inline std::vector<json> sweep_values(const json& sw) {
    std::vector<json> v;
    if (sw.contains("values"))
        for (const auto& x : sw["values"]) v.push_back(x);
    if (sw.contains("range")) {
        const double lo = sw["range"]["lo"].get<double>(), hi = sw["range"]["hi"].get<double>(), st = sw["range"]["step"].get<double>();
        require(hi >= lo, "sweep range must satisfy lo <= hi");
        const auto n = static_cast<long>(std::floor((hi - lo) / st + 1e-9)) + 1;
        for (long i = 0; i < n; ++i) v.emplace_back(lo + st * static_cast<double>(i));
    }
    require(!v.empty(), "sweep needs 'values' or 'range'");
    return v;
}

/// Runs one config per value in a worker pool; each run writes into its own subdirectory.
inline int run_sweep(const json& sw, const RunOptions& opt) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<json> values;
    try {
        validate(sw, "sweep");
        values = sweep_values(sw);
    } catch (...) {
        const auto o = classify(std::current_exception());
        std::cerr << "fraclap: " << o.message << "\n";
        return o.code;
    }
    const fs::path root = !opt.out.empty() ? fs::path(opt.out) : fs::path(sw["template"].value("output", std::string("sweep")));
    const std::string param = sw["param"].get<std::string>();
    std::vector<RunOutcome> outcomes(values.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < values.size(); i = next++) {
            json cfg = sw["template"];
            cfg["params"][param] = values[i];
            char name[32];
            std::snprintf(name, sizeof name, "run_%03zu", i);
            RunOptions o = opt;
            o.out = (root / name).string();
            o.threads = 1;
            outcomes[i] = run_config(cfg, o);
            outcomes[i].dir = root / name;
        }
    };
    const int nt = std::max(1, std::min<int>(opt.threads, static_cast<int>(values.size())));
    std::vector<std::thread> pool;
    for (int k = 1; k < nt; ++k) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    // merged summary: columns from the first successful run
    std::vector<std::string> keys;
    for (const auto& o : outcomes)
        if (o.code == Ok) {
            for (const auto& kv : o.summary) keys.push_back(kv.first);
            break;
        }
    std::vector<std::string> hdr{"index [run]", param + " [swept]", "exit_code [code]"};
    for (const auto& k : keys) hdr.push_back(k + " [see run output]");
    Csv csv(hdr);
    ojson entries = ojson::array();
    int worst = Ok;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        const auto& o = outcomes[i];
        std::vector<std::string> row{std::to_string(i), values[i].is_number() ? fmt(values[i].get<double>()) : values[i].dump(), std::to_string(o.code)};
        for (const auto& k : keys) {
            auto it = std::find_if(o.summary.begin(), o.summary.end(), [&](const auto& kv) { return kv.first == k; });
            row.push_back(it == o.summary.end() ? "" : fmt(it->second));
        }
        csv.row(row);
        ojson e;
        e["index"] = i;
        e["value"] = ojson::parse(values[i].dump());
        e["directory"] = o.dir.filename().string();
        e["exit_code"] = o.code;
        if (o.code != Ok) {
            e["message"] = o.message;
            std::cerr << "fraclap: run " << i << ": " << o.message << "\n";
            worst = ComputeFailure;
        }
        entries.push_back(e);
    }
    ArtifactSet art(root);
    art.write("summary.csv", csv.str());
    ojson man;
    man["sweep"] = ojson::parse(sw.dump());
    man["entries"] = entries;
    man["artifacts"] = art.list();
    man["threads"] = nt;
    man["wall_time_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    validate(man, "sweep_manifest");
    write_atomic(root / "sweep_manifest.json", man.dump(2) + "\n");
    return worst;
}

} // namespace fraclap::cli
