#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cli/app.hpp"

using namespace fraclap::cli;

namespace {

json load_json(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw SchemaError("cannot open " + path);
    return json::parse(is);
}

int finish(const RunOutcome& o) {
    if (o.code != Ok) std::cerr << "fraclap: " << o.message << "\n";
    else std::cout << (o.dir / "manifest.json").string() << "\n";
    return o.code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Discrete fractional Laplacian toolkit"};
    app.require_subcommand(1);
    RunOptions opt;
    auto common = [&](CLI::App* sc) {
        sc->add_option("--out", opt.out, "Output directory");
        sc->add_option("--threads", opt.threads, "Worker threads for sweeps")->check(CLI::PositiveNumber);
        sc->add_option("--seed", opt.seed, "Seed recorded in the manifest");
    };

    std::string config_path;
    auto* run = app.add_subcommand("run", "Run one JSON experiment config");
    run->add_option("config", config_path, "Config file")->required();
    common(run);

    std::string sweep_path;
    auto* sweep = app.add_subcommand("sweep", "Run a parameter sweep");
    sweep->add_option("config", sweep_path, "Sweep file")->required();
    common(sweep);

    std::string schema_name;
    auto* sch = app.add_subcommand("schema", "Print a shipped JSON schema");
    sch->add_option("name", schema_name, "Schema name (config, sweep, manifest, params_<cmd>, output_<cmd>)")->required();

    std::map<std::string, std::pair<std::string, std::string>> direct;
    for (const auto& [name, fn] : command_table()) {
        auto* sc = app.add_subcommand(name, "Run the '" + name + "' command directly");
        auto& [inline_params, params_file] = direct[name];
        sc->add_option("--params", inline_params, "Parameters as a JSON object");
        sc->add_option("--params-file", params_file, "Parameters from a JSON file");
        common(sc);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : SchemaViolation;
    }
    opt.seed_given = false;
    for (auto* sc : app.get_subcommands())
        if (sc->get_option_no_throw("--seed") && sc->count("--seed")) opt.seed_given = true;

    try {
        if (run->parsed()) return finish(run_config(load_json(config_path), opt));
        if (sweep->parsed()) return run_sweep(load_json(sweep_path), opt);
        if (sch->parsed()) {
            std::cout << schema(schema_name).dump(2) << "\n";
            return Ok;
        }
        for (auto& [name, p] : direct) {
            if (!app.got_subcommand(name)) continue;
            json cfg;
            cfg["command"] = name;
            cfg["params"] = !p.second.empty() ? load_json(p.second) : (!p.first.empty() ? json::parse(p.first) : json::object());
            if (opt.seed_given) cfg["seed"] = opt.seed;
            return finish(run_config(cfg, opt));
        }
    } catch (...) {
        const auto o = classify(std::current_exception());
        std::cerr << "fraclap: " << o.message << "\n";
        return o.code;
    }
    return Ok;
}
