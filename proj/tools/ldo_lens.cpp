#include <chrono>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ldolens/commands.hpp"

namespace {

int fail(int code, const std::string& msg) {
    std::cerr << "ldo-lens: " << msg << "\n";
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    using namespace ldolens;

    CLI::App app{"Small-signal and transient analysis of a three-stage LDO regulator", "ldo-lens"};
    app.set_version_flag("--version", std::string(LDOLENS_VERSION));
    std::string command;
    std::string config_path;
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> points;
    app.add_option("command", command, "bode | poles | pm-sweep | transient | calibrate | compare")
        ->required()
        ->check(CLI::IsMember(command_names()));
    app.add_option("--config", config_path, "run configuration file")->required();
    app.add_option("--out", out_dir, "output directory (overrides output.dir)");
    app.add_option("--seed", seed, "calibration seed (overrides calibrate.seed)");
    app.add_option("--points", points, "sweep points (overrides sweep.n_points)")
        ->check(CLI::Range(2, 1000000));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    RunConfig cfg;
    try {
        cfg = load_config(config_path);
        if (out_dir) cfg.out_dir = *out_dir;
        if (seed) cfg.calibrate.options.seed = *seed;
        if (points) cfg.sweep.n_points = *points;
        validate(cfg);
    } catch (const IoError& e) {
        return fail(kExitConfig, e.what());
    } catch (const ConfigError& e) {
        return fail(kExitConfig, std::string("config error: ") + e.what());
    } catch (const ParameterError& e) {
        return fail(kExitConfig, std::string("invalid parameter ") + e.what());
    }

    const auto t0 = std::chrono::steady_clock::now();
    try {
        const CommandResult r = run_command(command, cfg);
        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const auto report = run_report(command, cfg, r, wall);
        std::string name = command + "_report.json";
        for (char& c : name) {
            if (c == '-') c = '_';
        }
        write_file(std::filesystem::path(cfg.out_dir) / name, report.dump(2) + "\n");
        std::cout << r.console;
        return r.exit_code;
    } catch (const ParameterError& e) {
        return fail(kExitConfig, std::string("invalid parameter ") + e.what());
    } catch (const StiffnessError& e) {
        return fail(kExitInternal, e.what());
    } catch (const IoError& e) {
        return fail(kExitInternal, std::string("I/O error: ") + e.what());
    } catch (const std::exception& e) {
        return fail(kExitInternal, std::string("internal error: ") + e.what());
    }
}
