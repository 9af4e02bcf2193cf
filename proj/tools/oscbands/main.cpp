// oscbands: config-driven runner for cluster spectra, band invariants and recoveries.
#include "runner.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

int main(int argc, char** argv)
{
    using namespace oscbands::cli;
    CLI::App app{"Band spectra of perturbed harmonic oscillators: spectra, invariants, recoveries"};
    app.set_version_flag("--version", std::string(version()));
    app.require_subcommand(1);

    std::string config, out_dir = ".";
    auto* run = app.add_subcommand("run", "Run a config (or a batch of runs) and write a JSON report");
    run->add_option("config", config, "Config file (JSON)")->required();
    run->add_option("--out", out_dir, "Directory for the report and CSV tables");

    std::string vconfig;
    auto* val = app.add_subcommand("validate", "Check a config against the schema without computing");
    val->add_option("config", vconfig, "Config file (JSON)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kConfigError;
    }

    if (*val) return validate_file(vconfig, std::cout, std::cerr);

    int threads = 1;
    if (const char* env = std::getenv("OSCBANDS_THREADS")) {
        char* end = nullptr;
        const long t = std::strtol(env, &end, 10);
        if (end == env || *end != '\0' || t < 1 || t > 256) {
            std::cerr << "error: OSCBANDS_THREADS must be an integer in [1, 256]\n";
            return kConfigError;
        }
        threads = static_cast<int>(t);
    }
    return run_file(config, out_dir, threads, std::cout, std::cerr);
}
