// Scenario runner: mmsim <run|spectrum|sector|converge|steady> --config <path> [--out dir] [--threads N]

#include "mmsim/commands.hpp"
#include "mmsim/config.hpp"
#include "mmsim/error.hpp"
#include "mmsim/parallel.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

int main(int argc, char** argv)
{
    CLI::App app{"Matched-microstructure two-scale diffusion simulator"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = ".";
    unsigned threads = 0;

    const std::vector<std::pair<std::string, std::string>> commands{
        {"run", "time integration; writes trajectory.csv and snapshots/"},
        {"spectrum", "spectral bound sigma; writes spectrum.txt"},
        {"sector", "resolvent norms on rays; writes sector.csv"},
        {"converge", "manufactured-solution convergence; writes convergence.csv"},
        {"steady", "steady state; writes steady.txt and snapshots/steady.txt"},
    };
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config_path, "scenario file")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out_dir, "output directory")->capture_default_str();
        sub->add_option("--threads", threads, "worker threads (default: $MMSIM_THREADS or 1)")
            ->check(CLI::Range(1u, 1024u));
    }
    CLI11_PARSE(app, argc, argv);

    if (threads == 0)
        if (const char* env = std::getenv("MMSIM_THREADS")) {
            char* end = nullptr;
            const long v = std::strtol(env, &end, 10);
            if (*env == '\0' || *end != '\0' || v < 1) {
                std::cerr << "error: MMSIM_THREADS must be a positive integer\n";
                return 1;
            }
            threads = static_cast<unsigned>(v);
        }
    mmsim::set_thread_count(threads == 0 ? 1 : threads);

    const std::string subcommand = app.get_subcommands().front()->get_name();
    try {
        const mmsim::Config config = mmsim::load_config(config_path);
        return mmsim::run_command(subcommand, config, out_dir, std::cout);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
