#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "kwlab/run.hpp"

int main(int argc, char** argv) {
    CLI::App app{"kwlab: two-solution laboratory for -lap(u) + alpha = K e^{2u}"};
    app.set_version_flag("--version", std::string("kwlab ") + kw::kToolVersion);
    app.require_subcommand(1);

    const char* commands[] = {"validate",  "solve-min", "sweep",      "alpha0",
                              "spectrum",  "manufacture", "solve-second"};
    const char* blurbs[] = {
        "report weight statistics and admissibility",
        "compute the locally minimizing solution",
        "solve across a list of alpha values",
        "bisect the solvability threshold in alpha",
        "principal eigenvalue of the linearized operator",
        "build a weight with a known exact solution",
        "compute both solutions (minimizer + crossing point)",
    };

    std::string config_path, output_dir;
    for (std::size_t i = 0; i < std::size(commands); ++i) {
        auto* sub = app.add_subcommand(commands[i], blurbs[i]);
        sub->add_option("config", config_path, "run configuration file")->required();
        sub->add_option("-o,--output", output_dir, "output directory (default: output.dir)");
    }

    CLI11_PARSE(app, argc, argv);

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        kw::Run run(command, config_path, output_dir);
        return run.execute();
    } catch (const kw::error& err) {
        std::cerr << "kwlab: " << err.what() << "\n";
        return kw::kExitError;
    } catch (const std::exception& err) {
        std::cerr << "kwlab: unexpected failure: " << err.what() << "\n";
        return kw::kExitError;
    }
}
