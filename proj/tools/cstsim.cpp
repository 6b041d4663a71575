// cstsim levels|spectrum|fit|cst --config <path> [--svg <path>] [--out <path>]

#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cstsim/cli/commands.hpp"

namespace {

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw cstsim::ConfigError("cannot write '" + path + "'");
    out << text;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spin-acoustic resonance and spin trapping simulator"};
    app.set_version_flag("--version", cstsim::cli::kVersion);
    app.require_subcommand(1);

    std::string config_path, svg_path, out_path;
    for (const char* name : {"levels", "spectrum", "fit", "cst"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "run configuration")->required()->check(CLI::ExistingFile);
        sub->add_option("--svg", svg_path, "write an SVG plot (spectrum only)");
        sub->add_option("--out", out_path, "output file (default stdout)");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : cstsim::cli::kConfigError;
    }
    const std::string command = app.get_subcommands().front()->get_name();

    try {
        if (!svg_path.empty() && command != "spectrum")
            throw cstsim::ConfigError("--svg is only available for the spectrum command");
        const auto cfg = cstsim::io::Config::load(config_path);
        const auto base = std::filesystem::path(config_path).parent_path();
        const auto result = cstsim::cli::run(command, cfg, base);
        if (out_path.empty()) {
            std::cout << result.text;
        } else {
            write_file(out_path, result.text);
            if (result.sidecar) write_file(out_path + ".json", *result.sidecar + "\n");
        }
        if (!svg_path.empty() && result.svg) write_file(svg_path, *result.svg);
        if (result.exit_code == cstsim::cli::kNoConvergence) std::cerr << "cstsim: fit did not converge\n";
        return result.exit_code;
    } catch (const std::exception& ex) {
        std::cerr << "cstsim: " << ex.what() << '\n';
        return cstsim::cli::exit_code_for(ex);
    }
}
