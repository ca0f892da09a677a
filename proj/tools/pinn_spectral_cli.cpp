// pinn-spectral <subcommand> --config <file.json> --out <dir>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "pinn_spectral/experiments.hpp"

namespace ps = pinn_spectral;

namespace {

enum ExitCode { kOk = 0, kNumerical = 1, kConfig = 2 };

void write_error(const std::filesystem::path& out, const std::string& kind, const std::string& message, int code) {
    std::error_code ec;
    std::filesystem::create_directories(out, ec);
    std::ofstream f(out / "error.json");
    if (!f) return;
    f << ps::Json{{"library_version", ps::kLibraryVersion}, {"error", kind}, {"message", message}, {"exit_code", code}}
             .dump(2)
      << "\n";
}

int run(const std::string& name, const std::string& config_path, const std::filesystem::path& out) {
    std::error_code ec;
    std::filesystem::remove(out / "error.json", ec);
    try {
        std::ifstream in(config_path);
        if (!in) throw ps::ConfigError("cannot open config file '" + config_path + "'");
        ps::Json config;
        try {
            config = ps::Json::parse(in);
        } catch (const nlohmann::json::parse_error& e) {
            throw ps::ConfigError(std::string("config is not valid JSON: ") + e.what());
        }
        const auto start = std::chrono::steady_clock::now();
        const ps::Json summary = ps::run_experiment(name, config, out);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::cout << summary.dump(2) << "\n";
        std::cerr << name << ": done in " << secs << " s, artifacts in " << out.string() << "\n";
        return kOk;
    } catch (const ps::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        write_error(out, "ConfigError", e.what(), kConfig);
        return kConfig;
    } catch (const ps::IllConditionedError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        write_error(out, "IllConditionedError", e.what(), kNumerical);
        return kNumerical;
    } catch (const ps::Error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        write_error(out, "NumericalError", e.what(), kNumerical);
        return kNumerical;
    } catch (const std::bad_alloc&) {
        std::cerr << "numerical failure: out of memory\n";
        write_error(out, "OutOfMemory", "out of memory", kNumerical);
        return kNumerical;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Infinite-width PINN predictions, neurally-informed equations and spectral diagnostics"};
    app.set_version_flag("--version", std::string(ps::kLibraryVersion));
    app.require_subcommand(1);
    std::string config_path;
    std::string out_dir;
    for (const auto& name : ps::experiment_names()) {
        auto* sub = app.add_subcommand(name, "run the " + name + " experiment");
        sub->add_option("--config", config_path, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out_dir, "output directory")->required();
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }
    return run(app.get_subcommands().front()->get_name(), config_path, out_dir);
}
