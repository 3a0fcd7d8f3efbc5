#include <cstdint>
#include <exception>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "bsvie/config.hpp"
#include "bsvie/error.hpp"
#include "bsvie/harness.hpp"
#include "bsvie/parallel.hpp"

namespace {

using Command = std::function<bsvie::CommandResult(const bsvie::ExperimentConfig&, const std::filesystem::path&)>;

const std::map<std::string, Command>& commands() {
    static const std::map<std::string, Command> table{
        {"resolvent", bsvie::cmd_resolvent},       {"solve", bsvie::cmd_solve},
        {"compare", bsvie::cmd_compare},           {"girsanov-check", bsvie::cmd_girsanov_check},
        {"z-surface", bsvie::cmd_z_surface},       {"norms", bsvie::cmd_norms},
    };
    return table;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Numerical lab for linear BSVIEs with time-delayed generators"};
    app.require_subcommand(1, 1);

    std::string config_path;
    std::string out_dir;
    unsigned workers = 1;
    std::optional<std::uint64_t> seed;

    for (const auto& [name, fn] : commands()) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "experiment config file")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out_dir, "output directory (defaults to output.dir of the config)");
        sub->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
        sub->add_option("--seed", seed, "override mc.seed");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    const std::string name = app.get_subcommands().front()->get_name();
    try {
        bsvie::set_worker_count(workers);
        auto config = bsvie::ExperimentConfig::load(config_path);
        if (seed) config.override_seed(*seed);
        const std::filesystem::path out = out_dir.empty() ? std::filesystem::path(config.output_dir()) : std::filesystem::path(out_dir);
        const bsvie::CommandResult result = commands().at(name)(config, out);
        for (const auto& line : result.summary) std::cout << line << '\n';
        std::cout << "wrote " << out.string() << '\n';
        return 0;
    } catch (const bsvie::Error& e) {
        std::cerr << name << ": " << e.what() << '\n';
        return bsvie::exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << name << ": " << e.what() << '\n';
        return 2;
    }
}
