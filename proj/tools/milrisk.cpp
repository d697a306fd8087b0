// milrisk: synthetic corpus generation, preprocessing, training, scoring,
// evaluation and robustness sweeps for MIL risk models.

#include "milrisk/commands.hpp"
#include "milrisk/error.hpp"

#include <CLI11.hpp>

#include <functional>
#include <iostream>
#include <map>

int main(int argc, char** argv) {
    CLI::App app{"Multiple-instance risk scoring of long quasi-periodic signals"};
    app.require_subcommand(0, 1);
    app.fallthrough();

    std::string config_path;
    std::vector<std::string> overrides;
    bool list_keys = false;
    app.add_option("-c,--config", config_path, "run configuration (key = value lines)");
    app.add_option("-s,--set", overrides, "override one config key, key=value (repeatable)")
        ->expected(1)
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    app.add_flag("--list-keys", list_keys, "print every config key with its default and exit");

    const std::map<std::string, std::pair<std::string, std::function<void(const milrisk::RunConfig&)>>> commands = {
        {"synth", {"generate a synthetic corpus", milrisk::cmd_synth}},
        {"preprocess", {"clean signals and cache beat annotations", milrisk::cmd_preprocess}},
        {"train", {"train a model on the manifest cohort", milrisk::cmd_train}},
        {"score", {"score the manifest cohort with a model file", milrisk::cmd_score}},
        {"eval", {"evaluate over stratified splits and horizons", milrisk::cmd_eval}},
        {"sweep", {"run an instance-length, aggregator or positive-fraction sweep", milrisk::cmd_sweep}},
    };
    for (const auto& [name, cmd] : commands) {
        app.add_subcommand(name, cmd.first);
    }
    app.set_version_flag("--version", "milrisk 0.1.0");
    app.allow_extras(false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        milrisk::RunConfig cfg = config_path.empty() ? milrisk::RunConfig{} : milrisk::load_config(config_path);
        milrisk::apply_overrides(cfg, overrides);
        if (list_keys) {
            for (const auto& k : milrisk::config_keys()) {
                std::cout << k.name << " = " << k.default_value << "    # " << k.help << '\n';
            }
            return 0;
        }
        if (app.get_subcommands().empty()) {
            std::cerr << app.help();
            return 1;
        }
        for (const auto* sub : app.get_subcommands()) {
            commands.at(sub->get_name()).second(cfg);
        }
    } catch (const milrisk::Error& e) {
        std::cerr << "milrisk: " << e.what() << '\n';
        return milrisk::exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "milrisk: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
