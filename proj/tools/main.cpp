#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "commands.hpp"
#include "run_config.hpp"
#include "vibench/errors.hpp"

namespace {

using vibench::cli::RunConfig;

/// Deferred key overrides: config file first, --set pairs in order, then the
/// named convenience flags.
struct Invocation {
    std::string config_file;
    std::vector<std::string> sets;
    std::vector<std::pair<std::string, std::string>> flags;
    bool dry_run = false;

    RunConfig build() const {
        RunConfig cfg;
        if (!config_file.empty()) cfg.load_file(config_file);
        for (const std::string& kv : sets) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos)
                throw vibench::ConfigError("BadConfig: --set expects key=value, got '" + kv + "'");
            cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
        }
        for (const auto& [key, value] : flags) cfg.set(key, value);
        return cfg;
    }
};

void add_common(CLI::App* cmd, Invocation& inv) {
    cmd->add_option("--config", inv.config_file, "key = value run configuration file");
    cmd->add_option("--set", inv.sets, "override one config key (key=value, repeatable)");
    auto key_flag = [cmd, &inv](const std::string& flag, const std::string& key,
                                const std::string& help) {
        cmd->add_option_function<std::string>(
            flag, [&inv, key](const std::string& v) { inv.flags.emplace_back(key, v); }, help);
    };
    key_flag("--out", "out", "output directory");
    key_flag("--seed", "seed", "master seed");
    key_flag("--data", "data", "dataset index JSON");
    key_flag("--workers", "workers", "worker threads (0 = VIBENCH_WORKERS env, else 1)");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"vibench: vibration anomaly-detection benchmark pipeline"};
    app.require_subcommand(1);

    struct Sub {
        const char* name;
        const char* help;
        void (*run)(const RunConfig&);
    };
    const std::vector<Sub> subs = {
        {"synth", "generate the synthetic benchmark suite", vibench::cli::cmd_synth},
        {"window", "tabulate sliding-window counts over the (tau, o) grid",
         vibench::cli::cmd_window},
        {"featurize", "extract one cell's feature matrix to CSV", vibench::cli::cmd_featurize},
        {"train", "train one detector and write its bundle", vibench::cli::cmd_train},
        {"score", "score a dataset with a trained bundle", vibench::cli::cmd_score},
        {"compare", "statistically compare two selections of a report",
         vibench::cli::cmd_compare},
        {"report", "aggregate a report into per-configuration max/mean columns",
         vibench::cli::cmd_report},
    };

    std::vector<Invocation> invocations(subs.size() + 1);
    std::vector<std::pair<CLI::App*, std::size_t>> dispatch;
    for (std::size_t i = 0; i < subs.size(); ++i) {
        CLI::App* cmd = app.add_subcommand(subs[i].name, subs[i].help);
        add_common(cmd, invocations[i]);
        if (subs[i].run == vibench::cli::cmd_train) {
            auto& inv = invocations[i];
            cmd->add_option_function<std::string>(
                "--model", [&inv](const std::string& v) { inv.flags.emplace_back("model", v); },
                "detector kind to train");
            cmd->add_option_function<std::string>(
                "--fold", [&inv](const std::string& v) { inv.flags.emplace_back("fold", v); },
                "train on this fold's training split (0 = all normals)");
        }
        if (subs[i].run == vibench::cli::cmd_score) {
            auto& inv = invocations[i];
            cmd->add_option_function<std::string>(
                "--model-file",
                [&inv](const std::string& v) { inv.flags.emplace_back("model_file", v); },
                "trained model bundle");
        }
        if (subs[i].run == vibench::cli::cmd_compare ||
            subs[i].run == vibench::cli::cmd_report) {
            auto& inv = invocations[i];
            cmd->add_option_function<std::string>(
                "--report", [&inv](const std::string& v) { inv.flags.emplace_back("report", v); },
                "report.csv produced by eval");
            if (subs[i].run == vibench::cli::cmd_compare) {
                cmd->add_option_function<std::string>(
                    "--group-a",
                    [&inv](const std::string& v) { inv.flags.emplace_back("group_a", v); },
                    "first selection name");
                cmd->add_option_function<std::string>(
                    "--group-b",
                    [&inv](const std::string& v) { inv.flags.emplace_back("group_b", v); },
                    "second selection name");
                cmd->add_option_function<std::string>(
                    "--metric",
                    [&inv](const std::string& v) { inv.flags.emplace_back("metric", v); },
                    "auc or acc");
            }
        }
        dispatch.emplace_back(cmd, i);
    }

    // eval carries the extra --dry-run switch
    Invocation& eval_inv = invocations[subs.size()];
    CLI::App* eval_cmd =
        app.add_subcommand("eval", "run the full sweep and write report.csv + summary.json");
    add_common(eval_cmd, eval_inv);
    eval_cmd->add_flag("--dry-run", eval_inv.dry_run,
                       "validate the config and print the sweep cell count");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        for (const auto& [cmd, i] : dispatch)
            if (cmd->parsed()) {
                subs[i].run(invocations[i].build());
                return 0;
            }
        if (eval_cmd->parsed()) {
            vibench::cli::cmd_eval(eval_inv.build(), eval_inv.dry_run);
            return 0;
        }
    } catch (const vibench::ConfigError& e) {
        std::cerr << "vibench: " << e.what() << "\n";
        return 1;
    } catch (const vibench::DataError& e) {
        std::cerr << "vibench: " << e.what() << "\n";
        return 2;
    } catch (const vibench::NumericError& e) {
        std::cerr << "vibench: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "vibench: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
