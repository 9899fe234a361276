#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "atmp/atmp.h"

namespace {

int fail(atmp_status st) {
    std::fprintf(stderr, "error: %s\n", atmp_last_error());
    return static_cast<int>(st);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"desk-scale lab for adversarial training under l1/l2/linf perturbations"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_root;
    std::string name;
    std::string seed;
    bool quiet = false;
    app.add_option("-c,--config", config_path, "config file (flat key = value lines)");
    app.add_option("-s,--set", overrides, "override a config key, e.g. --set train.epochs=20")
        ->allow_extra_args(false);
    app.add_option("-o,--out", out_root, "output root (run.output_dir)");
    app.add_option("-n,--name", name, "run name (run.name)");
    app.add_option("--seed", seed, "master seed (run.seed)");
    app.add_flag("-q,--quiet", quiet, "suppress the summary printout");

    app.add_subcommand("train", "train a model with the configured strategy and mixture");
    app.add_subcommand("evaluate", "robust-evaluate stored parameters on fresh holdout data");
    app.add_subcommand("attack", "per-norm PGD attack statistics on holdout data");
    app.add_subcommand("landscape", "closed-form 2-d loss surface and kink-line detection");
    app.add_subcommand("stability", "replace-one stability probe against the theoretical bound");
    app.add_subcommand("smoothness", "surface smoothness constants and stepsize caps");
    app.add_subcommand("suite", "run the configured member configs, optionally in parallel");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    std::string command = app.get_subcommands().front()->get_name();

    atmp_config* cfg = nullptr;
    atmp_status st = config_path.empty() ? atmp_config_create(&cfg)
                                         : atmp_config_load(config_path.c_str(), &cfg);
    if (st != ATMP_OK) return fail(st);

    for (const std::string& kv : overrides) {
        std::size_t eq = kv.find('=');
        if (eq == std::string::npos || eq == 0) {
            std::fprintf(stderr, "error: --set expects key=value, got '%s'\n", kv.c_str());
            atmp_config_free(cfg);
            return 2;
        }
        std::string key = kv.substr(0, eq);
        std::string value = kv.substr(eq + 1);
        while (!key.empty() && key.back() == ' ') key.pop_back();
        while (!value.empty() && value.front() == ' ') value.erase(value.begin());
        st = atmp_config_set(cfg, key.c_str(), value.c_str());
        if (st != ATMP_OK) {
            atmp_config_free(cfg);
            return fail(st);
        }
    }
    if (!out_root.empty()) atmp_config_set(cfg, "run.output_dir", out_root.c_str());
    if (!name.empty()) atmp_config_set(cfg, "run.name", name.c_str());
    if (!seed.empty()) atmp_config_set(cfg, "run.seed", seed.c_str());

    atmp_run* run = nullptr;
    st = atmp_run_command(cfg, command.c_str(), &run);
    atmp_config_free(cfg);
    if (st != ATMP_OK) return fail(st);

    if (!quiet) {
        std::fputs(atmp_run_summary(run), stdout);
        std::printf("run_dir = %s\n", atmp_run_dir(run));
    }
    int code = atmp_run_exit_code(run);
    if (code != 0) std::fprintf(stderr, "error: run finished with exit code %d\n", code);
    atmp_run_free(run);
    return code;
}
