#include "ocelad/config.hpp"
#include "ocelad/error.hpp"
#include "ocelad/experiment.hpp"
#include "ocelad/io.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>

namespace {

using namespace ocelad;

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<int> trials;
    std::optional<std::string> out_dir;
};

// config < OCELAD_OUT_DIR < --out-dir
ExperimentConfig resolve(const std::string &path, const Overrides &o) {
    ExperimentConfig cfg = path.empty() ? default_config() : load_config(path);
    if (const char *env = std::getenv("OCELAD_OUT_DIR"); env && *env)
        cfg.output.out_dir = env;
    if (o.out_dir)
        cfg.output.out_dir = *o.out_dir;
    if (o.seed)
        cfg.seed = *o.seed;
    if (o.trials)
        cfg.trials = *o.trials;
    cfg.validate();
    return cfg;
}

void report(const ExperimentSummary &summary) {
    for (const auto &f : summary.files)
        std::cout << "wrote " << f.string() << '\n';
}

int checkpoint_test(const ExperimentConfig &cfg) {
    Trial straight(cfg, 0);
    straight.run_to_end();

    Trial first(cfg, 0);
    const std::int64_t half = first.total_steps() / 2;
    while (first.next_step() <= half)
        first.step();
    const auto path = cfg.output.out_dir / "checkpoint_test.json";
    save_checkpoint(path, first.checkpoint());
    Trial resumed = Trial::restore(cfg, 0, load_checkpoint(path));
    resumed.run_to_end();

    const bool same_state = resumed == straight;
    const bool same_estimate = resumed.combined_estimate() == straight.combined_estimate();
    std::cout << "checkpoint at t=" << half << ", resumed to t=" << straight.total_steps() << ": "
              << (same_state && same_estimate ? "identical" : "DIFFERENT") << '\n';
    return same_state && same_estimate ? 0 : 1;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Online nonstationary metric learning experiments"};
    app.require_subcommand(1);

    Overrides o;
    std::string config_path;
    std::string constraints_path;
    int replay_trial = 0;
    unsigned workers = 0;

    auto add_common = [&](CLI::App *sub) {
        sub->add_option("--seed", o.seed, "Master seed");
        sub->add_option("--trials", o.trials, "Number of trials")->check(CLI::PositiveNumber);
        sub->add_option("--out-dir", o.out_dir, "Output directory (overrides OCELAD_OUT_DIR)");
    };

    auto *run = app.add_subcommand("run", "Run all trials and write CSV artifacts");
    run->add_option("config", config_path, "JSON config file")->required()->check(CLI::ExistingFile);
    run->add_option("--workers", workers, "Worker threads (0 = hardware concurrency)");
    add_common(run);

    auto *replay = app.add_subcommand("replay", "Re-run one trial from a recorded constraint CSV");
    replay->add_option("config", config_path, "JSON config file")->required()->check(CLI::ExistingFile);
    replay->add_option("constraints", constraints_path, "Constraint CSV")->required()->check(CLI::ExistingFile);
    replay->add_option("--trial", replay_trial, "Trial index the constraints belong to");
    add_common(replay);

    auto *ckpt = app.add_subcommand("checkpoint-test",
                                    "Checkpoint trial 0 halfway, restore, and compare with an uninterrupted run");
    ckpt->add_option("config", config_path, "JSON config file (defaults when omitted)")->check(CLI::ExistingFile);
    add_common(ckpt);

    CLI11_PARSE(app, argc, argv);

    try {
        const ExperimentConfig cfg = resolve(config_path, o);
        if (run->parsed()) {
            report(run_experiment(cfg, workers));
            return 0;
        }
        if (replay->parsed()) {
            report(replay_experiment(cfg, ingest_constraints(constraints_path), replay_trial));
            return 0;
        }
        return checkpoint_test(cfg);
    } catch (const NumericalError &e) {
        std::cerr << "numerical failure in " << e.what() << '\n';
        return 3;
    } catch (const FormatError &e) {
        std::cerr << "input error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument &e) {
        std::cerr << "invalid configuration: " << e.what() << '\n';
        return 2;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
