// Command-line driver for the low-exposure CT restoration pipeline.
//
//   fluxct generate      --config c.cfg --out runs/a
//   fluxct train         --config c.cfg --out runs/a
//   fluxct eval          --config c.cfg --out runs/a [--weights w.nnwt]
//   fluxct transfer-study --config c.cfg --out runs/a
//   fluxct loss-study    --config c.cfg --out runs/a
//   fluxct closed-loop   --config c.cfg --out runs/a [--weights w.nnwt]
//
// --seed overrides [run] seed; --threads sets the worker count (default:
// all hardware threads).

#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "fluxct/core/parallel.hpp"
#include "fluxct/pipeline/config.hpp"
#include "fluxct/pipeline/experiments.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    unsigned threads = 0;  // 0 = available parallelism
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "experiment config file")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--out", args.out_dir, "output directory")->required();
    cmd->add_option("--seed", args.seed, "override the master seed from the config")
        ->each([&args](const std::string&) { args.seed_set = true; });
    cmd->add_option("--threads", args.threads,
                    "worker thread count (default: all hardware threads)");
}

fluxct::ExperimentConfig load_config(const CommonArgs& args) {
    fluxct::ExperimentConfig cfg = fluxct::ExperimentConfig::load(args.config_path);
    if (args.seed_set) cfg.seed = args.seed;
    fluxct::set_thread_count(args.threads);
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"flux-dependent CT simulation, reconstruction and learned restoration"};
    app.require_subcommand(1);

    CommonArgs generate_args, train_args, eval_args, transfer_args, loss_args, loop_args;
    std::string eval_weights, loop_weights;

    add_common(app.add_subcommand("generate",
                                  "simulate phantoms, scans and reconstructions"),
               generate_args);
    add_common(app.add_subcommand("train", "train the restoration network"), train_args);
    CLI::App* eval_cmd =
        app.add_subcommand("eval", "score the trained network on the test split");
    add_common(eval_cmd, eval_args);
    eval_cmd->add_option("--weights", eval_weights,
                         "checkpoint path (default: <out>/model.nnwt)");
    add_common(app.add_subcommand("transfer-study",
                                  "warm-start vs from-scratch across training set sizes"),
               transfer_args);
    add_common(app.add_subcommand("loss-study",
                                  "identical training under MSE vs SSIM objectives"),
               loss_args);
    CLI::App* loop_cmd = app.add_subcommand(
        "closed-loop", "re-scan denoised outputs and train against them");
    add_common(loop_cmd, loop_args);
    loop_cmd->add_option("--weights", loop_weights,
                         "checkpoint path (default: <out>/model.nnwt)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand("generate")) {
            fluxct::cmd_generate(load_config(generate_args), generate_args.out_dir);
        } else if (app.got_subcommand("train")) {
            fluxct::cmd_train(load_config(train_args), train_args.out_dir);
        } else if (app.got_subcommand("eval")) {
            fluxct::cmd_eval(load_config(eval_args), eval_args.out_dir, eval_weights);
        } else if (app.got_subcommand("transfer-study")) {
            fluxct::cmd_transfer_study(load_config(transfer_args), transfer_args.out_dir);
        } else if (app.got_subcommand("loss-study")) {
            fluxct::cmd_loss_study(load_config(loss_args), loss_args.out_dir);
        } else if (app.got_subcommand("closed-loop")) {
            fluxct::cmd_closed_loop(load_config(loop_args), loop_args.out_dir, loop_weights);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
