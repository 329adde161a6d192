// `lab` — command line for the contrastive invariance laboratory.
// Subcommands: generate / train / track / ris / probe / bias / report / pipeline.

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "lab/commands.hpp"
#include "lab/dataset_io.hpp"
#include "lab/pipeline.hpp"

using nlohmann::json;

namespace {

json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    return lab::read_json_file(path);
}

uint64_t pick_seed(const CLI::Option* opt, uint64_t cli_seed, const json& config) {
    if (opt->count() > 0) return cli_seed;
    return config.value("seed", 0);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"contrastive invariance laboratory"};
    app.require_subcommand(1);

    std::string config_path, out, data_dir, ckpt, tracks_path, metrics_path;
    std::string train_dir, test_dir, eval_train, eval_test, state_path;
    std::vector<std::string> data_dirs;
    std::vector<std::string> report_inputs;
    uint64_t seed = 0;

    auto* gen = app.add_subcommand("generate", "generate a synthetic dataset");
    gen->add_option("--config", config_path, "config JSON")->required();
    auto* gen_seed = gen->add_option("--seed", seed, "seed override");
    gen->add_option("--out", out, "output dataset directory")->required();

    auto* tr = app.add_subcommand("train", "train an encoder");
    std::string regime = "baseline";
    tr->add_option("--regime", regime,
                   "baseline|frame-temporal|region-tracker|gt-tracks");
    tr->add_option("--config", config_path, "config JSON");
    tr->add_option("--data", data_dir, "dataset directory")->required();
    tr->add_option("--tracks", tracks_path, "tracks JSON (region-tracker)");
    auto* tr_seed = tr->add_option("--seed", seed, "seed override");
    tr->add_option("--out", out, "checkpoint path")->required();
    tr->add_option("--metrics", metrics_path, "metrics CSV path");

    auto* tk = app.add_subcommand("track", "build unsupervised region tracks");
    std::string threshold = "auto";
    tk->add_option("--config", config_path, "config JSON");
    tk->add_option("--data", data_dir, "videos dataset directory")->required();
    tk->add_option("--ckpt", ckpt, "baseline checkpoint")->required();
    tk->add_option("--threshold", threshold, "score threshold or 'auto'");
    auto* tk_seed = tk->add_option("--seed", seed, "seed override");
    tk->add_option("--out", out, "tracks JSON path")->required();

    auto* ris = app.add_subcommand("ris", "invariance scores for a checkpoint");
    std::string mode = "class-adaptive", k_csv = "10,25";
    ris->add_option("--config", config_path, "config JSON");
    ris->add_option("--ckpt", ckpt, "checkpoint")->required();
    ris->add_option("--data", data_dirs, "trajectory dataset directories")
        ->required()
        ->expected(-1);
    ris->add_option("--mode", mode, "class-adaptive|fixed-rate");
    ris->add_option("--k", k_csv, "comma-separated K list");
    ris->add_option("--out", out, "report JSON path")->required();

    auto* pr = app.add_subcommand("probe", "linear probe on frozen embeddings");
    pr->add_option("--config", config_path, "config JSON");
    pr->add_option("--ckpt", ckpt, "checkpoint")->required();
    pr->add_option("--train-data", train_dir, "probe train dataset")->required();
    pr->add_option("--test-data", test_dir, "probe test dataset")->required();
    auto* pr_seed = pr->add_option("--seed", seed, "seed");
    pr->add_option("--out", out, "result JSON path")->required();

    auto* bi = app.add_subcommand("bias", "scene-vs-box dataset bias experiment");
    bi->add_option("--config", config_path, "config JSON");
    bi->add_option("--train-data", train_dir, "bias training dataset dir")->required();
    bi->add_option("--eval-train", eval_train, "bias eval dir (probe train)")
        ->required();
    bi->add_option("--eval-test", eval_test, "bias eval dir (probe test)")->required();
    auto* bi_seed = bi->add_option("--seed", seed, "base seed");
    bi->add_option("--out", out, "result JSON path")->required();

    auto* rp = app.add_subcommand("report", "render Markdown tables from results");
    rp->add_option("--in", report_inputs, "label=path result inputs")
        ->required()
        ->expected(-1);
    rp->add_option("--out", out, "Markdown output path")->required();

    auto* pl = app.add_subcommand("pipeline", "run a staged experiment manifest");
    std::string manifest_path;
    pl->add_option("--manifest", manifest_path, "pipeline manifest JSON")->required();
    pl->add_option("--state", state_path, "state file (default <manifest>.state.json)");
    pl->add_option("--out", out, "report JSON path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            const json config = load_config(config_path);
            lab::cmd::generate(config, pick_seed(gen_seed, seed, config), out);
        } else if (tr->parsed()) {
            json config = load_config(config_path);
            config["regime"] = regime;
            lab::cmd::train_cmd(config, pick_seed(tr_seed, seed, config), data_dir,
                                tracks_path, out, metrics_path);
        } else if (tk->parsed()) {
            json config = load_config(config_path);
            if (threshold != "auto") config["threshold"] = std::stod(threshold);
            lab::cmd::track_cmd(config, pick_seed(tk_seed, seed, config), data_dir,
                                ckpt, out);
        } else if (ris->parsed()) {
            json config = load_config(config_path);
            config["mode"] = mode;
            std::vector<int> ks;
            size_t pos = 0;
            while (pos < k_csv.size()) {
                const size_t comma = k_csv.find(',', pos);
                ks.push_back(std::stoi(k_csv.substr(pos, comma - pos)));
                if (comma == std::string::npos) break;
                pos = comma + 1;
            }
            config["k"] = ks;
            lab::cmd::ris_cmd(config, ckpt, data_dirs, out);
        } else if (pr->parsed()) {
            const json config = load_config(config_path);
            lab::cmd::probe_cmd(config, pick_seed(pr_seed, seed, config), ckpt,
                                train_dir, test_dir, out);
        } else if (bi->parsed()) {
            const json config = load_config(config_path);
            lab::cmd::bias_cmd(config, pick_seed(bi_seed, seed, config), train_dir,
                               eval_train, eval_test, out);
        } else if (rp->parsed()) {
            std::vector<std::pair<std::string, std::string>> inputs;
            for (const std::string& spec : report_inputs) {
                const size_t eq = spec.find('=');
                if (eq == std::string::npos)
                    inputs.emplace_back(spec, spec);
                else
                    inputs.emplace_back(spec.substr(0, eq), spec.substr(eq + 1));
            }
            lab::cmd::report_cmd(inputs, out);
        } else if (pl->parsed()) {
            const lab::PipelineResult r =
                lab::run_pipeline(manifest_path, state_path, out);
            std::cout << r.report.dump(2) << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
