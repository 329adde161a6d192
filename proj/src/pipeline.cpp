#include "lab/pipeline.hpp"

#include <filesystem>
#include <iostream>
#include <map>
#include <stdexcept>

#include "lab/commands.hpp"
#include "lab/dataset_io.hpp"
#include "lab/digest.hpp"

namespace lab {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string stage_config_digest(const json& stage) {
    json key;
    key["kind"] = stage.at("kind");
    key["config"] = stage.value("config", json::object());
    key["seed"] = stage.value("seed", 0);
    key["outputs"] = stage.value("outputs", json::object());
    return sha256_bytes(key.dump());
}

void execute_stage(const json& stage) {
    const std::string kind = stage.at("kind");
    const json config = stage.value("config", json::object());
    const uint64_t seed = stage.value("seed", 0);
    const json inputs = stage.value("inputs", json::object());
    const json outputs = stage.value("outputs", json::object());

    auto in = [&](const std::string& label, bool required = true) -> std::string {
        if (!inputs.contains(label)) {
            if (required)
                throw std::runtime_error("stage input missing: " + label);
            return "";
        }
        return inputs.at(label).get<std::string>();
    };
    auto outp = [&](const std::string& label) -> std::string {
        if (!outputs.contains(label))
            throw std::runtime_error("stage output missing: " + label);
        const std::string path = outputs.at(label).get<std::string>();
        fs::create_directories(fs::path(path).parent_path().empty()
                                   ? "."
                                   : fs::path(path).parent_path().string());
        return path;
    };

    if (kind == "generate") {
        cmd::generate(config, seed, outp("data"));
    } else if (kind == "train") {
        cmd::train_cmd(config, seed, in("data"), in("tracks", false), outp("ckpt"),
                       outputs.contains("metrics") ? outp("metrics") : "");
    } else if (kind == "track") {
        cmd::track_cmd(config, seed, in("data"), in("ckpt"), outp("tracks"));
    } else if (kind == "ris") {
        std::vector<std::string> dirs;
        for (const auto& [label, path] : inputs.items())
            if (label.rfind("data", 0) == 0) dirs.push_back(path.get<std::string>());
        cmd::ris_cmd(config, in("ckpt"), dirs, outp("report"));
    } else if (kind == "probe") {
        cmd::probe_cmd(config, seed, in("ckpt"), in("train_data"), in("test_data"),
                       outp("result"));
    } else if (kind == "bias") {
        cmd::bias_cmd(config, seed, in("train_data"), in("eval_train"),
                      in("eval_test"), outp("result"));
    } else if (kind == "report") {
        std::vector<std::pair<std::string, std::string>> report_inputs;
        for (const auto& [label, path] : inputs.items())
            report_inputs.emplace_back(label, path.get<std::string>());
        cmd::report_cmd(report_inputs, outp("report"));
    } else {
        throw std::runtime_error("unknown stage kind: " + kind);
    }
}

} // namespace

PipelineResult run_pipeline(const std::string& manifest_path,
                            const std::string& state_path_in,
                            const std::string& report_path) {
    const json manifest = read_json_file(manifest_path);
    const std::string state_path =
        state_path_in.empty() ? manifest_path + ".state.json" : state_path_in;

    json state;
    if (fs::exists(state_path)) state = read_json_file(state_path);
    if (!state.contains("stages")) state["stages"] = json::object();

    // outputs produced (or validated) earlier in this run: path -> (stage, digest)
    std::map<std::string, std::pair<std::string, std::string>> produced;

    PipelineResult result;
    result.report["stages"] = json::array();

    for (const json& stage : manifest.value("stages", json::array())) {
        const std::string name = stage.at("name");
        const std::string cfg_digest = stage_config_digest(stage);
        const json inputs = stage.value("inputs", json::object());
        const json outputs = stage.value("outputs", json::object());

        // verify inputs against the digests their producers recorded
        json input_digests = json::object();
        for (const auto& [label, pathj] : inputs.items()) {
            const std::string path = pathj.get<std::string>();
            if (!fs::exists(path))
                throw std::runtime_error("pipeline: stage '" + name + "': input '" +
                                         label + "' does not exist: " + path);
            const std::string digest = sha256_path(path);
            const auto it = produced.find(path);
            if (it != produced.end() && it->second.second != digest)
                throw std::runtime_error("pipeline: stage '" + name + "': input '" +
                                         label + "' digest mismatch (produced by stage '" +
                                         it->second.first + "')");
            input_digests[label] = digest;
        }

        // skip when config, inputs and outputs all match the recorded state;
        // an output that exists but no longer matches what this stage
        // recorded was modified outside the pipeline, which is an abort,
        // not a silent rebuild
        bool skip = false;
        if (state["stages"].contains(name)) {
            const json& rec = state["stages"][name];
            if (rec.value("config_digest", "") == cfg_digest &&
                rec.value("inputs", json::object()) == input_digests) {
                skip = true;
                for (const auto& [label, pathj] : outputs.items()) {
                    const std::string path = pathj.get<std::string>();
                    const std::string recorded =
                        rec.value("outputs", json::object()).value(label, "");
                    if (!fs::exists(path)) {
                        skip = false; // deleted artifact: rebuild
                        break;
                    }
                    if (!recorded.empty() && recorded != sha256_path(path))
                        throw std::runtime_error(
                            "pipeline: stage '" + name + "': output '" + label +
                            "' digest mismatch (modified outside the pipeline)");
                }
            }
        }

        if (!skip) {
            execute_stage(stage);
            result.executed++;
        } else {
            result.skipped++;
        }

        json output_digests = json::object();
        for (const auto& [label, pathj] : outputs.items()) {
            const std::string path = pathj.get<std::string>();
            if (!fs::exists(path))
                throw std::runtime_error("pipeline: stage '" + name +
                                         "' did not produce output: " + path);
            const std::string digest = sha256_path(path);
            output_digests[label] = digest;
            produced[path] = {name, digest};
        }

        state["stages"][name] = {{"config_digest", cfg_digest},
                                 {"inputs", input_digests},
                                 {"outputs", output_digests}};
        write_json_file(state_path, state);
        result.report["stages"].push_back(
            {{"name", name}, {"status", skip ? "skipped" : "run"}});
    }

    result.report["ok"] = true;
    result.report["executed"] = result.executed;
    result.report["skipped"] = result.skipped;
    if (!report_path.empty()) write_json_file(report_path, result.report);
    return result;
}

} // namespace lab
