#pragma once

#include <string>

#include <nlohmann/json.hpp>

namespace lab {

// Executes a staged experiment manifest with content-addressed caching:
// a stage whose config, input digests and output digests all match the
// recorded state is skipped; an input that no longer matches the digest its
// producing stage recorded aborts the run, naming the stage.
//
// Manifest schema:
//   {"stages": [{"name": str, "kind": "generate|train|track|ris|probe|bias|report",
//                "seed": int, "config": {...},
//                "inputs": {label: path}, "outputs": {label: path}}]}
struct PipelineResult {
    nlohmann::json report; // {"stages": [{"name","status"}], "ok": bool}
    int executed = 0;
    int skipped = 0;
};

PipelineResult run_pipeline(const std::string& manifest_path,
                            const std::string& state_path = "",
                            const std::string& report_path = "");

} // namespace lab
