#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lab/contrastive.hpp"
#include "lab/evalh.hpp"
#include "lab/ris.hpp"
#include "lab/tracker.hpp"

namespace lab::cmd {

// Config parsing with documented defaults; shared by CLI flags, config
// files and pipeline stages.
TrainConfig parse_train_config(const nlohmann::json& j);
TrackerConfig parse_tracker_config(const nlohmann::json& j);
FiringConfig parse_firing_config(const nlohmann::json& j);
ProbeConfig parse_probe_config(const nlohmann::json& j);

void generate(const nlohmann::json& config, uint64_t seed, const std::string& out_dir);

void train_cmd(const nlohmann::json& config, uint64_t seed,
               const std::string& data_dir, const std::string& tracks_path,
               const std::string& out_ckpt, const std::string& metrics_path);

void track_cmd(const nlohmann::json& config, uint64_t seed,
               const std::string& data_dir, const std::string& ckpt_path,
               const std::string& out_tracks);

void ris_cmd(const nlohmann::json& config, const std::string& ckpt_path,
             const std::vector<std::string>& data_dirs, const std::string& out_path);

void probe_cmd(const nlohmann::json& config, uint64_t seed,
               const std::string& ckpt_path, const std::string& train_dir,
               const std::string& test_dir, const std::string& out_path);

void bias_cmd(const nlohmann::json& config, uint64_t seed,
              const std::string& train_dir, const std::string& eval_train_dir,
              const std::string& eval_test_dir, const std::string& out_path);

// Renders Markdown tables from ris/probe/bias result files.
void report_cmd(const std::vector<std::pair<std::string, std::string>>& inputs,
                const std::string& out_path);

} // namespace lab::cmd
