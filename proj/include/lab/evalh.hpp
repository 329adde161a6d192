#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lab/contrastive.hpp"
#include "lab/encoder.hpp"
#include "lab/matrix.hpp"

namespace lab {

struct ProbeConfig {
    int steps = 500;
    double lr = 0.1;
};

struct ProbeResult {
    std::string task;
    std::string metric = "top1";
    double value = 0.0;
    int train_size = 0;
    int test_size = 0;
    uint64_t seed = 0;
    std::string checkpoint_id;
};

// Linear softmax classifier on frozen embeddings, full-batch gradient
// descent to a fixed step budget. Deterministic: zero init, fixed schedule.
ProbeResult linear_probe(const Mat& train_x, const std::vector<int>& train_y,
                         const Mat& test_x, const std::vector<int>& test_y,
                         const ProbeConfig& cfg, uint64_t seed);

// Per-item decision scores for every class, for ranking-style metrics.
Mat probe_scores(const Mat& train_x, const std::vector<int>& train_y,
                 const Mat& eval_x, const ProbeConfig& cfg);

// AP with continuous precision summation (no interpolation). Ties are
// resolved by a stable sort on descending score, original order preserved.
double average_precision(const std::vector<double>& scores,
                         const std::vector<int>& positive);

// Mean over classes of one-vs-all AP of scores(:, c). Every class must have
// at least one positive.
double mean_ap(const Mat& scores, const std::vector<int>& labels);

struct LabeledSet {
    std::vector<Image> images;
    std::vector<int> labels;
};

struct BiasEvalSets {
    LabeledSet scene_train, scene_test;
    LabeledSet box_train, box_test;
};

struct BiasArm {
    std::string name;
    std::vector<ProbeResult> box_eval;   // one per seed
    std::vector<ProbeResult> scene_eval;
};

struct BiasTable {
    BiasArm scene_trained;
    BiasArm box_trained;
    int seeds = 0;
    int box_wins_on_boxes = 0;
    double margin_on_boxes = 0.0;   // mean(box-trained - scene-trained)
    double margin_on_scenes = 0.0;
    bool reversed_or_narrowed = false;
};

// Trains one baseline encoder per training set per seed and probes both on
// scene-level and cropped-box classification.
BiasTable bias_experiment(const std::vector<Image>& scene_training_images,
                          const std::vector<Image>& box_training_images,
                          const BiasEvalSets& eval_sets,
                          const TrainConfig& scene_arm_config,
                          const TrainConfig& box_arm_config,
                          const ProbeConfig& probe_cfg,
                          const std::vector<uint64_t>& seeds);

nlohmann::json bias_table_to_json(const BiasTable& t);
nlohmann::json probe_result_to_json(const ProbeResult& r);

} // namespace lab
