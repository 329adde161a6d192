#pragma once

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lab/encoder.hpp"
#include "lab/matrix.hpp"
#include "lab/synthetic.hpp"

namespace lab {

struct FiringConfig {
    enum class Mode { class_adaptive, fixed_rate };
    Mode mode = Mode::class_adaptive;
    double rate = 0.01; // fixed_rate mode only
    std::vector<int> k_list = {10, 25};
};

// Activations plus the trajectory structure they were measured on.
struct RisDataset {
    Mat h;                                       // (N, units)
    std::vector<int> labels;                     // (N), values 0..C-1
    std::vector<std::vector<int>> trajectories;  // sample indices
    std::vector<int> trajectory_class;
};

// Per (unit, class) firing calibration.
//
// Threshold rule: with m = round(P(y) * N), t is the midpoint between the
// m-th and (m+1)-th largest values of s*h_i over the whole dataset; a unit
// fires when s*h_i(x) > t, strictly. The sign with the larger resulting
// invariance is kept (ties to +1). A (unit, class) pair is degenerate when
// m == 0, m == N, or nothing fires after tie collapse; its invariance is 0.
struct UnitClassCalibration {
    int sign = 1;
    double threshold = 0.0;
    double global_rate = 0.0; // achieved G_y(i)
    double local_rate = 0.0;  // L_y(i)
    double invariance = 0.0;  // I_y(i) = L/G, 0 when degenerate
    bool degenerate = false;
};

struct UnitCalibration {
    FiringConfig::Mode mode = FiringConfig::Mode::class_adaptive;
    int n_units = 0;
    int n_classes = 0;
    std::vector<double> class_prior;
    // class_adaptive: [unit][class]; fixed_rate: [unit][0]
    std::vector<std::vector<UnitClassCalibration>> units;
};

UnitCalibration calibrate(const RisDataset& ds, const FiringConfig& cfg);

// L_y(i) for the calibrated (sign, threshold): mean over class-y
// trajectories of the per-trajectory firing fraction.
double local_firing_rate(const UnitCalibration& calib, const RisDataset& ds,
                         int cls, int unit);

struct TopKResult {
    double percentage = 0.0;                  // [0, 100]
    std::vector<double> class_percentage;     // per class, [0, 1]
    std::vector<std::vector<int>> class_top_units;
    int degenerate_classes = 0;
};

TopKResult top_k_ris(const UnitCalibration& calib, int k);

struct RisResult {
    UnitCalibration calibration;
    std::map<int, TopKResult> by_k;
};

RisResult ris_for_dataset(const RisDataset& ds, const FiringConfig& cfg);

RisDataset build_ris_dataset(const std::vector<Trajectory>& trajectories,
                             const EncoderParams& params, ActivationSource source);

struct RISReport {
    nlohmann::json meta;
    // [transformation][activation source][K] = percentage
    std::map<std::string, std::map<std::string, std::map<int, double>>> scores;
    // [transformation] = per-class invariance table for the default source
    std::map<std::string, nlohmann::json> tables;
    std::vector<std::string> skipped;
};

// Runs the full pipeline per transformation, on both the pre-normalization
// output activations and the normalized embeddings.
RISReport evaluate_all(const EncoderParams& params,
                       const std::map<Transformation, std::vector<Trajectory>>& datasets,
                       const FiringConfig& cfg);

nlohmann::json ris_report_to_json(const RISReport& report);
RISReport ris_report_from_json(const nlohmann::json& j);

} // namespace lab
