#pragma once

#include <cstdint>
#include <deque>
#include <string>
#include <vector>

#include "lab/encoder.hpp"
#include "lab/image.hpp"
#include "lab/matrix.hpp"
#include "lab/rng.hpp"
#include "lab/synthetic.hpp"
#include "lab/tracker_types.hpp"

namespace lab {

// FIFO buffer of key embeddings forming the contrastive denominator.
class NegativeQueue {
public:
    NegativeQueue(int dim, size_t capacity) : dim_(dim), capacity_(capacity) {}

    // Appends rows; evicts oldest rows until size <= capacity.
    void push(const Mat& keys);

    Mat as_matrix() const;
    size_t size() const { return rows_.size(); }
    size_t capacity() const { return capacity_; }
    int dim() const { return dim_; }

private:
    int dim_;
    size_t capacity_;
    std::deque<std::vector<double>> rows_;
};

struct AugParams {
    int out_width = 16;
    int out_height = 16;
    double crop_area_min = 0.2;
    double crop_area_max = 1.0;
    double flip_prob = 0.5;
    double brightness = 0.2;  // factor jitter range, 1 +/- brightness
    double contrast = 0.2;
    double grayscale_prob = 0.2; // 3-channel only; identity on 1-channel
    double blur_prob = 0.1;
};

enum class Regime { baseline, frame_temporal, region_tracker, gt_tracks };

Regime regime_from_string(const std::string& s);
std::string to_string(Regime r);

struct TrainConfig {
    double temperature = 0.07;
    double momentum = 0.999;      // key-encoder EMA coefficient
    double lr = 0.05;
    double weight_decay = 1e-4;
    double sgd_momentum = 0.9;
    int batch_size = 32;
    int steps = 240;
    size_t queue_capacity = 512;
    int frame_gap = 0;            // 0: derive as 2/3 of the video length
    Regime regime = Regime::baseline;
    AugParams aug;
    EncoderConfig encoder;
    uint64_t seed = 0;
};

struct FramePair {
    int video = 0;
    int frame_a = 0;
    int frame_b = 0;
};

struct PairSet {
    std::vector<FramePair> pairs;
    int skipped_videos = 0; // shorter than frame_gap + 1
};

struct StepLog {
    int step = 0;
    double loss = 0.0;
    size_t queue_size = 0;
    double lr = 0.0;
};

struct TrainResult {
    EncoderParams params;
    std::vector<StepLog> log;
    uint64_t steps = 0;
    int patch_fallbacks = 0; // frame pairs with no usable track
};

struct TrainData {
    std::vector<Image> frames;   // baseline regime
    std::vector<Video> videos;   // temporal regimes
    std::vector<Track> tracks;   // region_tracker regime
};

Image augment(const Image& image, const AugParams& params, Rng& rng);

// InfoNCE over (positive, queue negatives) similarity logits. Keys are
// constants; the returned gradient is with respect to q only.
struct LossResult {
    double loss = 0.0;
    Mat grad_q;
};

LossResult contrastive_loss(const Mat& q, const Mat& k_pos,
                            const NegativeQueue& queue, double temperature);

void momentum_update(EncoderParams& key_params, const EncoderParams& query_params,
                     double m);

PairSet sample_pairs(const std::vector<Video>& videos, int frame_gap);

TrainResult train(const TrainData& data, const TrainConfig& config);

void write_metrics_csv(const std::string& path, const std::vector<StepLog>& log);

} // namespace lab
