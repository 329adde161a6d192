#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lab/image.hpp"
#include "lab/matrix.hpp"
#include "lab/rng.hpp"

namespace lab {

struct EncoderConfig {
    int width = 16;
    int height = 16;
    int channels = 3;
    int hidden = 64;
    int embed_dim = 32;

    int input_dim() const { return width * height * channels; }
    bool operator==(const EncoderConfig&) const = default;
};

// MLP [pixels -> H -> H -> D], rectifier on hidden layers, linear output,
// rows L2-normalized by forward(). Gradients are implemented analytically.
struct EncoderParams {
    struct Layer {
        Mat w;                 // (in, out)
        std::vector<double> b; // (out)
        bool relu = false;
    };
    EncoderConfig cfg;
    std::vector<Layer> layers;
    uint64_t revision = 0; // bumped on every parameter update
};

struct ParamGrads {
    std::vector<Mat> w;
    std::vector<std::vector<double>> b;
};

struct ForwardCache {
    Mat input;                        // (N, in_dim)
    std::vector<Mat> pre;             // per layer pre-activations
    std::vector<Mat> post;            // per layer post-activations
    std::vector<double> norms;        // pre-normalization row norms
    Mat embeddings;                   // normalized output rows
    uint64_t revision = 0;            // params revision at forward time
};

// Norm below which the embedding falls back to the first basis vector and
// the row passes no gradient.
constexpr double kNormFallbackEps = 1e-12;

EncoderParams init_encoder(const EncoderConfig& cfg, Rng& rng);

// Strict forward: image dims must equal the encoder input dims.
Mat forward(const EncoderParams& params, const std::vector<Image>& batch,
            ForwardCache* cache = nullptr);

// Resizes and channel-adapts before running forward; the everyday entry point.
Mat encode_images(const EncoderParams& params, const std::vector<Image>& batch,
                  ForwardCache* cache = nullptr);

ParamGrads backward(const EncoderParams& params, const ForwardCache& cache,
                    const Mat& grad_wrt_embeddings);

ParamGrads zero_grads(const EncoderParams& params);
void accumulate(ParamGrads& into, const ParamGrads& add);

struct MomentumBuffer {
    std::vector<Mat> w;
    std::vector<std::vector<double>> b;
};

MomentumBuffer zero_momentum(const EncoderParams& params);

void sgd_step(EncoderParams& params, const ParamGrads& grads, double lr,
              double weight_decay, double momentum, MomentumBuffer& buffer);

// Crop-resize-encode stand-in for ROI pooling.
std::vector<double> region_embed(const EncoderParams& params, const Image& frame,
                                 const Box& box);

// The raw activations RIS operates on.
enum class ActivationSource { prenorm_output, normalized_output, hidden1, hidden2 };

ActivationSource activation_source_from_string(const std::string& s);
std::string to_string(ActivationSource s);

// (N, n_units) matrix of the requested layer's activations.
Mat activations(const EncoderParams& params, const std::vector<Image>& batch,
                ActivationSource source);

void save_checkpoint(const std::string& path, const EncoderParams& params,
                     uint64_t steps);
EncoderParams load_checkpoint(const std::string& path, uint64_t* steps = nullptr);

} // namespace lab
