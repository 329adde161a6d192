#include "lab/encoder.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace lab {

using nlohmann::json;

EncoderParams init_encoder(const EncoderConfig& cfg, Rng& rng) {
    EncoderParams p;
    p.cfg = cfg;
    const int dims[4] = {cfg.input_dim(), cfg.hidden, cfg.hidden, cfg.embed_dim};
    for (int l = 0; l < 3; ++l) {
        EncoderParams::Layer layer;
        layer.w = Mat(dims[l], dims[l + 1]);
        layer.b.assign(dims[l + 1], 0.0);
        layer.relu = l < 2;
        const double scale = 1.0 / std::sqrt(static_cast<double>(dims[l]));
        for (double& v : layer.w.v) v = scale * rng.normal();
        p.layers.push_back(std::move(layer));
    }
    return p;
}

namespace {

Mat images_to_matrix(const std::vector<Image>& batch, const EncoderConfig& cfg) {
    Mat x(static_cast<int>(batch.size()), cfg.input_dim());
    for (size_t i = 0; i < batch.size(); ++i) {
        const Image& img = batch[i];
        if (img.width != cfg.width || img.height != cfg.height ||
            img.channels != cfg.channels)
            throw std::invalid_argument("forward: image dims do not match encoder input");
        std::memcpy(x.row(static_cast<int>(i)), img.pixels.data(),
                    img.pixels.size() * sizeof(double));
    }
    return x;
}

} // namespace

Mat forward(const EncoderParams& params, const std::vector<Image>& batch,
            ForwardCache* cache) {
    if (batch.empty()) throw std::invalid_argument("forward: empty batch");
    Mat a = images_to_matrix(batch, params.cfg);

    ForwardCache local;
    ForwardCache& c = cache ? *cache : local;
    c = ForwardCache{};
    c.input = a;
    c.revision = params.revision;

    for (const auto& layer : params.layers) {
        Mat z = affine(a, layer.w, layer.b);
        c.pre.push_back(z);
        if (layer.relu)
            for (double& v : z.v)
                if (v < 0.0) v = 0.0;
        c.post.push_back(z);
        a = std::move(z);
    }

    // Row L2 normalization with a degenerate-row fallback to e1.
    Mat out = a;
    c.norms.assign(out.rows, 0.0);
    for (int r = 0; r < out.rows; ++r) {
        double* row = out.row(r);
        double n2 = 0.0;
        for (int j = 0; j < out.cols; ++j) n2 += row[j] * row[j];
        const double n = std::sqrt(n2);
        c.norms[r] = n;
        if (n < kNormFallbackEps) {
            for (int j = 0; j < out.cols; ++j) row[j] = 0.0;
            row[0] = 1.0;
        } else {
            for (int j = 0; j < out.cols; ++j) row[j] /= n;
        }
    }
    c.embeddings = out;
    return out;
}

Mat encode_images(const EncoderParams& params, const std::vector<Image>& batch,
                  ForwardCache* cache) {
    std::vector<Image> adapted;
    adapted.reserve(batch.size());
    for (const Image& img : batch)
        adapted.push_back(with_channels(
            resize_nearest(img, params.cfg.width, params.cfg.height),
            params.cfg.channels));
    return forward(params, adapted, cache);
}

ParamGrads zero_grads(const EncoderParams& params) {
    ParamGrads g;
    for (const auto& layer : params.layers) {
        g.w.emplace_back(layer.w.rows, layer.w.cols);
        g.b.emplace_back(layer.b.size(), 0.0);
    }
    return g;
}

void accumulate(ParamGrads& into, const ParamGrads& add) {
    for (size_t l = 0; l < into.w.size(); ++l) {
        for (size_t i = 0; i < into.w[l].v.size(); ++i) into.w[l].v[i] += add.w[l].v[i];
        for (size_t i = 0; i < into.b[l].size(); ++i) into.b[l][i] += add.b[l][i];
    }
}

ParamGrads backward(const EncoderParams& params, const ForwardCache& cache,
                    const Mat& grad_wrt_embeddings) {
    if (cache.revision != params.revision)
        throw std::invalid_argument("backward: stale forward cache");
    if (!grad_wrt_embeddings.same_shape(cache.embeddings))
        throw std::invalid_argument("backward: gradient shape mismatch");

    const int n_layers = static_cast<int>(params.layers.size());
    const Mat& f = cache.embeddings;

    // Through the normalization: dz = (g - (f.g) f) / ||z||
    Mat delta(f.rows, f.cols);
    for (int r = 0; r < f.rows; ++r) {
        const double n = cache.norms[r];
        const double* fr = f.row(r);
        const double* gr = grad_wrt_embeddings.row(r);
        double* dr = delta.row(r);
        if (n < kNormFallbackEps) {
            for (int j = 0; j < f.cols; ++j) dr[j] = 0.0;
            continue;
        }
        const double fg = dot(fr, gr, f.cols);
        for (int j = 0; j < f.cols; ++j) dr[j] = (gr[j] - fg * fr[j]) / n;
    }

    ParamGrads grads = zero_grads(params);
    for (int l = n_layers - 1; l >= 0; --l) {
        const auto& layer = params.layers[l];
        if (layer.relu) {
            const Mat& pre = cache.pre[l];
            for (size_t i = 0; i < delta.v.size(); ++i)
                if (pre.v[i] <= 0.0) delta.v[i] = 0.0;
        }
        const Mat& input = l == 0 ? cache.input : cache.post[l - 1];
        Mat& gw = grads.w[l];
        std::vector<double>& gb = grads.b[l];
        for (int r = 0; r < delta.rows; ++r) {
            const double* dr = delta.row(r);
            const double* xr = input.row(r);
            for (int j = 0; j < delta.cols; ++j) gb[j] += dr[j];
            for (int i = 0; i < input.cols; ++i) {
                const double xv = xr[i];
                if (xv == 0.0) continue;
                double* gwr = gw.row(i);
                for (int j = 0; j < delta.cols; ++j) gwr[j] += xv * dr[j];
            }
        }
        if (l > 0) {
            Mat next(delta.rows, layer.w.rows);
            for (int r = 0; r < delta.rows; ++r) {
                const double* dr = delta.row(r);
                double* nr = next.row(r);
                for (int i = 0; i < layer.w.rows; ++i)
                    nr[i] = dot(layer.w.row(i), dr, layer.w.cols);
            }
            delta = std::move(next);
        }
    }
    return grads;
}

MomentumBuffer zero_momentum(const EncoderParams& params) {
    MomentumBuffer m;
    for (const auto& layer : params.layers) {
        m.w.emplace_back(layer.w.rows, layer.w.cols);
        m.b.emplace_back(layer.b.size(), 0.0);
    }
    return m;
}

void sgd_step(EncoderParams& params, const ParamGrads& grads, double lr,
              double weight_decay, double momentum, MomentumBuffer& buffer) {
    if (grads.w.size() != params.layers.size())
        throw std::invalid_argument("sgd_step: gradient layer count mismatch");
    for (size_t l = 0; l < params.layers.size(); ++l) {
        auto& layer = params.layers[l];
        if (!grads.w[l].same_shape(layer.w) || grads.b[l].size() != layer.b.size())
            throw std::invalid_argument("sgd_step: gradient shape mismatch");
        for (size_t i = 0; i < layer.w.v.size(); ++i) {
            const double g = grads.w[l].v[i] + weight_decay * layer.w.v[i];
            buffer.w[l].v[i] = momentum * buffer.w[l].v[i] + g;
            layer.w.v[i] -= lr * buffer.w[l].v[i];
        }
        for (size_t i = 0; i < layer.b.size(); ++i) {
            // no weight decay on biases
            buffer.b[l][i] = momentum * buffer.b[l][i] + grads.b[l][i];
            layer.b[i] -= lr * buffer.b[l][i];
        }
    }
    params.revision++;
}

std::vector<double> region_embed(const EncoderParams& params, const Image& frame,
                                 const Box& box) {
    if (box.w * box.h < 4)
        throw std::invalid_argument("region_embed: box area below 4 px");
    const Image patch = crop(frame, box); // bounds-checked by crop
    const Mat emb = encode_images(params, {patch});
    return std::vector<double>(emb.row(0), emb.row(0) + emb.cols);
}

ActivationSource activation_source_from_string(const std::string& s) {
    if (s == "prenorm" || s == "prenorm_output") return ActivationSource::prenorm_output;
    if (s == "normalized" || s == "normalized_output")
        return ActivationSource::normalized_output;
    if (s == "hidden1") return ActivationSource::hidden1;
    if (s == "hidden2") return ActivationSource::hidden2;
    throw std::invalid_argument("unknown activation source: " + s);
}

std::string to_string(ActivationSource s) {
    switch (s) {
        case ActivationSource::prenorm_output: return "prenorm";
        case ActivationSource::normalized_output: return "normalized";
        case ActivationSource::hidden1: return "hidden1";
        case ActivationSource::hidden2: return "hidden2";
    }
    throw std::invalid_argument("bad activation source");
}

Mat activations(const EncoderParams& params, const std::vector<Image>& batch,
                ActivationSource source) {
    ForwardCache cache;
    encode_images(params, batch, &cache);
    switch (source) {
        case ActivationSource::prenorm_output: return cache.post.back();
        case ActivationSource::normalized_output: return cache.embeddings;
        case ActivationSource::hidden1: return cache.post[0];
        case ActivationSource::hidden2: return cache.post[1];
    }
    throw std::invalid_argument("bad activation source");
}

namespace {
constexpr char kCkptMagic[8] = {'L', 'A', 'B', 'C', 'K', 'P', 'T', '1'};
}

void save_checkpoint(const std::string& path, const EncoderParams& params,
                     uint64_t steps) {
    json header;
    header["config"] = {{"width", params.cfg.width},
                        {"height", params.cfg.height},
                        {"channels", params.cfg.channels},
                        {"hidden", params.cfg.hidden},
                        {"embed_dim", params.cfg.embed_dim}};
    header["steps"] = steps;
    json layers = json::array();
    for (const auto& layer : params.layers)
        layers.push_back({{"in", layer.w.rows}, {"out", layer.w.cols}, {"relu", layer.relu}});
    header["layers"] = layers;
    const std::string htext = header.dump();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
    out.write(kCkptMagic, 8);
    const uint64_t hlen = htext.size();
    out.write(reinterpret_cast<const char*>(&hlen), 8);
    out.write(htext.data(), static_cast<std::streamsize>(htext.size()));
    for (const auto& layer : params.layers) {
        out.write(reinterpret_cast<const char*>(layer.w.v.data()),
                  static_cast<std::streamsize>(layer.w.v.size() * sizeof(double)));
        out.write(reinterpret_cast<const char*>(layer.b.data()),
                  static_cast<std::streamsize>(layer.b.size() * sizeof(double)));
    }
    if (!out) throw std::runtime_error("checkpoint write failed: " + path);
}

EncoderParams load_checkpoint(const std::string& path, uint64_t* steps) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kCkptMagic, 8) != 0)
        throw std::runtime_error("not a checkpoint file: " + path);
    uint64_t hlen = 0;
    in.read(reinterpret_cast<char*>(&hlen), 8);
    std::string htext(hlen, '\0');
    in.read(htext.data(), static_cast<std::streamsize>(hlen));
    const json header = json::parse(htext);

    EncoderParams p;
    p.cfg.width = header["config"]["width"];
    p.cfg.height = header["config"]["height"];
    p.cfg.channels = header["config"]["channels"];
    p.cfg.hidden = header["config"]["hidden"];
    p.cfg.embed_dim = header["config"]["embed_dim"];
    if (steps) *steps = header["steps"];
    for (const auto& lj : header["layers"]) {
        EncoderParams::Layer layer;
        layer.w = Mat(lj["in"], lj["out"]);
        layer.b.assign(lj["out"].get<size_t>(), 0.0);
        layer.relu = lj["relu"];
        in.read(reinterpret_cast<char*>(layer.w.v.data()),
                static_cast<std::streamsize>(layer.w.v.size() * sizeof(double)));
        in.read(reinterpret_cast<char*>(layer.b.data()),
                static_cast<std::streamsize>(layer.b.size() * sizeof(double)));
        p.layers.push_back(std::move(layer));
    }
    if (!in) throw std::runtime_error("truncated checkpoint: " + path);
    return p;
}

} // namespace lab
