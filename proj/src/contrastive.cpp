#include "lab/contrastive.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>

namespace lab {

Regime regime_from_string(const std::string& s) {
    if (s == "baseline") return Regime::baseline;
    if (s == "frame-temporal" || s == "frame_temporal") return Regime::frame_temporal;
    if (s == "region-tracker" || s == "region_tracker") return Regime::region_tracker;
    if (s == "gt-tracks" || s == "gt_tracks") return Regime::gt_tracks;
    throw std::invalid_argument("unknown regime: " + s);
}

std::string to_string(Regime r) {
    switch (r) {
        case Regime::baseline: return "baseline";
        case Regime::frame_temporal: return "frame_temporal";
        case Regime::region_tracker: return "region_tracker";
        case Regime::gt_tracks: return "gt_tracks";
    }
    throw std::invalid_argument("bad regime");
}

void NegativeQueue::push(const Mat& keys) {
    if (keys.cols != dim_)
        throw std::invalid_argument("queue push: embedding dim mismatch");
    for (int r = 0; r < keys.rows; ++r)
        rows_.emplace_back(keys.row(r), keys.row(r) + keys.cols);
    while (rows_.size() > capacity_) rows_.pop_front();
}

Mat NegativeQueue::as_matrix() const {
    Mat m(static_cast<int>(rows_.size()), dim_);
    for (size_t r = 0; r < rows_.size(); ++r)
        std::copy(rows_[r].begin(), rows_[r].end(), m.row(static_cast<int>(r)));
    return m;
}

Image augment(const Image& image, const AugParams& p, Rng& rng) {
    // Every stage consumes the generator unconditionally so the stream stays
    // aligned no matter which stages fire.
    const double area = rng.uniform(p.crop_area_min, p.crop_area_max);
    const double side = std::sqrt(area);
    const int cw = std::clamp(static_cast<int>(std::lround(image.width * side)), 1,
                              image.width);
    const int ch = std::clamp(static_cast<int>(std::lround(image.height * side)), 1,
                              image.height);
    const int x0 = static_cast<int>(rng.uniform_int(image.width - cw + 1));
    const int y0 = static_cast<int>(rng.uniform_int(image.height - ch + 1));
    Image out = resize_nearest(crop(image, Box{x0, y0, cw, ch, 0}), p.out_width,
                               p.out_height);

    if (rng.bernoulli(p.flip_prob)) out = flip_horizontal(out);

    const double bf = 1.0 + rng.uniform(-p.brightness, p.brightness);
    if (bf != 1.0)
        for (double& v : out.pixels) v = std::clamp(v * bf, 0.0, 1.0);

    const double cf = 1.0 + rng.uniform(-p.contrast, p.contrast);
    if (cf != 1.0) {
        double mean = 0.0;
        for (double v : out.pixels) mean += v;
        mean /= static_cast<double>(out.pixels.size());
        for (double& v : out.pixels) v = std::clamp(mean + (v - mean) * cf, 0.0, 1.0);
    }

    const bool to_gray = rng.bernoulli(p.grayscale_prob);
    if (to_gray && out.channels == 3) {
        for (int y = 0; y < out.height; ++y)
            for (int x = 0; x < out.width; ++x) {
                const double m =
                    (out.at(x, y, 0) + out.at(x, y, 1) + out.at(x, y, 2)) / 3.0;
                for (int c = 0; c < 3; ++c) out.at(x, y, c) = m;
            }
    }

    if (rng.bernoulli(p.blur_prob)) {
        Image blurred = out;
        for (int y = 0; y < out.height; ++y)
            for (int x = 0; x < out.width; ++x)
                for (int c = 0; c < out.channels; ++c) {
                    double sum = 0.0;
                    int n = 0;
                    for (int dy = -1; dy <= 1; ++dy)
                        for (int dx = -1; dx <= 1; ++dx) {
                            const int sx = x + dx, sy = y + dy;
                            if (sx < 0 || sy < 0 || sx >= out.width || sy >= out.height)
                                continue;
                            sum += out.at(sx, sy, c);
                            ++n;
                        }
                    blurred.at(x, y, c) = sum / n;
                }
        out = std::move(blurred);
    }
    return out;
}

LossResult contrastive_loss(const Mat& q, const Mat& k_pos,
                            const NegativeQueue& queue, double temperature) {
    if (queue.size() == 0) throw std::invalid_argument("contrastive_loss: empty queue");
    if (temperature <= 0.0) throw std::invalid_argument("contrastive_loss: temperature");
    if (q.rows != k_pos.rows || q.cols != k_pos.cols || q.cols != queue.dim())
        throw std::invalid_argument("contrastive_loss: shape mismatch");
    for (int r = 0; r < q.rows; ++r) {
        const double nq = std::sqrt(dot(q.row(r), q.row(r), q.cols));
        const double nk = std::sqrt(dot(k_pos.row(r), k_pos.row(r), k_pos.cols));
        if (std::abs(nq - 1.0) > 1e-5 || std::abs(nk - 1.0) > 1e-5)
            throw std::invalid_argument("contrastive_loss: rows must be unit-norm");
    }

    const Mat negs = queue.as_matrix();
    const int n_neg = negs.rows;
    LossResult res;
    res.grad_q = Mat(q.rows, q.cols);
    double total = 0.0;

    std::vector<double> logits(static_cast<size_t>(n_neg) + 1);
    for (int i = 0; i < q.rows; ++i) {
        const double* qi = q.row(i);
        logits[0] = dot(qi, k_pos.row(i), q.cols) / temperature;
        for (int j = 0; j < n_neg; ++j)
            logits[j + 1] = dot(qi, negs.row(j), q.cols) / temperature;
        const double m = *std::max_element(logits.begin(), logits.end());
        double sum = 0.0;
        for (double l : logits) sum += std::exp(l - m);
        const double log_denom = m + std::log(sum);
        total += log_denom - logits[0];

        double* gi = res.grad_q.row(i);
        const double inv = 1.0 / (q.rows * temperature);
        const double p_pos = std::exp(logits[0] - log_denom);
        for (int d = 0; d < q.cols; ++d) gi[d] = (p_pos - 1.0) * k_pos(i, d) * inv;
        for (int j = 0; j < n_neg; ++j) {
            const double pj = std::exp(logits[j + 1] - log_denom);
            const double* nr = negs.row(j);
            for (int d = 0; d < q.cols; ++d) gi[d] += pj * nr[d] * inv;
        }
    }
    res.loss = total / q.rows;
    return res;
}

void momentum_update(EncoderParams& key_params, const EncoderParams& query_params,
                     double m) {
    if (key_params.layers.size() != query_params.layers.size())
        throw std::invalid_argument("momentum_update: layer count mismatch");
    for (size_t l = 0; l < key_params.layers.size(); ++l) {
        auto& kl = key_params.layers[l];
        const auto& ql = query_params.layers[l];
        if (!kl.w.same_shape(ql.w) || kl.b.size() != ql.b.size())
            throw std::invalid_argument("momentum_update: shape mismatch");
        for (size_t i = 0; i < kl.w.v.size(); ++i)
            kl.w.v[i] = m * kl.w.v[i] + (1.0 - m) * ql.w.v[i];
        for (size_t i = 0; i < kl.b.size(); ++i)
            kl.b[i] = m * kl.b[i] + (1.0 - m) * ql.b[i];
    }
    key_params.revision++;
}

PairSet sample_pairs(const std::vector<Video>& videos, int frame_gap) {
    if (frame_gap < 1) throw std::invalid_argument("sample_pairs: frame_gap < 1");
    PairSet out;
    for (size_t v = 0; v < videos.size(); ++v) {
        const int n = static_cast<int>(videos[v].frames.size());
        if (n < frame_gap + 1) {
            out.skipped_videos++;
            continue;
        }
        for (int i = 0; i + frame_gap <= n - 1; i += frame_gap)
            out.pairs.push_back({static_cast<int>(v), i, i + frame_gap});
    }
    return out;
}

namespace {

void validate_config(const TrainConfig& c) {
    if (c.temperature <= 0.0) throw std::invalid_argument("train: temperature <= 0");
    if (c.momentum < 0.0 || c.momentum > 1.0)
        throw std::invalid_argument("train: momentum out of [0,1]");
    if (c.aug.crop_area_min <= 0.0 || c.aug.crop_area_max > 1.0 ||
        c.aug.crop_area_min > c.aug.crop_area_max)
        throw std::invalid_argument("train: crop range must be within (0,1]");
    if (c.batch_size < 1) throw std::invalid_argument("train: batch_size < 1");
    if (c.queue_capacity < 1) throw std::invalid_argument("train: queue capacity < 1");
}

struct TrackIndex {
    // (video, start frame, end frame) -> tracks usable as a patch positive
    std::map<std::tuple<int, int, int>, std::vector<const Track*>> by_span;

    void add(const Track& t) {
        if (t.entries.empty()) return;
        by_span[{t.video, t.entries.front().first, t.entries.back().first}].push_back(&t);
    }
};

const Box& region_box(const Video& v, int frame, int region_id) {
    for (const Box& b : v.regions[frame])
        if (b.id == region_id) return b;
    throw std::runtime_error("train: track references unknown region");
}

} // namespace

TrainResult train(const TrainData& data, const TrainConfig& config) {
    validate_config(config);
    const bool temporal = config.regime != Regime::baseline;
    const bool uses_tracks =
        config.regime == Regime::region_tracker || config.regime == Regime::gt_tracks;

    if (temporal && data.videos.empty())
        throw std::invalid_argument("train: regime requires videos");
    if (config.regime == Regime::region_tracker && data.tracks.empty())
        throw std::invalid_argument("train: region_tracker regime requires tracks");
    if (config.regime == Regime::gt_tracks)
        for (const Video& v : data.videos)
            if (v.gt_tracks.empty())
                throw std::invalid_argument("train: gt_tracks regime requires gt tracks");

    // frame pool: used directly by the baseline regime and for queue warm-up
    std::vector<const Image*> pool;
    for (const Image& img : data.frames) pool.push_back(&img);
    if (pool.empty())
        for (const Video& v : data.videos)
            for (const Image& img : v.frames) pool.push_back(&img);
    if (pool.empty()) throw std::invalid_argument("train: no training images");

    int frame_gap = config.frame_gap;
    if (temporal && frame_gap <= 0) {
        size_t min_len = data.videos.front().frames.size();
        for (const Video& v : data.videos) min_len = std::min(min_len, v.frames.size());
        frame_gap = std::max<int>(1, static_cast<int>(2 * min_len / 3));
    }

    PairSet pair_set;
    if (temporal) {
        pair_set = sample_pairs(data.videos, frame_gap);
        if (pair_set.pairs.empty())
            throw std::invalid_argument("train: no frame pairs at this frame gap");
    }

    TrackIndex track_index;
    if (config.regime == Regime::region_tracker)
        for (const Track& t : data.tracks) track_index.add(t);

    const Rng root(config.seed);
    Rng init_rng = root.fork(1);
    Rng batch_rng = root.fork(2);
    Rng aug_rng = root.fork(3);
    Rng prefill_rng = root.fork(4);

    EncoderParams params_q = init_encoder(config.encoder, init_rng);
    EncoderParams params_k = params_q;
    MomentumBuffer momentum_buf = zero_momentum(params_q);
    NegativeQueue queue(config.encoder.embed_dim, config.queue_capacity);

    // Warm-up: fill the queue with key embeddings of randomly drawn dataset
    // images so the denominator is well-defined from the first step.
    {
        const size_t chunk = std::min<size_t>(config.queue_capacity,
                                              static_cast<size_t>(config.batch_size));
        size_t remaining = config.queue_capacity;
        while (remaining > 0) {
            const size_t n = std::min(chunk, remaining);
            std::vector<Image> imgs;
            for (size_t i = 0; i < n; ++i)
                imgs.push_back(*pool[prefill_rng.uniform_int(pool.size())]);
            queue.push(encode_images(params_k, imgs));
            remaining -= n;
        }
    }

    TrainResult result;
    for (int step = 1; step <= config.steps; ++step) {
        std::vector<Image> xq, xk;
        std::vector<FramePair> batch_pairs;
        for (int b = 0; b < config.batch_size; ++b) {
            if (!temporal) {
                const Image& img = *pool[batch_rng.uniform_int(pool.size())];
                xq.push_back(augment(img, config.aug, aug_rng));
                xk.push_back(augment(img, config.aug, aug_rng));
            } else {
                FramePair pr = pair_set.pairs[batch_rng.uniform_int(pair_set.pairs.size())];
                if (batch_rng.bernoulli(0.5)) std::swap(pr.frame_a, pr.frame_b);
                batch_pairs.push_back(pr);
                const Video& v = data.videos[pr.video];
                xq.push_back(augment(v.frames[pr.frame_a], config.aug, aug_rng));
                xk.push_back(augment(v.frames[pr.frame_b], config.aug, aug_rng));
            }
        }

        ForwardCache cache;
        const Mat q = encode_images(params_q, xq, &cache);
        const Mat k = encode_images(params_k, xk); // keys carry no gradient
        LossResult frame_loss = contrastive_loss(q, k, queue, config.temperature);

        double step_loss = frame_loss.loss;
        ParamGrads grads;
        bool have_patches = false;
        Mat k_patch;

        if (uses_tracks) {
            std::vector<Image> pq, pk;
            for (const FramePair& pr : batch_pairs) {
                const Video& v = data.videos[pr.video];
                const int a = std::min(pr.frame_a, pr.frame_b);
                const int b = std::max(pr.frame_a, pr.frame_b);
                Box box_a, box_b;
                bool found = false;
                if (config.regime == Regime::gt_tracks) {
                    if (!v.gt_tracks.empty()) {
                        const auto& tr =
                            v.gt_tracks[batch_rng.uniform_int(v.gt_tracks.size())];
                        for (const auto& e : tr) {
                            if (e.first == a) { box_a = region_box(v, a, e.second); found = true; }
                        }
                        bool found_b = false;
                        for (const auto& e : tr)
                            if (e.first == b) { box_b = region_box(v, b, e.second); found_b = true; }
                        found = found && found_b;
                    }
                } else {
                    auto it = track_index.by_span.find({pr.video, a, b});
                    if (it != track_index.by_span.end() && !it->second.empty()) {
                        const Track* t =
                            it->second[batch_rng.uniform_int(it->second.size())];
                        box_a = region_box(v, t->entries.front().first,
                                           t->entries.front().second);
                        box_b = region_box(v, t->entries.back().first,
                                           t->entries.back().second);
                        found = true;
                    }
                }
                if (!found) {
                    result.patch_fallbacks++;
                    continue;
                }
                // keep (query, key) aligned with the possibly swapped frame order
                const Box& qbox = pr.frame_a <= pr.frame_b ? box_a : box_b;
                const Box& kbox = pr.frame_a <= pr.frame_b ? box_b : box_a;
                pq.push_back(augment(crop(v.frames[pr.frame_a], qbox), config.aug, aug_rng));
                pk.push_back(augment(crop(v.frames[pr.frame_b], kbox), config.aug, aug_rng));
            }
            if (!pq.empty()) {
                ForwardCache patch_cache;
                const Mat qp = encode_images(params_q, pq, &patch_cache);
                k_patch = encode_images(params_k, pk);
                LossResult patch_loss =
                    contrastive_loss(qp, k_patch, queue, config.temperature);
                step_loss = 0.5 * frame_loss.loss + 0.5 * patch_loss.loss;
                for (double& g : frame_loss.grad_q.v) g *= 0.5;
                for (double& g : patch_loss.grad_q.v) g *= 0.5;
                grads = backward(params_q, cache, frame_loss.grad_q);
                accumulate(grads, backward(params_q, patch_cache, patch_loss.grad_q));
                have_patches = true;
            }
        }
        if (!have_patches) grads = backward(params_q, cache, frame_loss.grad_q);

        sgd_step(params_q, grads, config.lr, config.weight_decay, config.sgd_momentum,
                 momentum_buf);
        momentum_update(params_k, params_q, config.momentum);
        queue.push(k);
        if (have_patches) queue.push(k_patch);

        result.log.push_back({step, step_loss, queue.size(), config.lr});
    }

    result.params = std::move(params_q);
    result.steps = static_cast<uint64_t>(config.steps);
    return result;
}

void write_metrics_csv(const std::string& path, const std::vector<StepLog>& log) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write metrics: " + path);
    out << "step,loss,queue_size,lr\n";
    char buf[128];
    for (const StepLog& s : log) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%zu,%.17g\n", s.step, s.loss,
                      s.queue_size, s.lr);
        out << buf;
    }
}

} // namespace lab
