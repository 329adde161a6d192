#include "lab/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace lab {

std::vector<int> match_regions(const Mat& feats_t, const Mat& feats_t1) {
    if (feats_t.rows == 0 || feats_t1.rows == 0)
        throw std::invalid_argument("match_regions: empty region set");
    if (feats_t.cols != feats_t1.cols)
        throw std::invalid_argument("match_regions: feature dim mismatch");
    std::vector<int> out(feats_t.rows);
    for (int r = 0; r < feats_t.rows; ++r) {
        int best = 0;
        double best_sim = dot(feats_t.row(r), feats_t1.row(0), feats_t.cols);
        for (int s = 1; s < feats_t1.rows; ++s) {
            const double sim = dot(feats_t.row(r), feats_t1.row(s), feats_t.cols);
            if (sim > best_sim) {
                best_sim = sim;
                best = s;
            }
        }
        out[r] = best;
    }
    return out;
}

Mat match_matrix(const Mat& feats_t, const Mat& feats_t1) {
    Mat m(feats_t.rows, feats_t1.rows);
    for (int r = 0; r < feats_t.rows; ++r)
        for (int s = 0; s < feats_t1.rows; ++s)
            m(r, s) = std::max(0.0, dot(feats_t.row(r), feats_t1.row(s), feats_t.cols));
    return m;
}

namespace {

// DP over intermediate frames. Optionally records argmax backpointers for
// greedy path reconstruction.
std::vector<double> score_dp(const std::vector<Mat>& mm, int i, int r, int j,
                             std::vector<std::vector<int>>* backptrs) {
    if (i >= j) throw std::invalid_argument("track_score: need i < j");
    if (j > static_cast<int>(mm.size()))
        throw std::invalid_argument("track_score: not enough match matrices");
    if (r < 0 || r >= mm[i].rows)
        throw std::invalid_argument("track_score: bad start region");

    std::vector<double> cur(mm[i].cols);
    for (int k = 0; k < mm[i].cols; ++k) cur[k] = mm[i](r, k);

    for (int t = i + 2; t <= j; ++t) {
        const Mat& c = mm[t - 1];
        const double w = static_cast<double>(t - i - 1) / (t - i);
        std::vector<double> next(c.cols, 0.0);
        std::vector<int> bp(c.cols, 0);
        for (int r2 = 0; r2 < c.cols; ++r2) {
            double sum = 0.0;
            double best = -1.0;
            int best_k = 0;
            for (int k = 0; k < c.rows; ++k) {
                const double term = cur[k] * c(k, r2);
                sum += term;
                if (term > best) {
                    best = term;
                    best_k = k;
                }
            }
            next[r2] = w * sum;
            bp[r2] = best_k;
        }
        if (backptrs) backptrs->push_back(std::move(bp));
        cur = std::move(next);
    }
    return cur;
}

} // namespace

double track_score(const std::vector<Mat>& match_matrices, int i, int r, int j,
                   int r2) {
    const std::vector<double> scores = score_dp(match_matrices, i, r, j, nullptr);
    if (r2 < 0 || r2 >= static_cast<int>(scores.size()))
        throw std::invalid_argument("track_score: bad end region");
    return scores[r2];
}

namespace {

struct FrameFeatures {
    std::vector<int> region_ids; // selected subset, ascending
    Mat feats;
};

FrameFeatures embed_frame_regions(const Video& video, int frame,
                                  const EncoderParams& encoder, int top_r,
                                  Rng& rng) {
    FrameFeatures out;
    const std::vector<Box>& regions = video.regions[frame];
    std::vector<int> idx(regions.size());
    std::iota(idx.begin(), idx.end(), 0);
    if (static_cast<int>(idx.size()) > top_r) {
        // synthetic proposals carry no ranking; keep a seeded random subsample
        for (int i = static_cast<int>(idx.size()) - 1; i > 0; --i) {
            const int j = static_cast<int>(rng.uniform_int(i + 1));
            std::swap(idx[i], idx[j]);
        }
        idx.resize(top_r);
        std::sort(idx.begin(), idx.end());
    }
    out.feats = Mat(static_cast<int>(idx.size()), encoder.cfg.embed_dim);
    for (size_t n = 0; n < idx.size(); ++n) {
        const Box& b = regions[idx[n]];
        const std::vector<double> e = region_embed(encoder, video.frames[frame], b);
        std::copy(e.begin(), e.end(), out.feats.row(static_cast<int>(n)));
        out.region_ids.push_back(b.id);
    }
    return out;
}

} // namespace

BuildTracksResult build_tracks(const Video& video, const EncoderParams& encoder,
                               const TrackerConfig& cfg) {
    if (cfg.stride < 1 || cfg.horizon < 1 || cfg.horizon % cfg.stride != 0)
        throw std::invalid_argument("build_tracks: horizon must be a multiple of stride");
    BuildTracksResult result;
    const int n_frames = static_cast<int>(video.frames.size());
    Rng rng = Rng(cfg.seed).fork(static_cast<uint64_t>(video.id) + 17);

    // features for the frames actually touched (start + every stride step)
    std::vector<FrameFeatures> feats(n_frames);
    std::vector<bool> have(n_frames, false);
    auto features_at = [&](int f) -> const FrameFeatures& {
        if (!have[f]) {
            feats[f] = embed_frame_regions(video, f, encoder, cfg.top_r, rng);
            have[f] = true;
        }
        return feats[f];
    };

    for (int start = 0; start + cfg.horizon <= n_frames - 1; start += cfg.horizon) {
        const int n_steps = cfg.horizon / cfg.stride;

        bool missing = false;
        for (int s = 0; s <= n_steps; ++s) {
            if (features_at(start + s * cfg.stride).region_ids.empty()) {
                missing = true;
                result.frames_without_regions++;
            }
        }
        if (missing) continue;

        // match matrices over the strided frame chain, indexed 0..n_steps-1
        std::vector<Mat> mm;
        for (int s = 0; s < n_steps; ++s)
            mm.push_back(match_matrix(features_at(start + s * cfg.stride).feats,
                                      features_at(start + (s + 1) * cfg.stride).feats));

        const FrameFeatures& first = features_at(start);
        for (int r = 0; r < static_cast<int>(first.region_ids.size()); ++r) {
            std::vector<std::vector<int>> backptrs;
            std::vector<double> scores = score_dp(mm, 0, r, n_steps, &backptrs);
            for (int r2 = 0; r2 < static_cast<int>(scores.size()); ++r2) {
                if (scores[r2] < cfg.threshold) continue;
                Track t;
                t.video = video.id;
                t.score = scores[r2];
                // greedy intermediate path via argmax backpointers
                std::vector<int> path(n_steps + 1);
                path[n_steps] = r2;
                for (int s = n_steps - 1; s >= 1; --s)
                    path[s] = backptrs[s - 1][path[s + 1]];
                path[0] = r;
                for (int s = 0; s <= n_steps; ++s) {
                    const int f = start + s * cfg.stride;
                    t.entries.emplace_back(f, features_at(f).region_ids[path[s]]);
                }
                result.tracks.push_back(std::move(t));
            }
        }
    }
    return result;
}

double auto_threshold(const std::vector<Video>& videos, const EncoderParams& encoder,
                      TrackerConfig cfg, double quantile) {
    cfg.threshold = -1.0; // keep everything
    std::vector<double> scores;
    for (const Video& v : videos) {
        const BuildTracksResult r = build_tracks(v, encoder, cfg);
        for (const Track& t : r.tracks) scores.push_back(t.score);
    }
    if (scores.empty()) return 0.0;
    std::sort(scores.begin(), scores.end());
    const size_t idx = static_cast<size_t>(quantile * (scores.size() - 1));
    return scores[idx];
}

double track_purity(const std::vector<Track>& tracks, const std::vector<Video>& videos) {
    if (tracks.empty()) return 0.0;
    int pure = 0;
    for (const Track& t : tracks) {
        const Video* video = nullptr;
        for (const Video& v : videos)
            if (v.id == t.video) video = &v;
        if (!video || t.entries.empty()) continue;
        const auto [f0, r0] = t.entries.front();
        const auto [f1, r1] = t.entries.back();
        const Box* b0 = nullptr;
        const Box* b1 = nullptr;
        for (const Box& b : video->regions[f0])
            if (b.id == r0) b0 = &b;
        for (const Box& b : video->regions[f1])
            if (b.id == r1) b1 = &b;
        if (!b0 || !b1) continue;
        for (const auto& gt : video->gt_tracks) {
            const Box* g0 = nullptr;
            const Box* g1 = nullptr;
            for (const auto& [gf, gr] : gt) {
                if (gf == f0)
                    for (const Box& b : video->regions[gf])
                        if (b.id == gr) g0 = &b;
                if (gf == f1)
                    for (const Box& b : video->regions[gf])
                        if (b.id == gr) g1 = &b;
            }
            if (g0 && g1 && box_iou(*b0, *g0) >= 0.5 && box_iou(*b1, *g1) >= 0.5) {
                ++pure;
                break;
            }
        }
    }
    return static_cast<double>(pure) / tracks.size();
}

} // namespace lab
