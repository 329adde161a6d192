#pragma once

#include <cstdint>
#include <vector>

#include "lab/encoder.hpp"
#include "lab/matrix.hpp"
#include "lab/synthetic.hpp"
#include "lab/tracker_types.hpp"

namespace lab {

// For each region in frame t, index of the highest-cosine region in frame
// t+1 (ties to the lowest index). Rows must be unit-norm.
std::vector<int> match_regions(const Mat& feats_t, const Mat& feats_t1);

// Clamped cosine similarities between two unit-norm feature sets.
Mat match_matrix(const Mat& feats_t, const Mat& feats_t1);

// Cumulative track score between (frame i, region r) and (frame j, region
// r2), computed by dynamic programming over the intermediate frames.
// match_matrices[t] holds the clamped cosines between frames t and t+1.
double track_score(const std::vector<Mat>& match_matrices, int i, int r, int j,
                   int r2);

struct TrackerConfig {
    int stride = 1;        // frame step used when matching
    int horizon = 6;       // track length in frames (end - start)
    int top_r = 64;        // regions kept per frame (random subsample beyond)
    double threshold = 0.0;
    uint64_t seed = 0;
};

struct BuildTracksResult {
    std::vector<Track> tracks;
    int frames_without_regions = 0;
};

BuildTracksResult build_tracks(const Video& video, const EncoderParams& encoder,
                               const TrackerConfig& cfg);

// Score quantile over all (start, end) pairs of the given videos; used to
// calibrate the acceptance threshold when none is supplied.
double auto_threshold(const std::vector<Video>& videos, const EncoderParams& encoder,
                      TrackerConfig cfg, double quantile = 0.9);

// Fraction of tracks whose two endpoints overlap (IoU >= 0.5) boxes of the
// same ground-truth track.
double track_purity(const std::vector<Track>& tracks, const std::vector<Video>& videos);

} // namespace lab
