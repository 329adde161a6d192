#pragma once

#include <vector>

namespace lab {

// A scored sequence of (frame, region id) pairs within one video.
struct Track {
    int video = 0;
    std::vector<std::pair<int, int>> entries; // strictly increasing frames
    double score = 0.0;
};

} // namespace lab
