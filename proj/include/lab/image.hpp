#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace lab {

// Fixed-size pixel grid, intensities in [0,1], layout ((y*W)+x)*C + c.
struct Image {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<double> pixels;

    Image() = default;
    Image(int w, int h, int c, double fill = 0.0)
        : width(w), height(h), channels(c),
          pixels(static_cast<size_t>(w) * h * c, fill) {}

    double& at(int x, int y, int c) {
        return pixels[(static_cast<size_t>(y) * width + x) * channels + c];
    }
    double at(int x, int y, int c) const {
        return pixels[(static_cast<size_t>(y) * width + x) * channels + c];
    }

    size_t count() const { return pixels.size(); }
};

// Axis-aligned pixel rectangle. `id` is the region id within its frame.
struct Box {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;
    int id = -1;
};

inline double box_iou(const Box& a, const Box& b) {
    const int x0 = std::max(a.x, b.x);
    const int y0 = std::max(a.y, b.y);
    const int x1 = std::min(a.x + a.w, b.x + b.w);
    const int y1 = std::min(a.y + a.h, b.y + b.h);
    const double inter = static_cast<double>(std::max(0, x1 - x0)) * std::max(0, y1 - y0);
    const double uni = static_cast<double>(a.w) * a.h + static_cast<double>(b.w) * b.h - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

inline Image crop(const Image& img, const Box& box) {
    if (box.x < 0 || box.y < 0 || box.w <= 0 || box.h <= 0 ||
        box.x + box.w > img.width || box.y + box.h > img.height)
        throw std::invalid_argument("crop: box out of bounds");
    Image out(box.w, box.h, img.channels);
    for (int y = 0; y < box.h; ++y)
        for (int x = 0; x < box.w; ++x)
            for (int c = 0; c < img.channels; ++c)
                out.at(x, y, c) = img.at(box.x + x, box.y + y, c);
    return out;
}

// Nearest-neighbor resize with pixel-center sampling. Exact identity when
// the size is unchanged.
inline Image resize_nearest(const Image& img, int w, int h) {
    if (w <= 0 || h <= 0) throw std::invalid_argument("resize: bad size");
    if (w == img.width && h == img.height) return img;
    Image out(w, h, img.channels);
    for (int y = 0; y < h; ++y) {
        int sy = static_cast<int>((y + 0.5) * img.height / h);
        if (sy >= img.height) sy = img.height - 1;
        for (int x = 0; x < w; ++x) {
            int sx = static_cast<int>((x + 0.5) * img.width / w);
            if (sx >= img.width) sx = img.width - 1;
            for (int c = 0; c < img.channels; ++c) out.at(x, y, c) = img.at(sx, sy, c);
        }
    }
    return out;
}

inline Image flip_horizontal(const Image& img) {
    Image out(img.width, img.height, img.channels);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c)
                out.at(x, y, c) = img.at(img.width - 1 - x, y, c);
    return out;
}

// Channel adaptation: 1 -> 3 replicates, 3 -> 1 averages.
inline Image with_channels(const Image& img, int channels) {
    if (img.channels == channels) return img;
    Image out(img.width, img.height, channels);
    if (img.channels == 1 && channels == 3) {
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x)
                for (int c = 0; c < 3; ++c) out.at(x, y, c) = img.at(x, y, 0);
        return out;
    }
    if (img.channels == 3 && channels == 1) {
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x)
                out.at(x, y, 0) =
                    (img.at(x, y, 0) + img.at(x, y, 1) + img.at(x, y, 2)) / 3.0;
        return out;
    }
    throw std::invalid_argument("with_channels: unsupported conversion");
}

} // namespace lab
