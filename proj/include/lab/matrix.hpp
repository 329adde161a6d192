#pragma once

#include <cassert>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace lab {

// Dense row-major matrix of doubles. Small and purpose-built: every matrix
// in this project is at most a few thousand entries.
struct Mat {
    int rows = 0;
    int cols = 0;
    std::vector<double> v;

    Mat() = default;
    Mat(int r, int c, double fill = 0.0) : rows(r), cols(c), v(static_cast<size_t>(r) * c, fill) {}

    double& operator()(int r, int c) { return v[static_cast<size_t>(r) * cols + c]; }
    double operator()(int r, int c) const { return v[static_cast<size_t>(r) * cols + c]; }

    const double* row(int r) const { return v.data() + static_cast<size_t>(r) * cols; }
    double* row(int r) { return v.data() + static_cast<size_t>(r) * cols; }

    bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }
};

inline double dot(const double* a, const double* b, int n) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

// y = x * W + b, x: (n, in), W: (in, out)
inline Mat affine(const Mat& x, const Mat& w, const std::vector<double>& b) {
    if (x.cols != w.rows || static_cast<int>(b.size()) != w.cols)
        throw std::invalid_argument("affine: shape mismatch");
    Mat y(x.rows, w.cols);
    for (int r = 0; r < x.rows; ++r) {
        double* yr = y.row(r);
        for (int c = 0; c < w.cols; ++c) yr[c] = b[c];
        const double* xr = x.row(r);
        for (int i = 0; i < x.cols; ++i) {
            const double xv = xr[i];
            if (xv == 0.0) continue;
            const double* wr = w.row(i);
            for (int c = 0; c < w.cols; ++c) yr[c] += xv * wr[c];
        }
    }
    return y;
}

} // namespace lab
