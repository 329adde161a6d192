#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "lab/synthetic.hpp"

using namespace lab;

namespace {

ObjectSpec basic_spec(int category = 0) {
    ObjectSpec s;
    s.category = category;
    s.instance_id = 7;
    s.size = 0.8;
    s.aspect = 1.1;
    s.marking = 0.4;
    s.pose = 33.0;
    s.occlusion = 0.0;
    s.illum_dir = 120.0;
    return s;
}

int object_pixel_count(const Image& img) {
    int n = 0;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            bool on = false;
            for (int c = 0; c < img.channels; ++c)
                if (img.at(x, y, c) > 0.0) on = true;
            if (on) ++n;
        }
    return n;
}

} // namespace

TEST_CASE("render is deterministic") {
    const ObjectSpec s = basic_spec();
    const Image a = render(s, 16, 16);
    const Image b = render(s, 16, 16);
    CHECK(a.pixels == b.pixels);
}

TEST_CASE("identity color gain matches single-channel render") {
    ObjectSpec s = basic_spec(2);
    const Image rgb = render(s, 16, 16, 3);
    const Image gray = render(s, 16, 16, 1);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x)
            for (int c = 0; c < 3; ++c)
                CHECK(rgb.at(x, y, c) == gray.at(x, y, 0));
}

TEST_CASE("occlusion masks the stated fraction of object pixels") {
    for (int category : {0, 1, 5}) {
        ObjectSpec s = basic_spec(category);
        const Image clean = render(s, 16, 16);
        const int area = object_pixel_count(clean);
        REQUIRE(area > 0);
        s.occlusion = 0.5;
        const Image occluded = render(s, 16, 16);
        int masked = 0;
        for (int y = 0; y < 16; ++y)
            for (int x = 0; x < 16; ++x)
                if (clean.at(x, y, 0) > 0.0 && occluded.at(x, y, 0) == 0.0) ++masked;
        const double frac = static_cast<double>(masked) / area;
        CHECK(frac >= 0.5 - 2.0 / area);
        CHECK(frac <= 0.5 + 2.0 / area);
    }
}

TEST_CASE("out-of-range spec fields are rejected") {
    ObjectSpec s = basic_spec();
    s.occlusion = 1.5;
    CHECK_THROWS_AS(render(s, 16, 16), std::invalid_argument);
    s = basic_spec();
    s.category = 99;
    CHECK_THROWS_AS(render(s, 16, 16), std::invalid_argument);
    s = basic_spec();
    s.illum_color[1] = 0.1;
    CHECK_THROWS_AS(render(s, 16, 16), std::invalid_argument);
}

TEST_CASE("trajectory dataset: construction contract") {
    const auto trajs = make_trajectory_dataset(Transformation::occlusion, 2, 3, 4, 7);
    CHECK(trajs.size() == 6);
    int samples = 0;
    for (const auto& t : trajs) {
        CHECK(t.samples.size() == 4);
        samples += static_cast<int>(t.samples.size());
        // documented grid: evenly spaced over [0, 0.5]
        const double expected[4] = {0.0, 1.0 / 6.0, 1.0 / 3.0, 0.5};
        for (int i = 0; i < 4; ++i)
            CHECK(t.samples[i].spec.occlusion == doctest::Approx(expected[i]).epsilon(1e-12));
    }
    CHECK(samples == 24);
}

TEST_CASE("trajectory dataset: determinism and purity") {
    const auto a = make_trajectory_dataset(Transformation::viewpoint, 3, 2, 5, 11);
    const auto b = make_trajectory_dataset(Transformation::viewpoint, 3, 2, 5, 11);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i)
        for (size_t j = 0; j < a[i].samples.size(); ++j)
            CHECK(a[i].samples[j].image.pixels == b[i].samples[j].image.pixels);

    for (const auto& t : a) {
        const ObjectSpec& first = t.samples.front().spec;
        for (const Sample& s : t.samples) {
            CHECK(s.category == t.category);
            CHECK(s.spec.category == s.category); // label correctness
            // frozen fields are exactly equal in a single-axis trajectory
            CHECK(s.spec.size == first.size);
            CHECK(s.spec.aspect == first.aspect);
            CHECK(s.spec.marking == first.marking);
            CHECK(s.spec.occlusion == first.occlusion);
            CHECK(s.spec.illum_dir == first.illum_dir);
            CHECK(s.instance_id == first.instance_id);
        }
    }
}

TEST_CASE("instance trajectories hold pose fixed and vary the latent") {
    const auto trajs = make_trajectory_dataset(Transformation::instance, 2, 2, 4, 3);
    for (const auto& t : trajs) {
        const double pose = t.samples.front().spec.pose;
        std::set<int> ids;
        for (const Sample& s : t.samples) {
            CHECK(s.spec.pose == pose);
            ids.insert(s.instance_id);
        }
        CHECK(ids.size() == t.samples.size()); // each step is a new instance
    }
}

TEST_CASE("all emitted pixels stay in [0,1]") {
    for (auto tf : {Transformation::illum_color, Transformation::viewpoint}) {
        const auto trajs = make_trajectory_dataset(tf, 2, 2, 3, 5);
        for (const auto& t : trajs)
            for (const Sample& s : t.samples)
                for (double v : s.image.pixels) {
                    CHECK(v >= 0.0);
                    CHECK(v <= 1.0);
                }
    }
}

TEST_CASE("video dataset: regions, tracks, smoothness") {
    VideoConfig cfg;
    cfg.n_videos = 1;
    cfg.frames_per_video = 10;
    cfg.objects_per_scene = 2;
    cfg.jitter_boxes_per_object = 2;
    cfg.background_boxes = 1;
    const auto videos = make_video_dataset(cfg, 21);
    REQUIRE(videos.size() == 1);
    const Video& v = videos[0];
    CHECK(v.frames.size() == 10);
    CHECK(v.gt_tracks.size() == 2);
    for (const auto& track : v.gt_tracks) CHECK(track.size() == 10);
    for (const auto& regions : v.regions)
        CHECK(regions.size() >= 5); // 2 gt + 4 jitter + 1 background

    // parameter walks stay within the per-frame bounds
    for (const auto& track : v.gt_tracks) {
        int prev_frame = -1;
        for (const auto& [f, r] : track) {
            CHECK(f > prev_frame);
            prev_frame = f;
        }
    }
    for (size_t t = 0; t + 1 < v.placed.size(); ++t)
        for (size_t o = 0; o < v.placed[t].size(); ++o) {
            double dpose = std::abs(v.placed[t + 1][o].spec.pose -
                                    v.placed[t][o].spec.pose);
            dpose = std::min(dpose, 360.0 - dpose);
            CHECK(dpose <= cfg.max_pose_delta + 1e-9);
            CHECK(std::abs(v.placed[t + 1][o].spec.occlusion -
                           v.placed[t][o].spec.occlusion) <=
                  cfg.max_occlusion_delta + 1e-9);
        }
}

TEST_CASE("video dataset: gt crop approximately re-renders its spec") {
    VideoConfig cfg;
    cfg.n_videos = 2;
    cfg.frames_per_video = 4;
    const auto videos = make_video_dataset(cfg, 5);
    for (const Video& v : videos)
        for (size_t t = 0; t < v.frames.size(); ++t)
            for (const PlacedObject& p : v.placed[t]) {
                const Image patch = crop(v.frames[t], Box{p.x, p.y, p.w, p.h, 0});
                const Image rerender = render(p.spec, p.w, p.h, v.frames[t].channels);
                double mad = 0.0;
                for (size_t i = 0; i < patch.pixels.size(); ++i)
                    mad += std::abs(patch.pixels[i] - rerender.pixels[i]);
                mad /= static_cast<double>(patch.pixels.size());
                CHECK(mad < 0.1);
            }
}

TEST_CASE("video dataset rejects impossible placement") {
    VideoConfig cfg;
    cfg.objects_per_scene = 7; // capacity is 4 for 32x32 scenes, 16px cells
    CHECK_THROWS_AS(make_video_dataset(cfg, 1), std::invalid_argument);
}

TEST_CASE("bias datasets: counts, single object per crop, near-uniform classes") {
    BiasConfig cfg;
    cfg.n_scenes = 100;
    const BiasDatasets data = make_bias_datasets(cfg, 13);
    CHECK(data.scenes.size() == 100);
    CHECK(data.cropped_boxes.size() == 100);

    std::vector<int> hist(cfg.n_categories, 0);
    for (const Sample& s : data.cropped_boxes) {
        hist[s.category]++;
        // re-render the spec: the crop contains exactly that object
        CHECK(s.category == s.spec.category);
    }
    const double uniform = 100.0 / cfg.n_categories;
    for (int c = 0; c < cfg.n_categories; ++c) {
        CHECK(hist[c] >= uniform * 0.8);
        CHECK(hist[c] <= uniform * 1.2);
    }

    // scene labels match the dominant (largest) object
    for (const BiasScene& s : data.scenes) {
        int best = 0;
        for (size_t b = 1; b < s.boxes.size(); ++b)
            if (s.boxes[b].w * s.boxes[b].h > s.boxes[best].w * s.boxes[best].h)
                best = static_cast<int>(b);
        CHECK(s.sample.category == s.box_categories[best]);
    }
}
