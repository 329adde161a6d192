#include "lab/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace lab {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kSizeMin = 0.55, kSizeMax = 0.95;
constexpr double kAspectMin = 0.7, kAspectMax = 1.4;
constexpr double kGainMin = 0.5, kGainMax = 1.5;

uint64_t splitmix(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

bool in_silhouette(int category, double u, double v) {
    const double r2 = u * u + v * v;
    switch (category) {
        case 0: return std::max(std::abs(u), std::abs(v)) <= 0.72;
        case 1: return r2 <= 0.72 * 0.72;
        case 2: return v >= -0.62 && v <= 0.78 - 2.0 * std::abs(u);
        case 3:
            return (std::abs(u) <= 0.26 && std::abs(v) <= 0.78) ||
                   (std::abs(v) <= 0.26 && std::abs(u) <= 0.78);
        case 4: return r2 >= 0.38 * 0.38 && r2 <= 0.74 * 0.74;
        case 5: return std::abs(u) + std::abs(v) <= 0.8;
        case 6: return std::abs(u) <= 0.8 && std::abs(v) <= 0.34;
        case 7:
            return (u >= -0.72 && u <= -0.2 && std::abs(v) <= 0.75) ||
                   (v >= 0.25 && v <= 0.75 && std::abs(u) <= 0.72);
        default: return false;
    }
}

double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

} // namespace

std::string to_string(Transformation t) {
    switch (t) {
        case Transformation::viewpoint: return "viewpoint";
        case Transformation::occlusion: return "occlusion";
        case Transformation::illum_dir: return "illum_dir";
        case Transformation::illum_color: return "illum_color";
        case Transformation::instance: return "instance";
        case Transformation::instance_viewpoint: return "instance_viewpoint";
    }
    throw std::invalid_argument("unknown transformation");
}

Transformation transformation_from_string(const std::string& s) {
    if (s == "viewpoint") return Transformation::viewpoint;
    if (s == "occlusion") return Transformation::occlusion;
    if (s == "illum_dir") return Transformation::illum_dir;
    if (s == "illum_color") return Transformation::illum_color;
    if (s == "instance") return Transformation::instance;
    if (s == "instance_viewpoint" || s == "instance+viewpoint")
        return Transformation::instance_viewpoint;
    throw std::invalid_argument("unknown transformation: " + s);
}

void validate(const ObjectSpec& spec) {
    auto bad = [](const std::string& field) {
        throw std::invalid_argument("ObjectSpec field out of range: " + field);
    };
    if (spec.category < 0 || spec.category >= kMaxCategories) bad("category");
    if (spec.size < kSizeMin || spec.size > kSizeMax) bad("size");
    if (spec.aspect < kAspectMin || spec.aspect > kAspectMax) bad("aspect");
    if (spec.marking < 0.0 || spec.marking > 1.0) bad("marking");
    if (spec.pose < 0.0 || spec.pose >= 360.0) bad("pose");
    if (spec.occlusion < 0.0 || spec.occlusion > 1.0) bad("occlusion");
    if (spec.illum_dir < 0.0 || spec.illum_dir >= 360.0) bad("illum_dir");
    for (double g : spec.illum_color)
        if (g < kGainMin || g > kGainMax) bad("illum_color");
}

Image render(const ObjectSpec& spec, int width, int height, int channels) {
    validate(spec);
    if (channels != 1 && channels != 3)
        throw std::invalid_argument("render: channels must be 1 or 3");

    Image img(width, height, channels, 0.0);
    const double theta = spec.pose * kPi / 180.0;
    const double ct = std::cos(theta), st = std::sin(theta);
    const double phi = spec.illum_dir * kPi / 180.0;
    const double cl = std::cos(phi), sl = std::sin(phi);
    const double sx_scale = spec.size * std::sqrt(spec.aspect);
    const double sy_scale = spec.size / std::sqrt(spec.aspect);
    const double freq = 0.8 + 1.2 * spec.marking;
    const double phase = 0.25 + 0.5 * spec.marking;
    const double mean_gain =
        (spec.illum_color[0] + spec.illum_color[1] + spec.illum_color[2]) / 3.0;

    std::vector<std::pair<int, int>> object_pixels; // (x, y)
    for (int py = 0; py < height; ++py) {
        const double sy = (py + 0.5) / height * 2.0 - 1.0;
        for (int px = 0; px < width; ++px) {
            const double sx = (px + 0.5) / width * 2.0 - 1.0;
            // object frame: inverse rotation then inverse instance scaling
            const double u = (sx * ct + sy * st) / sx_scale;
            const double v = (-sx * st + sy * ct) / sy_scale;
            if (!in_silhouette(spec.category, u, v)) continue;
            object_pixels.emplace_back(px, py);
            const double base = 0.6 + 0.3 * std::cos(2.0 * kPi * (freq * u + phase));
            const double shade = 1.0 + 0.25 * (sx * cl + sy * sl);
            const double value = base * shade;
            if (channels == 1) {
                img.at(px, py, 0) = clamp01(value * mean_gain);
            } else {
                for (int c = 0; c < 3; ++c)
                    img.at(px, py, c) = clamp01(value * spec.illum_color[c]);
            }
        }
    }

    // Occlusion: a curtain sweeping in from one side, masking exactly
    // round(occlusion * object pixel count) pixels with background.
    if (spec.occlusion > 0.0 && !object_pixels.empty()) {
        const int n_mask = static_cast<int>(
            std::llround(spec.occlusion * static_cast<double>(object_pixels.size())));
        const uint64_t h = splitmix(static_cast<uint64_t>(spec.category) * 31 +
                                    static_cast<uint64_t>(spec.instance_id) + 1);
        switch (h % 4) {
            case 0:
                std::stable_sort(object_pixels.begin(), object_pixels.end(),
                                 [](auto& a, auto& b) { return a.first < b.first; });
                break;
            case 1:
                std::stable_sort(object_pixels.begin(), object_pixels.end(),
                                 [](auto& a, auto& b) { return a.first > b.first; });
                break;
            case 2:
                std::stable_sort(object_pixels.begin(), object_pixels.end(),
                                 [](auto& a, auto& b) { return a.second < b.second; });
                break;
            default:
                std::stable_sort(object_pixels.begin(), object_pixels.end(),
                                 [](auto& a, auto& b) { return a.second > b.second; });
                break;
        }
        for (int i = 0; i < n_mask && i < static_cast<int>(object_pixels.size()); ++i)
            for (int c = 0; c < channels; ++c)
                img.at(object_pixels[i].first, object_pixels[i].second, c) = 0.0;
    }
    return img;
}

namespace {

struct Latent {
    double size, aspect, marking;
};

Latent draw_latent(Rng& rng) {
    return {rng.uniform(kSizeMin, kSizeMax), rng.uniform(kAspectMin, kAspectMax),
            rng.uniform(0.0, 1.0)};
}

Latent lerp(const Latent& a, const Latent& b, double t) {
    return {a.size + t * (b.size - a.size), a.aspect + t * (b.aspect - a.aspect),
            a.marking + t * (b.marking - a.marking)};
}

double wrap_angle(double a) {
    a = std::fmod(a, 360.0);
    if (a < 0.0) a += 360.0;
    return a;
}

} // namespace

std::vector<Trajectory> make_trajectory_dataset(Transformation transformation,
                                                int n_classes,
                                                int n_trajectories_per_class,
                                                int steps, uint64_t seed,
                                                int width, int height) {
    if (steps < 2) throw std::invalid_argument("make_trajectory_dataset: steps < 2");
    if (n_classes < 1 || n_classes > kMaxCategories)
        throw std::invalid_argument("make_trajectory_dataset: bad class count");

    const int channels = transformation == Transformation::illum_color ? 3 : 1;
    const Rng root(seed);
    std::vector<Trajectory> out;
    int next_instance_id = 0;

    for (int cls = 0; cls < n_classes; ++cls) {
        for (int tj = 0; tj < n_trajectories_per_class; ++tj) {
            Rng rng = root.fork(static_cast<uint64_t>(cls) * 1000003 + tj);
            Trajectory traj;
            traj.transformation = transformation;
            traj.category = cls;

            ObjectSpec base;
            base.category = cls;
            base.instance_id = next_instance_id++;
            Latent lat = draw_latent(rng);
            base.size = lat.size;
            base.aspect = lat.aspect;
            base.marking = lat.marking;
            base.pose = rng.uniform(0.0, 360.0);
            base.occlusion = 0.0;
            base.illum_dir = rng.uniform(0.0, 360.0);

            Latent lat_b = draw_latent(rng);
            double gain_a[3], gain_b[3];
            for (int c = 0; c < 3; ++c) {
                gain_a[c] = rng.uniform(kGainMin, kGainMax);
                gain_b[c] = rng.uniform(kGainMin, kGainMax);
            }

            for (int i = 0; i < steps; ++i) {
                ObjectSpec s = base;
                const double t = static_cast<double>(i) / (steps - 1);
                switch (transformation) {
                    case Transformation::viewpoint:
                        s.pose = wrap_angle(base.pose + i * (360.0 / steps));
                        break;
                    case Transformation::occlusion:
                        // even grid over [0, 0.5]
                        s.occlusion = static_cast<double>(i) / (2.0 * (steps - 1));
                        break;
                    case Transformation::illum_dir:
                        s.illum_dir = wrap_angle(base.illum_dir + i * (360.0 / steps));
                        break;
                    case Transformation::illum_color:
                        for (int c = 0; c < 3; ++c)
                            s.illum_color[c] = gain_a[c] + t * (gain_b[c] - gain_a[c]);
                        break;
                    case Transformation::instance: {
                        Latent li = lerp(lat, lat_b, t);
                        s.size = li.size;
                        s.aspect = li.aspect;
                        s.marking = li.marking;
                        s.instance_id = i == 0 ? base.instance_id : next_instance_id++;
                        break;
                    }
                    case Transformation::instance_viewpoint: {
                        Latent li = lerp(lat, lat_b, t);
                        s.size = li.size;
                        s.aspect = li.aspect;
                        s.marking = li.marking;
                        s.instance_id = i == 0 ? base.instance_id : next_instance_id++;
                        s.pose = wrap_angle(base.pose + i * (360.0 / steps));
                        break;
                    }
                }
                Sample sample;
                sample.spec = s;
                sample.category = s.category;
                sample.instance_id = s.instance_id;
                sample.image = render(s, width, height, channels);
                traj.samples.push_back(std::move(sample));
            }
            out.push_back(std::move(traj));
        }
    }
    return out;
}

namespace {

// One object's parameter walk through a video.
struct ObjectWalk {
    ObjectSpec spec;
    int tile = 0;    // square tile size in px
    double x = 0.0, y = 0.0;
    double pose_rate = 0.0;
    int cell_x0 = 0, cell_y0 = 0, cell_x1 = 0, cell_y1 = 0;
};

Image make_background(Rng& rng, int w, int h, int channels, double amplitude) {
    Image bg(w, h, channels);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (channels == 1) {
                bg.at(x, y, 0) = rng.uniform(0.0, amplitude);
            } else {
                for (int c = 0; c < channels; ++c)
                    bg.at(x, y, c) = rng.uniform(0.0, amplitude);
            }
        }
    return bg;
}

void composite(Image& scene, const Image& tile, int x0, int y0) {
    for (int y = 0; y < tile.height; ++y)
        for (int x = 0; x < tile.width; ++x) {
            bool object = false;
            for (int c = 0; c < tile.channels; ++c)
                if (tile.at(x, y, c) > 0.0) object = true;
            if (!object) continue;
            for (int c = 0; c < tile.channels; ++c)
                scene.at(x0 + x, y0 + y, c) = tile.at(x, y, c);
        }
}

std::vector<int> pick_categories(Rng& rng, int n, int n_categories) {
    std::vector<int> cats(n_categories);
    std::iota(cats.begin(), cats.end(), 0);
    // Fisher-Yates; distinct categories whenever possible
    for (int i = n_categories - 1; i > 0; --i) {
        const int j = static_cast<int>(rng.uniform_int(i + 1));
        std::swap(cats[i], cats[j]);
    }
    std::vector<int> out;
    for (int i = 0; i < n; ++i)
        out.push_back(i < n_categories ? cats[i]
                                       : cats[rng.uniform_int(n_categories)]);
    return out;
}

Box clamp_box(Box b, int w, int h) {
    b.w = std::max(4, std::min(b.w, w));
    b.h = std::max(4, std::min(b.h, h));
    b.x = std::max(0, std::min(b.x, w - b.w));
    b.y = std::max(0, std::min(b.y, h - b.h));
    return b;
}

} // namespace

std::vector<Video> make_video_dataset(const VideoConfig& cfg, uint64_t seed) {
    const int cells_x = cfg.scene_width / cfg.max_object_px;
    const int cells_y = cfg.scene_height / cfg.max_object_px;
    if (cfg.objects_per_scene > cells_x * cells_y)
        throw std::invalid_argument("make_video_dataset: objects exceed placement capacity");
    if (cfg.frames_per_video < 2)
        throw std::invalid_argument("make_video_dataset: need at least 2 frames");

    const Rng root(seed);
    std::vector<Video> videos;
    int next_instance = 0;

    for (int vi = 0; vi < cfg.n_videos; ++vi) {
        Rng rng = root.fork(vi);
        Video video;
        video.id = vi;

        const Image bg = make_background(rng, cfg.scene_width, cfg.scene_height,
                                         cfg.channels, cfg.background_amplitude);

        // assign distinct placement cells
        std::vector<int> cell_ids(static_cast<size_t>(cells_x) * cells_y);
        std::iota(cell_ids.begin(), cell_ids.end(), 0);
        for (int i = static_cast<int>(cell_ids.size()) - 1; i > 0; --i) {
            const int j = static_cast<int>(rng.uniform_int(i + 1));
            std::swap(cell_ids[i], cell_ids[j]);
        }

        const std::vector<int> cats =
            pick_categories(rng, cfg.objects_per_scene, cfg.n_categories);

        std::vector<ObjectWalk> walks;
        for (int oi = 0; oi < cfg.objects_per_scene; ++oi) {
            ObjectWalk w;
            w.spec.category = cats[oi];
            w.spec.instance_id = next_instance++;
            Latent lat = draw_latent(rng);
            w.spec.size = lat.size;
            w.spec.aspect = lat.aspect;
            w.spec.marking = lat.marking;
            w.spec.pose = rng.uniform(0.0, 360.0);
            w.spec.occlusion = rng.uniform(0.0, cfg.max_occlusion * 0.5);
            w.spec.illum_dir = rng.uniform(0.0, 360.0);
            w.tile = cfg.min_object_px +
                     static_cast<int>(rng.uniform_int(cfg.max_object_px - cfg.min_object_px + 1));
            const int cell = cell_ids[oi];
            w.cell_x0 = (cell % cells_x) * cfg.max_object_px;
            w.cell_y0 = (cell / cells_x) * cfg.max_object_px;
            w.cell_x1 = w.cell_x0 + cfg.max_object_px - w.tile;
            w.cell_y1 = w.cell_y0 + cfg.max_object_px - w.tile;
            w.x = w.cell_x0 + rng.uniform() * (w.cell_x1 - w.cell_x0);
            w.y = w.cell_y0 + rng.uniform() * (w.cell_y1 - w.cell_y0);
            const double sign = rng.bernoulli(0.5) ? 1.0 : -1.0;
            w.pose_rate = sign * rng.uniform(0.6, 1.0) * cfg.max_pose_delta;
            walks.push_back(w);
        }

        video.gt_tracks.assign(cfg.objects_per_scene, {});
        for (int t = 0; t < cfg.frames_per_video; ++t) {
            Image frame = bg;
            std::vector<Box> regions;
            std::vector<PlacedObject> placed;

            for (int oi = 0; oi < cfg.objects_per_scene; ++oi) {
                ObjectWalk& w = walks[oi];
                const int px = static_cast<int>(std::lround(w.x));
                const int py = static_cast<int>(std::lround(w.y));
                const Image tile = render(w.spec, w.tile, w.tile, cfg.channels);
                composite(frame, tile, px, py);
                Box b{px, py, w.tile, w.tile, static_cast<int>(regions.size())};
                regions.push_back(b);
                video.gt_tracks[oi].emplace_back(t, b.id);
                placed.push_back({w.spec, px, py, w.tile, w.tile});
            }

            // selective-search stand-in: jittered copies of the true boxes
            for (int oi = 0; oi < cfg.objects_per_scene; ++oi) {
                const Box& gt = regions[oi];
                for (int j = 0; j < cfg.jitter_boxes_per_object; ++j) {
                    const double dx = rng.uniform(-cfg.jitter_frac, cfg.jitter_frac) * gt.w;
                    const double dy = rng.uniform(-cfg.jitter_frac, cfg.jitter_frac) * gt.h;
                    const double sc = 1.0 + rng.uniform(-cfg.jitter_frac, cfg.jitter_frac);
                    Box b;
                    b.w = static_cast<int>(std::lround(gt.w * sc));
                    b.h = static_cast<int>(std::lround(gt.h * sc));
                    b.x = static_cast<int>(std::lround(gt.x + dx));
                    b.y = static_cast<int>(std::lround(gt.y + dy));
                    b = clamp_box(b, cfg.scene_width, cfg.scene_height);
                    b.id = static_cast<int>(regions.size());
                    regions.push_back(b);
                }
            }
            for (int j = 0; j < cfg.background_boxes; ++j) {
                Box b;
                b.w = cfg.min_object_px +
                      static_cast<int>(rng.uniform_int(cfg.max_object_px - cfg.min_object_px + 1));
                b.h = b.w;
                b.x = static_cast<int>(rng.uniform_int(cfg.scene_width - b.w + 1));
                b.y = static_cast<int>(rng.uniform_int(cfg.scene_height - b.h + 1));
                b.id = static_cast<int>(regions.size());
                regions.push_back(b);
            }

            video.frames.push_back(std::move(frame));
            video.regions.push_back(std::move(regions));
            video.placed.push_back(std::move(placed));

            // advance walks
            for (ObjectWalk& w : walks) {
                w.spec.pose = wrap_angle(w.spec.pose + w.pose_rate);
                w.spec.occlusion =
                    std::clamp(w.spec.occlusion +
                                   rng.uniform(-1.0, 1.0) * cfg.max_occlusion_delta,
                               0.0, cfg.max_occlusion);
                w.spec.illum_dir = wrap_angle(
                    w.spec.illum_dir + rng.uniform(-1.0, 1.0) * cfg.max_illum_delta);
                w.x = std::clamp(w.x + rng.uniform(-1.0, 1.0),
                                 static_cast<double>(w.cell_x0),
                                 static_cast<double>(w.cell_x1));
                w.y = std::clamp(w.y + rng.uniform(-1.0, 1.0),
                                 static_cast<double>(w.cell_y0),
                                 static_cast<double>(w.cell_y1));
            }
        }
        videos.push_back(std::move(video));
    }
    return videos;
}

BiasDatasets make_bias_datasets(const BiasConfig& cfg, uint64_t seed) {
    VideoConfig vc;
    vc.n_videos = cfg.n_scenes;
    vc.frames_per_video = 2; // only frame 0 is used
    vc.objects_per_scene = cfg.objects_per_scene;
    vc.n_categories = cfg.n_categories;
    vc.scene_width = cfg.scene_width;
    vc.scene_height = cfg.scene_height;
    vc.channels = cfg.channels;
    vc.jitter_boxes_per_object = 0;
    vc.background_boxes = 0;
    vc.background_amplitude = cfg.background_amplitude;
    const std::vector<Video> scenes = make_video_dataset(vc, seed);

    BiasDatasets out;
    std::vector<int> class_counts(cfg.n_categories, 0);
    Rng rng = Rng(seed).fork(0xb1a5);

    for (const Video& v : scenes) {
        const std::vector<PlacedObject>& placed = v.placed[0];
        BiasScene scene;
        scene.sample.image = v.frames[0];

        // dominant category: the largest box; ties go to the first object
        int best = 0;
        for (int i = 1; i < static_cast<int>(placed.size()); ++i)
            if (placed[i].w * placed[i].h > placed[best].w * placed[best].h) best = i;
        scene.sample.category = placed[best].spec.category;
        scene.sample.instance_id = placed[best].spec.instance_id;
        scene.sample.spec = placed[best].spec;
        for (const PlacedObject& p : placed) {
            scene.boxes.push_back(Box{p.x, p.y, p.w, p.h,
                                      static_cast<int>(scene.boxes.size())});
            scene.box_categories.push_back(p.spec.category);
        }

        // one cropped box per scene; favor the least-represented class so the
        // box set stays near class-uniform
        int pick = 0;
        int best_count = class_counts[placed[0].spec.category];
        int n_tied = 1;
        for (int i = 1; i < static_cast<int>(placed.size()); ++i) {
            const int c = class_counts[placed[i].spec.category];
            if (c < best_count) {
                best_count = c;
                pick = i;
                n_tied = 1;
            } else if (c == best_count) {
                ++n_tied;
                if (rng.uniform_int(n_tied) == 0) pick = i;
            }
        }
        class_counts[placed[pick].spec.category]++;

        Sample box_sample;
        const PlacedObject& p = placed[pick];
        box_sample.image = resize_nearest(
            crop(v.frames[0], Box{p.x, p.y, p.w, p.h, 0}), cfg.box_size, cfg.box_size);
        box_sample.category = p.spec.category;
        box_sample.instance_id = p.spec.instance_id;
        box_sample.spec = p.spec;

        out.scenes.push_back(std::move(scene));
        out.cropped_boxes.push_back(std::move(box_sample));
    }
    return out;
}

} // namespace lab
