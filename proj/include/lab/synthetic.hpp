#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "lab/image.hpp"
#include "lab/rng.hpp"

namespace lab {

// Transformation axis varied along a trajectory.
enum class Transformation {
    viewpoint,
    occlusion,
    illum_dir,
    illum_color,
    instance,
    instance_viewpoint,
};

std::string to_string(Transformation t);
Transformation transformation_from_string(const std::string& s);

// Full parametric description of one rendered object. `category` picks the
// silhouette family; the continuous fields are the transformation axes.
struct ObjectSpec {
    int category = 0;            // shape family, 0..kMaxCategories-1
    int instance_id = 0;
    double size = 0.75;          // instance latent: silhouette scale
    double aspect = 1.0;         // instance latent: x/y stretch
    double marking = 0.5;        // instance latent: stripe pattern
    double pose = 0.0;           // in-plane rotation, degrees [0,360)
    double occlusion = 0.0;      // fraction of object pixels masked, [0,1]
    double illum_dir = 0.0;      // light direction, degrees [0,360)
    double illum_color[3] = {1.0, 1.0, 1.0}; // per-channel gain, [0.5,1.5]
};

constexpr int kMaxCategories = 8;

struct Sample {
    Image image;
    int category = 0;
    int instance_id = 0;
    ObjectSpec spec;
};

struct Trajectory {
    Transformation transformation = Transformation::viewpoint;
    int category = 0;
    std::vector<Sample> samples;
};

// An object composited into a scene at an integer pixel offset.
struct PlacedObject {
    ObjectSpec spec;
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;
};

struct Video {
    int id = 0;
    std::vector<Image> frames;
    std::vector<std::vector<Box>> regions;              // per frame
    std::vector<std::vector<std::pair<int, int>>> gt_tracks; // (frame, region id)
    std::vector<std::vector<PlacedObject>> placed;      // per frame, per object
};

struct VideoConfig {
    int n_videos = 8;
    int frames_per_video = 9;
    int objects_per_scene = 2;
    int n_categories = 4;
    int scene_width = 32;
    int scene_height = 32;
    int channels = 1;
    int min_object_px = 11;
    int max_object_px = 16;
    int jitter_boxes_per_object = 2;   // selective-search stand-in
    int background_boxes = 2;
    double jitter_frac = 0.3;          // max position/scale jitter
    double max_pose_delta = 14.0;      // per-frame, degrees
    double max_occlusion_delta = 0.04;
    double max_illum_delta = 8.0;      // per-frame, degrees
    double max_occlusion = 0.25;
    double background_amplitude = 0.12;
};

struct BiasConfig {
    int n_scenes = 100;
    int objects_per_scene = 2;
    int n_categories = 4;
    int scene_width = 32;
    int scene_height = 32;
    int channels = 1;
    int box_size = 16;                 // cropped-box samples are resized to this
    double background_amplitude = 0.12;
};

struct BiasScene {
    Sample sample;                     // scene image, label = dominant category
    std::vector<Box> boxes;            // annotated object boxes
    std::vector<int> box_categories;
};

struct BiasDatasets {
    std::vector<BiasScene> scenes;
    std::vector<Sample> cropped_boxes; // one per scene
};

// Deterministic render of a single object on a black background.
// Pose rotates the silhouette, occlusion masks a contiguous curtain of
// object pixels, illumination shades along illum_dir and then applies the
// per-channel color gains with a [0,1] clamp.
Image render(const ObjectSpec& spec, int width, int height, int channels = 1);

std::vector<Trajectory> make_trajectory_dataset(Transformation transformation,
                                                int n_classes,
                                                int n_trajectories_per_class,
                                                int steps, uint64_t seed,
                                                int width = 16, int height = 16);

std::vector<Video> make_video_dataset(const VideoConfig& cfg, uint64_t seed);

BiasDatasets make_bias_datasets(const BiasConfig& cfg, uint64_t seed);

void validate(const ObjectSpec& spec);

} // namespace lab
